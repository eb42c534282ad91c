import json
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvedkakeya import cli
from curvedkakeya.cli import COMMANDS, ConfigError, RunConfig, format_ladder, main, parse_args, parse_ladder
from curvedkakeya.defaults import DEFAULTS
from curvedkakeya.family import verify_witness as _REAL_VERIFY
from curvedkakeya.plots import emit_plot, loglog_slope


def run_cli(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def manifest(out_dir):
    return json.loads((out_dir / "manifest.json").read_text())


# --- ladders and config round trip --------------------------------------------


def test_ladder_forms():
    assert parse_ladder("2^-4..2^-6") == (1 / 16, 1 / 32, 1 / 64)
    assert parse_ladder("2^-5") == (1 / 32,)
    assert parse_ladder("0.5, 0.3,2^-3") == (0.5, 0.3, 0.125)
    assert format_ladder((1 / 16, 1 / 32, 1 / 64)) == "2^-4..2^-6"


@pytest.mark.parametrize("bad", ["2^-6..2^-4", "0.1,0.2", "0.1,0.1", "2", "0", "abc", "2^-3..x"])
def test_bad_ladders(bad):
    with pytest.raises(ConfigError):
        parse_ladder(bad)


dyadic_ladders = st.lists(st.integers(0, 14), min_size=1, max_size=6, unique=True).map(
    lambda ks: tuple(2.0 ** -k for k in sorted(ks)))
float_ladders = st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=5, unique=True).map(
    lambda xs: tuple(sorted(xs, reverse=True)))
names = st.text("abcxyz_0123456789", min_size=1, max_size=8)
finite = st.floats(-1e6, 1e6, allow_nan=False)


@st.composite
def configs(draw):
    command = draw(st.sampled_from(COMMANDS))
    return RunConfig(
        command=command,
        family_path=None if command == "demo" else draw(names) + ".family",
        delta_ladder=draw(st.one_of(dyadic_ladders, float_ladders)),
        p=draw(st.none() | st.floats(0.5, 8)),
        seed=draw(st.integers(0, 2**31)),
        out_dir="out_" + draw(names),
        epsilon=draw(st.floats(1e-4, 1)),
        calibration=draw(st.none() | names.map(lambda n: n + ".json")),
        lam=draw(st.floats(1e-3, 1)),
        a=draw(st.none() | st.floats(0, 2)),
        samples=draw(st.integers(1, 512)),
        surface_path=draw(st.none() | names),
        cloud=draw(st.sampled_from(["generic", "wisewell_plane", "uniform"])),
        labels=draw(st.sampled_from(["generic", "witness"])),
    )


@settings(max_examples=200, deadline=None)
@given(configs())
def test_flags_round_trip(cfg):
    assert parse_args(cfg.to_argv()) == cfg


def test_config_rejects_increasing_ladder():
    with pytest.raises(ConfigError):
        RunConfig("kakeya", "x.family", (0.1, 0.2))


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env_out"))
    assert parse_args(["check", "example.family"]).out_dir == str(tmp_path / "env_out")
    assert parse_args(["check", "example.family", "--out", "x"]).out_dir == "x"


def test_default_ladders():
    assert parse_args(["kakeya", "f"]).delta_ladder == parse_ladder(cli.DEFAULT_LADDERS["kakeya"])
    assert parse_args(["check", "f"]).delta_ladder == ()


# --- commands -------------------------------------------------------------------


def test_check_example(tmp_path, capsys):
    code, out, _ = run_cli(["check", "example.family", "--out", str(tmp_path)], capsys)
    assert code == 0
    res = json.loads(out)
    assert res["N"] == 5 and res["B"] == 4 and res["dim_bound"] == "6/5"
    assert res["wronskian_ok"] and res["subspace_ok"]
    assert json.loads((tmp_path / "check.json").read_text())["seed"] == 0


def test_check_wisewell_serializes_witness(tmp_path, capsys):
    code, out, _ = run_cli(["check", "wisewell.family", "--out", str(tmp_path)], capsys)
    assert code == 0
    res = json.loads(out)
    assert res["subspace_ok"] is False
    K = res["witness"]
    assert len(K) == 4 and all(len(r) == 2 for r in K)
    assert all(v == "0" for v in K[1] + K[2])
    assert json.loads((tmp_path / "check.json").read_text())["witness"] is not None


def test_exponents(tmp_path, capsys):
    code, out, _ = run_cli(["exponents", "example.family", "--out", str(tmp_path)], capsys)
    assert code == 0
    res = json.loads(out)
    assert res["alpha"] == "10/13" and res["beta"] == "13/16"


def test_manifest_lists_every_output(tmp_path, capsys):
    code, _, _ = run_cli(["kakeya", "example.family", "--ladder", "2^-4..2^-6", "--seed", "3",
                          "--out", str(tmp_path)], capsys)
    assert code == 0
    m = manifest(tmp_path)
    listed = {o["path"] for o in m["outputs"]}
    on_disk = {p.name for p in tmp_path.iterdir()} - {"manifest.json"}
    assert listed == on_disk == {"kakeya.csv", "kakeya.svg", "kakeya_fit.json"}
    assert m["config"]["seed"] == 3
    assert m["calibration"] == DEFAULTS
    assert m["version"] and m["started"] and m["finished"]
    assert all(len(d) == 64 for d in m["inputs"].values())
    assert parse_args(m["argv"]) == parse_args(["kakeya", "example.family", "--ladder", "2^-4..2^-6",
                                                "--seed", "3", "--out", str(tmp_path)])


def test_seed_in_every_output(tmp_path, capsys):
    run_cli(["kakeya", "example.family", "--ladder", "2^-4..2^-6", "--seed", "11", "--out", str(tmp_path)], capsys)
    csv = (tmp_path / "kakeya.csv").read_text().splitlines()
    assert csv[0].startswith("seed,") and all(line.startswith("11,") for line in csv[1:])
    assert json.loads((tmp_path / "kakeya_fit.json").read_text())["seed"] == 11
    assert '"seed": 11' in (tmp_path / "kakeya.svg").read_text()


def test_csv_determinism(tmp_path, capsys):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert run_cli(["kakeya", "example.family", "--ladder", "2^-4..2^-6", "--seed", "7", "--out", str(d)],
                       capsys)[0] == 0
        outs.append((d / "kakeya.csv").read_bytes())
    assert outs[0] == outs[1]


def test_plot_slope_matches_fit(tmp_path, capsys):
    code, out, _ = run_cli(["kakeya", "example.family", "--ladder", "2^-4..2^-6", "--out", str(tmp_path)], capsys)
    fit = json.loads(out)["slope"]
    svg = (tmp_path / "kakeya.svg").read_text()
    shown = float(re.search(r"slope = (-?[\d.]+)", svg).group(1))
    assert shown == pytest.approx(fit, abs=5e-4)


def test_projdim_and_wolff_and_bilinear(tmp_path, capsys):
    assert run_cli(["projdim", "wisewell.family", "--cloud", "wisewell_plane", "--ladder", "2^-6", "--samples", "4",
                    "--out", str(tmp_path / "p")], capsys)[0] == 0
    rows = (tmp_path / "p" / "projdim.csv").read_text().splitlines()
    assert len(rows) == 5
    assert run_cli(["wolff", "wisewell.family", "--labels", "witness", "--ladder", "2^-4",
                    "--out", str(tmp_path / "w")], capsys)[0] == 0
    assert run_cli(["bilinear", "example.family", "--ladder", "2^-3..2^-5", "--out", str(tmp_path / "b")],
                   capsys)[0] == 0
    assert {o["path"] for o in manifest(tmp_path / "b")["outputs"]} == {"bilinear.csv", "bilinear.svg"}


# --- errors ---------------------------------------------------------------------


def error_record(err):
    return json.loads(err.strip().splitlines()[-1])


def test_exit_2_on_bad_ladder(tmp_path, capsys):
    code, _, err = run_cli(["kakeya", "example.family", "--ladder", "2^-6..2^-4", "--out", str(tmp_path)], capsys)
    assert code == 2 and error_record(err)["error"] == "ConfigError"


def test_exit_2_on_short_ladder(tmp_path, capsys):
    code, _, err = run_cli(["kakeya", "example.family", "--ladder", "2^-4..2^-5", "--out", str(tmp_path)], capsys)
    assert code == 2 and error_record(err)["exit_code"] == 2


def test_exit_2_on_unknown_flag():
    with pytest.raises(SystemExit) as exc:
        main(["check", "example.family", "--nope"])
    assert exc.value.code == 2


def test_exit_3_on_missing_file(tmp_path, capsys):
    code, _, err = run_cli(["check", str(tmp_path / "missing.family"), "--out", str(tmp_path)], capsys)
    assert code == 3 and error_record(err)["error"] == "FileNotFoundError"


def test_exit_3_on_malformed_family(tmp_path, capsys):
    bad = tmp_path / "bad.family"
    bad.write_text('{"b1": [["1"], ["0"], ["0"]], "b2": [["0"], ["1"], ["0"], ["0"]]}')
    code, _, err = run_cli(["check", str(bad), "--out", str(tmp_path)], capsys)
    assert code == 3 and error_record(err)["error"] == "ParseError"


def test_exit_4_on_invariant_violation(tmp_path, capsys, monkeypatch):
    import curvedkakeya.family as fam

    monkeypatch.setattr(fam, "verify_witness", lambda f, K: False)
    code, _, err = run_cli(["check", "wisewell.family", "--out", str(tmp_path)], capsys)
    assert code == 4 and error_record(err)["error"] in ("InvariantViolation", "WitnessReconstructionFailed")


def test_exit_4_on_cli_witness_recheck(tmp_path, capsys, monkeypatch):
    import curvedkakeya.family as fam

    real = fam.full_check
    monkeypatch.setattr(fam, "verify_witness", lambda f, K: False)
    # the checker itself is left intact; only the CLI's second look disagrees
    monkeypatch.setattr(cli, "full_check", lambda f: _unpatched_check(real, fam, f))
    code, _, err = run_cli(["check", "wisewell.family", "--out", str(tmp_path)], capsys)
    assert code == 4 and error_record(err)["error"] == "InvariantViolation"


def _unpatched_check(real, fam, f):
    stub = fam.verify_witness
    fam.verify_witness = _REAL_VERIFY
    try:
        return real(f)
    finally:
        fam.verify_witness = stub


# --- plots ----------------------------------------------------------------------


def test_two_point_plot(tmp_path):
    target = tmp_path / "two.svg"
    slopes = emit_plot([{"label": "s", "points": [(0.5, 2.0), (0.25, 8.0)]}], target)
    assert slopes[0] == pytest.approx(-2.0)
    svg = target.read_text()
    assert svg.startswith("<svg") and "stroke-dasharray" in svg and "slope = -2.000" in svg


@pytest.mark.parametrize("series", [[], [{"label": "one", "points": [(0.5, 1.0)]}],
                                    [{"label": "neg", "points": [(0.5, -1.0), (0.25, 1.0)]}]])
def test_bad_plots(tmp_path, series):
    with pytest.raises(ValueError):
        emit_plot(series, tmp_path / "x.svg")


def test_plot_to_missing_directory(tmp_path):
    with pytest.raises(OSError):
        emit_plot([{"label": "s", "points": [(0.5, 1.0), (0.25, 2.0)]}], tmp_path / "no" / "x.svg")


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_loglog_slope_exact_on_power_laws(e, c):
    pts = [(2.0 ** -k, c * 2.0 ** (-k * e)) for k in range(2, 7)]
    assert loglog_slope(pts)[0] == pytest.approx(e, abs=1e-9)
