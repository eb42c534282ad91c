"""Command line front end: check, exponents, kakeya, bilinear, wolff, projdim, demo.

Exit codes: 0 success, 2 configuration error, 3 input error, 4 internal
invariant violation.  Errors are also written to stderr as one JSON record.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .bench import (
    bilinear_bound,
    bilinear_functional,
    bush_tubes,
    linear_kakeya_experiment,
    plain_multilinear_check,
)
from .defaults import DEFAULTS, load_defaults
from .errors import (
    CurvedKakeyaError,
    InfeasibleExponent,
    InvariantViolation,
    LadderTooShort,
    ParseError,
    TooFewScales,
    WitnessReconstructionFailed,
)
from .family import ExponentReport, FamilySpec, full_check, minor_coefficients
from .fileio import bundled_path, csv_text, parse_family_file, parse_surface_file, sha256_file
from .plots import emit_plot
from .projection import exceptional_scan, generate_cloud, generic_plane_cloud
from .tubes import Label, Tube, jittered_grid
from .wolff import capture_count, degenerate_wisewell_labels, rasterize_set, wisewell_surface

COMMANDS = ("check", "exponents", "kakeya", "bilinear", "wolff", "projdim", "demo")
OUT_ENV = "CURVEDKAKEYA_OUT"
DEFAULT_LADDERS = {
    "kakeya": "2^-4..2^-7",
    "bilinear": "2^-4..2^-6",
    "wolff": "2^-5",
    "projdim": "2^-8",
}


class ConfigError(CurvedKakeyaError):
    pass


# ---------------------------------------------------------------------------
# ladders


_POW = re.compile(r"^\s*2\^(-?\d+)\s*$")


def parse_ladder(text: str) -> tuple[float, ...]:
    """"2^-4..2^-8", "2^-5" or a comma list of decimals; result strictly decreasing."""
    text = text.strip()
    if ".." in text:
        a, b = text.split("..", 1)
        ma, mb = _POW.match(a), _POW.match(b)
        if not (ma and mb):
            raise ConfigError(f"bad ladder range {text!r}")
        ka, kb = int(ma.group(1)), int(mb.group(1))
        step = -1 if kb < ka else 1
        vals = tuple(2.0**k for k in range(ka, kb + step, step))
    else:
        vals = []
        for item in text.split(","):
            m = _POW.match(item)
            try:
                vals.append(2.0 ** int(m.group(1)) if m else float(item))
            except ValueError as exc:
                raise ConfigError(f"bad ladder entry {item!r}") from exc
        vals = tuple(vals)
    if not vals or any(v <= 0 or v > 1 for v in vals):
        raise ConfigError("ladder values must lie in (0, 1]")
    if any(b >= a for a, b in zip(vals, vals[1:])):
        raise ConfigError("ladder must be strictly decreasing")
    return vals


def format_ladder(vals: Sequence[float]) -> str:
    ks = [math.log2(v) for v in vals]
    if all(k == int(k) for k in ks):
        ks = [int(k) for k in ks]
        if len(ks) > 1 and all(b == a - 1 for a, b in zip(ks, ks[1:])):
            return f"2^{ks[0]}..2^{ks[-1]}"
        return ",".join(f"2^{k}" for k in ks)
    return ",".join(repr(v) for v in vals)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    command: str
    family_path: str | None = None
    delta_ladder: tuple[float, ...] = ()
    p: float | None = None
    seed: int = 0
    out_dir: str = "curvedkakeya-out"
    epsilon: float = DEFAULTS["epsilon"]
    calibration: str | None = None
    lam: float = 0.5
    a: float | None = None
    samples: int = 64
    surface_path: str | None = None
    cloud: str = "generic"
    labels: str = "generic"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if any(b >= a for a, b in zip(self.delta_ladder, self.delta_ladder[1:])):
            raise ConfigError("ladder must be strictly decreasing")
        if not 0 < self.lam <= 1:
            raise ConfigError("--lam must lie in (0, 1]")
        if self.samples < 1:
            raise ConfigError("--samples must be positive")

    def to_argv(self) -> list[str]:
        argv = [self.command]
        if self.family_path is not None:
            argv.append(self.family_path)
        if self.delta_ladder:
            argv += ["--ladder", format_ladder(self.delta_ladder)]
        if self.p is not None:
            argv += ["--p", repr(self.p)]
        argv += ["--seed", str(self.seed), "--out", self.out_dir, "--epsilon", repr(self.epsilon)]
        if self.calibration is not None:
            argv += ["--calibration", self.calibration]
        argv += ["--lam", repr(self.lam)]
        if self.a is not None:
            argv += ["--a", repr(self.a)]
        argv += ["--samples", str(self.samples)]
        if self.surface_path is not None:
            argv += ["--surface", self.surface_path]
        argv += ["--cloud", self.cloud, "--labels", self.labels]
        return argv

    def to_dict(self) -> dict:
        d = asdict(self)
        d["delta_ladder"] = list(self.delta_ladder)
        return d


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="curvedkakeya", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name != "demo":
            sp.add_argument("family_path", metavar="FAMILY")
        sp.add_argument("--ladder", default=None, help='e.g. "2^-4..2^-8"')
        sp.add_argument("--p", type=float, default=None, help="norm exponent (default 2*beta)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", dest="out_dir", default=None, help=f"output directory (env {OUT_ENV})")
        sp.add_argument("--epsilon", type=float, default=DEFAULTS["epsilon"])
        sp.add_argument("--calibration", default=None, help="alternative defaults.json")
        sp.add_argument("--lam", type=float, default=0.5, help="occupancy fraction for wolff")
        sp.add_argument("--a", type=float, default=None, help="dimension threshold (default 1+1/N)")
        sp.add_argument("--samples", type=int, default=64, help="number of t samples")
        sp.add_argument("--surface", dest="surface_path", default=None)
        sp.add_argument("--cloud", choices=("generic", "wisewell_plane", "uniform"), default="generic")
        sp.add_argument("--labels", choices=("generic", "witness"), default="generic")
    return ap


def parse_args(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(list(argv))
    ladder = ns.ladder if ns.ladder is not None else DEFAULT_LADDERS.get(ns.command)
    out = ns.out_dir or os.environ.get(OUT_ENV) or "curvedkakeya-out"
    return RunConfig(
        command=ns.command,
        family_path=getattr(ns, "family_path", None),
        delta_ladder=parse_ladder(ladder) if ladder else (),
        p=ns.p,
        seed=ns.seed,
        out_dir=out,
        epsilon=ns.epsilon,
        calibration=ns.calibration,
        lam=ns.lam,
        a=ns.a,
        samples=ns.samples,
        surface_path=ns.surface_path,
        cloud=ns.cloud,
        labels=ns.labels,
    )


def resolve_input(path: str) -> Path:
    """Use the file if it exists, else a bundled asset of that name."""
    p = Path(path)
    if p.exists():
        return p
    b = bundled_path(p.name)
    if b.exists():
        return b
    raise FileNotFoundError(path)


# ---------------------------------------------------------------------------
# runner


class Run:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []
        self.inputs: dict[str, str] = {}
        self.results: dict = {}
        self.calibration = load_defaults(cfg.calibration)
        self.started = time.strftime("%Y-%m-%dT%H:%M:%S%z")

    def family(self, path: str | None = None) -> FamilySpec:
        src = resolve_input(path or self.cfg.family_path)
        self.inputs[str(src)] = sha256_file(src)
        return parse_family_file(src)

    def write(self, name: str, text: str) -> Path:
        target = self.out / name
        target.write_text(text)
        self.outputs.append(name)
        return target

    def table(self, name: str, header: Sequence[str], rows) -> Path:
        """CSV with the seed as its first column."""
        return self.write(name, csv_text(["seed", *header], ([self.cfg.seed, *r] for r in rows)))

    def record(self, name: str, doc: dict) -> Path:
        return self.write(name, json.dumps({"seed": self.cfg.seed, **doc}, indent=2, sort_keys=True) + "\n")

    def plot(self, name: str, series, **kw) -> list[float]:
        slopes = emit_plot(series, self.out / name, meta={"seed": self.cfg.seed, "command": self.cfg.command}, **kw)
        self.outputs.append(name)
        return slopes

    def manifest(self) -> dict:
        doc = {
            "artifact": "curvedkakeya",
            "version": __version__,
            "config": self.cfg.to_dict(),
            "argv": self.cfg.to_argv(),
            "calibration": self.calibration,
            "started": self.started,
            "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "inputs": self.inputs,
            "outputs": [{"path": n, "sha256": sha256_file(self.out / n)} for n in self.outputs],
            "results": self.results,
        }
        (self.out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
        return doc


def _exponents(f: FamilySpec) -> ExponentReport:
    return ExponentReport.from_degree(minor_coefficients(f).B)


def cmd_check(run: Run, f: FamilySpec | None = None, prefix: str = "") -> dict:
    f = f or run.family()
    report = full_check(f)
    if not report.subspace_ok:
        from .family import verify_witness

        if not verify_witness(f, report.witness):
            raise InvariantViolation("witness failed exact verification")
    run.record(f"{prefix}check.json", report.to_dict())
    summary = {
        "family": f.name,
        "wronskian_ok": report.wronskian_ok,
        "subspace_ok": report.subspace_ok,
        "frame_independent": report.frame_independent,
        "B": report.exponents.B,
        "N": report.exponents.N,
        "dim_bound": str(report.exponents.dim_bound),
        "witness": None if report.witness is None else [[str(x) for x in r] for r in report.witness],
    }
    run.results[f"{prefix}check"] = summary
    return summary


def cmd_exponents(run: Run) -> dict:
    ex = _exponents(run.family()).to_dict()
    run.record("exponents.json", ex)
    run.results["exponents"] = ex
    return ex


def _witness_plane(f: FamilySpec):
    report = full_check(f)
    if report.witness is None:
        raise ConfigError("--labels witness needs a family that fails the subspace check")
    return [[float(x) for x in row] for row in report.witness]


def cmd_kakeya(run: Run) -> dict:
    cfg = run.cfg
    f = run.family()
    ex = _exponents(f)
    p = cfg.p if cfg.p is not None else (float(ex.p) if ex.p is not None else 2.0)
    plane = _witness_plane(f) if cfg.labels == "witness" else None
    res = linear_kakeya_experiment(f, cfg.delta_ladder, p, cfg.seed, plane=plane)
    rows = [
        (s.delta, s.tube_count, s.lp[1.0], s.lp[2.0], s.lp[float(p)], s.max_count, s.support_cells, s.total_incidences)
        for s in res.stats
    ]
    run.table("kakeya.csv", ["delta", "tube_count", "lp_1", "lp_2", "lp_p", "max_count", "support_cells", "incidences"],
              rows)
    slopes = run.plot("kakeya.svg", [{"label": f"{f.name} ||sum chi||_p", "points": [(r[0], r[4]) for r in rows]}],
                      title=f"linear Kakeya field, p = {p:.4g}", ylabel="norm")
    out = {"p": p, "slope": res.fit.slope, "plot_slope": slopes[0], "target": res.target, "r2": res.fit.r2}
    run.record("kakeya_fit.json", out)
    run.results["kakeya"] = out
    return out


def cmd_bilinear(run: Run) -> dict:
    cfg = run.cfg
    f = run.family()
    ex = _exponents(f)
    if ex.beta is None:
        raise ConfigError("bilinear functional needs N >= 2")
    rows = []
    for d in cfg.delta_ladder:
        tubes = bush_tubes(f, d, cfg.seed)
        val = bilinear_functional(f, tubes, float(ex.alpha), float(ex.beta))
        bound = bilinear_bound(d, len(tubes))
        multi = plain_multilinear_check(f, tubes, slack=run.calibration["C_rast"])
        rows.append((d, len(tubes), val, bound, val / bound, multi["ratio"], multi["ok"]))
    run.table("bilinear.csv",
              ["delta", "tube_count", "functional", "bound", "ratio", "multilinear_ratio", "multilinear_ok"], rows)
    series = [{"label": "functional", "points": [(r[0], r[2]) for r in rows if r[2] > 0]},
              {"label": "delta^(5/2) #T^(3/2)", "points": [(r[0], r[3]) for r in rows]}]
    series = [s for s in series if len(s["points"]) >= 2]
    if series:
        run.plot("bilinear.svg", series, title=f"bilinear functional, bush configurations ({f.name})")
    out = {"max_ratio": max(r[4] for r in rows), "all_multilinear_ok": all(r[6] for r in rows)}
    run.results["bilinear"] = out
    return out


def _wolff_rows(cfg: RunConfig, cal: dict, f: FamilySpec, surface, labels: str) -> list[tuple]:
    seed = cfg.seed
    rows = []
    for d in cfg.delta_ladder:
        rng = np.random.default_rng([seed, int(round(-math.log2(d) * 1000))])
        if labels == "witness":
            m = max(1, int(0.2 / d))
            z = degenerate_wisewell_labels(jittered_grid(m, d, rng, -0.24, -0.04))
        else:
            m = max(1, int(0.2 / d))
            z = np.hstack([rng.uniform(0, 1, (m * m, 2)), jittered_grid(m, d, rng)])
        tubes = [Tube(Label.from_z(r), 0.0, 1.0, d) for r in z]
        raster = rasterize_set(surface, d)
        rep = capture_count(f, tubes, raster, cfg.lam, epsilon=cfg.epsilon, C_cal=cal["C_cal"])
        flagged = sum(not Label.from_z(r).in_unit_cube() for r in z)
        rows.append((f.name, labels, d, rep.lam, len(tubes), rep.captured, rep.set_volume, rep.bound, rep.ratio,
                     rep.N, flagged))
    return rows


WOLFF_HEADER = ["family", "labels", "delta", "lambda", "tube_count", "captured", "set_volume", "bound", "ratio", "N",
                "labels_outside_unit_cube"]


def cmd_wolff(run: Run) -> dict:
    cfg = run.cfg
    f = run.family()
    if cfg.surface_path:
        src = resolve_input(cfg.surface_path)
        run.inputs[str(src)] = sha256_file(src)
        surface = parse_surface_file(src)
    else:
        surface = wisewell_surface()
    rows = _wolff_rows(cfg, run.calibration, f, surface, cfg.labels)
    run.table("wolff.csv", WOLFF_HEADER, rows)
    out = {"ratios": [r[8] for r in rows], "captured": [r[5] for r in rows]}
    run.results["wolff"] = out
    return out


def _cloud(f: FamilySpec, kind: str, delta: float, seed: int):
    if kind == "generic":
        return generic_plane_cloud(f, delta, seed)
    if kind == "wisewell_plane":
        return generate_cloud("wisewell_plane", delta, 2.0, seed)
    return generate_cloud("uniform", delta, 2.0, seed)


def _projdim_rows(f: FamilySpec, cfg: RunConfig, kind: str, a: float) -> list[tuple]:
    rows = []
    for d in cfg.delta_ladder:
        cloud = _cloud(f, kind, d, cfg.seed)
        rep = exceptional_scan(f, cloud, a, cfg.samples)
        for e in rep.estimates:
            rows.append((f.name, kind, d, len(cloud), e.t, e.slope, int(e.slope < a)))
    return rows


PROJDIM_HEADER = ["family", "cloud", "delta", "points", "t", "slope", "flagged"]


def cmd_projdim(run: Run) -> dict:
    cfg = run.cfg
    f = run.family()
    a = cfg.a if cfg.a is not None else float(_exponents(f).dim_bound)
    rows = _projdim_rows(f, cfg, cfg.cloud, a)
    run.table("projdim.csv", PROJDIM_HEADER, rows)
    out = {"a": a, "flagged_fraction": sum(r[6] for r in rows) / len(rows),
           "min_slope": min(r[5] for r in rows), "max_slope": max(r[5] for r in rows)}
    run.results["projdim"] = out
    return out


def cmd_demo(run: Run) -> dict:
    """Example family against the Wisewell family, end to end."""
    fams = {"example": run.family("example.family"), "wisewell": run.family("wisewell.family")}
    summary = {name: cmd_check(run, f, prefix=f"{name}_") for name, f in fams.items()}
    d_proj = run.cfg.delta_ladder[0] if run.cfg.delta_ladder else 2.0**-8
    proj_cfg = RunConfig("projdim", delta_ladder=(d_proj,), seed=run.cfg.seed, samples=run.cfg.samples)
    rows = _projdim_rows(fams["example"], proj_cfg, "generic", 1.2)
    rows += _projdim_rows(fams["wisewell"], proj_cfg, "wisewell_plane", 1.2)
    run.table("demo_projdim.csv", PROJDIM_HEADER, rows)
    wolff_cfg = RunConfig("wolff", delta_ladder=(2.0**-5,), seed=run.cfg.seed, lam=0.5, epsilon=run.cfg.epsilon)
    wrows = _wolff_rows(wolff_cfg, run.calibration, fams["example"], wisewell_surface(), "generic")
    wrows += _wolff_rows(wolff_cfg, run.calibration, fams["wisewell"], wisewell_surface(), "witness")
    run.table("demo_wolff.csv", WOLFF_HEADER, wrows)
    for name in fams:
        slopes = [r[5] for r in rows if r[0] == name]
        summary[name]["projected_slope_min"] = min(slopes)
        summary[name]["projected_slope_max"] = max(slopes)
        summary[name]["wolff_ratio"] = next(r[8] for r in wrows if r[0] == name)
    run.results["demo"] = summary
    return summary


HANDLERS = {
    "check": cmd_check,
    "exponents": cmd_exponents,
    "kakeya": cmd_kakeya,
    "bilinear": cmd_bilinear,
    "wolff": cmd_wolff,
    "projdim": cmd_projdim,
    "demo": cmd_demo,
}


def run(cfg: RunConfig) -> dict:
    r = Run(cfg)
    result = HANDLERS[cfg.command](r)
    r.manifest()
    return result


def _fail(code: int, exc: BaseException) -> int:
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(rec), file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_args(argv)
    except ConfigError as exc:
        return _fail(2, exc)
    try:
        result = run(cfg)
    except (ConfigError, LadderTooShort, InfeasibleExponent, TooFewScales) as exc:
        return _fail(2, exc)
    except (InvariantViolation, WitnessReconstructionFailed) as exc:
        return _fail(4, exc)
    except (ParseError, FileNotFoundError, CurvedKakeyaError) as exc:
        return _fail(3, exc)
    print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
