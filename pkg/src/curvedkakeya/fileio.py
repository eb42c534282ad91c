"""Family and surface files, CSV tables and run manifests."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyVector, ParseError
from .family import CheckReport, FamilySpec
from .polycore import Poly, format_fraction
from .wolff import Constraint, SemialgebraicSpec, TriPoly

_RATIONAL = re.compile(r"^\s*[+-]?\d+(\s*/\s*\d+)?\s*$")


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("curvedkakeya").joinpath("data", name)))


def _refuse_float(token: str):
    raise ParseError(f"float literal {token} not allowed; write coefficients as \"num/den\" strings")


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh, parse_float=_refuse_float)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def parse_rational(item) -> Fraction:
    if isinstance(item, bool):
        raise ParseError(f"not a rational: {item!r}")
    if isinstance(item, int):
        return Fraction(item)
    if isinstance(item, str) and _RATIONAL.match(item):
        try:
            return Fraction(item.replace(" ", ""))
        except ZeroDivisionError as exc:
            raise ParseError(f"zero denominator in {item!r}") from exc
    raise ParseError(f"not a rational: {item!r}")


def _parse_vector(raw, label: str) -> tuple[Poly, ...]:
    if not isinstance(raw, list) or len(raw) != 4:
        raise ParseError(f"{label} must be a list of 4 coefficient lists")
    out = []
    for coord in raw:
        if not isinstance(coord, list):
            raise ParseError(f"{label}: each coordinate is a list of coefficients")
        out.append(Poly(parse_rational(c) for c in coord))
    if all(p.is_zero() for p in out):
        raise EmptyVector(f"{label} is the zero vector")
    return tuple(out)


def family_from_dict(doc: dict, default_name: str = "family") -> FamilySpec:
    if not isinstance(doc, dict) or "b1" not in doc or "b2" not in doc:
        raise ParseError("family file needs keys b1 and b2")
    return FamilySpec(_parse_vector(doc["b1"], "b1"), _parse_vector(doc["b2"], "b2"),
                      name=str(doc.get("name", default_name)))


def parse_family_file(path) -> FamilySpec:
    path = Path(path)
    return family_from_dict(_load_json(path), default_name=path.stem)


def family_to_dict(f: FamilySpec) -> dict:
    return {"name": f.name, "b1": [p.to_strings() for p in f.b1], "b2": [p.to_strings() for p in f.b2]}


def dump_family(f: FamilySpec, path) -> None:
    Path(path).write_text(json.dumps(family_to_dict(f), indent=2) + "\n")


def parse_surface_file(path) -> SemialgebraicSpec:
    doc = _load_json(path)
    try:
        cons = [
            Constraint(TriPoly({tuple(t["exp"]): parse_rational(t["coef"]) for t in c["terms"]}), c["relation"])
            for c in doc["constraints"]
        ]
        return SemialgebraicSpec(tuple(cons), e_max=int(doc.get("e_max", 12)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def surface_to_dict(s: SemialgebraicSpec) -> dict:
    return {
        "e_max": s.e_max,
        "constraints": [{"relation": c.relation, "terms": c.poly.to_records()} for c in s.constraints],
    }


def report_to_json(r: CheckReport) -> str:
    return json.dumps(r.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# tables and manifests


def fmt(x) -> str:
    """Deterministic text for CSV cells: repr for floats, exact strings for rationals."""
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, Fraction):
        return format_fraction(x)
    return str(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()
