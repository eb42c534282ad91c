"""Exact checks and desk-scale experiments for curved Kakeya and restricted projection problems."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .errors import CurvedKakeyaError, InvariantViolation, ParseError
from .family import ExponentReport, FamilySpec, example_family, full_check, wisewell_family
from .polycore import Poly, PolyMat, count_real_roots, det_poly, plucker_minors

__all__ = [
    "CurvedKakeyaError", "InvariantViolation", "ParseError",
    "ExponentReport", "FamilySpec", "example_family", "full_check", "wisewell_family",
    "Poly", "PolyMat", "count_real_roots", "det_poly", "plucker_minors",
    "__version__",
]
