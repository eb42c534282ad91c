from fractions import Fraction

import pytest
from hypothesis import strategies as st

from curvedkakeya.family import example_family, wisewell_family
from curvedkakeya.polycore import Poly, PolyMat

small_int = st.integers(-6, 6)
rationals = st.builds(Fraction, st.integers(-20, 20), st.integers(1, 9))


def polys(max_deg=4, coeffs=rationals):
    return st.lists(coeffs, min_size=0, max_size=max_deg + 1).map(Poly)


def polymats(rows, cols, max_deg=3, coeffs=small_int):
    return st.lists(polys(max_deg, coeffs), min_size=rows * cols, max_size=rows * cols).map(
        lambda e: PolyMat(rows, cols, e)
    )


@pytest.fixture(scope="session")
def example():
    return example_family()


@pytest.fixture(scope="session")
def wisewell():
    return wisewell_family()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
