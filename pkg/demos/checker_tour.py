"""
Two curve families side by side
===============================

The Example family passes every exact check; the Wisewell family has a
2-plane of labels that all curves squash to a line, and the checker
hands back that plane as a witness.
"""
from curvedkakeya.family import example_family, full_check, wisewell_family
from curvedkakeya.projection import plane_determinant

for f in (example_family(), wisewell_family()):
    r = full_check(f)
    ex = r.exponents
    print(f"--- {f.name}")
    print("  Wronskian nonvanishing on [0,1]:", r.wronskian_ok)
    print("  subspace nondegenerate:        ", r.subspace_ok)
    print(f"  B = {ex.B}, N = {ex.N}, alpha = {ex.alpha}, beta = {ex.beta}, dim bound = {ex.dim_bound}")
    if r.witness is not None:
        print("  witness plane (columns):", [[str(x) for x in row] for row in r.witness])
        # exact polynomial, not a numeric check
        print("  det(M(t) K) =", plane_determinant(f, r.witness))
