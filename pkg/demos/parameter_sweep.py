"""Find the parameter value that minimizes an error measure.

A coarse scan brackets the minimum and golden-section search refines it.
Each evaluation is a full run, so this takes a minute or two per family.

    python3 demos/parameter_sweep.py [FAMILY] [OBJECTIVE]

OBJECTIVE is ``solution_error`` (default) or ``unpreserved_invariant``.
"""

import sys

from mkdvfd import sweep_lambda

family = sys.argv[1] if len(sys.argv) > 1 else "EC10"
objective = sys.argv[2] if len(sys.argv) > 2 else "solution_error"

res = sweep_lambda(family, "two_soliton", objective, range_=(-0.2, 0.6), samples=5, dx=0.2,
                   dt=0.05)
print(f"{family}, objective {objective}, coarse grid")
for lam in sorted(res.evaluated):
    mark = "  <- best" if lam == res.lambda_star else ""
    print(f"  lambda = {lam:+.5f}   {res.evaluated[lam]:.5g}{mark}")
