"""Solution-independent checks of every scheme.

* the discrete conservation laws hold as algebraic identities on random data
* the assembled Newton Jacobian agrees with finite differences
* each residual is a second-order approximation of the PDE
* EC10(0) and MC10(0) coincide with the average vector field schemes

    python3 demos/verify_schemes.py
"""

from mkdvfd.verify import run_suite

result = run_suite(trials=100)
print("\n".join(result.lines))
print("\nall checks passed" if result.ok else "\nSOME CHECKS FAILED")
