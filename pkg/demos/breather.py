"""A breather: localized, oscillating in time, hard on every scheme.

The breather completes about two internal oscillations by T = 0.4. Tuning the
parameter for this problem gives very different optima from the soliton case,
which is why the optimum is problem dependent.

    python3 demos/breather.py
"""

import numpy as np

from mkdvfd import SchemeSpec, run_benchmark

for spec in [SchemeSpec("EC8", 0.0), SchemeSpec("EC8", 2.22), SchemeSpec("MC10", 0.0),
             SchemeSpec("MC10", 1.15), SchemeSpec("NarrowBox")]:
    res = run_benchmark(spec, "breather")
    u, ue = res.final, res.exact_final
    k = int(np.argmax(np.abs(ue)))
    print(f"{spec.label():12s} sol err {res.report.sol_err:.4f}   "
          f"u(x={res.grid.x[k]:+.2f}, T) = {u[k]:+.3f} (exact {ue[k]:+.3f})")
