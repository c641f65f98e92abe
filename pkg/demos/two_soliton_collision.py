"""Two solitons of mKdV collide; compare the conservative schemes.

The fast soliton (speed 2.5) starts behind the slow one (speed 0.5), passes
through it and leaves with a phase shift. Each scheme conserves mass and one
more invariant exactly; the free parameter trades the unconserved invariant
against solution accuracy.

    python3 demos/two_soliton_collision.py [--coarse]
"""

import sys

from mkdvfd import SchemeSpec, run_benchmark

coarse = "--coarse" in sys.argv
dx, dt = (0.2, 0.05) if coarse else (0.1, 0.025)

schemes = [SchemeSpec("EC8", 0.0), SchemeSpec("EC8", 1.0), SchemeSpec("MC8", -0.077),
           SchemeSpec("EC10", 0.0), SchemeSpec("EC10", 0.04), SchemeSpec("MC10", 0.19),
           SchemeSpec("NarrowBox"), SchemeSpec("Multisymplectic")]

print(f"two-soliton collision on [-20, 20], dx={dx}, dt={dt}, T=10\n")
print(f"{'scheme':18s} {'Err1':>9s} {'Err2':>9s} {'Err3':>9s} {'sol err':>8s} "
      f"{'phi1':>7s} {'phi2':>7s} {'phi':>7s} {'s':>5s}")
for spec in schemes:
    res = run_benchmark(spec, "two_soliton", dx, dt)
    e = res.report
    print(f"{spec.label():18s} {e.err1:9.2e} {e.err2:9.2e} {e.err3:9.2e} {e.sol_err:8.4f} "
          f"{e.err_phi1:7.3f} {e.err_phi2:7.3f} {e.err_phi:7.3f} {res.wall_time:5.1f}")

print("\nErr columns are dx * max drift of the discrete invariant sums; the conserved")
print("ones sit at rounding level. Phase errors are numerical minus exact peak position.")
