"""Benchmark problems, error metrics, phase shifts, parameter sweeps."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .grid import Grid, fwd_avg_space, fwd_diff_space, shift_space
from .schemes import SchemeFamily, SchemeSpec, conservation_laws
from .solver import NewtonConfig, NonConvergenceError, Trajectory, integrate
from .banded import SingularMatrixError

log = logging.getLogger(__name__)

LAW_NAMES = ("mass_sum", "momentum_sum", "energy_sum")


# --------------------------------------------------------------------------
# exact solutions

@dataclass(frozen=True)
class TwoSolitonParams:
    c1: float = 2.5
    c2: float = 0.5
    d1: float = 12.0
    d2: float = 2.5

    def __post_init__(self):
        if not self.c1 > self.c2 > 0:
            raise ValueError("need c1 > c2 > 0")

    @property
    def kappa(self) -> float:
        s1, s2 = math.sqrt(self.c1), math.sqrt(self.c2)
        return (s1 + s2) / (s1 - s2)


def exact_two_soliton(p: TwoSolitonParams, x, t):
    """Two-soliton solution of ``u_t + u^2 u_x + u_xxx = 0``."""
    x = np.asarray(x, dtype=float)
    s1, s2 = math.sqrt(p.c1), math.sqrt(p.c2)
    k = p.kappa
    xi1 = s1 * (x - p.c1 * t + p.d1)
    xi2 = s2 * (x - p.c2 * t + p.d2)
    num = 2 * math.sqrt(6) * k * (s1 * np.cosh(xi2) + s2 * np.cosh(xi1))
    den = (k ** 2 - 1) + k ** 2 * np.cosh(xi1 - xi2) + np.cosh(xi1 + xi2)
    return num / den


def breather_potential(x, t):
    """The function whose x-derivative is the breather."""
    x = np.asarray(x, dtype=float)
    g = math.sqrt(3) * np.sin(2 * x - 64 * t - math.pi / 2) / np.cosh(2 * math.sqrt(3) * x)
    return -2 * math.sqrt(6) * np.arctan(g)


def exact_breather(x, t):
    """Breather solution, the closed-form x-derivative of :func:`breather_potential`.

    With ``theta = 2x - 64t - pi/2`` and ``s = 2 sqrt(3) x``::

        u = -2 sqrt(18) (2 cos(theta) cosh(s) - 2 sqrt(3) sin(theta) sinh(s))
            / (cosh(s)^2 + 3 sin(theta)^2)
    """
    x = np.asarray(x, dtype=float)
    r3 = math.sqrt(3)
    theta = 2 * x - 64 * t - math.pi / 2
    s = 2 * r3 * x
    ch, sh = np.cosh(s), np.sinh(s)
    sn, cs = np.sin(theta), np.cos(theta)
    return (-2 * math.sqrt(6) * r3 * (2 * cs * ch - 2 * r3 * sn * sh)
            / (ch ** 2 + 3 * sn ** 2))


@dataclass(frozen=True)
class Problem:
    name: str
    a: float
    b: float
    T: float
    dx: float
    dt: float
    exact: Callable

    def grid(self, dx: float | None = None, dt: float | None = None,
             a: float | None = None, b: float | None = None) -> Grid:
        return Grid.from_spacing(self.a if a is None else a, self.b if b is None else b,
                                 self.dx if dx is None else dx, self.dt if dt is None else dt)


TWO_SOLITON = TwoSolitonParams()

PROBLEMS = {
    "two_soliton": Problem("two_soliton", -20.0, 20.0, 10.0, 0.1, 0.025,
                           lambda x, t: exact_two_soliton(TWO_SOLITON, x, t)),
    "breather": Problem("breather", -2.0, 2.0, 0.4, 0.02, 0.002, exact_breather),
}


def get_problem(name: str | Problem) -> Problem:
    if isinstance(name, Problem):
        return name
    try:
        return PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


# --------------------------------------------------------------------------
# invariants

def fallback_v(u: np.ndarray, family: SchemeFamily) -> np.ndarray:
    """Nodal values for 10-point schemes, ``(u_{i-1} + u_i)/2`` for 8-point ones."""
    if family.points == 10:
        return u
    return fwd_avg_space(shift_space(u, -1))


def fallback_momentum(v: np.ndarray, dx: float) -> np.ndarray:
    return v ** 2 / 2


def fallback_energy(v: np.ndarray, dx: float) -> np.ndarray:
    return v ** 4 / 12 + v * fwd_diff_space(fwd_diff_space(shift_space(v, -1), dx), dx) / 2


class InvariantTracker:
    """Per-level global sums ``sum_i G_l`` for laws 1-3.

    Laws the scheme preserves use its own discrete density; the others use
    the fallback momentum/energy densities of the auxiliary field ``v``.
    """

    names = LAW_NAMES

    def __init__(self, spec: SchemeSpec, grid: Grid):
        self.spec = spec
        self.grid = grid
        self.laws = {law.law_index: law for law in conservation_laws(spec)}
        self.fallback = tuple(l for l in (2, 3) if l not in self.laws)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        out = np.empty(3)
        v = fallback_v(u, self.spec.family) if self.fallback else None
        for l in (1, 2, 3):
            if l in self.laws:
                dens = self.laws[l].density_at(u, self.grid)
            elif l == 2:
                dens = fallback_momentum(v, self.grid.dx)
            else:
                dens = fallback_energy(v, self.grid.dx)
            out[l - 1] = np.sum(dens)
        return out


@dataclass
class ErrorReport:
    sol_err: float = float("nan")
    err1: float = float("nan")
    err2: float = float("nan")
    err3: float = float("nan")
    err_phi1: Optional[float] = None
    err_phi2: Optional[float] = None
    err_phi: Optional[float] = None
    preserved_laws: tuple = ()
    fallback_used: tuple = ()

    def err(self, law: int) -> float:
        return (self.err1, self.err2, self.err3)[law - 1]


def invariant_errors(traj: Trajectory) -> ErrorReport:
    """``Err_l = dx * max_j |S_l(t_j) - S_l(t_0)|`` from the tracked sums."""
    sums = np.asarray(traj.sums)
    drift = np.max(np.abs(sums - sums[0]), axis=0) * traj.grid.dx
    preserved = traj.scheme.preserved_laws
    return ErrorReport(err1=float(drift[0]), err2=float(drift[1]), err3=float(drift[2]),
                       preserved_laws=preserved,
                       fallback_used=tuple(l for l in (2, 3) if l not in preserved))


def solution_error(numerical, exact) -> float:
    """Relative discrete 2-norm error ``||u - u_exact|| / ||u_exact||``."""
    numerical = np.asarray(numerical, dtype=float)
    exact = np.asarray(exact, dtype=float)
    if numerical.shape != exact.shape:
        raise ValueError("fields live on different grids")
    ref = np.linalg.norm(exact)
    if ref == 0:
        raise ValueError("exact field has zero norm")
    return float(np.linalg.norm(numerical - exact) / ref)


# --------------------------------------------------------------------------
# peaks and phase shifts

class NoPeakError(ValueError):
    pass


def peak_location(f, x, near: float | None = None, window: float = 2.0,
                  half_width: int = 6) -> float:
    """Abscissa of the maximum of the cubic spline through grid values.

    Searches ``[near - window, near + window]`` (periodically) or the whole
    grid when ``near`` is None. The spline is fitted on ``2*half_width + 1``
    nodes centred on the discrete maximum.
    """
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    M = f.size
    dx = x[1] - x[0]
    L = M * dx
    if near is None:
        idx = np.arange(M)
        k = int(np.argmax(f))
    else:
        dist = (x - near + L / 2) % L - L / 2
        idx = np.flatnonzero(np.abs(dist) <= window)
        idx = idx[np.argsort(dist[idx])]
        j = int(np.argmax(f[idx]))
        if j == 0 or j == idx.size - 1:
            raise NoPeakError(f"maximum near {near} lies on the search window edge")
        k = int(idx[j])
    if near is None and (f[(k - 1) % M] > f[k] or f[(k + 1) % M] > f[k]):
        raise NoPeakError("no interior maximum")
    offs = np.arange(-half_width, half_width + 1)
    xs = x[k] + offs * dx
    spline = CubicSpline(xs, f[(k + offs) % M])
    lo, hi = x[k] - dx, x[k] + dx
    cand = [x[k]] + [r for r in spline.derivative().roots(extrapolate=False) if lo <= r <= hi]
    best = max(cand, key=lambda r: float(spline(r)))
    # report in the grid's coordinate range
    return float((best - x[0]) % L + x[0])


def exact_peaks(p: TwoSolitonParams, t: float, a: float, b: float,
                samples: int = 8001) -> tuple[float, float]:
    """Peak abscissae (fast, slow) of the exact two-soliton profile at time ``t``.

    The fast soliton is the taller one. Peaks are located by a dense scan and
    refined with a bounded scalar search.
    """
    xs = np.linspace(a, b, samples)
    u = exact_two_soliton(p, xs, t)
    interior = np.flatnonzero((u[1:-1] > u[:-2]) & (u[1:-1] >= u[2:])) + 1
    if interior.size < 2:
        raise NoPeakError("solitons are not separated")
    top = interior[np.argsort(u[interior])[::-1][:2]]
    h = xs[1] - xs[0]
    peaks = []
    for i in top:
        r = minimize_scalar(lambda s: -exact_two_soliton(p, s, t),
                            bounds=(xs[i] - h, xs[i] + h), method="bounded",
                            options={"xatol": 1e-12})
        peaks.append(float(r.x))
    return peaks[0], peaks[1]


def phase_errors(num_final, grid: Grid, p: TwoSolitonParams, T: float,
                 window: float = 2.0) -> tuple[float, float, float]:
    """``(Err_phi1, Err_phi2, Err_phi)`` for the fast and slow solitons.

    Each shift error is the numerical peak position minus the exact one, so
    a scheme whose solitons lag behind the exact solution gets negative
    values; ``Err_phi = Err_phi1 - Err_phi2``.
    """
    x1, x2 = exact_peaks(p, T, grid.a, grid.b)
    n1 = peak_location(num_final, grid.x, near=x1, window=window)
    n2 = peak_location(num_final, grid.x, near=x2, window=window)
    e1, e2 = n1 - x1, n2 - x2
    return e1, e2, e1 - e2


# --------------------------------------------------------------------------
# benchmark runs

@dataclass
class RunResult:
    spec: SchemeSpec
    problem: str
    grid: Grid
    T: float
    trajectory: Trajectory
    report: ErrorReport
    exact_final: np.ndarray
    wall_time: float

    @property
    def final(self) -> np.ndarray:
        return self.trajectory.final


def steps_for(T: float, dt: float) -> int:
    """Number of steps ``round(T / dt)``; the run ends at ``N * dt``."""
    if T < 0 or not dt > 0:
        raise ValueError("need T >= 0 and dt > 0")
    return int(round(T / dt))


def run_benchmark(spec: SchemeSpec, problem: str | Problem = "two_soliton",
                  dx: float | None = None, dt: float | None = None,
                  T: float | None = None, cfg: NewtonConfig = NewtonConfig(),
                  stride: int | None = None, domain: tuple | None = None,
                  phases: bool = True) -> RunResult:
    """Integrate a benchmark from exact initial data and score the final state."""
    prob = get_problem(problem)
    a, b = domain if domain is not None else (None, None)
    grid = prob.grid(dx, dt, a, b)
    T = prob.T if T is None else T
    N = steps_for(T, grid.dt)
    t0 = time.perf_counter()
    traj = integrate(spec, grid, prob.exact(grid.x, 0.0), N, cfg, stride=stride)
    wall = time.perf_counter() - t0
    t_final = N * grid.dt
    exact = prob.exact(grid.x, t_final)
    report = invariant_errors(traj)
    report.sol_err = solution_error(traj.final, exact)
    if phases and prob.name == "two_soliton":
        try:
            report.err_phi1, report.err_phi2, report.err_phi = phase_errors(
                traj.final, grid, TWO_SOLITON, t_final)
        except NoPeakError as err:
            log.warning("phase errors unavailable: %s", err)
    return RunResult(spec, prob.name, grid, T, traj, report, exact, wall)


# --------------------------------------------------------------------------
# parameter sweeps and convergence

OBJECTIVES = ("solution_error", "unpreserved_invariant")


def objective_value(result: RunResult, objective: str) -> float:
    if objective == "solution_error":
        return result.report.sol_err
    if objective == "unpreserved_invariant":
        law = {2: 3, 3: 2}[result.spec.family.second_law]
        return result.report.err(law)
    raise ValueError(f"unknown objective {objective!r}")


def _evaluate(args) -> float:
    family, lam, problem, objective, dx, dt, cfg = args
    try:
        res = run_benchmark(SchemeSpec(family, lam), problem, dx, dt, cfg=cfg, phases=False)
    except (NonConvergenceError, SingularMatrixError, FloatingPointError, ValueError) as err:
        log.warning("lambda=%g failed: %s", lam, err)
        return float("nan")
    val = objective_value(res, objective)
    return val if np.isfinite(val) else float("nan")


@dataclass
class SweepResult:
    lambda_star: float
    objective_value: float
    evaluated: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.lambda_star, self.objective_value))


def sweep_lambda(family: SchemeFamily | str, problem: str = "two_soliton",
                 objective: str = "solution_error", range_: tuple = (-1.0, 1.0),
                 samples: int = 11, dx: float | None = None, dt: float | None = None,
                 cfg: NewtonConfig = NewtonConfig(), refine: bool = True,
                 xtol: float = 1e-3, workers: int = 1) -> SweepResult:
    """Minimize a run objective over ``lambda_coeff``.

    Scans ``samples`` equispaced values of ``range_``, then refines the
    bracketed minimum by golden-section search. Runs that fail are excluded.
    """
    family = family if isinstance(family, SchemeFamily) else SchemeFamily.parse(family)
    if not family.parametrized:
        raise ValueError(f"{family.value} has no parameter to sweep")
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    if samples < 3:
        raise ValueError("need at least 3 samples")
    lo, hi = range_
    if not hi > lo:
        raise ValueError("empty sweep range")
    grid_lams = np.linspace(lo, hi, samples)
    jobs = [(family, float(l), problem, objective, dx, dt, cfg) for l in grid_lams]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            vals = list(ex.map(_evaluate, jobs))
    else:
        vals = [_evaluate(j) for j in jobs]
    evaluated = dict(zip(map(float, grid_lams), vals))
    ok = [i for i, v in enumerate(vals) if np.isfinite(v)]
    if not ok:
        raise RuntimeError("every run in the sweep failed")
    i = min(ok, key=lambda j: vals[j])

    if refine and 0 < i < samples - 1 and all(np.isfinite(vals[j]) for j in (i - 1, i + 1)):
        def f(lam):
            lam = float(lam)
            if lam not in evaluated:
                evaluated[lam] = _evaluate((family, lam, problem, objective, dx, dt, cfg))
            v = evaluated[lam]
            return v if np.isfinite(v) else np.inf
        minimize_scalar(f, bracket=(grid_lams[i - 1], grid_lams[i], grid_lams[i + 1]),
                        method="golden", tol=xtol / (2 * max(abs(grid_lams[i]), xtol)))
    finite = {k: v for k, v in evaluated.items() if np.isfinite(v)}
    lam_star = min(finite, key=finite.get)
    return SweepResult(lam_star, finite[lam_star], evaluated)


def convergence_order(specs: SchemeSpec | Sequence[SchemeSpec], problem: str,
                      levels: Sequence[tuple[float, float]],
                      cfg: NewtonConfig = NewtonConfig(),
                      T: float | None = None) -> tuple[float, list[float]]:
    """Least-squares slope of ``log(sol_err)`` against ``log(dx)``.

    ``specs`` is one scheme for every level or one scheme per level (to use a
    per-grid best parameter). ``T`` overrides the problem's final time.
    Returns ``(order, errors)``.
    """
    if len(levels) < 2:
        raise ValueError("need at least two refinement levels")
    ratios = [dt / dx for dx, dt in levels]
    if max(ratios) - min(ratios) > 1e-9 * max(ratios):
        raise ValueError("dt/dx must be the same on every level")
    if isinstance(specs, SchemeSpec):
        specs = [specs] * len(levels)
    errs = [run_benchmark(s, problem, dx, dt, T, cfg=cfg, phases=False).report.sol_err
            for s, (dx, dt) in zip(specs, levels)]
    slope = np.polyfit(np.log([dx for dx, _ in levels]), np.log(errs), 1)[0]
    return float(slope), errs
