"""Implicit time stepping: Newton iteration on the two-level scheme residual."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .banded import CyclicBandedMatrix, SingularMatrixError, solve_cyclic_banded
from .grid import Grid, TwoLevelField, as_grid_function
from .schemes import SchemeSpec, _residual, jacobian

__all__ = [
    "CyclicBandedMatrix", "NewtonConfig", "NonConvergenceError", "SingularMatrixError",
    "StepResult", "Trajectory", "integrate", "solve_cyclic_banded", "step",
]

log = logging.getLogger(__name__)


class NonConvergenceError(RuntimeError):
    def __init__(self, iterations: int, residual_norm: float, step_index: int | None = None):
        self.iterations = iterations
        self.residual_norm = residual_norm
        self.step_index = step_index
        where = "" if step_index is None else f" at step {step_index}"
        super().__init__(
            f"Newton failed to converge{where}: {iterations} iterations, "
            f"residual {residual_norm:.3e}; try a smaller dt")


@dataclass(frozen=True)
class NewtonConfig:
    """Stopping rules for the Newton solve of one implicit step.

    A step is accepted once ``||residual||_inf <= tol_residual``. When the
    residual sits at its rounding floor above ``tol_residual`` (fine grids make
    ``1/dx**3`` large), the step is accepted once the Newton correction drops
    below ``step_rtol * max(1, ||u||_inf)`` and stops shrinking the residual.
    """

    tol_residual: float = 1e-12
    max_iters: int = 50
    predictor: str = "linear_extrapolation"
    step_rtol: float = 1e-13

    def __post_init__(self):
        if not self.tol_residual > 0:
            raise ValueError("tol_residual must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.predictor not in ("copy_previous", "linear_extrapolation"):
            raise ValueError(f"unknown predictor {self.predictor!r}")


@dataclass
class StepResult:
    u: np.ndarray
    iterations: int
    residual_norm: float


def step(spec: SchemeSpec, grid: Grid, u0, cfg: NewtonConfig = NewtonConfig(),
         u_prev_prev=None) -> StepResult:
    """Advance one time step: solve ``residual(spec, (u0, u1)) = 0`` for ``u1``."""
    u0 = as_grid_function(u0, grid.M).astype(float)
    if u_prev_prev is not None and cfg.predictor == "linear_extrapolation":
        u1 = 2 * u0 - np.asarray(u_prev_prev, dtype=float)
    else:
        u1 = u0.copy()

    res = _residual(spec, TwoLevelField(u0, u1), grid)
    rnorm = float(np.max(np.abs(res)))
    if rnorm <= cfg.tol_residual:
        return StepResult(u1, 0, rnorm)
    for it in range(1, cfg.max_iters + 1):
        J = jacobian(spec, TwoLevelField(u0, u1), grid)
        du = solve_cyclic_banded(J, -res)
        u1 = u1 + du
        res = _residual(spec, TwoLevelField(u0, u1), grid)
        prev, rnorm = rnorm, float(np.max(np.abs(res)))
        if not np.isfinite(rnorm):
            break
        if rnorm <= cfg.tol_residual:
            return StepResult(u1, it, rnorm)
        small = np.max(np.abs(du)) <= cfg.step_rtol * max(1.0, np.max(np.abs(u1)))
        if small and rnorm >= 0.5 * prev:
            return StepResult(u1, it, rnorm)
    raise NonConvergenceError(cfg.max_iters, rnorm)


@dataclass
class Trajectory:
    """Output of :func:`integrate`.

    ``states`` holds every ``stride``-th level (always including the first and
    last); ``sums`` holds per-level global sums for every tracked quantity
    (see ``invariant_sums``), one row per time level ``0..N``.
    """

    grid: Grid
    scheme: SchemeSpec
    states: list
    state_steps: list
    N: int
    sums: np.ndarray
    sum_names: tuple
    newton_iters: np.ndarray
    residual_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.dt * np.arange(self.N + 1)


def integrate(spec: SchemeSpec, grid: Grid, u_init, N: int,
              cfg: NewtonConfig = NewtonConfig(), stride: int | None = 1,
              tracker=None) -> Trajectory:
    """Run ``N`` implicit steps from ``u_init``.

    ``tracker(u) -> 1-D array`` is evaluated on every level and stacked into
    ``Trajectory.sums``; by default the per-level invariant sums of
    :func:`mkdvfd.analysis.invariant_sums` are recorded. ``stride=None``
    keeps only the initial and final states.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    if tracker is None:
        from .analysis import InvariantTracker
        tracker = InvariantTracker(spec, grid)
    u = as_grid_function(u_init, grid.M).astype(float)
    states, state_steps = [u.copy()], [0]
    sums = [tracker(u)]
    iters = np.zeros(N + 1, dtype=int)
    norms = np.zeros(N + 1)
    prev = None
    for n in range(1, N + 1):
        try:
            res = step(spec, grid, u, cfg, u_prev_prev=prev)
        except (NonConvergenceError, SingularMatrixError) as err:
            log.warning("%s: step %d failed: %s", spec.label(), n, err)
            if isinstance(err, NonConvergenceError):
                raise NonConvergenceError(err.iterations, err.residual_norm, n) from err
            raise
        prev, u = u, res.u
        iters[n], norms[n] = res.iterations, res.residual_norm
        sums.append(tracker(u))
        if (stride and n % stride == 0) or n == N:
            if state_steps[-1] != n:
                states.append(u.copy())
                state_steps.append(n)
    return Trajectory(grid, spec, states, state_steps, N, np.array(sums),
                      tuple(getattr(tracker, "names", ())), iters, norms)
