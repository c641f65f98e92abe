"""Periodic grid, two-level field storage and the elementary stencil operators.

All scheme formulas are compositions of four forward operators acting on
periodic grid functions::

    D_m f = (S_m f - f) / dx      mu_m f = (S_m f + f) / 2
    D_n F = (F_1 - F_0) / dt      mu_n F = (F_1 + F_0) / 2

where ``S_m`` is the periodic forward shift in space and ``F_0``, ``F_1`` are
the two time levels of a one-step window. A formula term ``u_{i,j}`` read at
row ``m`` is level ``j`` at spatial index ``(m + i) mod M``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_NODES = 8


@dataclass(frozen=True)
class Grid:
    """Uniform periodic mesh on ``[a, b)`` with ``M`` nodes and time step ``dt``."""

    a: float
    b: float
    M: int
    dt: float

    def __post_init__(self):
        if self.M < MIN_NODES:
            raise ValueError(f"need at least {MIN_NODES} nodes, got M={self.M}")
        if not self.b > self.a:
            raise ValueError("right endpoint must exceed left endpoint")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @classmethod
    def from_spacing(cls, a: float, b: float, dx: float, dt: float) -> "Grid":
        """Build a grid from a step length; ``(b - a) / dx`` must be an integer."""
        ratio = (b - a) / dx
        M = int(round(ratio))
        if abs(ratio - M) > 1e-9:
            raise ValueError(f"(b - a)/dx = {ratio} is not an integer")
        return cls(a, b, M, dt)

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.M

    @property
    def x(self) -> np.ndarray:
        return self.a + self.dx * np.arange(self.M)


def as_grid_function(values, M: int | None = None) -> np.ndarray:
    """Validate and return ``values`` as a 1-D grid function."""
    f = np.asarray(values)
    if f.ndim != 1:
        raise ValueError("grid function must be one-dimensional")
    if M is not None and f.shape[0] != M:
        raise ValueError(f"expected {M} values, got {f.shape[0]}")
    if not np.all(np.isfinite(f)):
        raise ValueError("grid function contains non-finite values")
    return f


@dataclass(frozen=True)
class TwoLevelField:
    """Values at time levels ``n`` (``level0``) and ``n+1`` (``level1``)."""

    level0: np.ndarray
    level1: np.ndarray

    def __post_init__(self):
        if np.shape(self.level0) != np.shape(self.level1):
            raise ValueError("time levels must live on the same grid")


def shift_space(f: np.ndarray, k: int) -> np.ndarray:
    """Periodic shift: ``result[i] = f[(i + k) mod M]``."""
    k %= f.shape[0]
    return np.concatenate((f[k:], f[:k]))


def fwd_diff_space(f: np.ndarray, dx: float) -> np.ndarray:
    return (shift_space(f, 1) - f) / dx


def fwd_avg_space(f: np.ndarray) -> np.ndarray:
    return (shift_space(f, 1) + f) / 2


def fwd_diff_time(F: TwoLevelField, dt: float) -> np.ndarray:
    return (F.level1 - F.level0) / dt


def fwd_avg_time(F: TwoLevelField) -> np.ndarray:
    return (F.level1 + F.level0) / 2
