"""Cyclic banded matrices and their direct solution.

Storage follows the row-diagonal layout ``bands[k, r] = A[r, (r + k - p) mod M]``
where ``p`` is the half bandwidth, so row ``r`` of the band array holds the
coefficients of unknowns ``r - p .. r + p`` with periodic wrap.

The solver factors the band without its periodic corners (LAPACK ``gbtrf``)
and restores the corners through a Woodbury correction of rank ``2p``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

PIVOT_RTOL = 1e-14


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class CyclicBandedMatrix:
    """Square ``M x M`` matrix whose nonzeros lie within a periodic band."""

    def __init__(self, bands: np.ndarray, half_bandwidth: int):
        bands = np.asarray(bands, dtype=float)
        p = int(half_bandwidth)
        if bands.ndim != 2 or bands.shape[0] != 2 * p + 1:
            raise ValueError("bands must have shape (2*half_bandwidth + 1, M)")
        if bands.shape[1] <= 2 * p:
            raise ValueError("matrix too small for its bandwidth")
        self.bands = bands
        self.half_bandwidth = p

    @property
    def M(self) -> int:
        return self.bands.shape[1]

    @classmethod
    def zeros(cls, M: int, half_bandwidth: int) -> "CyclicBandedMatrix":
        return cls(np.zeros((2 * half_bandwidth + 1, M)), half_bandwidth)

    @classmethod
    def identity(cls, M: int, half_bandwidth: int = 0) -> "CyclicBandedMatrix":
        A = cls.zeros(M, half_bandwidth)
        A.bands[half_bandwidth] = 1.0
        return A

    @classmethod
    def from_dense(cls, A: np.ndarray, half_bandwidth: int) -> "CyclicBandedMatrix":
        A = np.asarray(A, dtype=float)
        M = A.shape[0]
        p = half_bandwidth
        rows = np.arange(M)
        out = cls.zeros(M, p)
        mask = np.ones_like(A, dtype=bool)
        for k in range(2 * p + 1):
            cols = (rows + k - p) % M
            out.bands[k] = A[rows, cols]
            mask[rows, cols] = False
        if np.any(A[mask] != 0):
            raise ValueError("matrix has entries outside the declared band")
        return out

    def columns(self) -> np.ndarray:
        """Column index of every band entry, same shape as ``bands``."""
        p = self.half_bandwidth
        offsets = np.arange(-p, p + 1)[:, None]
        return (np.arange(self.M)[None, :] + offsets) % self.M

    def to_dense(self) -> np.ndarray:
        M = self.M
        A = np.zeros((M, M))
        rows = np.broadcast_to(np.arange(M), self.bands.shape)
        np.add.at(A, (rows, self.columns()), self.bands)
        return A

    def matvec(self, x: np.ndarray) -> np.ndarray:
        p = self.half_bandwidth
        return sum(self.bands[k] * np.roll(x, p - k) for k in range(2 * p + 1))

    def norm_inf(self) -> float:
        return float(np.max(np.sum(np.abs(self.bands), axis=0)))


def solve_cyclic_banded(A: CyclicBandedMatrix, rhs: np.ndarray) -> np.ndarray:
    """Solve ``A x = rhs`` for a cyclic banded ``A``."""
    rhs = np.asarray(rhs, dtype=float)
    p, M = A.half_bandwidth, A.M
    if rhs.shape[0] != M:
        raise ValueError("right-hand side has the wrong length")
    if p == 0:
        d = A.bands[0]
        if np.any(np.abs(d) <= PIVOT_RTOL * A.norm_inf()):
            raise SingularMatrixError("zero diagonal entry")
        return rhs / d

    # Dropping the corners of an off-centre band (nonzero winding of the row
    # symbol) leaves a near-singular matrix; a cyclic row shift recentres it.
    s = -winding_number(A)
    if s and M <= 2 * (p + abs(s)):
        return _dense_solve(A, rhs)
    if s:
        A = _row_shifted(A, s)
        rhs = np.roll(rhs, -s)
        p = A.half_bandwidth
    ab, W = _band_and_corners(A)
    lu, piv, info = lapack.dgbtrf(ab, p, p)
    scale = A.norm_inf()
    pivots = np.abs(lu[2 * p])
    if info > 0 or np.min(pivots) <= PIVOT_RTOL * scale:
        raise SingularMatrixError(
            f"band factorization pivot {np.min(pivots):.3e} below threshold")

    def band_solve(b):
        x, info = lapack.dgbtrs(lu, p, p, b, piv)
        if info != 0:
            raise SingularMatrixError(f"gbtrs failed with info={info}")
        return x

    y = band_solve(rhs)
    if W is None:
        return y
    cols, U = W
    # A = B + U E^T where E selects the wrapped columns
    Z = band_solve(U)
    cap = np.eye(len(cols)) + Z[cols, :]
    lu_c = lu_factor(cap, check_finite=False)
    if np.min(np.abs(np.diag(lu_c[0]))) <= PIVOT_RTOL * max(1.0, np.max(np.abs(cap))):
        raise SingularMatrixError("singular Woodbury capacitance matrix")
    return y - Z @ lu_solve(lu_c, y[cols], check_finite=False)


def _dense_solve(A: CyclicBandedMatrix, rhs: np.ndarray) -> np.ndarray:
    # tiny systems whose recentred band would cover the whole matrix
    lu, piv = lu_factor(A.to_dense(), check_finite=False)
    if np.min(np.abs(np.diag(lu))) <= PIVOT_RTOL * A.norm_inf():
        raise SingularMatrixError("dense factorization pivot below threshold")
    return lu_solve((lu, piv), rhs, check_finite=False)


def winding_number(A: CyclicBandedMatrix, samples: int = 512) -> int:
    """Winding number about 0 of the row-averaged band symbol on the unit circle."""
    p = A.half_bandwidth
    coef = A.bands.mean(axis=1)
    theta = np.linspace(0.0, 2 * np.pi, samples + 1)
    z = np.exp(1j * np.outer(theta, np.arange(-p, p + 1)))
    a = z @ coef
    if np.min(np.abs(a)) <= 1e-12 * np.max(np.abs(coef)):
        return 0
    turns = np.sum(np.diff(np.unwrap(np.angle(a)))) / (2 * np.pi)
    return int(round(turns))


def _row_shifted(A: CyclicBandedMatrix, s: int) -> CyclicBandedMatrix:
    """The matrix with rows ``A'[r] = A[(r + s) mod M]``."""
    p = A.half_bandwidth
    q = p + abs(s)
    out = CyclicBandedMatrix.zeros(A.M, q)
    for k in range(2 * p + 1):
        # entry at offset o = k - p from row r + s sits at offset o + s from row r
        out.bands[k - p + s + q] = np.roll(A.bands[k], -s)
    return out


def _band_and_corners(A: CyclicBandedMatrix):
    """LAPACK band storage of the non-wrapping part and the corner columns.

    The corner part is returned as ``(cols, U)`` such that the corner matrix
    equals ``U[:, j]`` placed in column ``cols[j]``; ``None`` if there are no
    corner entries.
    """
    p, M = A.half_bandwidth, A.M
    ab = np.zeros((3 * p + 1, M))
    cols = np.concatenate([np.arange(M - p, M), np.arange(p)])
    U = np.zeros((M, 2 * p))
    slot = {c: j for j, c in enumerate(cols)}
    r = np.arange(M)
    for k in range(2 * p + 1):
        c = r + k - p
        inside = (c >= 0) & (c < M)
        ab[2 * p + r[inside] - c[inside], c[inside]] = A.bands[k, inside]
        for rr in r[~inside]:
            U[rr, slot[c[rr] % M]] += A.bands[k, rr]
    if not np.any(U):
        return ab, None
    return ab, (cols, U)
