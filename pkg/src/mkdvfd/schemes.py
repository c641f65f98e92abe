"""Conservative one-step finite difference schemes for the mKdV equation.

Every scheme is written in divergence form ``A = D_m F1 + D_n G1`` so that it
conserves mass. The four parametrized families additionally carry a second
discrete conservation law in characteristic form ``Q A = D_m F + D_n G``:

=========  ========  ===================
family     stencil   second law
=========  ========  ===================
EC8        8-point   energy (law 3)
MC8        8-point   momentum (law 2)
EC10       10-point  energy (law 3)
MC10       10-point  momentum (law 2)
=========  ========  ===================

``NarrowBox`` and ``Multisymplectic`` are the mass-conserving baselines.

The free parameter enters as ``lam = lambda_coeff * dx**2``. Formulas are
transcribed term by term as compositions of the grid operators; do not
simplify them, the discrete conservation laws hold only for the exact
expressions.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .banded import CyclicBandedMatrix
from .grid import (Grid, TwoLevelField, fwd_avg_space, fwd_avg_time,
                   fwd_diff_space, fwd_diff_time, shift_space)

Level = Callable[[np.ndarray], np.ndarray]


class SchemeFamily(str, enum.Enum):
    EC8 = "EC8"
    MC8 = "MC8"
    EC10 = "EC10"
    MC10 = "MC10"
    NARROW_BOX = "NarrowBox"
    MULTISYMPLECTIC = "Multisymplectic"

    @property
    def points(self) -> int:
        return 10 if self in (SchemeFamily.EC10, SchemeFamily.MC10) else 8

    @property
    def half_bandwidth(self) -> int:
        return 4 if self.points == 10 else 3

    @property
    def stencil(self) -> tuple[int, int]:
        """Offsets of the first and last spatial node a residual row reads."""
        return (-2, 2) if self.points == 10 else (-2, 1)

    @property
    def parametrized(self) -> bool:
        return self not in (SchemeFamily.NARROW_BOX, SchemeFamily.MULTISYMPLECTIC)

    @property
    def second_law(self) -> int | None:
        return {SchemeFamily.EC8: 3, SchemeFamily.EC10: 3,
                SchemeFamily.MC8: 2, SchemeFamily.MC10: 2}.get(self)

    @classmethod
    def parse(cls, name: str) -> "SchemeFamily":
        key = name.strip().lower().replace("_", "").replace(" ", "").replace("-", "")
        for fam in cls:
            if fam.value.lower() == key:
                return fam
        raise ValueError(f"unknown scheme family {name!r}")


@dataclass(frozen=True)
class SchemeSpec:
    family: SchemeFamily
    lambda_coeff: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", SchemeFamily(self.family))
        if not self.family.parametrized and self.lambda_coeff != 0:
            raise ValueError(f"{self.family.value} takes no parameter")
        if not np.isfinite(self.lambda_coeff):
            raise ValueError("lambda_coeff must be finite")

    @property
    def preserved_laws(self) -> tuple[int, ...]:
        second = self.family.second_law
        return (1,) if second is None else (1, second)

    def label(self) -> str:
        if self.family.parametrized:
            return f"{self.family.value}({self.lambda_coeff:g})"
        return self.family.value


class _Window:
    """Operator toolkit bound to one two-level window ``(u0, u1)``.

    Single-level expressions are plain functions of one level array; the
    time operators lift them onto both levels before averaging/differencing.
    """

    def __init__(self, field: TwoLevelField, grid: Grid):
        self.u0 = field.level0
        self.u1 = field.level1
        self.dx = grid.dx
        self.dt = grid.dt

    def lift(self, expr: Level) -> TwoLevelField:
        return TwoLevelField(expr(self.u0), expr(self.u1))

    def mun(self, expr: Level) -> np.ndarray:
        return fwd_avg_time(self.lift(expr))

    def dn(self, expr: Level) -> np.ndarray:
        return fwd_diff_time(self.lift(expr), self.dt)

    def Dm(self, f: np.ndarray, times: int = 1) -> np.ndarray:
        for _ in range(times):
            f = fwd_diff_space(f, self.dx)
        return f

    @staticmethod
    def mum(f: np.ndarray, times: int = 1) -> np.ndarray:
        for _ in range(times):
            f = fwd_avg_space(f)
        return f


def _at(k: int) -> Level:
    """The level expression ``u_{k,.}``."""
    return lambda u: shift_space(u, k)


# --------------------------------------------------------------------------
# EC8: 8-point, mass + energy

def _ec8_F1(w: _Window, lam: float) -> np.ndarray:
    a = lambda u: w.mum(shift_space(u, -2), 2)
    return (w.mun(a) * w.mun(lambda u: a(u) ** 2) / 3
            + w.Dm(w.mun(_at(-2)), 2)
            + lam * w.dn(lambda u: w.Dm(w.mum(shift_space(u, -2)))))


def _ec8_G1(w: _Window, u: np.ndarray) -> np.ndarray:
    return w.mum(shift_space(u, -1))


def _ec8_Q3(w: _Window, lam: float) -> np.ndarray:
    return w.mum(_ec8_F1(w, lam))


def _ec8_F3(w: _Window, lam: float) -> np.ndarray:
    F1 = _ec8_F1(w, lam)
    a = lambda u: w.mum(shift_space(u, -2), 2)            # mu_m^2 u_{-2}
    b = lambda u: w.mum(shift_space(u, -2))               # mu_m u_{-2}
    Dm_mum_mun = w.Dm(w.mum(w.mun(_at(-2))))              # D_m mu_m mu_n u_{-2,0}
    Dn_a = w.dn(a)                                         # D_n mu_m^2 u_{-2,0}
    mun_a = w.mun(a)                                       # mu_m^2 mu_n u_{-2,0}
    DmDn_b = w.dn(lambda u: w.Dm(b(u)))                    # D_m D_n mu_m u_{-2,0}
    a0, a1 = a(w.u0), a(w.u1)
    return (F1 ** 2 / 2
            + (Dm_mum_mun * Dn_a - mun_a * DmDn_b) / 2
            + lam * w.dn(b) * w.dn(lambda u: w.mum(shift_space(u, -1))) / 2
            + w.dx ** 2 / 48 * (a0 ** 2 + a1 ** 2 + a0 * a1)
            * (Dn_a * Dm_mum_mun - mun_a * DmDn_b))


def _ec8_G3(w: _Window, u: np.ndarray) -> np.ndarray:
    m1 = w.mum(shift_space(u, -1))
    b = w.mum(shift_space(u, -2))
    return (m1 * w.mum(shift_space(u, -2), 3)
            * (w.mum(b ** 2, 2) + w.dx ** 2 / 4 * w.Dm(b) * w.Dm(m1)) / 12
            + m1 * w.Dm(b, 2) / 2)


# --------------------------------------------------------------------------
# MC8: 8-point, mass + momentum

def _mc8_F1(w: _Window, lam: float) -> np.ndarray:
    n2, n1, n0 = w.mun(_at(-2)), w.mun(_at(-1)), w.mun(_at(0))
    base = (n2 + n0) * n1 ** 2 / 6 + w.Dm(n2, 2)
    if lam == 0:
        return base
    extra = (2 * n1 * w.mum(w.Dm(n2) ** 2)
             + 2 * w.Dm(n2, 2) * w.mum(n2 ** 2, 2)
             - w.dx * w.dt * w.dn(lambda u: w.Dm(w.mum(shift_space(u, -2))))
             * w.mun(lambda u: w.Dm(w.mum(shift_space(u, -2))) ** 2))
    return base + lam * extra


def _mc8_G1(w: _Window, u: np.ndarray) -> np.ndarray:
    return w.mum(shift_space(u, -1))


def _mc8_Q2(w: _Window, lam: float) -> np.ndarray:
    return w.mum(w.mun(_at(-1)))


def _mc8_F2(w: _Window, lam: float) -> np.ndarray:
    n2, n1, n0 = w.mun(_at(-2)), w.mun(_at(-1)), w.mun(_at(0))
    c = lambda u: w.Dm(w.mum(shift_space(u, -2)))         # D_m mu_m u_{-2}
    out = (n1 ** 2 * (2 * n2 * w.mum(n1) + n1 * n0) / 12
           + n1 * w.Dm(n2, 2)
           - w.Dm(n2) * w.Dm(n1) / 2)
    out = out + lam * w.mum(n2) * w.mum(n1) * (w.Dm(n2) * w.Dm(n1) + (n2 + n0) * w.Dm(n2, 2))
    out = out + (lam * w.dx * w.dt / 4
                 * (w.Dm(w.mum(n2)) * w.dn(lambda u: w.mum(shift_space(u, -2), 2))
                    - w.mum(n2, 2) * w.dn(c))
                 * (2 * w.mun(lambda u: c(u) ** 2) - c(w.u0) * c(w.u1)))
    return out


def _mc8_G2(w: _Window, u: np.ndarray, lam: float) -> np.ndarray:
    m1 = w.mum(shift_space(u, -1))
    m2 = w.mum(shift_space(u, -2))
    return (m1 ** 2 / 2
            + lam * w.dt * w.dx * m1 * w.Dm(m2, 2)
            * (w.Dm(m1) * w.Dm(m2) / 4 - w.Dm(w.mum(m2)) ** 2))


# --------------------------------------------------------------------------
# EC10: 10-point, mass + energy

def _ec10_phi(w: _Window, lam: float) -> np.ndarray:
    """phi_{-1,0}; shift by one for phi_{0,0}."""
    return (w.mun(lambda u: shift_space(u, -1) ** 2) * w.mun(_at(-1)) / 3
            + w.Dm(w.mun(_at(-2)), 2)
            + lam * w.dn(lambda u: w.Dm(w.mum(shift_space(u, -2)))))


def _ec10_F1(w: _Window, lam: float) -> np.ndarray:
    return w.mum(_ec10_phi(w, lam))


def _unit_G1(w: _Window, u: np.ndarray) -> np.ndarray:
    return u


def _ec10_Q3(w: _Window, lam: float) -> np.ndarray:
    return shift_space(_ec10_phi(w, lam), 1)


def _ec10_F3(w: _Window, lam: float) -> np.ndarray:
    phi = _ec10_phi(w, lam)
    n1 = w.mun(_at(-1))
    return (phi * shift_space(phi, 1)
            + w.Dm(n1) * w.dn(lambda u: w.mum(shift_space(u, -1)))
            - w.mum(n1) * w.dn(lambda u: w.Dm(shift_space(u, -1)))
            + lam * w.dn(_at(0)) * w.dn(_at(-1))) / 2


def _ec10_G3(w: _Window, u: np.ndarray) -> np.ndarray:
    return u ** 4 / 12 + u * w.Dm(shift_space(u, -1), 2) / 2


# --------------------------------------------------------------------------
# MC10: 10-point, mass + momentum

def _mc10_F1(w: _Window, lam: float) -> np.ndarray:
    n1 = w.mun(_at(-1))
    return (w.mum(n1) * w.mum(n1 ** 2) / 3
            + w.Dm(w.mum(w.mun(_at(-2))), 2)
            + lam * w.dn(lambda u: w.Dm(shift_space(u, -1))))


def _mc10_Q2(w: _Window, lam: float) -> np.ndarray:
    return w.mun(_at(0))


def _mc10_F2(w: _Window, lam: float) -> np.ndarray:
    n2, n1, n0 = w.mun(_at(-2)), w.mun(_at(-1)), w.mun(_at(0))
    return (n1 * n0 * (n1 ** 2 + n0 ** 2 + n1 * n0) / 12
            + w.mum(n1) * w.Dm(w.mum(n2), 2)
            - w.Dm(n1) * w.Dm(n2 + n0) / 4
            + lam * (w.mum(n1) * w.dn(lambda u: w.Dm(shift_space(u, -1)))
                     - w.Dm(n1) * w.dn(lambda u: w.mum(shift_space(u, -1)))) / 2)


def _mc10_G2(w: _Window, u: np.ndarray, lam: float) -> np.ndarray:
    return u * (u + lam * w.Dm(shift_space(u, -1), 2)) / 2


# --------------------------------------------------------------------------
# baselines

def _nb_F1(w: _Window, lam: float) -> np.ndarray:
    return w.mun(_at(-1)) ** 3 / 3 + w.Dm(w.mun(_at(-2)), 2)


def _ms_F1(w: _Window, lam: float) -> np.ndarray:
    n2 = w.mun(_at(-2))
    return w.mum(w.mum(n2) ** 3) / 3 + w.Dm(n2, 2)


def _ms_G1(w: _Window, u: np.ndarray) -> np.ndarray:
    return w.mum(shift_space(u, -2), 3)


# --------------------------------------------------------------------------

_MASS = {
    SchemeFamily.EC8: (_ec8_F1, _ec8_G1),
    SchemeFamily.MC8: (_mc8_F1, _mc8_G1),
    SchemeFamily.EC10: (_ec10_F1, _unit_G1),
    SchemeFamily.MC10: (_mc10_F1, _unit_G1),
    SchemeFamily.NARROW_BOX: (_nb_F1, _mc8_G1),
    SchemeFamily.MULTISYMPLECTIC: (_ms_F1, _ms_G1),
}

# family -> (law, characteristic, flux, density); densities taking lam say so
_SECOND = {
    SchemeFamily.EC8: (3, _ec8_Q3, _ec8_F3, lambda w, u, lam: _ec8_G3(w, u)),
    SchemeFamily.MC8: (2, _mc8_Q2, _mc8_F2, _mc8_G2),
    SchemeFamily.EC10: (3, _ec10_Q3, _ec10_F3, lambda w, u, lam: _ec10_G3(w, u)),
    SchemeFamily.MC10: (2, _mc10_Q2, _mc10_F2, _mc10_G2),
}


def _lam(spec: SchemeSpec, grid: Grid) -> float:
    return spec.lambda_coeff * grid.dx ** 2


def _check_field(field: TwoLevelField) -> None:
    if not (np.all(np.isfinite(field.level0)) and np.all(np.isfinite(field.level1))):
        raise ValueError("field contains non-finite values")


def _residual(spec: SchemeSpec, field: TwoLevelField, grid: Grid) -> np.ndarray:
    w = _Window(field, grid)
    F1, G1 = _MASS[spec.family]
    return (fwd_diff_space(F1(w, _lam(spec, grid)), w.dx)
            + fwd_diff_time(w.lift(lambda u: G1(w, u)), w.dt))


def residual(spec: SchemeSpec, field: TwoLevelField, grid: Grid) -> np.ndarray:
    """Per-node residual ``D_m F1 + D_n G1`` of the scheme on one time window."""
    _check_field(field)
    return _residual(spec, field, grid)


@functools.lru_cache(maxsize=32)
def _colouring(M: int, width: int) -> np.ndarray:
    """Greedy colouring of columns so no two within ``width - 1`` share a colour."""
    colour = -np.ones(M, dtype=int)
    for c in range(M):
        taken = {colour[(c + d) % M] for d in range(-(width - 1), width) if d}
        k = 0
        while k in taken:
            k += 1
        colour[c] = k
    return colour


_CSTEP = 1e-30


def jacobian(spec: SchemeSpec, field: TwoLevelField, grid: Grid) -> CyclicBandedMatrix:
    """``d residual[r] / d level1[c]`` as a cyclic banded matrix.

    Computed exactly (to rounding) by complex-step differentiation: the
    residual is a polynomial in the field values, so one complex evaluation
    per column colour gives a full set of columns with no cancellation.
    """
    _check_field(field)
    fam = spec.family
    lo, hi = fam.stencil
    M = grid.M
    p = fam.half_bandwidth
    colour = _colouring(M, hi - lo + 1)
    out = CyclicBandedMatrix.zeros(M, p)
    rows = np.arange(M)
    u0 = np.asarray(field.level0, dtype=float)
    u1 = np.asarray(field.level1, dtype=float)
    for k in range(colour.max() + 1):
        pert = np.where(colour == k, _CSTEP, 0.0)
        r = _residual(spec, TwoLevelField(u0, u1 + 1j * pert), grid).imag / _CSTEP
        for off in range(lo, hi + 1):
            cols = (rows + off) % M
            hit = colour[cols] == k
            out.bands[off + p, hit] = r[hit]
    return out


@dataclass(frozen=True)
class ConservationLawEval:
    """Discrete density, flux and characteristic of one conservation law.

    ``density`` reads only ``level0`` of the window it is given; the density
    at time level ``j`` is ``density(TwoLevelField(u_j, u_j), grid)``.
    """

    law_index: int
    density: Callable[[TwoLevelField, Grid], np.ndarray]
    flux: Callable[[TwoLevelField, Grid], np.ndarray]
    characteristic: Callable[[TwoLevelField, Grid], np.ndarray]

    def density_at(self, u: np.ndarray, grid: Grid) -> np.ndarray:
        return self.density(TwoLevelField(u, u), grid)


def conservation_laws(spec: SchemeSpec) -> list[ConservationLawEval]:
    """Mass law for every scheme plus the family's second preserved law."""
    fam = spec.family
    F1, G1 = _MASS[fam]

    def bind(fn, lam_in_density=False):
        if lam_in_density:
            return lambda field, grid: fn(_Window(field, grid), field.level0, _lam(spec, grid))
        return lambda field, grid: fn(_Window(field, grid), _lam(spec, grid))

    laws = [ConservationLawEval(
        1,
        density=lambda field, grid: G1(_Window(field, grid), field.level0),
        flux=bind(F1),
        characteristic=lambda field, grid: np.ones_like(field.level0),
    )]
    if fam in _SECOND:
        law, Q, F, G = _SECOND[fam]
        laws.append(ConservationLawEval(law, density=bind(G, True), flux=bind(F),
                                        characteristic=bind(Q)))
    return laws


def conservation_law(spec: SchemeSpec, law: int) -> ConservationLawEval:
    for item in conservation_laws(spec):
        if item.law_index == law:
            return item
    raise ValueError(f"{spec.label()} does not preserve law {law}")
