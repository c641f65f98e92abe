import numpy as np
import pytest

from mkdvfd.grid import Grid, TwoLevelField
from mkdvfd.schemes import (SchemeFamily, SchemeSpec, conservation_law, conservation_laws,
                            jacobian, residual)
from mkdvfd.verify import fd_jacobian, identity_defect, random_window

FAMILIES = list(SchemeFamily)
PAIRS = [(fam, law) for fam in FAMILIES for law in SchemeSpec(fam).preserved_laws]


def spec_for(fam, lam=0.3):
    return SchemeSpec(fam, lam if fam.parametrized else 0.0)


@pytest.mark.parametrize("text,fam", [("ec8", SchemeFamily.EC8), ("MC10", SchemeFamily.MC10),
                                      ("narrow_box", SchemeFamily.NARROW_BOX),
                                      ("Multi-symplectic", SchemeFamily.MULTISYMPLECTIC)])
def test_parse(text, fam):
    assert SchemeFamily.parse(text) is fam


def test_parse_unknown():
    with pytest.raises(ValueError):
        SchemeFamily.parse("RK4")


def test_baselines_take_no_parameter():
    with pytest.raises(ValueError):
        SchemeSpec(SchemeFamily.NARROW_BOX, 0.1)
    with pytest.raises(ValueError):
        SchemeSpec(SchemeFamily.EC8, float("nan"))


def test_labels_and_laws():
    assert SchemeSpec("EC10", 0.04).label() == "EC10(0.04)"
    assert SchemeSpec("Multisymplectic").label() == "Multisymplectic"
    assert SchemeSpec("EC8").preserved_laws == (1, 3)
    assert SchemeSpec("MC10").preserved_laws == (1, 2)
    assert SchemeSpec("NarrowBox").preserved_laws == (1,)
    assert [l.law_index for l in conservation_laws(SchemeSpec("MC8"))] == [1, 2]
    with pytest.raises(ValueError):
        conservation_law(SchemeSpec("EC8"), 2)


@pytest.mark.parametrize("fam", FAMILIES)
def test_constant_state_is_steady(fam):
    grid = Grid(0, 4, 20, 0.1)
    u = np.full(20, 0.8)
    r = residual(spec_for(fam), TwoLevelField(u, u), grid)
    assert np.max(np.abs(r)) < 1e-12


@pytest.mark.parametrize("fam", FAMILIES)
def test_residual_reads_only_its_stencil(fam):
    rng = np.random.default_rng(3)
    grid, field = random_window(rng, M=24)
    base = residual(spec_for(fam), field, grid)
    lo, hi = fam.stencil
    u1 = field.level1.copy()
    u1[12] += 0.5
    diff = residual(spec_for(fam), TwoLevelField(field.level0, u1), grid) - base
    touched = set(np.flatnonzero(np.abs(diff) > 0))
    assert touched <= {(12 - k) % 24 for k in range(lo, hi + 1)}
    assert touched


@pytest.mark.parametrize("fam", FAMILIES)
def test_jacobian_matches_finite_differences(fam):
    rng = np.random.default_rng(7)
    grid, field = random_window(rng, M=16, dx_range=(0.3, 0.5), dt_range=(0.05, 0.1))
    J = jacobian(spec_for(fam), field, grid)
    assert J.half_bandwidth == fam.half_bandwidth
    assert np.max(np.abs(J.to_dense() - fd_jacobian(spec_for(fam), field, grid))) < 1e-6


def test_residual_rejects_non_finite():
    grid = Grid(0, 4, 20, 0.1)
    u = np.zeros(20)
    bad = u.copy()
    bad[3] = np.inf
    with pytest.raises(ValueError):
        residual(SchemeSpec("EC8"), TwoLevelField(u, bad), grid)


@pytest.mark.parametrize("fam,law", PAIRS)
@pytest.mark.parametrize("lam", [0.0, -0.7, 1.3])
def test_divergence_identity_on_random_data(fam, law, lam):
    spec = spec_for(fam, lam)
    for seed in range(5):
        grid, field = random_window(np.random.default_rng(seed))
        defect, qa = identity_defect(spec, law, field, grid)
        assert np.max(np.abs(defect)) <= 1e-11 * max(1.0, np.max(np.abs(qa)))


def test_scheme_is_odd_in_u():
    # mKdV is invariant under u -> -u, so is every scheme
    rng = np.random.default_rng(11)
    grid, f = random_window(rng, M=20)
    for fam in FAMILIES:
        spec = spec_for(fam)
        r = residual(spec, f, grid)
        rm = residual(spec, TwoLevelField(-f.level0, -f.level1), grid)
        assert np.allclose(rm, -r, atol=1e-10 * np.max(np.abs(r)))
