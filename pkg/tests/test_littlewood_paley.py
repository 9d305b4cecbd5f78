import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hallmhd.experiments.data import random_divfree, single_shell
from hallmhd.field_core import Grid, SpectralField, transform
from hallmhd.littlewood_paley import (
    BesovIndex,
    bernstein_ratio,
    besov,
    besov_norm,
    bony_terms,
    build_partition,
    chi,
    commutator_block_norm,
    decompose,
    dealiased_product,
    excluded_fraction,
    interpolation_ratio,
    phi,
    product_law_ratio,
    shell_lp_norms,
)


@pytest.mark.parametrize("transition", ["cubic", "quintic", "septic"])
def test_chi_profile(transition):
    r = np.linspace(0, 3, 301)
    c = chi(r, transition)
    assert np.all(c[r <= 0.75] == 1.0)
    assert np.all(c[r >= 4 / 3] == 0.0)
    assert np.all(np.diff(c) <= 0)
    assert np.all(phi(r, transition) >= 0)


@pytest.mark.parametrize(
    "n,L,expect", [(64, 2 * math.pi, (-1, 5)), (32, 2 * math.pi, (-1, 4)), (16, 2 * math.pi, (-1, 3)), (64, 8 * math.pi, (-3, 3))]
)
def test_shell_range(n, L, expect):
    part = build_partition(Grid(n, L))
    assert (part.j_min, part.j_max) == expect


@pytest.mark.parametrize("transition", ["cubic", "quintic", "septic"])
def test_partition_of_unity(transition):
    part = build_partition(Grid(32), transition)
    assert part.unity_defect() < 1e-12


def test_unknown_transition():
    with pytest.raises(ValueError):
        build_partition(Grid(16), "linear")


def test_shell_outside_range():
    part = build_partition(Grid(16))
    with pytest.raises(ValueError):
        part.multiplier(part.j_max + 1)


def test_decomposition_sums_back(grid32, rng):
    u = random_divfree(grid32, rng)
    d = decompose(u)
    total = sum(f.coeffs for f in d.shells.values())
    assert np.max(np.abs(total - u.coeffs)) < 1e-15
    assert d.excluded_fraction == 0.0


def test_excluded_fraction_outside_band():
    g = Grid(16)
    x, _, _ = g.coordinates()
    f = transform(g, np.stack([np.sin(7 * x), 0 * x, 0 * x]))
    assert excluded_fraction(f) == pytest.approx(1.0)


def test_besov_index_validation():
    with pytest.raises(ValueError):
        BesovIndex(0.5, p=0.5)
    with pytest.raises(ValueError):
        BesovIndex(0.5, r=0.0)


def test_besov_per_shell_contributions(grid32, rng):
    u = random_divfree(grid32, rng)
    v = besov_norm(u, BesovIndex(0.5, 2, 1))
    assert v.value == pytest.approx(sum(c for _, c in v.shells))
    d = v.as_dict()
    assert d["shells"][0]["j"] == build_partition(grid32).j_min
    r2 = besov(u, 0.5, 2, 2)
    rinf = besov(u, 0.5, 2, math.inf)
    assert rinf <= r2 <= v.value


def test_besov_warns_on_mean(grid16):
    c = np.zeros((3,) + grid16.spectral_shape, complex)
    c[0, 0, 0, 0] = 1.0
    c[0, 1, 0, 0] = 0.5
    with pytest.warns(UserWarning):
        besov_norm(SpectralField(grid16, c), BesovIndex(0.0))


def test_besov_homogeneity_and_triangle(grid32, rng):
    u = random_divfree(grid32, rng)
    v = random_divfree(grid32, rng)
    for p in (2.0, 3.0):
        assert besov(3.0 * u, 0.5, p) == pytest.approx(3.0 * besov(u, 0.5, p), rel=1e-12)
        assert besov(u + v, 0.5, p) <= besov(u, 0.5, p) + besov(v, 0.5, p) * (1 + 1e-12)


def test_shell_norms_p2_match_physical(grid16, rng):
    u = random_divfree(grid16, rng)
    a = shell_lp_norms(u, 2.0)
    b = shell_lp_norms(u, 2.0000001)
    assert np.allclose(a, b, rtol=1e-5)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6))
def test_bony_reconstruction(seed):
    g = Grid(16)
    rng = np.random.default_rng(seed)
    u, v = random_divfree(g, rng, 1.0), random_divfree(g, rng, 1.0)
    t1, t2, r = bony_terms(u, v)
    prod = dealiased_product(u, v)
    err = np.max(np.abs(t1.coeffs + t2.coeffs + r.coeffs - prod.coeffs))
    assert err < 1e-12 * np.max(np.abs(prod.coeffs))


def test_bernstein_bounds_on_shell():
    g = Grid(32)
    rng = np.random.default_rng(0)
    u = single_shell(g, rng, 2)
    lo = bernstein_ratio(u, 2, 1, 2, 2)
    assert 0.5 < lo < 3.0
    assert bernstein_ratio(u, 2, 0, 2, 2) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        bernstein_ratio(u, 2, 1, 3, 2)


def test_interpolation_single_shell_is_equality():
    g = Grid(32)
    u = single_shell(g, np.random.default_rng(1), 2)
    assert interpolation_ratio(u, -0.5, 1.5, 0.3) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        interpolation_ratio(u, 0.0, 1.0, 1.0)


def test_commutator_degenerate_cases(grid16, rng):
    z = random_divfree(grid16, rng)
    w = random_divfree(grid16, rng)
    const = transform(grid16, np.ones((3,) + grid16.physical_shape))
    assert commutator_block_norm(const, z).lhs < 1e-14
    assert commutator_block_norm(w, SpectralField.zeros(grid16)).ratio == 0.0
    assert commutator_block_norm(w, z).ratio > 0


def test_product_law_ratios_finite(grid16, rng):
    a, b = random_divfree(grid16, rng), random_divfree(grid16, rng)
    for law in ("law1", "law0", "law2"):
        r = product_law_ratio(law, a, b)
        assert 0 < r < np.inf
    with pytest.raises(ValueError):
        product_law_ratio("law0", a, b, p=3.0, q=2.0)
    with pytest.raises(ValueError):
        product_law_ratio("law9", a, b)
