import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hallmhd.experiments.data import random_divfree
from hallmhd.field_core import (
    Grid,
    GridMismatchError,
    ScalarField,
    ShapeError,
    SpectralField,
    ZeroModeError,
    curl,
    curl_inv,
    derivative,
    divergence,
    gradient,
    heat_factor,
    heat_propagate,
    hermitian_defect,
    inverse,
    l2_inner,
    l2_norm_coeffs,
    laplacian,
    leray_project,
    lp_norm,
    multi_indices,
    read_snapshot,
    rescale_field,
    transform,
    write_snapshot,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.mark.parametrize("n", [0, 7, 12, 4])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        Grid(n)


def test_grid_rejects_nonpositive_length():
    with pytest.raises(ValueError):
        Grid(16, 0.0)


def test_grid_geometry():
    g = Grid(32, 4 * math.pi)
    assert g.dk == pytest.approx(0.5)
    assert g.cutoff == 10
    assert g.spectral_shape == (32, 32, 17)
    assert g.hermitian_weight.sum() == 32**3


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_transform_round_trip_and_parseval(seed):
    g = Grid(16, 3.0)
    x = np.random.default_rng(seed).standard_normal((3,) + g.physical_shape)
    f = transform(g, x)
    assert np.max(np.abs(inverse(f) - x)) < 1e-13
    l2 = math.sqrt(np.sum(x**2) * g.cell_volume)
    assert l2_norm_coeffs(f.coeffs, g) == pytest.approx(l2, rel=1e-13)
    assert hermitian_defect(f) < 1e-15


def test_coefficients_are_read_only(grid16):
    f = SpectralField.zeros(grid16)
    with pytest.raises(ValueError):
        f.coeffs[0, 0, 0, 0] = 1.0


def test_shape_and_grid_errors(grid16):
    with pytest.raises(ShapeError):
        transform(grid16, np.zeros((8, 8, 8)))
    with pytest.raises(ShapeError):
        ScalarField(grid16, np.zeros((3,) + grid16.spectral_shape, complex))
    with pytest.raises(GridMismatchError):
        SpectralField.zeros(grid16) + SpectralField.zeros(Grid(8))


def test_constant_field_has_mean_coefficient(grid16):
    f = transform(grid16, 2.5 * np.ones(grid16.physical_shape))
    assert f.coeffs[0, 0, 0, 0] == pytest.approx(2.5)


def test_single_mode_derivatives():
    g = Grid(16, 2 * math.pi)
    x, y, z = g.coordinates()
    f = transform(g, np.sin(3 * x) * np.cos(2 * y))
    d = derivative(f, (0, 1)).physical()[0]
    assert np.max(np.abs(d - (-6.0) * np.cos(3 * x) * np.sin(2 * y))) < 1e-12
    lap = laplacian(f).physical()[0]
    assert np.max(np.abs(lap + 13 * np.sin(3 * x) * np.cos(2 * y))) < 1e-12


def test_multi_indices_count():
    assert len(multi_indices(1)) == 3
    assert len(multi_indices(2)) == 6


@settings(max_examples=5, deadline=None)
@given(seeds)
def test_vector_identities(seed):
    g = Grid(16)
    rng = np.random.default_rng(seed)
    f = transform(g, rng.standard_normal((3,) + g.physical_shape))
    phi = transform(g, rng.standard_normal(g.physical_shape))
    assert l2_norm_coeffs(divergence(curl(f)).coeffs, g) < 1e-12 * l2_norm_coeffs(f.coeffs, g) * g.n
    assert l2_norm_coeffs(curl(gradient(phi)).coeffs, g) < 1e-12 * l2_norm_coeffs(phi.coeffs, g) * g.n
    p = leray_project(f)
    assert l2_norm_coeffs(divergence(p).coeffs, g) < 1e-12 * l2_norm_coeffs(f.coeffs, g) * g.n
    w = random_divfree(g, rng, 0.0)
    back = curl_inv(curl(w))
    assert l2_norm_coeffs(back.coeffs - w.coeffs, g) < 1e-13 * l2_norm_coeffs(w.coeffs, g)


def test_curl_inv_rejects_mean():
    g = Grid(8)
    c = np.zeros((3,) + g.spectral_shape, complex)
    c[0, 0, 0, 0] = 1.0
    with pytest.raises(ZeroModeError, match="zero-mode not invertible"):
        curl_inv(SpectralField(g, c))


def test_heat_propagation(grid16):
    x, y, z = grid16.coordinates()
    f = transform(grid16, np.cos(2 * x + z))
    out = heat_propagate(f, 0.3, 0.7)
    expect = np.exp(-0.3 * 5 * 0.7) * np.cos(2 * x + z)
    assert np.max(np.abs(out.physical()[0] - expect)) < 1e-13
    assert heat_propagate(f, 0.3, 0.0).coeffs == pytest.approx(f.coeffs)
    with pytest.raises(ValueError):
        heat_factor(grid16, 0.3, -1.0)


def test_lp_norms(grid16):
    f = transform(grid16, np.ones((3,) + grid16.physical_shape))
    vol = grid16.volume
    assert lp_norm(f, 2) == pytest.approx(math.sqrt(3 * vol))
    assert lp_norm(f, 1) == pytest.approx(math.sqrt(3) * vol)
    assert lp_norm(f, math.inf) == pytest.approx(math.sqrt(3))
    assert l2_inner(f, f) == pytest.approx(3 * vol)


def test_rescale_field_dilates_modes():
    g = Grid(16)
    x, y, z = g.coordinates()
    f = transform(g, np.sin(x) * np.cos(2 * z))
    r = rescale_field(f, 2, 1)
    assert np.max(np.abs(r.physical()[0] - 2 * np.sin(2 * x) * np.cos(4 * z))) < 1e-12
    assert np.array_equal(rescale_field(f, 1, 3).coeffs, f.coeffs)


def test_rescale_field_errors():
    g = Grid(16)
    x, _, _ = g.coordinates()
    with pytest.raises(ValueError, match="dilation exceeds grid"):
        rescale_field(transform(g, np.sin(5 * x)), 2, 0)
    with pytest.raises(ValueError):
        rescale_field(transform(g, np.sin(x)), 3, 0)


def test_snapshot_round_trip(tmp_path, grid16, rng):
    u = random_divfree(grid16, rng)
    b = random_divfree(grid16, rng)
    path = tmp_path / "s.hmh"
    write_snapshot(path, [u, b], t=1.25)
    g, t, f = read_snapshot(path)
    assert g == grid16 and t == 1.25 and f.ncomp == 6
    assert np.array_equal(f.coeffs[:3], u.coeffs)
    assert np.array_equal(f.coeffs[3:], b.coeffs)
    raw = path.read_bytes()
    assert raw[:4] == b"HMH1"
    assert len(raw) == 4 + 4 + 8 + 8 + 1 + 6 * 16**3 * 16


def test_snapshot_rejects_garbage(tmp_path):
    p = tmp_path / "bad.hmh"
    p.write_bytes(b"XXXX" + bytes(40))
    with pytest.raises(ValueError):
        read_snapshot(p)
