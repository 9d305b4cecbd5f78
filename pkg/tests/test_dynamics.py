import math

import numpy as np
import pytest

from hallmhd.dynamics import (
    HallParams,
    HallState,
    cross_product,
    dissipation,
    electron_velocity,
    energy,
    energy_balance_residual,
    hall_cancellation_residual,
    momentum_residual,
    pressure_recover,
    q_a,
    q_b,
    rhs_extended,
    rhs_original,
)
from hallmhd.experiments.data import random_divfree
from hallmhd.experiments.structure import scaling_equivariance_check, taylor_vortex_pressure, _band_limited_state
from hallmhd.field_core import Grid, SpectralField, curl, l2_norm_coeffs
from hallmhd.time_integration import IntegratorConfig, evolve


def rel(a, b, g):
    return l2_norm_coeffs(a - b, g) / l2_norm_coeffs(b, g)


@pytest.mark.parametrize("kw", [dict(mu=0, nu=1), dict(mu=1, nu=-1), dict(mu=1, nu=1, eps=-0.1)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        HallParams(**kw)


def test_bilinear_symmetries(grid16, rng):
    v, w = random_divfree(grid16, rng), random_divfree(grid16, rng)
    assert np.max(np.abs(q_a(v, w).coeffs - q_a(w, v).coeffs)) < 1e-16
    assert np.max(np.abs(q_b(v, w).coeffs + q_b(w, v).coeffs)) < 1e-16
    assert rel(q_b(v, w).coeffs, curl(cross_product(v, w)).coeffs, grid16) < 1e-13


def test_cross_formulation_agreement(grid32, rng):
    params = HallParams(0.1, 0.1, 0.5)
    s = HallState.from_data(random_divfree(grid32, rng), random_divfree(grid32, rng), params)
    du, db, dJ = rhs_extended(s)
    du2, db2 = rhs_original(s)
    assert rel(du.coeffs, du2.coeffs, grid32) < 1e-12
    assert rel(db.coeffs, db2.coeffs, grid32) < 1e-12
    assert rel(dJ.coeffs, curl(db).coeffs, grid32) < 1e-10


def test_rhs_stays_divergence_free_and_mean_zero(grid16, rng):
    s = HallState.from_data(random_divfree(grid16, rng), random_divfree(grid16, rng), HallParams(0.1, 0.1, 1.0))
    for f in rhs_extended(s):
        kd = grid16.kd_vec
        div = np.einsum("c...,c...->...", kd, f.coeffs)
        assert np.max(np.abs(div)) < 1e-13 * np.max(np.abs(f.coeffs)) * grid16.n
        assert np.max(np.abs(f.coeffs[:, 0, 0, 0])) == 0.0


def test_zero_state_has_zero_rhs(grid16):
    z = SpectralField.zeros(grid16)
    s = HallState(z, z, z, HallParams(1, 1, 1))
    assert all(not np.any(f.coeffs) for f in rhs_extended(s))
    assert energy(s) == 0.0 and dissipation(s) == 0.0


def test_hall_cancellation(grid32, rng):
    s = HallState.from_data(random_divfree(grid32, rng), random_divfree(grid32, rng), HallParams(0.1, 0.1, 2.0))
    r = hall_cancellation_residual(electron_velocity(s), s.b)
    assert r.pointwise < 1e-14 and r.integrated < 1e-11


def test_closed_form_pressure():
    g = Grid(16)
    u, pi = taylor_vortex_pressure(g, A=1.7)
    z = SpectralField.zeros(g)
    got = pressure_recover(HallState(u, z, z, HallParams(1, 1))).physical()[0]
    assert np.max(np.abs(got - pi)) < 1e-13


def test_momentum_residual_on_trajectory(grid16, rng):
    s = HallState.from_data(0.05 * random_divfree(grid16, rng), 0.05 * random_divfree(grid16, rng), HallParams(0.1, 0.1, 0.5))
    tr = evolve(s, IntegratorConfig(dt=1e-3, t_end=4e-3))
    assert momentum_residual(tr.states, 1e-3) < 1e-9
    with pytest.raises(ValueError):
        momentum_residual(tr.states[:4], 1e-3)


def test_energy_balance_needs_three_snapshots(grid16):
    z = SpectralField.zeros(grid16)
    s = HallState(z, z, z, HallParams(1, 1))
    with pytest.raises(ValueError):
        energy_balance_residual([s, s])
    assert energy_balance_residual([s, s.with_time(0.1), s.with_time(0.2)]) == 0.0


def test_scaling_checks():
    g = Grid(32)
    s = _band_limited_state(g, 0, 2, HallParams(0.1, 0.1, 0.0))
    assert scaling_equivariance_check(s, 2, "mhd")["equivariant"]
    assert scaling_equivariance_check(s, 2, "heat")["equivariant"]
    hall = HallState(s.u, s.b, s.J, HallParams(0.1, 0.1, 0.3))
    assert scaling_equivariance_check(hall, 2, "hall")["equivariant"]
    assert scaling_equivariance_check(hall, 2, "extended")["equivariant"]
    assert not scaling_equivariance_check(hall, 2, "mhd")["equivariant"]
