"""Structural checks: current consistency, scaling equivariance, energy balance,
pressure recovery, Picard contraction and ratio studies of the harmonic-analysis
estimates."""

from __future__ import annotations

import math

import numpy as np

from ..dynamics import (
    HallParams,
    HallState,
    energy_balance_residual,
    momentum_residual,
    nonlinear_extended,
    pressure_recover,
    rhs_original,
)
from ..field_core import (
    Grid,
    SpectralField,
    _curl_coeffs,
    _fft,
    l2_norm_coeffs,
    laplacian,
    rescale_field,
)
from ..littlewood_paley import build_partition, commutator_block_norm, product_law_ratio
from ..time_integration import (
    IntegratorConfig,
    evolve,
    locate_contraction_threshold,
    picard_solve,
    sup_besov_difference,
    worst_ratio_at,
)
from .common import ExperimentConfig
from .data import random_divfree
from .report import ExperimentReport

CONSISTENCY_TOL = 1e-8
SCALING_TOL = 1e-11


# --------------------------------------------------------------------------
# current consistency


def consistency_check(trajectory, tol=CONSISTENCY_TOL):
    """Max over snapshots of ``||J - curl b|| / ||curl b||``."""
    states = trajectory.states if hasattr(trajectory, "states") else list(trajectory)
    if not states:
        raise ValueError("trajectory has no stored states")
    rep = ExperimentReport("consistency", {"tol": tol, "snapshots": len(states)})
    worst = 0.0
    series = []
    for s in states:
        g = s.grid
        cb = _curl_coeffs(s.b.coeffs, g)
        diff = l2_norm_coeffs(s.J.coeffs - cb, g)
        ref = l2_norm_coeffs(cb, g)
        if ref == 0.0:
            r = 0.0 if diff == 0.0 else math.inf
        else:
            r = diff / ref
        series.append(r)
        worst = max(worst, r)
    rep.add_series("current_mismatch", [s.t for s in states], series)
    rep.scalars["max_mismatch"] = worst
    if not worst < tol:
        rep.status = "inconsistent initialization detected"
    rep.check("max_mismatch", worst, tol, "<")
    return rep


# --------------------------------------------------------------------------
# scaling


def _rel(a, b, grid):
    den = l2_norm_coeffs(b, grid)
    num = l2_norm_coeffs(a - b, grid)
    return num / den if den > 0 else num


def _dil(c, grid, lam, power):
    return rescale_field(SpectralField(grid, c), lam, power).coeffs


def scaling_residual(state, lam=2, system="mhd"):
    """Mismatch between rescaled rhs and rhs of the rescaled state.

    ``system`` selects the operator and its exponents (amplitude power of the
    state, then of the rhs):

    - ``"heat"``: ``Lap`` on u, powers 1 -> 3
    - ``"mhd"``: nonlinear sources of the original system, powers 1 -> 3
      (equivariant only for eps = 0)
    - ``"hall"``: b-equation with u = 0, powers 0 -> 2
    - ``"extended"``: extended system, all of (u, b, J) with powers 1 -> 3

    Returns ``(relative, absolute)`` residuals in L^2.
    """
    g = state.grid
    if system == "heat":
        a = _dil(laplacian(state.u).coeffs, g, lam, 3)
        b = laplacian(rescale_field(state.u, lam, 1)).coeffs
    elif system in ("mhd", "hall"):
        pin, pout = (1, 3) if system == "mhd" else (0, 2)
        u = state.u if system == "mhd" else SpectralField.zeros(g, 3)
        s = HallState(u, state.b, state.J, state.params)
        du, db = rhs_original(s)
        sl = HallState(rescale_field(u, lam, pin), rescale_field(state.b, lam, pin), state.J, state.params)
        du2, db2 = rhs_original(sl)
        if system == "mhd":
            a = np.concatenate([_dil(du.coeffs, g, lam, pout), _dil(db.coeffs, g, lam, pout)])
            b = np.concatenate([du2.coeffs, db2.coeffs])
        else:
            a, b = _dil(db.coeffs, g, lam, pout), db2.coeffs
    elif system == "extended":
        c = state.stacked()
        out = nonlinear_extended(c, g, state.params)
        a = np.concatenate([_dil(out[3 * i : 3 * i + 3], g, lam, 3) for i in range(3)])
        cl = np.concatenate([_dil(c[3 * i : 3 * i + 3], g, lam, 1) for i in range(3)])
        b = nonlinear_extended(cl, g, state.params)
    else:
        raise ValueError(f"unknown system {system!r}")
    return _rel(a, b, g), l2_norm_coeffs(a - b, g)


def scaling_equivariance_check(state, lam=2, system="mhd", tol=SCALING_TOL):
    rel, ab = scaling_residual(state, lam, system)
    return {"system": system, "lambda": lam, "relative": rel, "absolute": ab, "equivariant": rel < tol}


def _band_limited_state(grid, seed, lam, params, slope=2.0):
    """Random state whose modes survive dilation by ``lam`` with products unaliased."""
    K = grid.cutoff
    band = K / (2.0 * lam)
    rng = np.random.default_rng(seed)
    u = random_divfree(grid, rng, slope, k_cut=band)
    b = random_divfree(grid, rng, slope, k_cut=band)
    return HallState.from_data(u, b, params)


def run_scaling(cfg=None, lam=2, eps_values=(0.1, 0.2, 0.4)):
    """Operator-level scaling: exact for heat, MHD (eps=0), the Hall equation and
    the extended system; an O(eps) defect for the full Hall-MHD system."""
    cfg = cfg or ExperimentConfig(n=64)
    grid = cfg.grid()
    rep = ExperimentReport("scaling", cfg.describe())
    base = _band_limited_state(grid, cfg.seed, lam, HallParams(cfg.mu, cfg.nu, 0.0), cfg.slope)
    for system, eps in (("heat", 0.0), ("mhd", 0.0), ("hall", cfg.eps), ("extended", cfg.eps)):
        s = HallState(base.u, base.b, base.J, HallParams(cfg.mu, cfg.nu, eps))
        rel, _ = scaling_residual(s, lam, system)
        rep.scalars[f"{system}_relative"] = rel
        rep.check(f"{system}_equivariance", rel, SCALING_TOL, "<")
    absolute = []
    for eps in eps_values:
        s = HallState(base.u, base.b, base.J, HallParams(cfg.mu, cfg.nu, eps))
        rel, ab = scaling_residual(s, lam, "mhd")
        absolute.append(ab)
        rep.scalars[f"hall_mhd_eps{eps:g}_relative"] = rel
        rep.scalars[f"hall_mhd_eps{eps:g}_absolute"] = ab
        rep.check(f"hall_mhd_eps{eps:g}_breaks_scaling", rel, 1e-6, ">=")
    slopes = np.diff(np.log(absolute)) / np.diff(np.log(eps_values))
    rep.scalars["eps_log_slopes"] = slopes.tolist()
    for i, sl in enumerate(slopes):
        rep.check(f"eps_linearity_{i}", sl, (1.0 - 1e-6, 1.0 + 1e-6), "in")
    return rep


# --------------------------------------------------------------------------
# energy balance and pressure


def energy_balance_study(cfg=None, dts=(2e-3, 1e-3, 5e-4, 2.5e-4), order_window=(1.8, 2.2), finest_tol=1e-6, eps_tol=0.05):
    """Central-difference energy balance under dt refinement, for eps and eps=0.

    The residual is dominated by the O(dt^2) error of the difference
    quotient, so it should fall by 4 per halving; the Hall term does no work,
    so the residual should not depend on eps at leading order.
    """
    cfg = cfg or ExperimentConfig(n=16, amplitude=0.05)
    grid = cfg.grid()
    u0, b0, J0 = cfg.data(grid)
    rep = ExperimentReport("energy_balance", cfg.describe())
    res = {}
    for eps in (cfg.eps, 0.0):
        params = cfg.params(eps)
        rs = []
        for dt in dts:
            tr = evolve(HallState(u0, b0, J0, params), IntegratorConfig(dt=dt, t_end=2 * dt))
            rs.append(energy_balance_residual(tr.states, dt))
        res[eps] = rs
        orders = np.log2(np.asarray(rs[:-1]) / np.asarray(rs[1:]))
        rep.scalars[f"eps{eps:g}_residuals"] = rs
        rep.scalars[f"eps{eps:g}_orders"] = orders.tolist()
        for i, o in enumerate(orders):
            rep.check(f"eps{eps:g}_order_{i}", o, order_window, "in")
        rep.check(f"eps{eps:g}_finest", rs[-1], finest_tol, "<")
    rel = abs(res[cfg.eps][-1] - res[0.0][-1]) / res[0.0][-1]
    rep.scalars["eps_relative_change"] = rel
    rep.check("eps_independence", rel, eps_tol, "<=")
    return rep


def taylor_vortex_pressure(grid, A=1.0):
    """``u = A (cos y, cos x, 0)``, ``b = 0`` and its closed-form pressure ``A^2 sin x sin y``."""
    x, y, _ = (grid.k_min * a for a in grid.coordinates())
    u = np.stack([A * np.cos(y), A * np.cos(x), 0.0 * x])
    pi = A * A * np.sin(x) * np.sin(y)
    return SpectralField(grid, _fft(u, grid), True), pi


def pressure_study(cfg=None, tol_closed=1e-12, tol_momentum=1e-9, dt=1e-3):
    cfg = cfg or ExperimentConfig(n=16, amplitude=0.05)
    grid = cfg.grid()
    rep = ExperimentReport("pressure", cfg.describe())
    u, pi = taylor_vortex_pressure(Grid(grid.n, 2.0 * math.pi))
    g2 = u.grid
    s = HallState(u, SpectralField.zeros(g2, 3), SpectralField.zeros(g2, 3), cfg.params())
    got = pressure_recover(s).physical()[0]
    err = float(np.max(np.abs(got - pi)) / np.max(np.abs(pi)))
    rep.scalars["closed_form_error"] = err
    rep.check("closed_form_pressure", err, tol_closed, "<")
    u0, b0, J0 = cfg.data(grid)
    tr = evolve(HallState(u0, b0, J0, cfg.params()), IntegratorConfig(dt=dt, t_end=4 * dt))
    r = momentum_residual(tr.states, dt)
    rep.scalars["momentum_residual"] = r
    rep.check("momentum_residual", r, tol_momentum, "<")
    return rep


# --------------------------------------------------------------------------
# Picard contraction


def picard_defaults():
    return ExperimentConfig(n=16, mu=0.1, nu=0.1, eps=0.5, picard_T=0.5, picard_dt=0.05)


def picard_study(cfg=None, probe_iterates=5, ladder=4):
    """Locate the contraction threshold, then test contraction at half of it.

    The threshold is the largest amplitude whose worst ratio over
    ``probe_iterates`` iterates stays below 1. At half that amplitude every
    ratio should be at most 1/2, the iteration should converge to
    ``picard_tol`` and agree with the time-marcher; the worst ratio must not
    increase as the amplitude is halved down a ladder.
    """
    cfg = cfg or picard_defaults()
    grid = cfg.grid()
    params = cfg.params()
    rep = ExperimentReport("picard", cfg.describe())

    def make(a):
        return cfg.data(grid, amplitude=a)

    thr = locate_contraction_threshold(make, params, cfg.picard_T, cfg.picard_dt, probe_iterates=probe_iterates, p=cfg.p, q=cfg.q)
    a_half = 0.5 * thr.threshold
    rep.scalars["threshold"] = thr.threshold
    rep.scalars["threshold_probes"] = thr.probes
    rep.scalars["half_amplitude"] = a_half

    u0, b0, J0 = make(a_half)
    res, prep = picard_solve(u0, b0, J0, params, cfg.picard_T, cfg.picard_dt, cfg.picard_n_max, cfg.picard_tol, cfg.p, cfg.q)
    rep.scalars["picard"] = prep.as_dict()
    rep.check("converged", 1.0 if prep.converged else 0.0, 1.0, ">=")
    rep.check("worst_ratio_at_half_threshold", prep.worst_ratio, 0.5, "<=")
    rep.check("iterates_bounded", max(prep.functionals) / prep.bound if prep.bound else 0.0, 1.0, "<=")

    tr = evolve(HallState(u0, b0, J0, params), IntegratorConfig(dt=cfg.picard_dt, t_end=cfg.picard_T))
    diff = sup_besov_difference(
        [res.solution(m) for m in range(len(res.times))], [s.stacked() for s in tr.states], grid, cfg.p, cfg.q
    )
    rep.scalars["picard_vs_evolve"] = diff
    rep.check("picard_vs_evolve", diff, 1e-8, "<")

    amps = [a_half * 0.5**i for i in range(ladder)]
    worst = [worst_ratio_at(make, a, params, cfg.picard_T, cfg.picard_dt, probe_iterates, cfg.p, cfg.q) for a in amps]
    rep.scalars["ladder"] = list(zip(amps, worst))
    increases = sum(1 for a, b in zip(worst[:-1], worst[1:]) if b > a)
    rep.check("ladder_monotone_violations", increases, 0, "<=")
    return rep


# --------------------------------------------------------------------------
# ratio studies of the harmonic-analysis estimates


def _pair(grid, seed, slope=1.0):
    rng = np.random.default_rng(seed)
    return random_divfree(grid, rng, slope), random_divfree(grid, rng, slope)


def commutator_ratio_study(cfg=None, seeds=20, resolutions=(16, 32), growth=1.5):
    """Max commutator ratio over an ensemble at two resolutions; bounded if the
    fine max is within ``growth`` times the coarse max."""
    cfg = cfg or ExperimentConfig()
    rep = ExperimentReport("commutator", cfg.describe())
    maxima = []
    for n in resolutions:
        grid = Grid(n, cfg.L)
        part = build_partition(grid)
        ratios = [commutator_block_norm(*_pair(grid, cfg.seed + k), part).ratio for k in range(seeds)]
        rep.scalars[f"n{n}_ratios"] = ratios
        maxima.append(max(ratios))
    rep.scalars["maxima"] = maxima
    rep.check("commutator_growth", maxima[-1] / maxima[0], growth, "<=")
    return rep


def product_law_study(cfg=None, pairs=50, resolutions=(16, 32), growth=1.5, laws=("law1", "law0", "law2")):
    """Product-law ratios over ``pairs`` random pairs at two resolutions."""
    cfg = cfg or ExperimentConfig()
    rep = ExperimentReport("product_laws", cfg.describe())
    for law in laws:
        maxima = []
        for n in resolutions:
            grid = Grid(n, cfg.L)
            part = build_partition(grid)
            ratios = [product_law_ratio(law, *_pair(grid, cfg.seed + k), part, cfg.p, cfg.q) for k in range(pairs)]
            maxima.append(max(ratios))
        rep.scalars[f"{law}_maxima"] = maxima
        rep.check(f"{law}_growth", maxima[-1] / maxima[0], growth, "<=")
    return rep
