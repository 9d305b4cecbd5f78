"""Uniform bound of the combined critical functional for small data."""

from __future__ import annotations

import numpy as np

from ..time_integration import evolve
from .common import ExperimentConfig, NormRecorder, combined_functional, state_from_data
from .report import ExperimentReport

BOUND_FACTOR = 2.0


def run_global_bound(cfg=None, nonlinear=True):
    """Evolve each seed and compare the running combined functional with twice its initial value.

    The combined functional is ``sum_f sup_{[0,t]} ||f||_{crit} + kappa_f int_0^t ||f||_{crit+2}``
    over (u, b, J). The instantaneous critical norm is recorded alongside;
    with the nonlinearity off it must be non-increasing.
    """
    cfg = cfg or ExperimentConfig()
    grid = cfg.grid()
    params = cfg.params()
    icfg = cfg.integrator(nonlinear=nonlinear)
    report = ExperimentReport("bound", cfg.describe())
    weights = (params.mu, params.nu, params.nu)
    margins = []
    for seed in cfg.seeds:
        u0, b0, J0 = cfg.data(grid, seed)
        rec = NormRecorder(grid, cfg.p, cfg.q)
        traj = evolve(state_from_data(u0, b0, J0, params), icfg, monitor=rec, keep_states=False)
        t, lo, hi = rec.arrays()
        F = combined_functional(t, lo, hi, weights)
        inst = lo.sum(axis=1)
        report.add_series(f"combined_seed{seed}", t, F)
        report.add_series(f"critical_seed{seed}", t, inst)
        if traj.diverged:
            report.status = "diverged"
            report.scalars[f"seed{seed}_last_valid_time"] = traj.last_valid_time
            continue
        peak = float(F.max() / F[0]) if F[0] > 0 else 0.0
        margins.append(BOUND_FACTOR - peak)
        report.check(f"seed{seed}: max F(t)/F(0)", peak, BOUND_FACTOR, "<=")
        report.scalars[f"seed{seed}_F0"] = float(F[0])
        report.scalars[f"seed{seed}_max_projection"] = traj.max_projection
        if not nonlinear:
            rise = float(np.max(np.diff(inst), initial=0.0)) / max(float(inst[0]), 1e-300)
            report.check(f"seed{seed}: heat-flow critical norm increase", rise, 1e-12, "<=")
    report.scalars["min_margin"] = min(margins) if margins else None
    return report
