"""The full verification suite and a reduced quick variant."""

from __future__ import annotations


import numpy as np

from ..dynamics import HallState
from ..time_integration import evolve
from .bound import run_global_bound
from .common import ExperimentConfig
from .decay import decay_defaults, run_decay
from .report import ExperimentReport
from .stability import gronwall_check, run_stability, stability_defaults
from .structure import (
    commutator_ratio_study,
    consistency_check,
    energy_balance_study,
    picard_defaults,
    picard_study,
    pressure_study,
    product_law_study,
    run_scaling,
)


def gronwall_synthetic():
    """The checker on closed-form series: decaying, identically zero, and too large."""
    rep = ExperimentReport("gronwall_synthetic", {"mu": 0.5, "C": 1.0})
    t = np.linspace(0.0, 5.0, 501)
    X = 1e-3 * np.exp(-t)
    v = gronwall_check(t, X, X, np.zeros_like(t), 1.0, 0.5)
    rep.scalars["decaying"] = v.as_dict()
    rep.check("decaying_passes", 1.0 if v.passed else 0.0, 1.0, ">=")
    z = np.zeros_like(t)
    v = gronwall_check(t, z, z, z, 1.0, 0.5)
    rep.scalars["zero"] = v.as_dict()
    rep.check("zero_passes", 1.0 if v.passed else 0.0, 1.0, ">=")
    X = 1.0 * np.exp(-t)
    v = gronwall_check(t, X, X, np.zeros_like(t), 1.0, 0.5)
    rep.scalars["large"] = v.as_dict()
    rep.check("large_reports_unmet_hypothesis", 1.0 if v.status == "hypothesis not met" else 0.0, 1.0, ">=")
    return rep


def consistency_run(cfg=None):
    cfg = cfg or ExperimentConfig(n=32, amplitude=0.5)
    grid = cfg.grid()
    u0, b0, J0 = cfg.data(grid)
    tr = evolve(HallState(u0, b0, J0, cfg.params()), cfg.integrator(t_end=1.0))
    return consistency_check(tr)


def quick_configs():
    """Small, fast variants of every experiment (smoke level, not acceptance level)."""
    small = ExperimentConfig(n=16, dt=0.05, t_end=1.0, seeds=(1, 2))
    return {
        "bound": small,
        "decay": decay_defaults().replace(n=32, t_end=2.0, dt=0.02),
        "stability": stability_defaults().replace(n=16, t_end=0.5, dt=0.05, seeds=(1, 2)),
        "scaling": ExperimentConfig(n=32),
        "picard": picard_defaults().replace(n=8),
        "consistency": ExperimentConfig(n=16, amplitude=0.5, t_end=0.2),
        "ratios": ExperimentConfig(n=16),
    }


def run_suite(quick=False):
    """Run every experiment and return the reports in a fixed order."""
    if quick:
        c = quick_configs()
        return [
            run_scaling(c["scaling"]),
            energy_balance_study(),
            pressure_study(),
            consistency_run(c["consistency"]),
            picard_study(c["picard"]),
            commutator_ratio_study(c["ratios"], seeds=3, resolutions=(8, 16)),
            product_law_study(c["ratios"], pairs=3, resolutions=(8, 16)),
            gronwall_synthetic(),
            run_global_bound(c["bound"]),
            run_decay(c["decay"], nonlinear=False, name="decay_heat"),
            run_stability(c["stability"]),
        ]
    return [
        run_scaling(),
        energy_balance_study(),
        pressure_study(),
        consistency_run(),
        picard_study(),
        commutator_ratio_study(),
        product_law_study(),
        gronwall_synthetic(),
        run_global_bound(),
        run_decay(nonlinear=False, name="decay_heat"),
        run_decay(),
        run_stability(),
    ]
