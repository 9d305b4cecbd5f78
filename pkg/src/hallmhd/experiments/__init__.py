"""Experiments reproducing the checkable structural and quantitative claims."""

from .bound import run_global_bound
from .common import ExperimentConfig
from .decay import decay_defaults, run_decay
from .report import ExperimentReport, admissibility, read_series_csv, write_report
from .stability import gronwall_check, run_stability, stability_defaults
from .structure import (
    commutator_ratio_study,
    consistency_check,
    energy_balance_study,
    picard_study,
    pressure_study,
    product_law_study,
    run_scaling,
    scaling_equivariance_check,
)
from .suite import gronwall_synthetic, run_suite

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "admissibility",
    "commutator_ratio_study",
    "consistency_check",
    "decay_defaults",
    "energy_balance_study",
    "gronwall_check",
    "gronwall_synthetic",
    "picard_study",
    "pressure_study",
    "product_law_study",
    "read_series_csv",
    "run_decay",
    "run_global_bound",
    "run_scaling",
    "run_stability",
    "run_suite",
    "scaling_equivariance_check",
    "stability_defaults",
    "write_report",
]
