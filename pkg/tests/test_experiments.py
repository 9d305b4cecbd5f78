import json
import math

import numpy as np
import pytest

from hallmhd.dynamics import HallState
from hallmhd.experiments import (
    ExperimentConfig,
    admissibility,
    consistency_check,
    gronwall_check,
    gronwall_synthetic,
    read_series_csv,
    run_global_bound,
    run_stability,
    stability_defaults,
    write_report,
)
from hallmhd.experiments.data import critical_size, make_initial
from hallmhd.experiments.report import DEFAULT_PAIRS, ExperimentReport, config_hash
from hallmhd.experiments.stability import minimal_gronwall_constant, perturbation, stability_run
from hallmhd.experiments.structure import commutator_ratio_study, picard_defaults, picard_study, pressure_study
from hallmhd.field_core import Grid, SpectralField
from hallmhd.littlewood_paley import besov
from hallmhd.time_integration import evolve


@pytest.mark.parametrize("family", ["random", "taylor_green", "single_shell"])
def test_make_initial_normalizes_critical_size(family):
    g = Grid(16)
    u, b, J = make_initial(g, family, seed=3, amplitude=0.2)
    assert critical_size(u, b) == pytest.approx(0.2, rel=1e-12)


def test_make_initial_errors():
    with pytest.raises(ValueError):
        make_initial(Grid(16), "vortex")
    with pytest.raises(ValueError):
        make_initial(Grid(16), amplitude=-1.0)


def test_admissibility_pairs():
    for p, q in DEFAULT_PAIRS:
        assert admissibility(p, q)["global"]
    assert not admissibility(3.0, 2.0)["global"]
    assert not admissibility(2.0, 20.0)["global"]
    assert admissibility(2.0, 2.0)["local"]


def test_report_checks_and_io(tmp_path):
    rep = ExperimentReport("demo", {"a": 1.0, "nan": math.nan})
    assert rep.check("x", 0.5, 1.0, "<=")
    assert not rep.check("y", 2.0, (0.0, 1.0), "in")
    rep.add_series("norm", [0.0, 1.0], [2.0, 1.5])
    assert not rep.passed
    j, c = write_report(rep, tmp_path, timestamp="T")
    payload = json.loads(open(j).read())
    assert payload["timestamp"] == "T" and payload["report"]["config_hash"] == config_hash(rep.config)
    assert read_series_csv(c) == {"norm": ([0.0, 1.0], [2.0, 1.5])}
    with pytest.raises(ValueError):
        rep.check("z", 1.0, 1.0, "~")


def test_gronwall_synthetic_cases():
    assert gronwall_synthetic().passed


def test_gronwall_validation():
    t = np.linspace(0, 1, 5)
    x = np.ones(5)
    with pytest.raises(ValueError):
        gronwall_check(t, -x, x, x, 1.0, 1.0)
    with pytest.raises(ValueError):
        gronwall_check(t[::-1], x, x, x, 1.0, 1.0)
    with pytest.raises(ValueError):
        gronwall_check(t, x[:3], x, x, 1.0, 1.0)


def test_gronwall_integral_premise_failure():
    t = np.linspace(0, 1, 11)
    X = 1e-3 * np.exp(t)  # grows with nothing on the right-hand side to pay for it
    v = gronwall_check(t, X, np.zeros_like(t), np.zeros_like(t), 1.0, 1.0)
    assert v.status == "hypothesis not met" and "integral" in v.detail


def test_minimal_gronwall_constant():
    t = np.linspace(0, 1, 101)
    X = 1e-3 * np.exp(0.5 * t)
    C = minimal_gronwall_constant(t, X, np.zeros_like(t), np.ones_like(t), 1.0)
    assert 0.4 < C < 0.6


def test_perturbation_has_requested_size():
    g = Grid(16)
    params = stability_defaults().params()
    du, db = perturbation(g, params, 5, 1e-3)
    from hallmhd.field_core import _curl_coeffs

    dv = du - params.eps * _curl_coeffs(db, g)
    total = sum(besov(SpectralField(g, c), 0.5) for c in (du, db, dv))
    assert total == pytest.approx(1e-3, rel=1e-12)


def test_zero_perturbation_gives_identical_runs():
    cfg = stability_defaults().replace(n=16, t_end=0.2, dt=0.05)
    run = stability_run(cfg, 0, eta=0.0)
    assert run.diff_functional == 0.0 and run.amplification == 0.0


def test_stability_small_config():
    cfg = stability_defaults().replace(n=16, t_end=0.5, dt=0.05, seeds=(1, 2))
    rep = run_stability(cfg)
    assert rep.passed, rep.summary()
    with pytest.raises(ValueError):
        run_stability(cfg.replace(nu=0.3))


def test_consistency_check_cases():
    cfg = ExperimentConfig(n=16, amplitude=0.5)
    g = cfg.grid()
    u, b, J = cfg.data(g)
    good = evolve(HallState(u, b, J, cfg.params()), cfg.integrator(t_end=0.2))
    assert consistency_check(good).passed
    bad = evolve(HallState(u, b, SpectralField.zeros(g), cfg.params()), cfg.integrator(t_end=0.1))
    rep = consistency_check(bad)
    assert not rep.passed and rep.status == "inconsistent initialization detected"
    z = SpectralField.zeros(g)
    assert consistency_check(evolve(HallState(u, z, z, cfg.params()), cfg.integrator(t_end=0.1))).passed


def test_global_bound_zero_and_heat():
    cfg = ExperimentConfig(n=16, dt=0.05, t_end=0.5, seeds=(1,))
    assert run_global_bound(cfg).passed
    heat = run_global_bound(cfg, nonlinear=False)
    assert heat.passed and any("heat-flow" in v.name for v in heat.verdicts)


def test_picard_study_small_grid():
    rep = picard_study(picard_defaults().replace(n=8))
    assert rep.scalars["picard_vs_evolve"] < 1e-8
    assert rep.scalars["threshold"] > 0


def test_pressure_and_commutator_studies():
    assert pressure_study().passed
    assert commutator_ratio_study(ExperimentConfig(), seeds=2, resolutions=(8, 16)).passed


def test_reports_are_deterministic(tmp_path):
    cfg = ExperimentConfig(n=16, dt=0.05, t_end=0.2, seeds=(1,))
    a = write_report(run_global_bound(cfg), tmp_path / "a", timestamp="fixed")[0]
    b = write_report(run_global_bound(cfg), tmp_path / "b", timestamp="fixed")[0]
    assert open(a, "rb").read() == open(b, "rb").read()
