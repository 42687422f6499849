import numpy as np
import pytest

from lyapsync.experiments import (ExperimentPlan, default_comparison_suite,
                                  run_bound_comparison, run_concentration,
                                  run_pullback, run_sync,
                                  sample_initial_fields)
from lyapsync.field import sup_norm
from lyapsync.integrator import SimConfig
from lyapsync.potentials import make_potential


def _plan(potential, seeds=(0,), **overrides):
    cfg_kwargs = dict(kappa=1.0, epsilon=0.0, grid_size=32, dt=1e-4,
                      t_final=5.0, seed=seeds[0], snapshot_stride=100)
    plan_kwargs = dict(k_points=3, radius=1.0, pullback_starts=(0.0, 1.0, 2.0),
                       delta=0.25, renorm_every=50)
    for key, value in overrides.items():
        if key in ("kappa", "epsilon", "grid_size", "dt", "t_final", "rescaled",
                   "snapshot_stride"):
            cfg_kwargs[key] = value
        else:
            plan_kwargs[key] = value
    cfg = SimConfig(potential, **cfg_kwargs)
    return ExperimentPlan("test", cfg, seeds=seeds, **plan_kwargs)


def test_sampler_respects_sup_norm_radius():
    sombrero = make_potential("sombrero", n=3)
    rng = np.random.default_rng(0)
    fields = sample_initial_fields(sombrero, 64, 10, 2.0, rng)
    assert len(fields) == 10
    for field in fields:
        assert sup_norm(field) <= 2.0 + 1e-12
    # distinct draws
    assert not np.allclose(fields[0].values, fields[1].values)


def test_sweep_budget_enforced():
    quadratic = make_potential("quadratic_well", n=1, a=1.0)
    cfg = SimConfig(quadratic, kappa=1.0, epsilon=0.1, grid_size=32, dt=1e-3,
                    t_final=1.0)
    with pytest.raises(ValueError):
        ExperimentPlan("too_big", cfg, kappas=tuple(range(1, 101)),
                       epsilons=tuple(np.linspace(0.01, 1, 101)),
                       seeds=tuple(range(2)), budget=10_000)


def test_sync_linear_contraction_rate():
    quadratic = make_potential("quadratic_well", n=1, a=1.0)
    plan = _plan(quadratic, with_matched_lyapunov=False)
    report = run_sync(plan)[0]
    assert not report.floored
    assert report.fitted_rate == pytest.approx(-1.0, abs=1e-3)
    assert report.final_diameter < report.initial_diameter
    assert report.fit_residual < 1e-6


def test_sync_report_carries_matched_exponent():
    quadratic = make_potential("quadratic_well", n=1, a=1.0)
    plan = _plan(quadratic, epsilon=0.1, dt=1e-3, t_final=20.0,
                 with_matched_lyapunov=True, renorm_every=20)
    report = run_sync(plan)[0]
    assert report.lambda_top == pytest.approx(-1.0, abs=max(3 * report.lambda_stderr, 2e-2))


def test_sync_requires_two_points():
    quadratic = make_potential("quadratic_well", n=1, a=1.0)
    plan = _plan(quadratic, k_points=1)
    with pytest.raises(ValueError):
        run_sync(plan)


def test_sync_shared_noise_contracts_sombrero():
    sombrero = make_potential("sombrero", n=3)
    plan = _plan(sombrero, kappa=8.0, epsilon=0.05, dt=2e-3, t_final=20.0,
                 rescaled=True, k_points=4, radius=2.0,
                 with_matched_lyapunov=False)
    report = run_sync(plan)[0]
    assert report.final_diameter < 0.5 * report.initial_diameter


def test_sync_large_noise_reports_without_asserting_contraction():
    sombrero = make_potential("sombrero", n=2)
    plan = _plan(sombrero, epsilon=0.5, dt=1e-3, t_final=2.0,
                 with_matched_lyapunov=False)
    report = run_sync(plan)[0]
    assert np.isfinite(report.fitted_rate)
    assert report.diameters.shape == report.times.shape


def test_pullback_zero_start_returns_initial_diameter():
    quadratic = make_potential("quadratic_well", n=1, a=1.0)
    plan = _plan(quadratic, pullback_starts=(0.0, 1.0, 2.0),
                 with_matched_lyapunov=False)
    report = run_pullback(plan)[0]
    assert report.start_times[0] == 0.0
    sync = run_sync(plan)[0]
    assert report.diameters_at_zero[0] == pytest.approx(sync.initial_diameter,
                                                        rel=1e-12)


def test_pullback_linear_decay_matches_exponential():
    # constant offsets so the whole diameter sits in the flat mode
    from lyapsync.field import Field
    quadratic = make_potential("quadratic_well", n=1, a=1.0)
    offsets = [Field.constant([0.0], 32), Field.constant([0.25], 32),
               Field.constant([0.5], 32)]
    plan = _plan(quadratic, pullback_starts=(0.0, 1.0, 2.0),
                 with_matched_lyapunov=False, initial_fields=offsets)
    report = run_pullback(plan)[0]
    d0 = report.diameters_at_zero[0]
    assert d0 == pytest.approx(0.5, abs=1e-13)
    for start, diameter in zip(report.start_times, report.diameters_at_zero):
        assert diameter == pytest.approx(d0 * np.exp(-start), rel=5e-3)
    assert report.monotone


def test_concentration_at_minimum_with_no_noise():
    well = make_potential("double_well")
    plan = _plan(well, t_final=2.0, dt=1e-3)
    row = run_concentration(plan)[0]
    assert row.fraction == 1.0
    assert row.occupations[0] == 1.0


def test_concentration_monotone_in_epsilon_short_run():
    well = make_potential("double_well")
    cfg = SimConfig(well, kappa=1.0, epsilon=0.1, grid_size=32, dt=1e-3,
                    t_final=60.0, seed=0, snapshot_stride=20)
    plan = ExperimentPlan("eps_sweep", cfg, epsilons=(0.2, 0.05), seeds=(0,),
                          delta=0.3)
    rows = run_concentration(plan)
    assert rows[0].epsilon == 0.2 and rows[1].epsilon == 0.05
    assert rows[1].fraction > rows[0].fraction


def test_bound_comparison_rows_quadratic():
    quadratic = make_potential("quadratic_well", n=1, a=1.0)
    plan = _plan(quadratic, epsilon=0.1, dt=1e-3, t_final=30.0, renorm_every=25)
    row = run_bound_comparison(plan)[0]
    assert row.analytic_bound == pytest.approx(-1.0, abs=1e-12)
    assert row.lambda_top == pytest.approx(-1.0, abs=max(3 * row.stderr, 5e-3))
    assert row.ordering_ok
    assert row.clock == "physical"


def test_default_suite_structure():
    plans = default_comparison_suite()
    assert [plan.cfg.potential.name for plan in plans] == [
        "quadratic_well", "double_well", "sombrero"]
    assert plans[2].cfg.rescaled


def test_rerun_reproduces_every_number():
    sombrero = make_potential("sombrero", n=2)
    plan = _plan(sombrero, epsilon=0.1, dt=1e-3, t_final=2.0,
                 with_matched_lyapunov=False)
    first = run_sync(plan)[0]
    second = run_sync(plan)[0]
    assert np.array_equal(first.diameters, second.diameters)
    assert first.fitted_rate == second.fitted_rate


def test_workers_do_not_change_results():
    sombrero = make_potential("sombrero", n=2)
    base_cfg = SimConfig(sombrero, kappa=2.0, epsilon=0.1, grid_size=32,
                         dt=1e-3, t_final=1.0, seed=0, snapshot_stride=100)
    serial = ExperimentPlan("w1", base_cfg, seeds=(0, 1), k_points=3,
                            radius=1.0, with_matched_lyapunov=False, workers=1)
    parallel = ExperimentPlan("w2", base_cfg, seeds=(0, 1), k_points=3,
                              radius=1.0, with_matched_lyapunov=False, workers=2)
    serial_reports = run_sync(serial)
    parallel_reports = run_sync(parallel)
    for a, b in zip(serial_reports, parallel_reports):
        assert np.array_equal(a.diameters, b.diameters)
