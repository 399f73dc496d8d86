from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from nexcp.errors import BoundViolation, DomainError
from nexcp.experiments import (
    BETA_END,
    BETA_MIDDLE,
    BETA_START,
    DEFAULT_METHODS,
    METHODS,
    SETTING2_BREAKS,
    ExperimentReport,
    SequentialConfig,
    SimulationSetting,
    beta_schedule,
    contamination_sampler,
    linear_gaussian_target,
    resolve_methods,
    rolling_mean,
    run_huber_experiment,
    run_sequential,
    run_trials,
    sequential_records,
    trial_data,
)
from nexcp.conformal import default_grid
from nexcp.models import TaggedDataset
from nexcp.streams import CONTAMINATION, substream
from nexcp.weights import decay_weights, unit_weights

SMALL = SequentialConfig(alpha=0.1, rho=0.99, burn_in=30, grid_size=50)


def true_model(X):
    return np.asarray(X) @ BETA_START


def test_setting_two_switches_after_each_break():
    beta = beta_schedule(SimulationSetting(2, n=2000))
    np.testing.assert_array_equal(beta[499], BETA_START)
    np.testing.assert_array_equal(beta[500], BETA_MIDDLE)
    np.testing.assert_array_equal(beta[1499], BETA_MIDDLE)
    np.testing.assert_array_equal(beta[1500], BETA_END)


def test_setting_three_interpolates_between_endpoints():
    beta = beta_schedule(SimulationSetting(3, n=5))
    np.testing.assert_allclose(beta[0], BETA_START)
    np.testing.assert_allclose(beta[4], BETA_END)
    np.testing.assert_allclose(beta[2], [1.0, 0.5, 1.0, 0.5])


def test_setting_one_is_constant():
    beta = beta_schedule(SimulationSetting(1, n=10))
    assert beta.shape == (10, 4)
    assert (beta == BETA_START).all()


def test_setting_rejects_unknown_id():
    with pytest.raises(DomainError):
        SimulationSetting(4)


def test_trial_data_is_reproducible_per_trial():
    setting = SimulationSetting(1, n=50)
    first = trial_data(setting, 11, 1)
    again = trial_data(setting, 11, 1)
    other = trial_data(setting, 11, 2)
    np.testing.assert_array_equal(first.X, again.X)
    np.testing.assert_array_equal(first.y, again.y)
    assert not np.array_equal(first.y, other.y)
    np.testing.assert_array_equal(first.tags, np.arange(1, 51))


def test_noiseless_setting_is_exactly_linear():
    data = trial_data(SimulationSetting(1, n=20, noise=0.0), 3, 1)
    np.testing.assert_allclose(data.y, data.X @ BETA_START)


def test_rolling_mean_examples():
    np.testing.assert_allclose(rolling_mean([0, 1, 0, 1], 2), [0.5, 0.5, 0.5])
    np.testing.assert_allclose(rolling_mean([3.0, 4.0], 1), [3.0, 4.0])
    assert rolling_mean(np.arange(10), 10).tolist() == [4.5]


@pytest.mark.parametrize("window", [0, 5])
def test_rolling_mean_rejects_bad_window(window):
    with pytest.raises(DomainError):
        rolling_mean([1.0, 2.0, 3.0, 4.0], window)


def test_report_from_records():
    records = pd.DataFrame(
        {
            "trial": [1] * 6,
            "time": [2, 2, 3, 3, 4, 4],
            "method": ["a", "b"] * 3,
            "covered": [1, 0, 0, 1, 1, 1],
            "width": [2.0, 1.0, 4.0, 1.0, 6.0, 1.0],
        }
    )
    report = ExperimentReport.from_records(records, window=2)
    assert report.summary["method"].tolist() == ["a", "b"]
    assert report.mean_coverage("a") == pytest.approx(2 / 3)
    assert report.mean_width("a") == pytest.approx(4.0)
    rolling_a = report.rolling[report.rolling["method"] == "a"]
    assert rolling_a["time"].tolist() == [3, 4]
    np.testing.assert_allclose(rolling_a["rolling_coverage"], [0.5, 0.5])
    np.testing.assert_allclose(rolling_a["rolling_width"], [3.0, 5.0])


def test_method_tagging():
    data = TaggedDataset.from_arrays(np.zeros((3, 1)), np.zeros(3))
    decayed = METHODS["nex-CP+WLS"].tag(data, 0.5)
    np.testing.assert_allclose(decayed.tags, [0.125, 0.25, 0.5])
    assert decayed.target_tag == 1.0
    timed = METHODS["nex-CP+drift"].tag(data, 0.5)
    np.testing.assert_allclose(timed.tags, [1, 2, 3])
    assert timed.target_tag == 4.0
    assert METHODS["CP+LS"].tag(data, 0.5) is data


def test_resolve_methods():
    assert [m.name for m in resolve_methods(DEFAULT_METHODS)] == list(DEFAULT_METHODS)
    with pytest.raises(DomainError):
        resolve_methods(["CP+LS", "nope"])
    with pytest.raises(DomainError):
        resolve_methods([])


@pytest.mark.parametrize(
    "kwargs", [{"alpha": 0.0}, {"alpha": 1.0}, {"rho": 0.0}, {"burn_in": 0}, {"grid_size": 1}]
)
def test_sequential_config_validation(kwargs):
    with pytest.raises(DomainError):
        SequentialConfig(**kwargs)


def test_sequential_records_shape():
    data = trial_data(SimulationSetting(2, n=40), 5, 1)
    frame = sequential_records(data, resolve_methods(DEFAULT_METHODS), SMALL, seed=5)
    assert len(frame) == 3 * (40 - 30)
    assert frame["time"].min() == 31 and frame["time"].max() == 40
    assert set(frame["covered"]) <= {0, 1}
    assert (frame["width"] > 0).all()


def test_sequential_records_rejects_long_burn_in():
    data = trial_data(SimulationSetting(1, n=30), 5, 1)
    with pytest.raises(DomainError):
        sequential_records(data, resolve_methods(["CP+LS"]), SMALL, seed=5)


def test_every_registered_method_runs():
    data = trial_data(SimulationSetting(3, n=36), 2, 1)
    frame = sequential_records(data, list(METHODS.values()), SMALL, seed=2)
    assert sorted(frame["method"].unique()) == sorted(METHODS)
    assert np.isfinite(frame["width"]).all()


def test_rho_one_matches_unweighted_method():
    config = SequentialConfig(alpha=0.1, rho=1.0, burn_in=30, grid_size=50)
    data = trial_data(SimulationSetting(1, n=45), 7, 1)
    frame = sequential_records(data, resolve_methods(["CP+LS", "nex-CP+LS"]), config, seed=7)
    plain = frame[frame["method"] == "CP+LS"].reset_index(drop=True)
    weighted = frame[frame["method"] == "nex-CP+LS"].reset_index(drop=True)
    np.testing.assert_array_equal(plain["covered"], weighted["covered"])
    np.testing.assert_allclose(plain["width"], weighted["width"], rtol=1e-9)


def test_fast_path_agrees_with_grid_on_coverage():
    data = trial_data(SimulationSetting(1, n=45), 9, 1)
    methods = resolve_methods(["nex-CP+LS"])
    grid = sequential_records(data, methods, SMALL, seed=9)
    exact = sequential_records(
        data, methods, SequentialConfig(alpha=0.1, rho=0.99, burn_in=30, fast=True), seed=9
    )
    np.testing.assert_array_equal(grid["covered"], exact["covered"])


def test_run_sequential_rolling_length():
    data = trial_data(SimulationSetting(1, n=50), 1, 1)
    report = run_sequential(data, resolve_methods(DEFAULT_METHODS), SMALL, seed=1, window=5)
    assert len(report.rolling) == 3 * (50 - 30 - 5 + 1)
    assert list(report.summary["method"]) == list(DEFAULT_METHODS)


def test_run_trials_is_deterministic_across_thread_counts():
    setting = SimulationSetting(2, n=40)
    methods = resolve_methods(DEFAULT_METHODS)
    serial = run_trials(setting, methods, SMALL, seed=4, trials=3, window=4, threads=1)
    again = run_trials(setting, methods, SMALL, seed=4, trials=3, window=4, threads=1)
    pooled = run_trials(setting, methods, SMALL, seed=4, trials=3, window=4, threads=4)
    pd.testing.assert_frame_equal(serial.records, again.records)
    pd.testing.assert_frame_equal(serial.records, pooled.records)
    pd.testing.assert_frame_equal(serial.rolling, pooled.rolling)
    assert serial.records["trial"].tolist() == sorted(serial.records["trial"])


def test_method_subset_does_not_change_other_methods():
    setting = SimulationSetting(1, n=40)
    both = run_trials(setting, resolve_methods(["CP+LS", "nex-CP+LS"]), SMALL, seed=8, trials=1, window=2)
    alone = run_trials(setting, resolve_methods(["nex-CP+LS"]), SMALL, seed=8, trials=1, window=2)
    subset = both.records[both.records["method"] == "nex-CP+LS"].reset_index(drop=True)
    pd.testing.assert_frame_equal(subset, alone.records)


def test_huber_without_contamination_matches_alpha():
    target = linear_gaussian_target()
    result = run_huber_experiment(
        target,
        contamination_sampler(target, "shift", true_model),
        0.0,
        99,
        0.1,
        unit_weights(99),
        2000,
        substream(0, CONTAMINATION),
        model=true_model,
    )
    assert result.bound == pytest.approx(0.1)
    assert abs(result.miscoverage - 0.1) < 4 * result.standard_error


@pytest.mark.parametrize("mode", ["shift", "collapse"])
def test_huber_contamination_stays_under_bound(mode):
    target = linear_gaussian_target()
    miscoverage, bound = run_huber_experiment(
        target,
        contamination_sampler(target, mode, true_model),
        0.1,
        99,
        0.1,
        unit_weights(99),
        2000,
        substream(1, CONTAMINATION, mode),
        model=true_model,
    )
    assert bound == pytest.approx(0.1 / 0.9)
    if mode == "shift":
        assert miscoverage < 0.1


def test_huber_jackknife_uses_doubled_bound():
    target = linear_gaussian_target()
    result = run_huber_experiment(
        target,
        contamination_sampler(target, "shift", true_model),
        0.0,
        30,
        0.1,
        unit_weights(30),
        200,
        substream(2, CONTAMINATION),
        method="jackknife",
    )
    assert result.bound == pytest.approx(0.2)
    assert result.trials == 200


def test_huber_check_raises_on_violation():
    target = linear_gaussian_target()

    def shifted(rng, size):
        X, y = target(rng, size)
        return X, y + 50.0

    def alternating(rng, size):
        # Test points (size 1) come from a shifted law.
        return target(rng, size) if size > 1 else shifted(rng, size)

    with pytest.raises(BoundViolation):
        run_huber_experiment(
            alternating,
            contamination_sampler(target, "shift", true_model),
            0.0,
            20,
            0.1,
            unit_weights(20),
            50,
            substream(3, CONTAMINATION),
            model=true_model,
        )


def test_huber_split_needs_model():
    target = linear_gaussian_target()
    with pytest.raises(DomainError):
        run_huber_experiment(target, target, 0.1, 5, 0.1, unit_weights(5), 1, substream(0, CONTAMINATION))


@pytest.mark.slow
def test_setting_one_coverage_near_target():
    setting = SimulationSetting(1, n=400)
    config = SequentialConfig(alpha=0.1, rho=0.99, burn_in=100, fast=True)
    report = run_trials(setting, resolve_methods(["CP+LS", "nex-CP+LS"]), config, seed=0, trials=3, window=10)
    for method in ("CP+LS", "nex-CP+LS"):
        assert 0.85 <= report.mean_coverage(method) <= 0.96


def test_setting_two_breaks_for_long_and_short_series():
    assert SimulationSetting(2, n=1800).breaks == SETTING2_BREAKS == (500, 1500)
    assert SimulationSetting(2, n=140).breaks == (35, 105)
    beta = beta_schedule(SimulationSetting(2, n=1800))
    np.testing.assert_array_equal(beta[1499], BETA_MIDDLE)
    np.testing.assert_array_equal(beta[1500], BETA_END)


def test_rolling_mean_constant_series():
    np.testing.assert_allclose(rolling_mean(np.full(12, 0.7), 4), np.full(9, 0.7))


def test_rolling_mean_matches_direct_sums(rng):
    for _ in range(50):
        size = int(rng.integers(1, 80))
        window = int(rng.integers(1, size + 1))
        series = rng.normal(size=size)
        expected = [sum(series[j : j + window]) / window for j in range(size - window + 1)]
        np.testing.assert_allclose(rolling_mean(series, window), expected, rtol=1e-12, atol=1e-12)


def test_default_grid_rejects_empty_responses():
    with pytest.raises(DomainError):
        default_grid(np.zeros(0))


@pytest.mark.parametrize("fast", [False, True])
def test_noiseless_exact_fit_is_always_covered(fast):
    data = TaggedDataset.from_arrays(np.zeros((60, 4)), np.zeros(60))
    config = SequentialConfig(alpha=0.1, rho=0.99, burn_in=30, grid_size=51, fast=fast)
    report = run_sequential(data, [METHODS["nex-CP+LS"]], config, seed=0, window=5)
    assert report.mean_coverage("nex-CP+LS") == 1.0
    if fast:
        assert (report.records["width"] == 0.0).all()
    else:
        spacing = 1.0 / 50
        assert (report.records["width"] <= spacing * (1 + 1e-9)).all()


def test_huber_five_percent_level_without_contamination():
    target = linear_gaussian_target()
    result = run_huber_experiment(
        target,
        contamination_sampler(target, "shift", true_model),
        0.0,
        100,
        0.05,
        unit_weights(100),
        5000,
        substream(4, CONTAMINATION),
        model=true_model,
    )
    assert result.bound == pytest.approx(0.05)
    assert abs(result.miscoverage - 0.05) <= 3 * result.standard_error


def test_huber_five_percent_level_with_shifted_contamination():
    target = linear_gaussian_target()
    result = run_huber_experiment(
        target,
        contamination_sampler(target, "shift", true_model, shift=100.0),
        0.1,
        100,
        0.05,
        unit_weights(100),
        5000,
        substream(5, CONTAMINATION),
        model=true_model,
    )
    assert result.bound == pytest.approx(0.0556, abs=1e-4)
    assert result.miscoverage <= result.bound + 3 * result.standard_error


@pytest.mark.slow
def test_split_coverage_sandwich_on_exchangeable_data():
    target = linear_gaussian_target()
    profile = decay_weights(100, 0.99)
    trials = 5000
    result = run_huber_experiment(
        target,
        target,
        0.0,
        100,
        0.1,
        profile,
        trials,
        substream(6, CONTAMINATION),
        model=true_model,
    )
    coverage = 1.0 - result.miscoverage
    se = np.sqrt(coverage * (1.0 - coverage) / trials)
    assert 0.9 - 3 * se <= coverage <= 0.9 + profile.test_weight + 3 * se


@pytest.mark.slow
def test_jackknife_coverage_lower_bound_on_exchangeable_data():
    target = linear_gaussian_target()
    trials = 400
    result = run_huber_experiment(
        target,
        target,
        0.0,
        40,
        0.1,
        decay_weights(40, 0.99),
        trials,
        substream(7, CONTAMINATION),
        method="jackknife",
    )
    coverage = 1.0 - result.miscoverage
    se = np.sqrt(coverage * (1.0 - coverage) / trials)
    assert coverage >= 0.8 - 3 * se


# Setting 2 (changepoints): coverage and width per method, averaged over time and trials.
CHANGEPOINT_TABLE = {
    "CP+LS": (0.835, 5.990),
    "nex-CP+LS": (0.884, 6.825),
    "nex-CP+WLS": (0.906, 4.125),
}


@pytest.mark.slow
def test_changepoint_setting_matches_published_averages():
    config = SequentialConfig(alpha=0.1, rho=0.99, burn_in=100, grid_size=1000)
    report = run_trials(
        SimulationSetting(2, n=2000),
        resolve_methods(DEFAULT_METHODS),
        config,
        seed=0,
        trials=5,
        window=10,
        threads=5,
    )
    for method, (coverage, width) in CHANGEPOINT_TABLE.items():
        assert report.mean_coverage(method) == pytest.approx(coverage, abs=0.025)
        assert report.mean_width(method) == pytest.approx(width, rel=0.10)
