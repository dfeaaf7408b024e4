"""Monte Carlo engine: Wilson bounds, determinism, scenario behavior."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfinv

from ctxcert.sampling import SamplerConfig
from ctxcert.typicality import (
    ScenarioError,
    ScenarioSpec,
    TrialOutcome,
    aggregate,
    calibrate_grid,
    estimate_typicality,
    largest_clean_threshold,
    minimal_preparations,
    run_trial,
    run_trials,
    wilson_lower_bound,
)

from conftest import pvm


class TestWilson:
    def test_all_successes_at_scale(self):
        assert wilson_lower_bound(10**6, 10**6, 0.99) >= 0.99999

    def test_zero_successes(self):
        assert wilson_lower_bound(0, 1000, 0.99) == pytest.approx(0.0, abs=1e-12)

    def test_against_independent_evaluation(self):
        # z from the inverse error function instead of the normal ppf
        z = math.sqrt(2.0) * erfinv(0.99)
        t_hat = 0.5
        n = 1000
        expected = (t_hat + z * z / (2 * n)
                    - z / (2 * n) * math.sqrt(4 * n * t_hat * (1 - t_hat) + z * z))
        expected /= 1 + z * z / n
        assert wilson_lower_bound(500, 1000, 0.99) == pytest.approx(expected, abs=1e-12)

    @given(st.integers(0, 999))
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_successes(self, successes):
        lo = wilson_lower_bound(successes, 1000)
        hi = wilson_lower_bound(successes + 1, 1000)
        assert hi >= lo - 1e-12

    def test_approaches_point_estimate(self):
        gaps = [0.5 - wilson_lower_bound(n // 2, n) for n in (10**2, 10**4, 10**6)]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 2e-3

    def test_bounds_ordering(self):
        for successes in (0, 3, 500, 997, 1000):
            lower = wilson_lower_bound(successes, 1000)
            assert 0.0 <= lower <= successes / 1000

    def test_input_validation(self):
        with pytest.raises(ValueError):
            wilson_lower_bound(1, 0)
        with pytest.raises(ValueError):
            wilson_lower_bound(5, 3)
        with pytest.raises(ValueError):
            wilson_lower_bound(1, 2, confidence=1.0)


class TestRunTrial:
    def test_lemma_scenario_classical(self):
        spec = ScenarioSpec(n=4, m=2, trials=10, base_seed=3)
        for i in range(10):
            outcome = run_trial(spec, i)
            assert outcome.ok and outcome.r <= 1e-7

    def test_trivial_scenario_zero(self):
        spec = ScenarioSpec(n=1, m=1, trials=1, base_seed=4)
        assert run_trial(spec, 0).r <= 1e-9

    def test_determinism_bit_identical(self):
        spec = ScenarioSpec(n=6, m=4, trials=1, base_seed=5)
        a = run_trial(spec, 7)
        b = run_trial(spec, 7)
        assert a.r == b.r

    def test_sampling_failure_marks_trial(self):
        sampler = SamplerConfig(dim=2, pure=False, purity_lower=0.9999999,
                                purity_upper=1.0, max_rejections=5)
        spec = ScenarioSpec(n=2, m=2, trials=1, state_sampler=sampler, base_seed=6)
        outcome = run_trial(spec, 0)
        assert not outcome.ok and outcome.status == "sampling_failed"


class TestEstimateTypicality:
    def test_worker_count_independence(self):
        spec = ScenarioSpec(n=5, m=3, trials=24, base_seed=9)
        serial = estimate_typicality(spec, workers=1)
        parallel = estimate_typicality(spec, workers=2)
        assert serial.contextual_count == parallel.contextual_count
        assert serial.mean_r == parallel.mean_r
        assert serial.std_r == parallel.std_r
        assert serial.wilson_lower == parallel.wilson_lower

    def test_counts_balance(self):
        spec = ScenarioSpec(n=5, m=2, trials=30, base_seed=10)
        report = estimate_typicality(spec)
        assert report.valid_trials + report.failed_trials == 30
        assert 0.0 <= report.wilson_lower <= report.typicality <= 1.0

    def test_jsonl_log(self, tmp_path):
        spec = ScenarioSpec(n=4, m=2, trials=5, base_seed=11)
        path = tmp_path / "trials.jsonl"
        estimate_typicality(spec, jsonl_path=path, jsonl_header={"type": "config"})
        lines = path.read_text().strip().split("\n")
        assert len(lines) == 6
        assert json.loads(lines[0])["type"] == "config"
        record = json.loads(lines[3])
        assert set(record) >= {"r", "status", "residual", "wall_time", "n", "m", "d", "seed"}
        assert record["n"] == 4 and record["seed"] == 11

    def test_threshold_monotonicity_on_fixed_data(self):
        spec = ScenarioSpec(n=6, m=4, trials=40, base_seed=12)
        outcomes = run_trials(spec)
        t_values = []
        for threshold in (1e-7, 1e-3, 1e-1):
            strict = ScenarioSpec(n=6, m=4, trials=40, base_seed=12, threshold=threshold)
            t_values.append(aggregate(strict, outcomes).typicality)
        assert t_values[0] >= t_values[1] >= t_values[2]

    def test_failure_rate_flags_report(self):
        good = [TrialOutcome(i, 0.1, "optimal", 0.0, 0.0) for i in range(90)]
        bad = [TrialOutcome(90 + i, float("nan"), "sampling_failed", 0.0, 0.0)
               for i in range(10)]
        spec = ScenarioSpec(n=5, m=2, trials=100, base_seed=1)
        report = aggregate(spec, good + bad)
        assert report.error is not None
        assert report.valid_trials == 90 and report.failed_trials == 10

    def test_all_failed_reports_error(self):
        bad = [TrialOutcome(i, float("nan"), "sampling_failed", 0.0, 0.0)
               for i in range(5)]
        spec = ScenarioSpec(n=5, m=2, trials=5, base_seed=1)
        report = aggregate(spec, bad)
        assert report.valid_trials == 0 and report.error is not None


class TestScenarioSpec:
    def test_fixed_grid_overrides_m(self):
        spec = ScenarioSpec(n=5, m=92, effect_mode="fixed_grid", trials=1)
        assert spec.m == 46

    def test_fixed_grid_requires_qubits(self):
        with pytest.raises(ScenarioError):
            ScenarioSpec(n=5, m=2, d=3, effect_mode="fixed_grid", trials=1)

    def test_fixed_list_sets_m(self):
        spec = ScenarioSpec(n=5, m=1, effect_mode="fixed_list",
                            fixed_effects=(pvm([0, 0, 1]), pvm([1, 0, 0])), trials=1)
        assert spec.m == 2

    def test_rejects_bad_parameters(self):
        with pytest.raises(ScenarioError):
            ScenarioSpec(n=0, m=2, trials=1)
        with pytest.raises(ScenarioError):
            ScenarioSpec(n=2, m=2, trials=1, threshold=0.0)
        with pytest.raises(ScenarioError):
            ScenarioSpec(n=2, m=2, trials=1, effect_mode="nope")


class TestMinimalPreparations:
    def test_rejects_single_measurement(self):
        spec = ScenarioSpec(n=4, m=1, trials=10, base_seed=13)
        with pytest.raises(ScenarioError):
            minimal_preparations(spec)

    def test_finds_small_n_for_loose_target(self):
        spec = ScenarioSpec(n=4, m=4, trials=60, base_seed=14)
        n = minimal_preparations(spec, target_t=0.2, n_start=4, n_max=8)
        assert 5 <= n <= 8

    def test_exhaustion_raises(self):
        spec = ScenarioSpec(n=4, m=2, trials=20, base_seed=15)
        with pytest.raises(ScenarioError):
            minimal_preparations(spec, target_t=0.999, n_start=4, n_max=5)

    # reference values for m=20 projective measurements: pure states need
    # n=6, purity >= 0.9 needs n=7, purity >= 0.7 needs n=9; desk-scale
    # trial counts widen each to a one-step band

    def test_pure_states_m20(self):
        spec = ScenarioSpec(n=4, m=20, trials=200, base_seed=77)
        assert minimal_preparations(spec, target_t=0.99, n_max=10) in (6, 7)

    def test_purity_above_09_m20(self):
        sampler = SamplerConfig(dim=2, pure=False, purity_lower=0.9, purity_upper=1.0)
        spec = ScenarioSpec(n=4, m=20, trials=200, base_seed=78, state_sampler=sampler)
        assert minimal_preparations(spec, target_t=0.99, n_max=12) in (6, 7, 8)

    def test_purity_above_07_m20(self):
        sampler = SamplerConfig(dim=2, pure=False, purity_lower=0.7, purity_upper=1.0)
        spec = ScenarioSpec(n=4, m=20, trials=200, base_seed=79, state_sampler=sampler)
        assert minimal_preparations(spec, target_t=0.99, n_max=14) in (8, 9, 10)


class TestCalibration:
    def test_grid_reports_clean_threshold(self):
        rows = calibrate_grid(thresholds=(1e-5, 1e-6, 1e-7, 1e-8),
                              trial_counts=(50, 100), pure=True, base_seed=16)
        assert {row["solver"] for row in rows} == {"ds", "ipm"}
        clean = largest_clean_threshold(rows)
        assert clean is not None and clean >= 1e-8
        for row in rows:
            if row["threshold"] == 1e-7:
                assert row["typicality"] == 0.0


class TestFig2aTrend:
    def test_typicality_grows_with_n_at_m4(self):
        reports = {}
        for n in (6, 10, 14):
            spec = ScenarioSpec(n=n, m=4, trials=300, base_seed=17)
            reports[n] = estimate_typicality(spec)

        def band(t, n_trials):
            return 3.0 * np.sqrt(max(t * (1 - t), 1e-6) / n_trials)

        t6, t10, t14 = (reports[n].typicality for n in (6, 10, 14))
        assert t6 <= t10 + band(t10, 300) + band(t6, 300)
        assert t10 <= t14 + band(t14, 300) + band(t10, 300)
