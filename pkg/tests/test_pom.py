"""Parity-oblivious multiplexing: encodings, formulas, case trials."""

import numpy as np
import pytest

from ctxcert.lp import certify_operators
from ctxcert.pom import (
    PomTaskSpec,
    optimal_measurements,
    pom_case_trial,
    pom_noncontextual_rate,
    pom_optimal_states,
    pom_report,
    success_from_robustness,
)
from ctxcert.quantum import purity
from ctxcert.sampling import RngStream, haar_unitary

from conftest import I2

S_NC3 = pom_noncontextual_rate(3)


class TestOptimalStates:
    @pytest.mark.parametrize("variant", ["printed", "symmetric"])
    def test_eight_pure_unit_trace_states(self, variant):
        states = pom_optimal_states(variant)
        assert len(states) == 8
        for rho in states:
            assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
            assert purity(rho) == pytest.approx(1.0, abs=1e-10)

    def test_printed_first_corner_diagonal(self):
        rho = pom_optimal_states("printed")[0]
        assert rho[0, 0].real == pytest.approx(0.75, abs=1e-12)
        assert rho[1, 1].real == pytest.approx(0.25, abs=1e-12)

    @pytest.mark.parametrize("variant", ["printed", "symmetric"])
    def test_uniform_mixture_is_maximally_mixed(self, variant):
        states = pom_optimal_states(variant)
        assert np.allclose(sum(states) / 8, I2 / 2, atol=1e-12)

    @pytest.mark.parametrize("variant", ["printed", "symmetric"])
    def test_parity_obliviousness(self, variant):
        states = pom_optimal_states(variant)
        bits = [(x1, x2, x3) for x1 in (0, 1) for x2 in (0, 1) for x3 in (0, 1)]
        # all pair parities and the full parity hide the ensemble identity
        for subset in ((0, 1), (0, 2), (1, 2), (0, 1, 2)):
            for value in (0, 1):
                members = [states[i] for i, b in enumerate(bits)
                           if sum(b[j] for j in subset) % 2 == value]
                assert len(members) == 4
                assert np.allclose(sum(members) / 4, I2 / 2, atol=1e-10)

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError):
            pom_optimal_states("cubical")


class TestRates:
    def test_noncontextual_rate_values(self):
        assert pom_noncontextual_rate(3) == pytest.approx(2 / 3, abs=1e-12)
        assert pom_noncontextual_rate(1) == pytest.approx(1.0, abs=1e-12)
        assert pom_noncontextual_rate(2) == pytest.approx(0.75, abs=1e-12)

    def test_success_at_zero_robustness(self):
        assert success_from_robustness(0.0, S_NC3) == pytest.approx(S_NC3, abs=1e-12)

    def test_success_at_optimal_robustness(self):
        s_q = 0.5 * (1 + 1 / np.sqrt(3))
        r = (s_q - S_NC3) / (s_q - 0.5)
        assert success_from_robustness(r, S_NC3) == pytest.approx(0.7887, abs=2e-4)

    def test_success_for_two_bit_square(self):
        assert success_from_robustness(1 - 1 / np.sqrt(2), 0.75) == pytest.approx(
            0.5 * (1 + 1 / np.sqrt(2)), abs=1e-9)

    def test_pole_rejected(self):
        with pytest.raises(ValueError):
            success_from_robustness(1.0, S_NC3)

    def test_strictly_increasing_in_r(self):
        grid = np.linspace(0.0, 0.99, 150)
        values = [success_from_robustness(r, S_NC3) for r in grid]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_contextual_iff_advantage(self):
        for r in (0.0, 1e-9, 0.01, 0.3, 0.9):
            s = success_from_robustness(r, S_NC3)
            assert (r > 0) == (s > S_NC3 + 1e-15)


class TestCaseTrials:
    def test_optimal_case_golden(self):
        spec = PomTaskSpec(case="optimal", trials=1)
        r, s = pom_case_trial(spec, 0)
        assert r == pytest.approx(0.42264973, abs=5e-4)
        assert s == pytest.approx(0.78867513, abs=5e-4)

    def test_rf_case_unitary_covariance(self):
        # conjugating states and effects by one more global unitary is inert
        spec = PomTaskSpec(case="rf_misalignment", trials=1, base_seed=21)
        r, _ = pom_case_trial(spec, 3)
        gen = RngStream(21, 3).generator()
        u_trial = haar_unitary(2, gen)
        extra = haar_unitary(2, RngStream(400))
        states = [extra @ s @ extra.conj().T for s in pom_optimal_states("symmetric")]
        meas = []
        for e0, e1 in optimal_measurements():
            c0 = extra @ u_trial @ e0 @ u_trial.conj().T @ extra.conj().T
            c1 = extra @ u_trial @ e1 @ u_trial.conj().T @ extra.conj().T
            meas.append((c0, c1))
        res = certify_operators(states, meas)
        assert res.r == pytest.approx(r, abs=1e-6)

    def test_random_cases_bounded_by_optimal(self):
        for case in ("random_projective", "random_povm"):
            spec = PomTaskSpec(case=case, trials=1, base_seed=22)
            for i in range(25):
                r, s = pom_case_trial(spec, i)
                assert 0.0 <= r <= 0.42264973 + 1e-3
                assert s >= S_NC3 - 1e-12

    def test_trial_determinism(self):
        spec = PomTaskSpec(case="random_povm", trials=1, base_seed=23)
        assert pom_case_trial(spec, 5) == pom_case_trial(spec, 5)


class TestReport:
    def test_aggregates_consistently(self):
        spec = PomTaskSpec(case="random_projective", trials=60, base_seed=24)
        report = pom_report(spec)
        assert report.valid_trials + report.failed_trials == 60
        assert report.mean_advantage == pytest.approx(report.mean_s / S_NC3 - 1,
                                                      abs=1e-12)
        assert (report.mean_s >= S_NC3) == (report.mean_advantage >= 0)
        assert 0.0 <= report.typicality <= 1.0

    def test_optimal_report_deterministic(self):
        report = pom_report(PomTaskSpec(case="optimal", trials=2))
        assert report.typicality == 1.0
        assert report.std_r == pytest.approx(0.0, abs=1e-12)

    def test_invalid_case_rejected(self):
        with pytest.raises(ValueError):
            PomTaskSpec(case="nonsense", trials=1)
        with pytest.raises(ValueError):
            PomTaskSpec(case="optimal", trials=1, k=2)
