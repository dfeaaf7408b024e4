"""Parity-oblivious multiplexing: encodings, bounds, and case studies.

Three bits ride on one qubit; contextuality powers the advantage over the
best classical strategy, and the robustness r converts directly into the
achievable success rate.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .lp import DEFAULT_THRESHOLD, certify_operators
from .sampling import (
    RngStream,
    SamplerConfig,
    haar_unitary,
    rotate_effects,
    sample_dichotomic_povm,
)
from .typicality import TrialOutcome, wilson_lower_bound

POM_CASES = ("optimal", "random_projective", "random_povm", "rf_misalignment")

_PAULIS = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def pom_noncontextual_rate(k: int) -> float:
    """Best classical success rate for k-bit parity-oblivious multiplexing."""
    if k < 1:
        raise ValueError("need at least one bit")
    return 0.5 * (1.0 + 1.0 / k)


def success_from_robustness(r: float, s_nc: float) -> float:
    """Success rate implied by robustness r: s = (r/2 - s_NC) / (r - 1)."""
    if not 0.0 <= r < 1.0:
        raise ValueError(f"robustness {r} outside [0, 1)")
    return (0.5 * r - s_nc) / (r - 1.0)


def pom_optimal_states(variant: str = "printed") -> list[np.ndarray]:
    """The eight 3-bit encodings, indexed by (x1, x2, x3) in binary order.

    ``printed`` builds the matrices with off-diagonal weight sqrt(3/2)/2
    and z-component 1/2 (Bloch components (+-sqrt(6)/4, +-sqrt(6)/4,
    +-1/2)); ``symmetric`` places the cube corners at +-1/sqrt(3) in every
    Bloch component. Both are pure and parity-oblivious; they are not the
    same cube, and only the symmetric one is regular.
    """
    if variant not in ("printed", "symmetric"):
        raise ValueError(f"unknown POM state variant {variant!r}")
    states = []
    for x1 in (0, 1):
        for x2 in (0, 1):
            for x3 in (0, 1):
                s1, s2, s3 = (-1.0) ** x1, (-1.0) ** x2, (-1.0) ** x3
                if variant == "printed":
                    off = math.sqrt(1.5) * (s1 - 1j * s2) / 2.0
                    states.append(0.5 * np.array(
                        [[1.0 + s3 / 2.0, off], [np.conj(off), 1.0 - s3 / 2.0]]
                    ))
                else:
                    bloch = np.array([s1, s2, s3]) / math.sqrt(3.0)
                    rho = 0.5 * np.eye(2, dtype=complex)
                    for comp, pauli in zip(bloch, _PAULIS):
                        rho = rho + 0.5 * comp * pauli
                    states.append(rho)
    return states


def optimal_measurements() -> list[tuple[np.ndarray, np.ndarray]]:
    """The X, Y, Z projective measurements (one per encoded bit)."""
    eye = np.eye(2, dtype=complex)
    return [((eye + p) / 2.0, (eye - p) / 2.0) for p in _PAULIS]


@dataclass(frozen=True)
class PomTaskSpec:
    """A 3-bit POM case study: fixed encodings, varied measurements."""

    case: str = "optimal"
    trials: int = 1000
    threshold: float = DEFAULT_THRESHOLD
    base_seed: int = 0
    k: int = 3
    state_variant: str = "symmetric"

    def __post_init__(self):
        if self.case not in POM_CASES:
            raise ValueError(f"unknown POM case {self.case!r}")
        if self.k != 3:
            raise ValueError("only the 3-bit encoding table is built in")
        if self.trials < 1:
            raise ValueError("need at least one trial")


@dataclass
class PomReport:
    """Aggregate POM statistics over valid trials."""

    typicality: float
    wilson_lower: float
    mean_r: float
    std_r: float
    mean_s: float
    std_s: float
    mean_advantage: float
    valid_trials: int
    failed_trials: int
    s_nc: float
    wall_time: float
    residual_max: float = 0.0
    error: str | None = None


def _case_measurements(spec: PomTaskSpec, gen) -> list:
    if spec.case == "optimal":
        return optimal_measurements()
    if spec.case == "random_projective":
        cfg = SamplerConfig(dim=2, pure=True)
        return [sample_dichotomic_povm(cfg, gen) for _ in range(3)]
    if spec.case == "random_povm":
        cfg = SamplerConfig(dim=2, pure=False)
        return [sample_dichotomic_povm(cfg, gen) for _ in range(3)]
    u = haar_unitary(2, gen)  # one shared frame misalignment per trial
    return [tuple(rotate_effects(meas, u)) for meas in optimal_measurements()]


def pom_case_trial(spec: PomTaskSpec, trial_index: int) -> tuple[float, float]:
    """Robustness and implied success rate for one sampled measurement set."""
    outcome = _pom_outcome(spec, trial_index)
    if not outcome.ok:
        return float("nan"), float("nan")
    return outcome.r, success_from_robustness(outcome.r, pom_noncontextual_rate(spec.k))


def _pom_outcome(spec: PomTaskSpec, trial_index: int) -> TrialOutcome:
    t0 = time.perf_counter()
    gen = RngStream(spec.base_seed, trial_index).generator()
    states = pom_optimal_states(spec.state_variant)
    result = certify_operators(states, _case_measurements(spec, gen))
    return TrialOutcome(trial_index, result.r, result.solver_status, result.residual,
                        time.perf_counter() - t0)


def pom_report(spec: PomTaskSpec, workers: int = 1, confidence: float = 0.99) -> PomReport:
    """All N trials of one case folded into the paper-table statistics."""
    t0 = time.perf_counter()
    if workers <= 1:
        outcomes = [_pom_outcome(spec, i) for i in range(spec.trials)]
    else:
        outcomes = [None] * spec.trials
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for out in pool.map(_pom_outcome, [spec] * spec.trials,
                                range(spec.trials), chunksize=32):
                outcomes[out.trial] = out
    s_nc = pom_noncontextual_rate(spec.k)
    valid = [o for o in outcomes if o.ok]
    rs = np.array([o.r for o in valid])
    failed = spec.trials - rs.size
    wall = time.perf_counter() - t0
    if rs.size == 0:
        return PomReport(*(float("nan"),) * 7, 0, failed, s_nc, wall,
                         error="all trials failed numerically")
    ss = np.array([success_from_robustness(r, s_nc) for r in rs])
    contextual = int(np.sum(rs > spec.threshold))
    report = PomReport(
        typicality=contextual / rs.size,
        wilson_lower=wilson_lower_bound(contextual, rs.size, confidence),
        mean_r=float(rs.mean()),
        std_r=float(rs.std()),
        mean_s=float(ss.mean()),
        std_s=float(ss.std()),
        mean_advantage=float(ss.mean() / s_nc - 1.0),
        valid_trials=int(rs.size),
        failed_trials=failed,
        s_nc=s_nc,
        wall_time=wall,
        residual_max=float(max(o.residual for o in valid)),
    )
    if failed > 0.01 * spec.trials:
        report.error = f"{failed}/{spec.trials} trials failed numerically"
    return report
