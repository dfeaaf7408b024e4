"""Monte Carlo estimation of how typical contextuality is.

Each trial samples a fresh scenario from its own counted random stream,
runs the certification pipeline, and classifies the result; reports carry
Wilson score lower bounds so finite trial counts yield defensible claims.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import stats

from .lp import DEFAULT_THRESHOLD, certify_operators
from .sampling import (
    RngStream,
    SamplerConfig,
    SamplingError,
    fixed_projective_grid,
    sample_dichotomic_povm,
    sample_state,
)

EFFECT_MODES = ("random_projective", "random_povm", "fixed_grid", "fixed_list")

# A failure rate above this invalidates a typicality claim outright.
MAX_FAILURE_RATE = 0.01


class ScenarioError(ValueError):
    """Scenario parameters outside the supported space."""


@lru_cache(maxsize=1)
def _grid_measurements() -> tuple:
    measurements, _ = fixed_projective_grid()
    return tuple(measurements)


@dataclass(frozen=True)
class ScenarioSpec:
    """One Monte Carlo scenario (n, m, d; N) plus sampling choices.

    For the fixed effect modes, m is overridden by the actual measurement
    count (46 for the grid after projector dedup), so reports stay honest.
    """

    n: int
    m: int = 1
    d: int = 2
    trials: int = 1000
    state_sampler: SamplerConfig = field(default=None)  # type: ignore[assignment]
    effect_mode: str = "random_projective"
    effect_sampler: SamplerConfig = field(default=None)  # type: ignore[assignment]
    fixed_effects: tuple = ()
    threshold: float = DEFAULT_THRESHOLD
    base_seed: int = 0

    def __post_init__(self):
        if self.effect_mode not in EFFECT_MODES:
            raise ScenarioError(f"unknown effect mode {self.effect_mode!r}")
        if self.effect_mode == "fixed_grid":
            if self.d != 2:
                raise ScenarioError("the fixed projective grid is a qubit construction")
            object.__setattr__(self, "m", len(_grid_measurements()))
        elif self.effect_mode == "fixed_list":
            if not self.fixed_effects:
                raise ScenarioError("fixed_list mode needs a measurement list")
            object.__setattr__(self, "fixed_effects", tuple(self.fixed_effects))
            object.__setattr__(self, "m", len(self.fixed_effects))
        if self.n < 1 or self.m < 1 or self.d < 2 or self.trials < 1:
            raise ScenarioError("need n >= 1, m >= 1, d >= 2, trials >= 1")
        if self.threshold <= 0:
            raise ScenarioError("threshold must be positive")
        if self.state_sampler is None:
            object.__setattr__(self, "state_sampler", SamplerConfig(dim=self.d, pure=True))
        if self.effect_sampler is None:
            pure = self.effect_mode == "random_projective"
            object.__setattr__(self, "effect_sampler", SamplerConfig(dim=self.d, pure=pure))
        if self.state_sampler.dim != self.d or self.effect_sampler.dim != self.d:
            raise ScenarioError("sampler dimensions disagree with the scenario dimension")


@dataclass
class TrialOutcome:
    """One pipeline run: robustness, solver status, and diagnostics."""

    trial: int
    r: float
    status: str
    residual: float
    wall_time: float

    @property
    def ok(self) -> bool:
        return not math.isnan(self.r)


@dataclass
class TypicalityReport:
    """Aggregate of one scenario's trials."""

    contextual_count: int
    valid_trials: int
    failed_trials: int
    typicality: float
    wilson_lower: float
    confidence: float
    mean_r: float
    std_r: float
    wall_time: float
    residual_max: float = 0.0
    error: str | None = None

    @property
    def trials(self) -> int:
        return self.valid_trials + self.failed_trials


def wilson_lower_bound(successes: int, trials: int, confidence: float = 0.99) -> float:
    """Lower end of the Wilson score interval for a binomial proportion.

    Uses the two-sided standard-normal quantile, so at 99% confidence
    z is about 2.5758.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must be in (0, 1)")
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    t_hat = successes / trials
    centre = t_hat + z * z / (2.0 * trials)
    spread = z / (2.0 * trials) * math.sqrt(4.0 * trials * t_hat * (1.0 - t_hat) + z * z)
    return max(0.0, (centre - spread) / (1.0 + z * z / trials))


def _sample_measurements(spec: ScenarioSpec, gen) -> list:
    if spec.effect_mode == "fixed_grid":
        return list(_grid_measurements())
    if spec.effect_mode == "fixed_list":
        return list(spec.fixed_effects)
    return [sample_dichotomic_povm(spec.effect_sampler, gen) for _ in range(spec.m)]


def run_trial(spec: ScenarioSpec, trial_index: int) -> TrialOutcome:
    """Sample one scenario from stream (base_seed, trial_index) and certify it.

    States are drawn first, then measurements, from the same stream, so a
    trial is a pure function of (spec, trial_index).
    """
    t0 = time.perf_counter()
    gen = RngStream(spec.base_seed, trial_index).generator()
    try:
        states = [sample_state(spec.state_sampler, gen) for _ in range(spec.n)]
        measurements = _sample_measurements(spec, gen)
        result = certify_operators(states, measurements)
    except SamplingError:
        return TrialOutcome(trial_index, float("nan"), "sampling_failed",
                            float("inf"), time.perf_counter() - t0)
    return TrialOutcome(trial_index, result.r, result.solver_status,
                        result.residual, time.perf_counter() - t0)


def _trial_batch(spec: ScenarioSpec, indices: tuple) -> list[TrialOutcome]:
    return [run_trial(spec, i) for i in indices]


def _chunks(n: int, workers: int):
    size = max(1, math.ceil(n / (workers * 4)))
    return [tuple(range(lo, min(lo + size, n))) for lo in range(0, n, size)]


def run_trials(spec: ScenarioSpec, workers: int = 1) -> list[TrialOutcome]:
    """All trial outcomes in trial order, identical for any worker count."""
    if workers <= 1:
        return [run_trial(spec, i) for i in range(spec.trials)]
    chunks = _chunks(spec.trials, workers)
    outcomes: list[TrialOutcome | None] = [None] * spec.trials
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for batch in pool.map(_trial_batch, [spec] * len(chunks), chunks):
            for out in batch:
                outcomes[out.trial] = out
    return outcomes  # type: ignore[return-value]


def aggregate(spec: ScenarioSpec, outcomes: list[TrialOutcome],
              confidence: float = 0.99, wall_time: float = 0.0) -> TypicalityReport:
    """Fold trial outcomes into a report (valid-trials denominator)."""
    valid = [o for o in outcomes if o.ok]
    failed = len(outcomes) - len(valid)
    if not valid:
        return TypicalityReport(0, 0, failed, float("nan"), float("nan"), confidence,
                                float("nan"), float("nan"), wall_time,
                                error="all trials failed numerically")
    rs = np.array([o.r for o in valid])
    contextual = int(np.sum(rs > spec.threshold))
    report = TypicalityReport(
        contextual_count=contextual,
        valid_trials=len(valid),
        failed_trials=failed,
        typicality=contextual / len(valid),
        wilson_lower=wilson_lower_bound(contextual, len(valid), confidence),
        confidence=confidence,
        mean_r=float(rs.mean()),
        std_r=float(rs.std()),
        wall_time=wall_time,
        residual_max=float(max(o.residual for o in valid)),
    )
    if failed / len(outcomes) > MAX_FAILURE_RATE:
        report.error = (
            f"{failed}/{len(outcomes)} trials failed numerically; "
            "typicality is unreliable above a 1% failure rate"
        )
    return report


def estimate_typicality(spec: ScenarioSpec, workers: int = 1,
                        confidence: float = 0.99, jsonl_path=None,
                        jsonl_header: dict | None = None) -> TypicalityReport:
    """Run all N trials of a scenario and aggregate them.

    ``jsonl_path`` writes one diagnostic record per trial, in trial order,
    after an optional header record (used to embed the run configuration).
    """
    t0 = time.perf_counter()
    outcomes = run_trials(spec, workers=workers)
    report = aggregate(spec, outcomes, confidence, time.perf_counter() - t0)
    if jsonl_path is not None:
        with open(jsonl_path, "w") as fh:
            if jsonl_header is not None:
                fh.write(json.dumps(jsonl_header, sort_keys=True) + "\n")
            for o in outcomes:
                fh.write(json.dumps({
                    "trial": o.trial, "r": o.r, "status": o.status,
                    "residual": o.residual, "wall_time": o.wall_time,
                    "n": spec.n, "m": spec.m, "d": spec.d, "seed": spec.base_seed,
                }) + "\n")
    return report


def minimal_preparations(spec: ScenarioSpec, target_t: float = 0.99,
                         n_start: int = 4, n_max: int = 25,
                         workers: int = 1) -> int:
    """Smallest n in [n_start, n_max] whose typicality exceeds target_t.

    The n field of ``spec`` is ignored. Scenarios with a single
    measurement are rejected: they are always simplex-embeddable, so the
    search would never terminate.
    """
    if spec.m < 2:
        raise ScenarioError(
            "m = 1 can never exhibit contextuality; the search would not terminate"
        )
    for n in range(n_start, n_max + 1):
        report = estimate_typicality(replace(spec, n=n), workers=workers)
        if report.error is None and report.typicality > target_t:
            return n
    raise ScenarioError(
        f"no n <= {n_max} reached typicality > {target_t}; raise n_max or loosen the target"
    )


def calibrate_grid(thresholds=(1e-5, 1e-6, 1e-7, 1e-8, 1e-9),
                   trial_counts=(100, 1000, 10000), d: int = 2,
                   pure: bool = True, base_seed: int = 0, workers: int = 1,
                   solvers=("ds", "ipm")) -> list[dict]:
    """Threshold calibration on the (n=4, m=2) sanity scenario.

    Every (solver, N) cell reuses the prefix of one shared run of
    max(trial_counts) trials, then reads off typicality at each candidate
    threshold. Rows report the per-cell runtime; the headline number is
    the largest threshold at which typicality is exactly zero.
    """
    n_total = max(trial_counts)
    rows = []
    for solver in solvers:
        spec = ScenarioSpec(
            n=4, m=2, d=d, trials=n_total,
            state_sampler=SamplerConfig(dim=d, pure=pure),
            effect_mode="random_projective" if pure else "random_povm",
            base_seed=base_seed,
        )
        t0 = time.perf_counter()
        outcomes = _run_trials_with_solver(spec, solver, workers)
        run_time = time.perf_counter() - t0
        rs = np.array([o.r for o in outcomes if o.ok])
        for n_trials in sorted(trial_counts):
            prefix = rs[:n_trials]
            for threshold in sorted(thresholds, reverse=True):
                rows.append({
                    "solver": solver,
                    "sampling": "pure" if pure else "mixed",
                    "N": n_trials,
                    "threshold": threshold,
                    "typicality": float(np.mean(prefix > threshold)),
                    "max_r": float(prefix.max()) if prefix.size else float("nan"),
                    "wall_time": run_time * n_trials / n_total,
                })
    return rows


def largest_clean_threshold(rows: list[dict]) -> float | None:
    """Largest tested threshold with typicality exactly zero everywhere."""
    clean = None
    for threshold in sorted({row["threshold"] for row in rows}):
        if all(row["typicality"] == 0.0 for row in rows if row["threshold"] == threshold):
            clean = threshold
    return clean


def _solver_trial(args):
    spec, solver, index = args
    gen = RngStream(spec.base_seed, index).generator()
    states = [sample_state(spec.state_sampler, gen) for _ in range(spec.n)]
    measurements = _sample_measurements(spec, gen)
    result = certify_operators(states, measurements, solver=solver)
    return TrialOutcome(index, result.r, result.solver_status, result.residual, 0.0)


def _run_trials_with_solver(spec: ScenarioSpec, solver: str, workers: int):
    tasks = [(spec, solver, i) for i in range(spec.trials)]
    if workers <= 1:
        return [_solver_trial(t) for t in tasks]
    outcomes: list[TrialOutcome | None] = [None] * spec.trials
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for out in pool.map(_solver_trial, tasks, chunksize=64):
            outcomes[out.trial] = out
    return outcomes
