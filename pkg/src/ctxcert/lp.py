"""Simplex-embedding linear program and the classicality verdict.

The program finds the least depolarizing weight r at which the fragment's
state cone embeds into a simplex consistently with its effect cone; r > 0
(above threshold) certifies contextuality.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog

from .cones import ConeHRepresentation, facet_enumeration
from .fragment import (
    AccessibleFragment,
    GptFragment,
    accessible_fragment,
    build_fragment,
    depolarizing_map,
    row_space_basis,
)

DEFAULT_THRESHOLD = 1e-7

# Residual gate: a solve is accepted only if the equality constraints hold
# this tightly, regardless of what the solver reports.
RESIDUAL_TOL = 1e-8
SIGMA_TOL = 1e-9

STATUS_OPTIMAL = "optimal"
STATUS_FALLBACK = "fallback_optimal"
STATUS_FAILED = "infeasible_numerics"

# Two solve paths: simplex-style primary, interior-point fallback.
_METHODS = {"ds": "highs-ds", "ipm": "highs-ipm"}


class SolveFailure(RuntimeError):
    """Both solve paths failed the residual checks."""


@dataclass
class RobustnessResult:
    """Outcome of one embedding LP."""

    r: float
    sigma: np.ndarray | None
    solver_status: str
    residual: float
    wall_time: float

    @property
    def ok(self) -> bool:
        return self.solver_status in (STATUS_OPTIMAL, STATUS_FALLBACK)


@dataclass(frozen=True)
class ClassicalityVerdict:
    contextual: bool
    r: float
    threshold: float = DEFAULT_THRESHOLD


def _lp_matrices(acc: AccessibleFragment, h_states: ConeHRepresentation,
                 h_effects: ConeHRepresentation):
    """Equality system for variables [r, vec(sigma)] (row-major sigma)."""
    incl_s = acc.inclusion_states
    incl_e = acc.inclusion_effects
    m_id = incl_e.T @ incl_s
    m_dep = incl_e.T @ acc.depolarizer @ incl_s
    k = np.kron(h_effects.facets.T, h_states.facets.T)
    a_eq = np.hstack([-(m_dep - m_id).reshape(-1, 1), k])
    b_eq = m_id.reshape(-1)
    return a_eq, b_eq


def _solve(a_eq, b_eq, n_sigma: int, method: str):
    cost = np.zeros(1 + n_sigma)
    cost[0] = 1.0
    bounds = [(0.0, 1.0)] + [(0.0, None)] * n_sigma
    return linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method=method)


def robustness(acc: AccessibleFragment, h_states: ConeHRepresentation,
               h_effects: ConeHRepresentation, solver: str | None = None) -> RobustnessResult:
    """Minimal depolarizing weight r admitting a simplex embedding.

    ``solver`` forces one solve path ("ds" or "ipm"); by default the
    simplex path runs first and the interior-point path is tried
    automatically if it fails the residual checks.
    """
    t0 = time.perf_counter()
    a_eq, b_eq = _lp_matrices(acc, h_states, h_effects)
    n_sigma = h_effects.n_facets * h_states.n_facets
    if n_sigma == 0:
        # No facets can only happen for degenerate inputs; report failure.
        return RobustnessResult(float("nan"), None, STATUS_FAILED, float("inf"),
                                time.perf_counter() - t0)
    paths = [solver] if solver is not None else ["ds", "ipm"]
    statuses = [STATUS_OPTIMAL, STATUS_FALLBACK]
    for path, status in zip(paths, statuses):
        res = _solve(a_eq, b_eq, n_sigma, _METHODS[path])
        if not res.success:
            continue
        x = res.x
        residual = float(np.max(np.abs(a_eq @ x - b_eq)))
        sigma = x[1:].reshape(h_effects.n_facets, h_states.n_facets)
        if residual < RESIDUAL_TOL and sigma.min() >= -SIGMA_TOL:
            r = float(min(max(x[0], 0.0), 1.0))
            return RobustnessResult(r, sigma, status, residual,
                                    time.perf_counter() - t0)
    return RobustnessResult(float("nan"), None, STATUS_FAILED, float("inf"),
                            time.perf_counter() - t0)


def classify(result: RobustnessResult, threshold: float = DEFAULT_THRESHOLD) -> ClassicalityVerdict:
    """Contextual iff r exceeds the classicality threshold."""
    if not result.ok:
        raise SolveFailure(
            "robustness solve failed numerically; trial must be excluded, not classified"
        )
    return ClassicalityVerdict(contextual=result.r > threshold, r=result.r,
                               threshold=threshold)


@lru_cache(maxsize=64)
def _side_cache(rows_bytes: bytes, n_rows: int, width: int):
    rows = np.frombuffer(rows_bytes, dtype=float).reshape(n_rows, width)
    basis = row_space_basis(rows)
    projected = rows @ basis
    return basis, facet_enumeration(projected)


def _cone_side(rows: np.ndarray):
    rows = np.ascontiguousarray(rows, dtype=float)
    return _side_cache(rows.tobytes(), rows.shape[0], rows.shape[1])


def certify_fragment(frag: GptFragment, solver: str | None = None) -> RobustnessResult:
    """Pipeline steps 1-3 for an assembled fragment.

    Caches the per-side span bases and facet systems, which makes repeated
    trials against a fixed effect set (or fixed states) cheap.
    """
    v, h_states = _cone_side(frag.states)
    w, h_effects = _cone_side(frag.effects)
    acc = AccessibleFragment(
        states=frag.states @ v,
        effects=frag.effects @ w,
        inclusion_states=v,
        inclusion_effects=w,
        depolarizer=depolarizing_map(frag),
    )
    return robustness(acc, h_states, h_effects, solver=solver)


def certify_operators(states, measurements, solver: str | None = None) -> RobustnessResult:
    """Full pipeline from density matrices and dichotomic measurements."""
    return certify_fragment(build_fragment(states, measurements), solver=solver)


def cones_of_fragment(frag: GptFragment):
    """Accessible fragment plus both facet systems (diagnostic surface)."""
    acc = accessible_fragment(frag)
    return acc, facet_enumeration(acc.states), facet_enumeration(acc.effects)
