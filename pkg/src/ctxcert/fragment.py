"""GPT fragments in Gell-Mann coordinates and their accessible form.

A fragment stacks the vectorized states and effects of a
prepare-and-measure scenario; the accessible form projects both onto the
subspaces they actually span, keeping inclusion maps that reproduce every
probability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .quantum import check_density_matrix, check_effect, vectorize

FRAGMENT_SCHEMA_VERSION = 1

# Relative singular-value cutoff for numerical rank decisions.
EPS_RANK = 1e-9


class FragmentError(ValueError):
    """The operators do not assemble into a valid fragment."""


@dataclass(frozen=True)
class GptFragment:
    """Vectorized scenario: states (n x d^2), effects (2m x d^2), mu, u."""

    states: np.ndarray
    effects: np.ndarray
    mm_state: np.ndarray
    unit_effect: np.ndarray
    dim: int

    @property
    def n_states(self) -> int:
        return self.states.shape[0]

    @property
    def n_measurements(self) -> int:
        return self.effects.shape[0] // 2


@dataclass(frozen=True)
class AccessibleFragment:
    """Fragment projected onto its spanned subspaces.

    ``inclusion_states`` (d^2 x k) maps projected state coordinates back
    to the ambient space; likewise for effects. Both are pseudoinverses of
    the corresponding projections, which are orthonormal here, so
    projection is just the transpose.
    """

    states: np.ndarray
    effects: np.ndarray
    inclusion_states: np.ndarray
    inclusion_effects: np.ndarray
    depolarizer: np.ndarray

    @property
    def state_rank(self) -> int:
        return self.inclusion_states.shape[1]

    @property
    def effect_rank(self) -> int:
        return self.inclusion_effects.shape[1]


def build_fragment(states, measurements) -> GptFragment:
    """Vectorize states and dichotomic measurements into a fragment.

    Each measurement contributes both of its effects (two rows), so a list
    of m measurements yields 2m effect rows.
    """
    if not len(states) or not len(measurements):
        raise FragmentError("need at least one state and one measurement")
    d = np.asarray(states[0]).shape[0]
    state_rows = []
    for rho in states:
        rho = check_density_matrix(rho)
        if rho.shape[0] != d:
            raise FragmentError("states have mixed dimensions")
        state_rows.append(vectorize(rho))
    effect_rows = []
    for meas in measurements:
        if len(meas) != 2:
            raise FragmentError("measurements must be dichotomic (two effects)")
        e0, e1 = (check_effect(e) for e in meas)
        if e0.shape[0] != d or e1.shape[0] != d:
            raise FragmentError("effects have mixed dimensions")
        if np.max(np.abs(e0 + e1 - np.eye(d))) > 1e-9:
            raise FragmentError("measurement effects do not sum to the identity")
        effect_rows.append(vectorize(e0))
        effect_rows.append(vectorize(e1))
    mu = vectorize(np.eye(d, dtype=complex) / d)
    u = vectorize(np.eye(d, dtype=complex))
    return GptFragment(
        states=np.array(state_rows),
        effects=np.array(effect_rows),
        mm_state=mu,
        unit_effect=u,
        dim=d,
    )


def row_space_basis(rows: np.ndarray, tol: float = EPS_RANK) -> np.ndarray:
    """Orthonormal basis (columns) of the row space, rank cut at tol * s_max."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    _, svals, vt = np.linalg.svd(rows, full_matrices=False)
    if svals.size == 0 or svals[0] <= 0.0:
        raise FragmentError("cannot take the span of all-zero vectors")
    rank = int(np.sum(svals > tol * svals[0]))
    return vt[:rank].T


def depolarizing_map(frag: GptFragment) -> np.ndarray:
    """Complete depolarizer in coordinates: D = mu u^T, so D v = (u . v) mu."""
    return np.outer(frag.mm_state, frag.unit_effect)


def accessible_fragment(frag: GptFragment) -> AccessibleFragment:
    """Project states and effects onto their spans (pipeline step 1)."""
    v = row_space_basis(frag.states)
    w = row_space_basis(frag.effects)
    return AccessibleFragment(
        states=frag.states @ v,
        effects=frag.effects @ w,
        inclusion_states=v,
        inclusion_effects=w,
        depolarizer=depolarizing_map(frag),
    )


def _matrix_to_json(m: np.ndarray):
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(m, dtype=complex)]


def _matrix_from_json(rows) -> np.ndarray:
    try:
        return np.array([[complex(re, im) for re, im in row] for row in rows])
    except (TypeError, ValueError) as exc:
        raise FragmentError(f"malformed matrix entry: {exc}") from exc


def fragment_to_json(states, measurements) -> dict:
    """Serializable fragment document: entries as [re, im] pairs."""
    if len(states):
        d = int(np.asarray(states[0]).shape[0])
    elif len(measurements):
        d = int(np.asarray(measurements[0][0]).shape[0])
    else:
        raise FragmentError("cannot serialize an empty fragment")
    return {
        "version": FRAGMENT_SCHEMA_VERSION,
        "d": d,
        "states": [_matrix_to_json(s) for s in states],
        "measurements": [[_matrix_to_json(e) for e in meas] for meas in measurements],
    }


def fragment_from_json(doc: dict):
    """Parse the fragment schema back into operator lists."""
    if not isinstance(doc, dict):
        raise FragmentError("fragment document must be a JSON object")
    try:
        version = doc["version"]
        d = int(doc["d"])
        states = [_matrix_from_json(s) for s in doc["states"]]
        measurements = [
            tuple(_matrix_from_json(e) for e in meas) for meas in doc["measurements"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise FragmentError(f"fragment document missing or malformed field: {exc}") from exc
    if version != FRAGMENT_SCHEMA_VERSION:
        raise FragmentError(f"unsupported fragment schema version {version!r}")
    for s in states:
        if s.shape != (d, d):
            raise FragmentError(f"state shape {s.shape} does not match d={d}")
    for meas in measurements:
        if len(meas) != 2 or any(e.shape != (d, d) for e in meas):
            raise FragmentError("measurements must hold two d x d effects")
    return states, measurements


def save_fragment(path, states, measurements) -> None:
    Path(path).write_text(json.dumps(fragment_to_json(states, measurements)))


def load_fragment(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FragmentError(f"invalid JSON: {exc}") from exc
    return fragment_from_json(doc)
