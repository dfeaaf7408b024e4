"""Polyhedral cone facet enumeration via the double description method.

Converts a generator (V-) representation of a cone into the facet (H-)
representation needed by the embedding linear program. The implementation
is incremental double description with a rank-based adjacency test, which
keeps the tolerance handling explicit instead of delegating to an external
polytope library.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_CONE = 1e-9


class ConeError(ValueError):
    """Generator set cannot describe a cone (empty or all zero)."""


@dataclass(frozen=True)
class ConeHRepresentation:
    """Facet inequalities of a cone: v inside iff facets @ v >= 0 rowwise.

    Rows are unit-norm facet normals. For generator sets that do not span
    the ambient space, the rows include +/- pairs spanning the orthogonal
    complement, so membership still characterizes the cone exactly.
    """

    facets: np.ndarray
    generator_count: int
    space_dim: int

    @property
    def n_facets(self) -> int:
        return self.facets.shape[0]


def cone_contains(h: ConeHRepresentation, v, tol: float = EPS_CONE) -> bool:
    """True iff every facet inequality holds within tolerance."""
    v = np.asarray(v, dtype=float)
    if v.shape != (h.space_dim,):
        raise ValueError(f"point shape {v.shape} does not match cone dim {h.space_dim}")
    if h.n_facets == 0:
        return True
    return float(np.min(h.facets @ v)) >= -tol


def _clean_generators(generators, tol: float) -> np.ndarray:
    g = np.atleast_2d(np.asarray(generators, dtype=float))
    if g.size == 0:
        raise ConeError("no generators given")
    norms = np.linalg.norm(g, axis=1)
    g = g[norms > tol]
    if g.shape[0] == 0:
        raise ConeError("all generators are zero")
    g = g / np.linalg.norm(g, axis=1, keepdims=True)
    kept: list[np.ndarray] = []
    for row in g:
        if any(np.max(np.abs(row - r)) <= tol for r in kept):
            continue
        kept.append(row)
    return np.array(kept)


def _dedup_rows(rows: np.ndarray, tol: float) -> np.ndarray:
    kept: list[np.ndarray] = []
    for row in rows:
        if any(np.max(np.abs(row - r)) <= tol for r in kept):
            continue
        kept.append(row)
    return np.array(kept) if kept else np.empty((0, rows.shape[1]))


def _lexicographic_order(rows: np.ndarray) -> np.ndarray:
    return np.lexsort(rows.T[::-1])


def _initial_independent(a: np.ndarray, tol: float) -> tuple[list[int], list[int]]:
    """Split row indices into an initial full-rank set and the rest.

    Rows are scanned in lexicographic order; a row joins the initial set
    when it increases the numerical rank.
    """
    s = a.shape[1]
    order = _lexicographic_order(a)
    chosen: list[int] = []
    rest: list[int] = []
    basis = np.empty((0, s))
    for idx in order:
        if len(chosen) < s:
            resid = a[idx] - basis.T @ (basis @ a[idx]) if basis.size else a[idx]
            norm = np.linalg.norm(resid)
            if norm > tol:
                basis = np.vstack([basis, resid / norm])
                chosen.append(int(idx))
                continue
        rest.append(int(idx))
    if len(chosen) != s:
        raise ConeError("generators do not have full rank in their span")
    return chosen, rest


def _dual_extreme_rays(a: np.ndarray, tol: float) -> np.ndarray:
    """Extreme rays of the pointed cone {x : a @ x >= 0}.

    ``a`` must have full column rank, which makes the dual cone pointed.
    Incremental double description: start from a simplicial subcone given
    by independent rows, then cut with the remaining rows, combining
    adjacent positive/negative ray pairs. Adjacency is decided by the rank
    of the constraints tight at both rays.
    """
    p, s = a.shape
    chosen, rest = _initial_independent(a, tol)
    rays = np.linalg.inv(a[chosen]).T  # row i is the ray dual to constraint i
    rays = rays / np.linalg.norm(rays, axis=1, keepdims=True)
    inserted = list(chosen)
    for j in rest:
        vals = rays @ a[j]
        pos = np.where(vals > tol)[0]
        neg = np.where(vals < -tol)[0]
        if neg.size == 0:
            inserted.append(j)
            continue
        keep = rays[vals >= -tol]
        a_ins = a[inserted]
        tight = np.abs(rays @ a_ins.T) <= tol  # rays x inserted constraints
        combos = []
        for i_pos in pos:
            for i_neg in neg:
                both = tight[i_pos] & tight[i_neg]
                if np.count_nonzero(both) < s - 2:
                    continue
                if s > 2 and np.linalg.matrix_rank(a_ins[both], tol=tol) != s - 2:
                    continue
                new = vals[i_pos] * rays[i_neg] - vals[i_neg] * rays[i_pos]
                norm = np.linalg.norm(new)
                if norm > tol:
                    combos.append(new / norm)
        parts = [keep] + ([np.array(combos)] if combos else [])
        rays = np.vstack(parts) if keep.size or combos else np.empty((0, s))
        rays = _dedup_rows(rays, tol)
        inserted.append(j)
        if rays.shape[0] == 0:
            break
    return rays


def facet_enumeration(generators, tol: float = EPS_CONE) -> ConeHRepresentation:
    """H-representation of the conic hull of the given generators.

    Zero generators are dropped and duplicates merged before insertion.
    Facets of the hull are the extreme rays of the dual cone, computed in
    an orthonormal basis of the generators' span and mapped back; +/- rows
    for the orthogonal complement pin non-spanning cones to their span.
    """
    g = _clean_generators(generators, tol)
    k = g.shape[1]
    _, svals, vt = np.linalg.svd(g, full_matrices=True)
    rank = int(np.sum(svals > tol * svals[0]))
    span = vt[:rank].T  # k x rank, orthonormal columns
    rays = _dual_extreme_rays(g @ span, tol)
    facets = rays @ span.T if rays.size else np.empty((0, k))
    if rank < k:
        comp = vt[rank:]
        facets = np.vstack([facets, comp, -comp])
    if facets.size:
        facets = facets / np.linalg.norm(facets, axis=1, keepdims=True)
        facets = _dedup_rows(facets, tol)
        facets = facets[_lexicographic_order(facets)]
    facets.setflags(write=False)
    return ConeHRepresentation(facets=facets, generator_count=g.shape[0], space_dim=k)
