"""Qubit/qudit operators, the Born rule, and Gell-Mann vectorization.

States and effects are plain complex numpy arrays; the functions here
validate them and move them between matrix form and real coordinate
vectors in an orthonormal Hermitian basis.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# Validation tolerances. Both sit well below the 1e-7 classicality
# threshold so that validation noise cannot flip a verdict.
EPS_HERM = 1e-12
EPS_PSD = 1e-10


class OperatorError(ValueError):
    """Input matrix violates an operator invariant."""


class DimensionMismatchError(ValueError):
    """Operands act on spaces of different dimension."""


def _as_square_matrix(op) -> np.ndarray:
    a = np.asarray(op, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise OperatorError(f"expected a square matrix, got shape {a.shape}")
    return a


def check_hermitian(op, tol: float = EPS_HERM) -> np.ndarray:
    """Validate Hermiticity and return the matrix as a complex array."""
    a = _as_square_matrix(op)
    dev = np.max(np.abs(a - a.conj().T))
    if dev > tol:
        raise OperatorError(f"matrix is not Hermitian (deviation {dev:.3e})")
    return a


def check_density_matrix(rho, tol_herm: float = EPS_HERM, tol_psd: float = EPS_PSD) -> np.ndarray:
    """Validate unit trace and positive semidefiniteness of a state."""
    a = check_hermitian(rho, tol_herm)
    tr = np.trace(a)
    if abs(tr - 1.0) > max(tol_herm, 1e-10):
        raise OperatorError(f"state has trace {tr:.12g}, expected 1")
    evals = np.linalg.eigvalsh(a)
    if evals.min() < -tol_psd:
        raise OperatorError(f"state has negative eigenvalue {evals.min():.3e}")
    return a


def check_effect(effect, tol_herm: float = EPS_HERM, tol_psd: float = EPS_PSD) -> np.ndarray:
    """Validate that all eigenvalues lie in [0, 1] up to tolerance."""
    a = check_hermitian(effect, tol_herm)
    evals = np.linalg.eigvalsh(a)
    if evals.min() < -tol_psd or evals.max() > 1.0 + tol_psd:
        raise OperatorError(
            f"effect spectrum [{evals.min():.3e}, {evals.max():.3e}] outside [0, 1]"
        )
    return a


@lru_cache(maxsize=16)
def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal Hermitian basis of d x d matrices, shape (d^2, d, d).

    Ordering: identity/sqrt(d) first, then the generalized Gell-Mann
    matrices (symmetric, antisymmetric, diagonal), each normalized to
    Hilbert-Schmidt norm 1, so Tr(B_a B_b) = delta_ab.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    mats = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1.0 / np.sqrt(2.0)
            mats.append(m)
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j / np.sqrt(2.0)
            m[k, j] = 1j / np.sqrt(2.0)
            mats.append(m)
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1.0
        m[l, l] = -float(l)
        mats.append(m / np.sqrt(l * (l + 1)))
    basis = np.array(mats)
    basis.setflags(write=False)
    return basis


def vectorize(op, tol: float = EPS_HERM) -> np.ndarray:
    """Real coordinates of a Hermitian matrix in the orthonormal basis."""
    a = check_hermitian(op, tol)
    d = a.shape[0]
    coeffs = np.einsum("aij,ji->a", hermitian_basis(d), a)
    return coeffs.real.copy()


def devectorize(vec) -> np.ndarray:
    """Inverse of :func:`vectorize`; rebuilds the Hermitian matrix."""
    v = np.asarray(vec, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a flat coordinate vector, got shape {v.shape}")
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    return np.einsum("a,aij->ij", v, hermitian_basis(d))


def born(rho, effect, band: float = EPS_PSD) -> float:
    """Born-rule probability Tr(E rho).

    Raises if the dimensions do not match or the result falls outside
    [-band, 1 + band], which signals invalid inputs.
    """
    r = _as_square_matrix(rho)
    e = _as_square_matrix(effect)
    if r.shape != e.shape:
        raise DimensionMismatchError(f"state is {r.shape}, effect is {e.shape}")
    p = np.trace(e @ r)
    if abs(p.imag) > 1e-9:
        raise OperatorError(f"Born probability has imaginary part {p.imag:.3e}")
    p = float(p.real)
    if p < -band or p > 1.0 + band:
        raise OperatorError(f"Born probability {p:.12g} outside [0, 1]")
    return p


def purity(rho) -> float:
    """Tr(rho^2), in [1/d, 1] for a valid state."""
    a = _as_square_matrix(rho)
    return float(np.vdot(a, a).real)


def complement(effect) -> np.ndarray:
    """The complementary effect I - E of a dichotomic measurement."""
    e = _as_square_matrix(effect)
    return np.eye(e.shape[0], dtype=complex) - e
