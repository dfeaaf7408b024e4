"""Shared helpers: Pauli algebra, scenario builders, membership oracles."""

import numpy as np
import pytest
from scipy.optimize import linprog, nnls

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)
PAULIS = (SX, SY, SZ)


def bloch_state(a) -> np.ndarray:
    """Qubit density matrix with Bloch vector a."""
    a = np.asarray(a, dtype=float)
    rho = 0.5 * I2.copy()
    for comp, pauli in zip(a, PAULIS):
        rho += 0.5 * comp * pauli
    return rho


def pvm(axis):
    """Projective dichotomic measurement along a Bloch axis."""
    axis = np.asarray(axis, dtype=float)
    p = bloch_state(axis / np.linalg.norm(axis))
    return p, I2 - p


def random_haar_state(gen) -> np.ndarray:
    z = gen.standard_normal(2) + 1j * gen.standard_normal(2)
    z /= np.linalg.norm(z)
    return np.outer(z, z.conj())


def random_scenario(gen, n, m, pure_states=True, pure_effects=True):
    """Quick scenario sampler for property tests, independent of the package."""
    states = []
    for _ in range(n):
        if pure_states:
            states.append(random_haar_state(gen))
        else:
            g = gen.standard_normal((2, 2)) + 1j * gen.standard_normal((2, 2))
            rho = g @ g.conj().T
            states.append(rho / np.trace(rho).real)
    measurements = []
    for _ in range(m):
        if pure_effects:
            e = random_haar_state(gen)
        else:
            g = gen.standard_normal((2, 2)) + 1j * gen.standard_normal((2, 2))
            e = g @ g.conj().T
            e = e / np.trace(e).real
        measurements.append((e, I2 - e))
    return states, measurements


def lp_cone_member(generators, v) -> bool:
    """Feasibility LP: is v a nonnegative combination of the generators?"""
    g = np.asarray(generators, dtype=float)
    res = linprog(np.zeros(g.shape[0]), A_eq=g.T, b_eq=np.asarray(v, dtype=float),
                  bounds=(0, None), method="highs")
    return res.status == 0


def nnls_cone_distance(generators, v) -> float:
    """Residual of the best nonnegative combination (0 iff member)."""
    g = np.asarray(generators, dtype=float)
    _, resid = nnls(g.T, np.asarray(v, dtype=float))
    return float(resid)


@pytest.fixture(scope="session")
def pom_cube_symmetric():
    signs = [(s1, s2, s3) for s1 in (1, -1) for s2 in (1, -1) for s3 in (1, -1)]
    return [bloch_state(np.array(s) / np.sqrt(3.0)) for s in signs]


@pytest.fixture(scope="session")
def xyz_measurements():
    return [pvm([1, 0, 0]), pvm([0, 1, 0]), pvm([0, 0, 1])]
