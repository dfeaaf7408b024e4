"""Random states, dichotomic POVMs, Haar unitaries, and the fixed grid.

Every sampler is a pure function of its configuration and an
:class:`RngStream`, so identical inputs reproduce identical draws, and
distinct streams can run on any number of workers without coordination.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quantum import purity

_MASK64 = (1 << 64) - 1


class SamplingError(RuntimeError):
    """Sampling could not produce a draw within its budget."""


@dataclass(frozen=True)
class RngStream:
    """Counted random stream: (seed, stream_id) fixes the draw sequence."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.seed & _MASK64, spawn_key=(self.stream_id & _MASK64,)
        )
        return np.random.Generator(np.random.PCG64(ss))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


@dataclass(frozen=True)
class SamplerConfig:
    """How to draw one state (or one unit-trace POVM element).

    When ``pure`` is set the purity window is ignored: the draw is a Haar
    rank-1 projector with purity exactly 1. Otherwise Ginibre draws are
    rejected until the purity lands in [purity_lower, purity_upper].
    """

    dim: int = 2
    pure: bool = True
    purity_lower: float = 0.0
    purity_upper: float = 1.0
    max_rejections: int = 10**6

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dimension must be >= 2")
        if not self.purity_lower <= self.purity_upper:
            raise ValueError(
                f"purity window [{self.purity_lower}, {self.purity_upper}] is empty"
            )
        if self.max_rejections < 1:
            raise ValueError("max_rejections must be positive")


def _ginibre(d: int, gen: np.random.Generator) -> np.ndarray:
    return (gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))) / np.sqrt(2.0)


def haar_unitary(d: int, rng) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with phase fix."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    gen = _as_generator(rng)
    while True:
        z = _ginibre(d, gen)
        q, r = np.linalg.qr(z)
        diag = np.diagonal(r)
        if np.min(np.abs(diag)) < 1e-12:  # measure-zero degenerate QR
            continue
        return q * (diag / np.abs(diag))


def euler_unitary(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Qubit unitary U_z(alpha) U_y(beta) U_z(gamma), U_i = exp(-i theta sigma_i / 2)."""
    return _uz(alpha) @ _uy(beta) @ _uz(gamma)


def euler_qubit_unitary(rng) -> np.ndarray:
    """Haar-random qubit unitary from Euler angles.

    alpha and gamma are uniform on [0, 2pi); cos(beta) is uniform on
    [-1, 1], which is the sin(b) da db dg weighting of the Haar measure.
    """
    gen = _as_generator(rng)
    alpha, gamma = gen.uniform(0.0, 2.0 * np.pi, size=2)
    beta = np.arccos(gen.uniform(-1.0, 1.0))
    return euler_unitary(alpha, beta, gamma)


def _uz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _uy(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def haar_pure_state(d: int, rng) -> np.ndarray:
    """Rank-1 projector |psi><psi| with |psi> = U|0> for Haar-random U."""
    u = haar_unitary(d, rng)
    psi = u[:, 0]
    return np.outer(psi, psi.conj())


def ginibre_mixed_state(d: int, rng) -> np.ndarray:
    """Full-rank density matrix G G^dag / Tr(G G^dag), Hilbert-Schmidt measure."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    gen = _as_generator(rng)
    g = _ginibre(d, gen)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def sample_state(config: SamplerConfig, rng) -> np.ndarray:
    """One state draw per ``config``; rejection sampling for purity windows."""
    gen = _as_generator(rng)
    if config.pure:
        return haar_pure_state(config.dim, gen)
    lo, hi = config.purity_lower, config.purity_upper
    for _ in range(config.max_rejections):
        rho = ginibre_mixed_state(config.dim, gen)
        if lo <= purity(rho) <= hi:
            return rho
    raise SamplingError(
        f"no draw with purity in [{lo}, {hi}] after {config.max_rejections} rejections"
    )


def sample_dichotomic_povm(config: SamplerConfig, rng) -> tuple[np.ndarray, np.ndarray]:
    """Dichotomic measurement (E, I - E).

    E is drawn with the state sampler, so it is a unit-trace POVM element;
    pure configs give a rank-1 projector and its complement.
    """
    e = sample_state(config, rng)
    return e, np.eye(config.dim, dtype=complex) - e


def rotate_effects(effects, u: np.ndarray) -> list[np.ndarray]:
    """Conjugate every effect by one unitary: E -> U E U^dag."""
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    if np.max(np.abs(u.conj().T @ u - np.eye(d))) > 1e-10:
        raise ValueError("rotation matrix is not unitary")
    out = []
    for e in effects:
        e = np.asarray(e, dtype=complex)
        if e.shape != (d, d):
            raise ValueError(f"effect shape {e.shape} does not match unitary {u.shape}")
        out.append(u @ e @ u.conj().T)
    return out


@dataclass(frozen=True)
class GridReport:
    """Counts from building the fixed projective grid."""

    raw_kets: int
    distinct_projectors: int
    measurements: int
    effects: int
    duplicates_removed: int = field(default=0)


def fixed_projective_grid(dedup_tol: float = 1e-9):
    """Dichotomic projective measurements spread over the Bloch sphere.

    Kets (sin(j pi/20), e^{i k pi/5} cos(j pi/20)) for j in 0..9 and
    k in 0..4; projectors are deduplicated (the five j=0 kets differ only
    by a global phase) and each is paired with its complement. Returns the
    measurement list and a count report with the surviving projector count.
    """
    projectors: list[np.ndarray] = []
    raw = 0
    for j in range(10):
        theta = j * np.pi / 20.0
        for k in range(5):
            ket = np.array([np.sin(theta), np.exp(1j * k * np.pi / 5.0) * np.cos(theta)])
            proj = np.outer(ket, ket.conj())
            raw += 1
            if any(np.max(np.abs(proj - p)) <= dedup_tol for p in projectors):
                continue
            projectors.append(proj)
    measurements = [(p, np.eye(2, dtype=complex) - p) for p in projectors]
    report = GridReport(
        raw_kets=raw,
        distinct_projectors=len(projectors),
        measurements=len(measurements),
        effects=2 * len(measurements),
        duplicates_removed=raw - len(projectors),
    )
    return measurements, report
