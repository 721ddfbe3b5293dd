"""Seeded random states and channels for property tests and self-checks.

Unitaries are Haar-distributed via QR orthogonalization of complex Gaussian
matrices; mixed states come from the Ginibre construction. Everything takes
an explicit ``numpy.random.Generator`` so sampling stays reproducible.
"""

from __future__ import annotations

import numpy as np

from .channels import PauliChannel, UnitalChannel, is_completely_positive
from .states import BELL_KETS, _frozen


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return _frozen(q * (d / np.abs(d)))


def random_pure_ket(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return _frozen(v / np.linalg.norm(v))


def random_density_matrix(rng: np.random.Generator, dim: int = 4, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return _frozen(rho / np.trace(rho).real)


def random_pauli_channel(rng: np.random.Generator) -> PauliChannel:
    return PauliChannel(rng.dirichlet(np.ones(4)))


def random_cp_radii(rng: np.random.Generator) -> np.ndarray:
    # The CP tetrahedron fills 1/3 of the cube, so rejection is cheap.
    while True:
        r = rng.uniform(-1.0, 1.0, size=3)
        if is_completely_positive(r):
            return _frozen(r)


def random_unital_channel(rng: np.random.Generator) -> UnitalChannel:
    return UnitalChannel(
        pre_rotation=random_unitary(rng),
        post_rotation=random_unitary(rng),
        radii=random_cp_radii(rng),
    )


def random_rotated_bell(rng: np.random.Generator, which: str = "phi_plus") -> np.ndarray:
    """Ket (u x v)|bell>: a Haar-random maximally entangled state."""
    u = random_unitary(rng)
    v = random_unitary(rng)
    return _frozen(np.kron(u, v) @ BELL_KETS[which])
