"""Concurrence and its closed-form evolution laws under unital noise.

For a Pauli channel with signed ellipsoid radii (R1, R2, R3) applied to a
maximally entangled pair, the output concurrence is

* one-sided:  max{(|R1| + |R2| + |R3| - 1)/2, 0}
* two-sided:  max{(R1^2 + R2^2 + R3^2 - 1)/2, 0}

The two-sided expression is exact for Pauli channels on Bell states and for
any unital channel on the singlet; for general unital channels on other
maximally entangled states it is only an upper bound. Pure partially
entangled states follow the factorization law (prediction scales with the
initial concurrence), and dephasing-prepared mixed states reduce to it
through channel composition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import (
    PauliChannel,
    apply_one_sided,
    channel_for,
    channel_radii,
    compose,
    dephasing_channel,
)
from .states import SIGMA_2, _frozen, bell_state, dm, psd_sqrt, purity

MODES = ("one_sided", "two_sided")

_SPIN_FLIP = _frozen(np.kron(SIGMA_2, SIGMA_2).real)

_PURITY_TOL = 1e-8


@dataclass(frozen=True)
class ConcurrenceResult:
    """Concurrence c = max{0, q} with q = sqrt(l0) - sqrt(l1) - sqrt(l2) - sqrt(l3),
    where ``lambdas`` is the descending, clamped spectrum of the spin-flipped
    product matrix rho (sy x sy) rho* (sy x sy).
    """

    q: float
    c: float
    lambdas: np.ndarray


def concurrence(rho) -> ConcurrenceResult:
    """Wootters concurrence of a two-qubit density matrix.

    The square roots of the spin-flip spectrum are taken directly as the
    singular values of sqrt(spin-flipped rho) @ sqrt(rho): squaring them
    recovers the eigenvalues of rho (sy x sy) rho* (sy x sy), and reading the
    roots off an SVD keeps eigenvalues that are analytically zero at machine
    precision instead of sqrt(eps).
    """
    m = np.asarray(rho, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 state, got shape {m.shape}")
    sq = psd_sqrt(m)
    sq_flipped = _SPIN_FLIP @ sq.conj() @ _SPIN_FLIP
    roots = np.linalg.svd(sq_flipped @ sq, compute_uv=False)
    q = float(roots[0] - roots[1] - roots[2] - roots[3])
    return ConcurrenceResult(q=q, c=max(0.0, q), lambdas=_frozen(roots**2))


def predict_one_sided(radii) -> float:
    """Concurrence after one-sided unital noise on a maximally entangled pair."""
    r = np.abs(np.asarray(radii, dtype=float))
    return max((r[0] + r[1] + r[2] - 1.0) / 2.0, 0.0)


def predict_two_sided(radii) -> float:
    """Concurrence after the same Pauli noise on both qubits of a Bell pair."""
    r = np.asarray(radii, dtype=float)
    return max((r[0] ** 2 + r[1] ** 2 + r[2] ** 2 - 1.0) / 2.0, 0.0)


def lambda_two_sided(channel) -> np.ndarray:
    """Closed-form spin-flip spectrum for two-sided Pauli noise on a Bell pair.

    Returned in the labeled order (l0, l1, l2, l3); l0 is always maximal.
    """
    if isinstance(channel, PauliChannel):
        chi = channel.chi_diag
    else:
        chi = np.asarray(channel, dtype=float).reshape(-1)
        if chi.size != 4:
            raise ValueError(f"expected a Pauli channel or 4 weights, got {channel!r}")
    c0, c1, c2, c3 = chi
    return _frozen(
        np.array(
            [
                (c0**2 + c1**2 + c2**2 + c3**2) ** 2,
                4.0 * (c1 * c2 + c3 * c0) ** 2,
                4.0 * (c1 * c3 + c2 * c0) ** 2,
                4.0 * (c1 * c0 + c2 * c3) ** 2,
            ]
        )
    )


def breaking_point(family: str, mode: str, tol: float = 1e-10) -> float:
    """Smallest noise probability at which the predicted concurrence reaches zero.

    Solved by bisection on the analytic law for the given channel family
    ("two-field", "isotropic" or "dephasing"). Returns ``math.inf`` when the
    prediction never reaches zero on [0, 1] (the channel never breaks
    entanglement there).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    law = predict_one_sided if mode == "one_sided" else predict_two_sided

    def c_of(p: float) -> float:
        return law(channel_radii(channel_for(family, p)))

    if c_of(0.0) <= 0.0:
        return 0.0
    if c_of(1.0) > 0.0:
        return math.inf
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if c_of(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def factorization_prediction(initial, channel) -> float:
    """Concurrence of a pure two-qubit state after one-sided noise.

    The prediction factorizes into the initial concurrence times the
    concurrence a Bell pair would retain under the same channel. Exact for
    pure initial states; mixed inputs are rejected (use
    :func:`mixed_evolution_prediction`).
    """
    m = np.asarray(initial, dtype=complex)
    if purity(m) < 1.0 - _PURITY_TOL:
        raise ValueError(
            f"initial state is mixed (purity {purity(m)!r}); "
            "use mixed_evolution_prediction with its preparation channel"
        )
    bell_term = predict_one_sided(channel_radii(channel))
    return bell_term * concurrence(m).c


def mixed_evolution_prediction(sigma, prep, channel) -> float:
    """Concurrence prediction for a mixed state prepared as one-sided noise on
    a pure state ``sigma``.

    The preparation channel ``prep`` acts first, the swept channel second;
    both compose into a single channel whose Bell-pair concurrence scales the
    concurrence of ``sigma``.
    """
    m = np.asarray(sigma, dtype=complex)
    if purity(m) < 1.0 - _PURITY_TOL:
        raise ValueError(f"sigma must be pure, got purity {purity(m)!r}")
    combined = compose(prep, channel)
    return predict_one_sided(channel_radii(combined)) * concurrence(m).c


@dataclass(frozen=True)
class InitialStateSpec:
    """Recipe for the initial two-qubit state of a sweep.

    kind = "bell"       -> the Bell state named by ``bell``
    kind = "pure_pes"   -> cos(2 delta)|hh> + sin(2 delta) e^{i phi}|vv>
    kind = "mixed_pes"  -> the pure state above (phi = 0) with one-sided
                           dephasing of strength ``dephasing``
    """

    kind: str
    bell: str = "phi_plus"
    delta: float = 0.0
    phi: float = 0.0
    dephasing: float = 0.0

    def __post_init__(self):
        if self.kind not in ("bell", "pure_pes", "mixed_pes"):
            raise ValueError(f"unknown initial-state kind {self.kind!r}")

    def label(self) -> str:
        if self.kind == "bell":
            return f"bell_{self.bell}"
        if self.kind == "pure_pes":
            return f"pure_pes_delta{self.delta:g}_phi{self.phi:g}"
        return f"mixed_pes_delta{self.delta:g}_p{self.dephasing:g}"


def pure_pes_ket(delta: float, phi: float = 0.0) -> np.ndarray:
    """cos(2 delta)|hh> + sin(2 delta) e^{i phi}|vv>; concurrence |sin(4 delta)|."""
    v = np.zeros(4, dtype=complex)
    v[0] = np.cos(2.0 * delta)
    v[3] = np.sin(2.0 * delta) * np.exp(1j * phi)
    return _frozen(v)


def make_initial(spec: InitialStateSpec, noisy_qubit: int = 1) -> np.ndarray:
    """Density matrix for an initial-state recipe.

    ``noisy_qubit`` selects which qubit the mixed-PES preparation dephasing
    acts on; sweeps send their channel to the same qubit.
    """
    if spec.kind == "bell":
        return bell_state(spec.bell)
    if spec.kind == "pure_pes":
        return dm(pure_pes_ket(spec.delta, spec.phi))
    pure = dm(pure_pes_ket(spec.delta, 0.0))
    return apply_one_sided(dephasing_channel(spec.dephasing), pure, target=noisy_qubit)
