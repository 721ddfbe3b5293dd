"""Nondissipative single-qubit channels and their geometry.

A channel is represented in one of three interchangeable ways:

* a 4x4 process matrix ``chi`` over the Pauli operator basis
  (sigma_0..sigma_3), validated by :func:`process_matrix`;
* a :class:`PauliChannel`, the diagonal-``chi`` special case: the state is
  left alone or flipped by sigma_1/sigma_2/sigma_3 with fixed weights;
* a :class:`UnitalChannel`, a diagonal map sandwiched between two unitary
  rotations, parameterized by the signed primary radii of the ellipsoid the
  Bloch sphere is mapped onto.

Radii and diagonal weights are linked by an affine bijection
(:func:`radii_from_chi` / :func:`chi_from_radii`); complete positivity is the
tetrahedron condition |R_i +- R_j| <= |1 +- R_k|.

All channel objects are immutable value objects and all functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .states import (
    PAULIS,
    SIGMA_0,
    _frozen,
    bloch_vector,
    density_from_bloch,
    matrix_from_json,
    matrix_to_json,
)

CP_TOL = 1e-12
UNITARY_TOL = 1e-12

PAULI_FAMILIES = ("two-field", "isotropic", "dephasing")

# sigma_i sigma_j is proportional to sigma_{_PAULI_PRODUCT[i][j]}.
_PAULI_PRODUCT = (
    (0, 1, 2, 3),
    (1, 0, 3, 2),
    (2, 3, 0, 1),
    (3, 2, 1, 0),
)


@dataclass(frozen=True, eq=False)
class PauliChannel:
    """Channel applying sigma_i with probability chi_diag[i] (i=0 is identity).

    ``family`` and ``p`` are optional construction metadata kept so named
    channels serialize back to their one-parameter form.
    """

    chi_diag: np.ndarray
    family: str | None = field(default=None, compare=False)
    p: float | None = field(default=None, compare=False)

    def __post_init__(self):
        chi = np.asarray(self.chi_diag, dtype=float).reshape(-1)
        if chi.size != 4:
            raise ValueError(f"chi_diag must have 4 entries, got {chi.size}")
        if chi.min() < -CP_TOL:
            raise ValueError(
                f"chi_diag must be non-negative, got chi_{int(chi.argmin())} = {chi.min()!r}"
            )
        if abs(chi.sum() - 1.0) > 1e-12:
            raise ValueError(f"chi_diag must sum to 1, got {chi.sum()!r}")
        object.__setattr__(self, "chi_diag", _frozen(np.clip(chi, 0.0, None)))


@dataclass(frozen=True, eq=False)
class UnitalChannel:
    """General unital channel: rotate by ``pre_rotation``, shrink the Bloch
    ball along the axes by the signed ``radii``, rotate by ``post_rotation``.
    """

    pre_rotation: np.ndarray
    post_rotation: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.pre_rotation, dtype=complex)
        u = np.asarray(self.post_rotation, dtype=complex)
        for name, m in (("pre_rotation", v), ("post_rotation", u)):
            if m.shape != (2, 2):
                raise ValueError(f"{name} must be 2x2, got shape {m.shape}")
            if np.max(np.abs(m @ m.conj().T - SIGMA_0)) > UNITARY_TOL:
                raise ValueError(f"{name} is not unitary")
        r = np.asarray(self.radii, dtype=float).reshape(-1)
        if r.size != 3:
            raise ValueError(f"radii must have 3 entries, got {r.size}")
        # slack matches decompose_unital's gate so round-tripped boundary maps
        # construct cleanly
        violations = cp_violations(r, tol=1e-10)
        if violations:
            raise ValueError("radii are not completely positive: " + "; ".join(violations))
        object.__setattr__(self, "pre_rotation", _frozen(v.copy()))
        object.__setattr__(self, "post_rotation", _frozen(u.copy()))
        object.__setattr__(self, "radii", _frozen(r.copy()))


def process_matrix(chi) -> np.ndarray:
    """Validate a process matrix (Hermitian, PSD, unit trace) and freeze it."""
    m = np.asarray(chi, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"process matrix must be 4x4, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > 1e-10:
        raise ValueError("process matrix is not Hermitian")
    if abs(np.trace(m).real - 1.0) > 1e-10 or abs(np.trace(m).imag) > 1e-10:
        raise ValueError(f"process matrix trace is {np.trace(m)!r}, expected 1")
    min_eig = float(np.linalg.eigvalsh(m)[0])
    if min_eig < -1e-10:
        raise ValueError(f"process matrix is not PSD: min eigenvalue {min_eig!r}")
    return _frozen(m.copy())


def two_field_channel(p: float) -> PauliChannel:
    """Equal-probability sigma_1/sigma_2 flips with total flip probability p."""
    _check_probability(p)
    return PauliChannel(np.array([1.0 - p, p / 2.0, p / 2.0, 0.0]), family="two-field", p=float(p))


def isotropic_channel(p: float) -> PauliChannel:
    """Depolarization: each Pauli flip with probability p/3 (mapped sphere)."""
    _check_probability(p)
    return PauliChannel(
        np.array([1.0 - p, p / 3.0, p / 3.0, p / 3.0]), family="isotropic", p=float(p)
    )


def dephasing_channel(p: float) -> PauliChannel:
    """sigma_3 flip with probability p; shrinks the equatorial plane only."""
    _check_probability(p)
    return PauliChannel(np.array([1.0 - p, 0.0, 0.0, p]), family="dephasing", p=float(p))


def channel_for(family: str, p: float) -> PauliChannel:
    """Named-family constructor used by sweeps and the CLI."""
    if family == "two-field":
        return two_field_channel(p)
    if family == "isotropic":
        return isotropic_channel(p)
    if family == "dephasing":
        return dephasing_channel(p)
    raise ValueError(f"unknown channel family {family!r}; expected one of {PAULI_FAMILIES}")


def _check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {p!r}")


def hwp_angle_to_p(theta: float) -> float:
    """Noise probability realized by a half-wave plate at angle theta: sin^2(2 theta)."""
    return float(np.sin(2.0 * theta) ** 2)


def noise_probability(channel: PauliChannel) -> float:
    """Probability that the input state is changed at all: 1 - chi_0."""
    return float(1.0 - _chi_diag(channel)[0])


def radii_from_chi(channel) -> np.ndarray:
    """Signed primary radii R_i = chi_0 + chi_i - chi_j - chi_k of the mapped ellipsoid."""
    chi = _chi_diag(channel)
    s = chi.sum()
    return _frozen(np.array([2.0 * (chi[0] + chi[i]) - s for i in (1, 2, 3)]))


def chi_from_radii(radii) -> np.ndarray:
    """Diagonal weights inverting :func:`radii_from_chi`.

    The result is returned raw: entries may be negative when the radii are
    not completely positive, which is exactly what the CP check inspects.
    Use :func:`pauli_channel_from_radii` to get a validated channel.
    """
    r = np.asarray(radii, dtype=float).reshape(-1)
    if r.size != 3:
        raise ValueError(f"radii must have 3 entries, got {r.size}")
    r1, r2, r3 = r
    return _frozen(
        0.25
        * np.array(
            [1.0 + r1 + r2 + r3, 1.0 + r1 - r2 - r3, 1.0 - r1 + r2 - r3, 1.0 - r1 - r2 + r3]
        )
    )


def pauli_channel_from_radii(radii) -> PauliChannel:
    """Validated Pauli channel with the given ellipsoid radii.

    Raises ``ValueError`` naming the offending weight when the radii fall
    outside the completely positive tetrahedron.
    """
    chi = chi_from_radii(radii)
    if chi.min() < -CP_TOL:
        raise ValueError(
            f"radii {np.asarray(radii).tolist()} are not completely positive: "
            f"chi_{int(chi.argmin())} = {chi.min()!r} < 0"
        )
    chi = np.clip(chi, 0.0, None)
    return PauliChannel(chi / chi.sum())


def cp_violations(radii, tol: float = CP_TOL) -> list[str]:
    """Human-readable list of violated tetrahedron inequalities (empty if CP)."""
    r = np.asarray(radii, dtype=float).reshape(-1)
    out = []
    for i, j, k in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
        for sign, label in ((1.0, "+"), (-1.0, "-")):
            lhs = abs(r[i] + sign * r[j])
            rhs = abs(1.0 + sign * r[k])
            if lhs > rhs + tol:
                out.append(
                    f"|R{i + 1} {label} R{j + 1}| = {lhs:.6g} > |1 {label} R{k + 1}| = {rhs:.6g}"
                )
    return out


def is_completely_positive(radii, tol: float = CP_TOL) -> bool:
    """True iff the signed radii satisfy all tetrahedron inequalities."""
    return not cp_violations(radii, tol=tol)


def kraus_operators(channel) -> list[np.ndarray]:
    """Kraus decomposition of a channel in any supported representation."""
    if isinstance(channel, PauliChannel):
        return [np.sqrt(w) * PAULIS[i] for i, w in enumerate(channel.chi_diag) if w > 0.0]
    if isinstance(channel, UnitalChannel):
        chi = np.clip(chi_from_radii(channel.radii), 0.0, None)
        u, v = channel.post_rotation, channel.pre_rotation
        return [np.sqrt(w) * (u @ PAULIS[i] @ v) for i, w in enumerate(chi) if w > 0.0]
    chi = np.asarray(channel, dtype=complex)
    if chi.shape != (4, 4):
        raise ValueError(f"unsupported channel representation: {type(channel).__name__}")
    w, vecs = np.linalg.eigh(chi)
    ops = []
    for a in range(4):
        if w[a] > 1e-14:
            k = sum(vecs[m, a] * PAULIS[m] for m in range(4))
            ops.append(np.sqrt(w[a]) * k)
    return ops


def apply(channel, rho) -> np.ndarray:
    """Act with a single-qubit channel on a single-qubit density matrix."""
    m = np.asarray(rho, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 state, got shape {m.shape}")
    if isinstance(channel, PauliChannel):
        chi = channel.chi_diag
        out = sum(chi[i] * (PAULIS[i] @ m @ PAULIS[i]) for i in range(4) if chi[i] != 0.0)
        return _frozen(np.asarray(out))
    if isinstance(channel, UnitalChannel):
        u, v = channel.post_rotation, channel.pre_rotation
        inner = apply(PauliChannel(np.clip(chi_from_radii(channel.radii), 0.0, None)), v @ m @ v.conj().T)
        return _frozen(u @ inner @ u.conj().T)
    chi = np.asarray(channel, dtype=complex)
    if chi.shape != (4, 4):
        raise ValueError(f"unsupported channel representation: {type(channel).__name__}")
    out = np.zeros((2, 2), dtype=complex)
    for a in range(4):
        for b in range(4):
            if chi[a, b] != 0.0:
                out += chi[a, b] * (PAULIS[a] @ m @ PAULIS[b])
    return _frozen(out)


def apply_one_sided(channel, rho, target: int = 1) -> np.ndarray:
    """Act with a single-qubit channel on one qubit of a two-qubit state."""
    m = np.asarray(rho, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 state, got shape {m.shape}")
    if target not in (0, 1):
        raise ValueError(f"target must be 0 or 1, got {target!r}")
    eye = np.eye(2, dtype=complex)
    out = np.zeros((4, 4), dtype=complex)
    for k in kraus_operators(channel):
        lifted = np.kron(k, eye) if target == 0 else np.kron(eye, k)
        out += lifted @ m @ lifted.conj().T
    return _frozen(out)


def apply_two_sided(channel, rho) -> np.ndarray:
    """Act with the same channel independently on both qubits."""
    return apply_one_sided(channel, apply_one_sided(channel, rho, target=0), target=1)


def compose(first, second):
    """Channel equivalent to applying ``first`` and then ``second``.

    Two Pauli channels compose to a Pauli channel (flip weights convolve over
    the Pauli group, so the radii multiply component-wise). Anything else is
    composed through the Bloch affine maps and re-decomposed.
    """
    if isinstance(first, PauliChannel) and isinstance(second, PauliChannel):
        a, b = first.chi_diag, second.chi_diag
        out = np.zeros(4)
        for i in range(4):
            for j in range(4):
                out[_PAULI_PRODUCT[i][j]] += b[i] * a[j]
        return PauliChannel(out)
    m = bloch_affine_map(second) @ bloch_affine_map(first)
    return decompose_unital(m)


def bloch_affine_map(channel) -> np.ndarray:
    """3x3 matrix M with bloch(channel(rho)) = M bloch(rho).

    Only defined for unital channels (zero translation part); a channel that
    moves the maximally mixed state is rejected.
    """
    if isinstance(channel, PauliChannel):
        return _frozen(np.diag(radii_from_chi(channel)))
    if isinstance(channel, UnitalChannel):
        return _frozen(
            rotation_from_su2(channel.post_rotation)
            @ np.diag(channel.radii)
            @ rotation_from_su2(channel.pre_rotation)
        )
    translation = bloch_vector(apply(channel, 0.5 * SIGMA_0))
    if np.linalg.norm(translation) > 1e-10:
        raise ValueError(
            f"channel is not unital: image of I/2 has Bloch vector {translation.tolist()}"
        )
    cols = [
        bloch_vector(apply(channel, density_from_bloch(axis)))
        for axis in ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    ]
    return _frozen(np.column_stack(cols))


def decompose_unital(m) -> UnitalChannel:
    """Split a unital Bloch map into proper rotations and signed radii.

    The canonical form has |R1| >= |R2| >= |R3| with at most one negative
    radius (carrying the sign of det M); reflections are absorbed into the
    rotations. Raises ``ValueError`` quoting the violated tetrahedron
    inequality when the map is not completely positive.
    """
    mat = np.asarray(m, dtype=float)
    if mat.shape != (3, 3):
        raise ValueError(f"expected a 3x3 real matrix, got shape {mat.shape}")
    w, s, xt = np.linalg.svd(mat)
    r = s.copy()
    if np.linalg.det(w) < 0:
        w = w.copy()
        w[:, 2] *= -1.0
        r[2] *= -1.0
    if np.linalg.det(xt) < 0:
        xt = xt.copy()
        xt[2, :] *= -1.0
        r[2] *= -1.0
    violations = cp_violations(r, tol=1e-10)
    if violations:
        raise ValueError("Bloch map is not completely positive: " + "; ".join(violations))
    return UnitalChannel(
        pre_rotation=su2_from_rotation(xt), post_rotation=su2_from_rotation(w), radii=r
    )


def rotation_from_su2(u) -> np.ndarray:
    """SO(3) Bloch rotation of the conjugation rho -> u rho u^dag."""
    m = np.asarray(u, dtype=complex)
    o = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            o[i, j] = 0.5 * np.trace(PAULIS[i + 1] @ m @ PAULIS[j + 1] @ m.conj().T).real
    return _frozen(o)


def su2_from_rotation(o) -> np.ndarray:
    """SU(2) element whose Bloch conjugation is the proper rotation ``o``.

    Uses the quaternion extraction that stays well-conditioned for every
    rotation angle (the result is fixed only up to a global sign, which does
    not affect conjugation).
    """
    m = np.asarray(o, dtype=float)
    if m.shape != (3, 3) or np.max(np.abs(m @ m.T - np.eye(3))) > 1e-9 or np.linalg.det(m) < 0:
        raise ValueError("expected a proper rotation matrix")
    t = m[0, 0] + m[1, 1] + m[2, 2]
    if t > max(m[0, 0], m[1, 1], m[2, 2]):
        s = 2.0 * np.sqrt(1.0 + t)
        q = (0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s)
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = 2.0 * np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q = ((m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s)
    elif m[1, 1] >= m[2, 2]:
        s = 2.0 * np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q = ((m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s)
    else:
        s = 2.0 * np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q = ((m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s)
    u = q[0] * PAULIS[0] - 1j * (q[1] * PAULIS[1] + q[2] * PAULIS[2] + q[3] * PAULIS[3])
    return _frozen(np.asarray(u))


def channel_to_json(channel) -> dict:
    """Serialize a channel to its description object (one parameterization)."""
    if isinstance(channel, PauliChannel):
        if channel.family in PAULI_FAMILIES and channel.p is not None:
            return {"family": channel.family, "p": float(channel.p)}
        return {"family": "pauli", "chi": [float(x) for x in channel.chi_diag]}
    if isinstance(channel, UnitalChannel):
        return {
            "family": "unital",
            "radii": [float(x) for x in channel.radii],
            "u": matrix_to_json(channel.post_rotation),
            "v": matrix_to_json(channel.pre_rotation),
        }
    raise ValueError(f"unsupported channel representation: {type(channel).__name__}")


def channel_from_json(obj: dict):
    """Parse a channel description object, enforcing exactly one parameterization."""
    if not isinstance(obj, dict) or "family" not in obj:
        raise ValueError("channel object must be a mapping with a 'family' key")
    family = obj["family"]
    params = set(obj) - {"family"}
    if family in PAULI_FAMILIES:
        if params != {"p"}:
            raise ValueError(f"family {family!r} takes exactly the parameter 'p', got {sorted(params)}")
        return channel_for(family, float(obj["p"]))
    if family == "pauli":
        if params != {"chi"}:
            raise ValueError(f"family 'pauli' takes exactly the parameter 'chi', got {sorted(params)}")
        return PauliChannel(np.asarray(obj["chi"], dtype=float))
    if family == "unital":
        if params != {"radii", "u", "v"}:
            raise ValueError(
                f"family 'unital' takes exactly the parameters radii/u/v, got {sorted(params)}"
            )
        return UnitalChannel(
            pre_rotation=matrix_from_json(obj["v"]),
            post_rotation=matrix_from_json(obj["u"]),
            radii=np.asarray(obj["radii"], dtype=float),
        )
    raise ValueError(f"unknown channel family {family!r}")


def _chi_diag(channel) -> np.ndarray:
    if isinstance(channel, PauliChannel):
        return channel.chi_diag
    chi = np.asarray(channel, dtype=float).reshape(-1)
    if chi.size != 4:
        raise ValueError(f"expected a Pauli channel or 4 diagonal weights, got {channel!r}")
    return chi


def channel_radii(channel) -> np.ndarray:
    """Signed ellipsoid radii of a Pauli or rotated unital channel."""
    if isinstance(channel, UnitalChannel):
        return channel.radii
    return radii_from_chi(channel)
