"""Core linear algebra for one- and two-qubit states.

Conventions used throughout the package:

* computational basis |0> = |h> (horizontal), |1> = |v> (vertical),
* two-qubit basis ordering |00>, |01>, |10>, |11>,
* Pauli operators sigma_0..sigma_3 = (I, X, Y, Z), so sigma_3|h> = +|h>
  and |h><h| sits at the +z pole of the Bloch sphere.

All constructors return read-only arrays; every function is pure, so values
can be shared freely between threads or tasks.
"""

from __future__ import annotations

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
NORM_TOL = 1e-12


def _frozen(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


SIGMA_0 = _frozen(np.eye(2, dtype=complex))
SIGMA_1 = _frozen(np.array([[0, 1], [1, 0]], dtype=complex))
SIGMA_2 = _frozen(np.array([[0, -1j], [1j, 0]], dtype=complex))
SIGMA_3 = _frozen(np.array([[1, 0], [0, -1]], dtype=complex))
PAULIS = (SIGMA_0, SIGMA_1, SIGMA_2, SIGMA_3)

_S2 = 1.0 / np.sqrt(2.0)

# Single-qubit polarization kets: +z, -z, +x, -x, +y, -y.
KET_H = _frozen(np.array([1, 0], dtype=complex))
KET_V = _frozen(np.array([0, 1], dtype=complex))
KET_D = _frozen(np.array([_S2, _S2], dtype=complex))
KET_A = _frozen(np.array([_S2, -_S2], dtype=complex))
KET_R = _frozen(np.array([_S2, 1j * _S2], dtype=complex))
KET_L = _frozen(np.array([_S2, -1j * _S2], dtype=complex))

BASIS_KETS = {"H": KET_H, "V": KET_V, "D": KET_D, "A": KET_A, "R": KET_R, "L": KET_L}

BELL_KETS = {
    "phi_plus": _frozen(np.array([_S2, 0, 0, _S2], dtype=complex)),
    "phi_minus": _frozen(np.array([_S2, 0, 0, -_S2], dtype=complex)),
    "psi_plus": _frozen(np.array([0, _S2, _S2, 0], dtype=complex)),
    "psi_minus": _frozen(np.array([0, _S2, -_S2, 0], dtype=complex)),
}


def ket(amplitudes) -> np.ndarray:
    """Validate a pure-state vector (dim 2 or 4, unit norm) and freeze it."""
    v = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if v.size not in (2, 4):
        raise ValueError(f"ket must have dimension 2 or 4, got {v.size}")
    norm_sq = float(np.vdot(v, v).real)
    if abs(norm_sq - 1.0) > NORM_TOL:
        raise ValueError(f"ket is not normalized: |psi|^2 = {norm_sq!r}")
    return _frozen(v.copy())


def dm(psi) -> np.ndarray:
    """Outer product |psi><psi| of a ket (not re-validated)."""
    v = np.asarray(psi, dtype=complex).reshape(-1)
    return _frozen(np.outer(v, v.conj()))


def bell_state(name: str) -> np.ndarray:
    """Density matrix of one of the four Bell states.

    Accepts ``phi_plus``/``phi_minus``/``psi_plus``/``psi_minus`` or the
    short forms ``phi+``, ``phi-``, ``psi+``, ``psi-``.
    """
    key = name.strip().lower().replace("+", "_plus").replace("-", "_minus")
    if key not in BELL_KETS:
        raise ValueError(f"unknown Bell state {name!r}")
    return dm(BELL_KETS[key])


def density_matrix(matrix, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Validate a density matrix (Hermitian, unit trace, PSD) and freeze it.

    ``psd_tol`` is the slack allowed on the smallest eigenvalue; analytic
    states use the default, tomography reconstructions pass a looser 1e-6.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
        raise ValueError(f"expected a 2x2 or 4x4 matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
        raise ValueError("matrix is not Hermitian")
    trace = complex(np.trace(m))
    if abs(trace - 1.0) > TRACE_TOL:
        raise ValueError(f"matrix trace is {trace!r}, expected 1")
    min_eig = float(np.linalg.eigvalsh(m)[0])
    if min_eig < -psd_tol:
        raise ValueError(f"matrix is not positive semidefinite: min eigenvalue {min_eig!r}")
    return _frozen(m.copy())


def is_density_matrix(matrix, psd_tol: float = PSD_TOL) -> bool:
    try:
        density_matrix(matrix, psd_tol=psd_tol)
    except ValueError:
        return False
    return True


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product of two single-qubit operators (first factor = qubit 0)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError(f"expected two 2x2 matrices, got shapes {a.shape} and {b.shape}")
    return _frozen(np.kron(a, b))


def partial_trace(rho, keep: int) -> np.ndarray:
    """Trace out one qubit of a two-qubit operator, keeping qubit ``keep`` (0 or 1)."""
    m = np.asarray(rho, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
    if keep not in (0, 1):
        raise ValueError(f"keep must be 0 or 1, got {keep!r}")
    t = m.reshape(2, 2, 2, 2)  # indices: row0, row1, col0, col1
    if keep == 0:
        out = np.einsum("ijkj->ik", t)
    else:
        out = np.einsum("ijil->jl", t)
    return _frozen(out)


def bloch_vector(rho) -> np.ndarray:
    """Bloch components (Tr(rho sigma_1), Tr(rho sigma_2), Tr(rho sigma_3))."""
    m = np.asarray(rho, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    return _frozen(np.array([float(np.trace(m @ s).real) for s in PAULIS[1:]]))


def density_from_bloch(vec) -> np.ndarray:
    """Inverse Bloch map: rho = (sigma_0 + x sigma_1 + y sigma_2 + z sigma_3)/2."""
    v = np.asarray(vec, dtype=float).reshape(-1)
    if v.size != 3:
        raise ValueError(f"expected 3 Bloch components, got {v.size}")
    norm = float(np.linalg.norm(v))
    if norm > 1.0 + PSD_TOL:
        raise ValueError(f"Bloch vector has norm {norm!r} > 1")
    out = 0.5 * (SIGMA_0 + v[0] * SIGMA_1 + v[1] * SIGMA_2 + v[2] * SIGMA_3)
    return _frozen(out)


def hermitian_eigenvalues(matrix, herm_tol: float = 1e-10) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, sorted descending."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > herm_tol:
        raise ValueError("matrix is not Hermitian")
    return _frozen(np.linalg.eigvalsh(m)[::-1].copy())


def psd_sqrt(matrix) -> np.ndarray:
    """Hermitian square root of a PSD matrix.

    Eigenvalues below the eigensolver's noise floor (relative 1e-14) are
    zeroed before the square root: sqrt would amplify that noise to 1e-7,
    which is what limits concurrence and fidelity accuracy on rank-deficient
    states.
    """
    m = np.asarray(matrix, dtype=complex)
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    if w[-1] > 0.0:
        w[w < 1e-14 * w[-1]] = 0.0
    return (v * np.sqrt(w)) @ v.conj().T


def purity(rho) -> float:
    """Tr(rho^2)."""
    m = np.asarray(rho, dtype=complex)
    return float(np.trace(m @ m).real)


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity, evaluated as the squared nuclear norm of
    sqrt(rho) sqrt(sigma) (numerically stable for rank-deficient states)."""
    a = np.asarray(rho, dtype=complex)
    b = np.asarray(sigma, dtype=complex)
    singular = np.linalg.svd(psd_sqrt(a) @ psd_sqrt(b), compute_uv=False)
    return float(np.sum(singular) ** 2)


def trace_distance(rho, sigma) -> float:
    """T(rho, sigma) = (1/2) sum |eigenvalues of rho - sigma|."""
    d = np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(d))))


def matrix_to_json(matrix) -> dict:
    """Serialize a complex matrix as {"dim": n, "re": [...], "im": [...]} (row-major)."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return {
        "dim": int(m.shape[0]),
        "re": [float(x) for x in m.real.reshape(-1)],
        "im": [float(x) for x in m.imag.reshape(-1)],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    """Inverse of :func:`matrix_to_json`."""
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix object: {exc}") from exc
    if re.size != dim * dim or im.size != dim * dim:
        raise ValueError(f"matrix object claims dim {dim} but carries {re.size} entries")
    return _frozen((re + 1j * im).reshape(dim, dim))
