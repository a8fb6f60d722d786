"""Dense complex linear algebra shared by the rest of the package.

Matrices are plain ``numpy.ndarray`` objects of complex dtype. Tolerances live
in the module-level :data:`TOL` so that callers (tests in particular) can
tighten or relax them with :func:`tolerances`.
"""

from __future__ import annotations

import contextlib
import dataclasses
from functools import reduce
from typing import Iterator

import numpy as np

from .errors import NotHermitian, TooNegative


@dataclasses.dataclass
class Tolerances:
    hermitian: float = 1e-10
    too_negative: float = -1e-6
    support_rel: float = 1e-9
    support_weight: float = 1e-9


TOL = Tolerances()


@contextlib.contextmanager
def tolerances(**overrides: float) -> Iterator[Tolerances]:
    """Temporarily override entries of :data:`TOL`."""
    saved = dataclasses.replace(TOL)
    for key, value in overrides.items():
        if not hasattr(TOL, key):
            raise AttributeError(f"unknown tolerance {key!r}")
        setattr(TOL, key, value)
    try:
        yield TOL
    finally:
        for field in dataclasses.fields(Tolerances):
            setattr(TOL, field.name, getattr(saved, field.name))


I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.diag([1, 1j])
CZ = np.diag([1, 1, 1, -1]).astype(complex)
# control on the left tensor factor
CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
PAULIS = (I2, X, Y, Z)


def rz(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(*ops) -> np.ndarray:
    return reduce(kron, ops)


def tensor_power(a, t: int) -> np.ndarray:
    return reduce(kron, [a] * t)


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_error(h: np.ndarray) -> float:
    return float(np.max(np.abs(h - dagger(h)), initial=0.0))


def _check_hermitian(h, tol: float | None = None) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {h.shape}")
    tol = TOL.hermitian if tol is None else tol
    err = hermitian_error(h)
    if err > tol:
        raise NotHermitian(f"max |A - A^dag| = {err:.3g} exceeds {tol:.1g}")
    return 0.5 * (h + dagger(h))


def hermitian_eig(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns:
        Ascending real eigenvalues and the matching orthonormal eigenvectors
        as the columns of a unitary matrix.

    Raises:
        NotHermitian: if ``h`` deviates from its adjoint by more than
            ``TOL.hermitian`` in any entry.
    """
    h = _check_hermitian(h)
    return np.linalg.eigh(h)


def min_eigenvalue(h) -> float:
    h = _check_hermitian(h)
    return float(np.linalg.eigvalsh(h)[0])


def clip_psd(h) -> tuple[np.ndarray, float]:
    """Project a Hermitian matrix onto the PSD cone by clipping eigenvalues.

    Returns the repaired matrix and the magnitude of the most negative
    eigenvalue that was removed (0 when nothing was clipped).
    """
    w, v = hermitian_eig(h)
    if w[0] < TOL.too_negative:
        raise TooNegative(f"eigenvalue {w[0]:.3g} below {TOL.too_negative:.1g}")
    clipped = max(0.0, -float(w[0]))
    w = np.clip(w, 0.0, None)
    return (v * w) @ dagger(v), clipped


def psd_sqrt(h) -> np.ndarray:
    """Hermitian PSD square root, clipping small negative eigenvalues to 0."""
    w, v = hermitian_eig(h)
    if w[0] < TOL.too_negative:
        raise TooNegative(f"eigenvalue {w[0]:.3g} below {TOL.too_negative:.1g}")
    w = np.where(w < 0, 0.0, w)
    return (v * np.sqrt(w)) @ dagger(v)


def global_phase_overlap(a: np.ndarray, b: np.ndarray) -> float:
    """|Tr(a^dag b)| / d, equal to 1 iff the unitaries agree up to phase."""
    return float(abs(np.trace(dagger(a) @ b)) / a.shape[0])


def is_unitary(u: np.ndarray, atol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return u.shape[0] == u.shape[1] and np.allclose(
        dagger(u) @ u, np.eye(u.shape[0]), atol=atol
    )
