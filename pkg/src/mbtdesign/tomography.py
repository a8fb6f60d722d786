"""Single-qubit state tomography, chi-matrix channel tomography and channel fidelity.

chi matrices are 4x4 complex arrays in the operator basis (I, X, -iY, Z),
so that a channel acts as ``rho -> sum_mn chi[m, n] E_m rho E_n^dag``.
"""

from __future__ import annotations

import json
from typing import Mapping

import numpy as np

from .errors import EmptyCounts, InvalidState, NonPhysicalChi, NotUnitary, TooNegative
from .numerics import I2, TOL, X, Y, Z, dagger, is_unitary, psd_sqrt

CHI_BASIS = np.array([I2, X, -1j * Y, Z])
CHI_BASIS_LABEL = "I,X,-iY,Z"

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_PLUS_Y = np.array([1, 1j], dtype=complex) / np.sqrt(2)
PROBE_KETS = (KET0, KET1, KET_PLUS, KET_PLUS_Y)
PROBE_STATES = tuple(np.outer(k, k.conj()) for k in PROBE_KETS)

# sampled tomography data is rarely CP-consistent; this bounds how much
# negative weight the physicality repair may remove before it is an error
SAMPLED_CLIP_LIMIT = 0.1


def bloch_vector(rho) -> np.ndarray:
    rho = np.asarray(rho)
    return np.real([np.trace(rho @ X), np.trace(rho @ Y), np.trace(rho @ Z)])


def state_from_expectations(x: float, y: float, z: float) -> tuple[np.ndarray, bool]:
    """Density matrix with Bloch vector (x, y, z).

    Vectors longer than 1 are rescaled onto the sphere; the second return
    value reports whether that happened.
    """
    r = np.array([x, y, z], dtype=float)
    norm = np.linalg.norm(r)
    rescaled = bool(norm > 1.0)
    if rescaled:
        r = r / norm
    rho = 0.5 * (I2 + r[0] * X + r[1] * Y + r[2] * Z)
    return rho, rescaled


def _expectation(counts: Mapping[str, float]) -> float:
    n0 = float(counts.get("0", 0))
    n1 = float(counts.get("1", 0))
    total = n0 + n1
    if total <= 0:
        raise EmptyCounts("counts map is empty")
    return (n0 - n1) / total


def state_tomography(counts_x, counts_y, counts_z) -> np.ndarray:
    """Linear-inversion state tomography from X, Y and Z basis counts.

    Each counts map has keys ``"0"`` (the +1 eigenstate) and ``"1"``. Values
    may be integer counts or relative frequencies.
    """
    rho, _ = state_from_expectations(
        _expectation(counts_x), _expectation(counts_y), _expectation(counts_z)
    )
    return rho


def basis_probabilities(rho) -> dict[str, dict[str, float]]:
    """Exact outcome probabilities of X, Y and Z measurements on ``rho``."""
    x, y, z = bloch_vector(rho)
    return {
        basis: {"0": 0.5 * (1 + v), "1": 0.5 * (1 - v)}
        for basis, v in zip("xyz", (x, y, z))
    }


def _check_state(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise InvalidState(f"expected a 2x2 density matrix, got {rho.shape}")
    if np.max(np.abs(rho - dagger(rho))) > 1e-8 or abs(np.trace(rho) - 1) > 1e-6:
        raise InvalidState("probe output is not a unit-trace Hermitian matrix")
    return rho


def raw_chi_from_probe_outputs(rho0, rho1, rho_plus, rho_plus_y) -> np.ndarray:
    """Block-formula chi from the outputs of the |0>, |1>, |+>, |+y> probes, unrepaired."""
    r1, r4, rp, ry = (_check_state(r) for r in (rho0, rho1, rho_plus, rho_plus_y))
    r2 = rp + 1j * ry - 0.5 * (1 + 1j) * (r1 + r4)
    r3 = rp - 1j * ry - 0.5 * (1 - 1j) * (r1 + r4)
    lam = np.block([[I2, X], [X, -I2]])
    return lam @ np.block([[r1, r2], [r3, r4]]) @ lam / 4


def repair_chi(chi, max_clip: float | None = None) -> tuple[np.ndarray, float]:
    """Hermitise, clip negative eigenvalues and renormalise the trace to 1.

    Returns the repaired matrix and the magnitude of the most negative
    eigenvalue removed. Raises :class:`NonPhysicalChi` when that magnitude
    exceeds ``max_clip`` (default: ``-TOL.too_negative``).
    """
    chi = np.asarray(chi, dtype=complex)
    chi = 0.5 * (chi + dagger(chi))
    limit = -TOL.too_negative if max_clip is None else max_clip
    w, v = np.linalg.eigh(chi)
    clipped = max(0.0, -float(w[0]))
    if clipped > limit:
        raise NonPhysicalChi(f"chi eigenvalue {w[0]:.3g} beyond repair limit {limit:.1g}")
    if clipped > 0:
        w = np.clip(w, 0.0, None)
        chi = (v * w) @ dagger(v)
        tr = np.trace(chi).real
        if tr <= 0:
            raise NonPhysicalChi("chi has no positive weight")
        chi = chi / tr
    return chi, clipped


def chi_from_probe_outputs(rho0, rho1, rho_plus, rho_plus_y, *, max_clip=None) -> np.ndarray:
    """Reconstruct and repair the chi matrix of a channel from its four probe outputs."""
    chi, _ = repair_chi(raw_chi_from_probe_outputs(rho0, rho1, rho_plus, rho_plus_y), max_clip)
    return chi


def chi_of_unitary(u) -> np.ndarray:
    """Rank-1 chi of ``rho -> u rho u^dag``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u, atol=1e-10):
        raise NotUnitary("expected a 2x2 unitary")
    c = np.einsum("kij,ij->k", CHI_BASIS.conj(), u) / 2
    return np.outer(c, c.conj())


# _BASIS_PAIRS[m, n] = E_m (x) conj(E_n) as a 4x4 superoperator
_BASIS_PAIRS = np.einsum("mab,ncd->mnacbd", CHI_BASIS, CHI_BASIS.conj()).reshape(4, 4, 4, 4)


def chi_to_superop(chi) -> np.ndarray:
    """4x4 matrix acting on row-major vec(rho); also accepts a stack of chi matrices."""
    chi = np.asarray(chi)
    return np.einsum("...mn,mnij->...ij", chi, _BASIS_PAIRS)


def unitary_superop(u) -> np.ndarray:
    """u (x) conj(u); also accepts a stack of unitaries."""
    u = np.asarray(u, dtype=complex)
    out = np.einsum("...ab,...cd->...acbd", u, u.conj())
    return out.reshape(u.shape[:-2] + (4, 4))


def superop_to_chi(superop) -> np.ndarray:
    """Inverse of :func:`chi_to_superop`, using orthogonality of E_m (x) conj(E_n)."""
    s = np.asarray(superop, dtype=complex)
    return np.einsum("mnij,...ij->...mn", _BASIS_PAIRS.conj(), s) / 4


def apply_superop(superop, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return (np.asarray(superop) @ rho.reshape(-1)).reshape(2, 2)


def apply_chi(chi, rho) -> np.ndarray:
    """Output of the channel described by ``chi`` on input ``rho``.

    The result is Hermitised and renormalised to unit trace, which absorbs
    the small trace drift left behind by chi repair.
    """
    chi = np.asarray(chi, dtype=complex)
    tr = np.trace(chi).real
    if abs(tr - 1) > 0.05:
        raise NonPhysicalChi(f"chi trace {tr:.4f} too far from 1")
    out = np.einsum("mn,mab,bc,ndc->ad", chi, CHI_BASIS, rho, CHI_BASIS.conj())
    out = 0.5 * (out + dagger(out))
    return out / np.trace(out).real


def check_physical_chi(chi, name: str = "chi") -> np.ndarray:
    """Validate shape and trace of a chi matrix and return it as complex."""
    chi = np.asarray(chi, dtype=complex)
    if chi.shape != (4, 4):
        raise NonPhysicalChi(f"{name} must be 4x4, got {chi.shape}")
    if abs(np.trace(chi).real - 1) > 0.05:
        raise NonPhysicalChi(f"{name} trace {np.trace(chi).real:.4f} too far from 1")
    return chi


def channel_fidelity(chi_e, chi_c) -> float:
    """Tr sqrt( sqrt(chi_e) chi_c sqrt(chi_e) ), clamped to [0, 1].

    Evaluated as the nuclear norm of sqrt(chi_c) sqrt(chi_e), which avoids
    taking square roots of rounding-level eigenvalues.
    """
    chi_e = check_physical_chi(chi_e, "chi_e")
    chi_c = check_physical_chi(chi_c, "chi_c")
    try:
        root_e = psd_sqrt(0.5 * (chi_e + dagger(chi_e)))
        root_c = psd_sqrt(0.5 * (chi_c + dagger(chi_c)))
    except TooNegative as exc:
        raise NonPhysicalChi(str(exc)) from exc
    f = float(np.linalg.svd(root_c @ root_e, compute_uv=False).sum())
    return min(max(f, 0.0), 1.0)


def depolarising_chi(p: float) -> np.ndarray:
    return np.diag([1 - 0.75 * p, p / 4, p / 4, p / 4]).astype(complex)


def chi_to_dict(chi) -> dict:
    chi = np.asarray(chi)
    return {"re": chi.real.tolist(), "im": chi.imag.tolist(), "basis": CHI_BASIS_LABEL}


def chi_from_dict(doc: Mapping) -> np.ndarray:
    if doc.get("basis", CHI_BASIS_LABEL) != CHI_BASIS_LABEL:
        raise ValueError(f"unsupported chi basis {doc.get('basis')!r}")
    return np.array(doc["re"], dtype=float) + 1j * np.array(doc["im"], dtype=float)


def chi_to_json(chi) -> str:
    return json.dumps(chi_to_dict(chi))


def chi_from_json(text: str) -> np.ndarray:
    return chi_from_dict(json.loads(text))
