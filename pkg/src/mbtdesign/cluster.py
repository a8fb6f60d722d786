"""Linear cluster states and exact enumeration of measurement branches.

Qubit 1 (the input qubit) is the least significant bit of every amplitude
index, so an outcome bitstring reads ``m_{n-1} ... m_2 m_1`` from left to
right. Measuring in the phi-direction is done by rotating each measured qubit
with ``H Rz(phi)`` and then reading the computational basis.
"""

from __future__ import annotations

import dataclasses
import json
import math
import warnings
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import AngleCountMismatch, ConfigError, InvalidState, LengthMismatch
from .numerics import H, I2, Z, dagger, rz

PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
SCHEMA_VERSION = 1


@dataclasses.dataclass(frozen=True)
class Branch:
    outcome: str
    probability: float
    output_state: np.ndarray


def outcome_strings(links: int) -> list[str]:
    """All outcomes of a chain with ``links`` measured qubits, ordered by integer value."""
    return [format(j, f"0{links}b") if links else "" for j in range(2**links)]


def outcome_bits(outcome: str) -> list[int]:
    """Measurement results ``[m_1, m_2, ...]`` in measurement order."""
    if any(c not in "01" for c in outcome):
        raise ConfigError(f"outcome {outcome!r} is not a bitstring")
    return [int(c) for c in reversed(outcome)]


def link_unitary(m: int, phi: float) -> np.ndarray:
    """U_m(phi) = H Z^m Rz(phi)."""
    return H @ (Z if m else I2) @ rz(phi)


def logical_unitary(outcome: str, angles: Sequence[float]) -> np.ndarray:
    """Unitary applied to the input qubit for a given outcome and angle list."""
    bits = outcome_bits(outcome)
    if len(bits) != len(angles):
        raise LengthMismatch(
            f"outcome has {len(bits)} bits but {len(angles)} angles were given"
        )
    u = np.eye(2, dtype=complex)
    for m, phi in zip(bits, angles):
        u = link_unitary(m, phi) @ u
    return u


def _validate_qubit_state(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.shape == (2,):
        norm = np.vdot(state, state).real
        if abs(norm - 1) > 1e-10:
            raise InvalidState(f"input vector has norm^2 {norm:.12g}")
        return state
    if state.shape != (2, 2):
        raise InvalidState(f"expected a 1-qubit state, got shape {state.shape}")
    if np.max(np.abs(state - dagger(state))) > 1e-10:
        raise InvalidState("input density matrix is not Hermitian")
    if abs(np.trace(state) - 1) > 1e-10:
        raise InvalidState("input density matrix does not have unit trace")
    if np.linalg.eigvalsh(0.5 * (state + dagger(state)))[0] < -1e-9:
        raise InvalidState("input density matrix is not positive semidefinite")
    return state


def _cz_chain_phases(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    bits = (idx[:, None] >> np.arange(n)) & 1
    parity = np.sum(bits[:, :-1] & bits[:, 1:], axis=1) & 1
    return np.where(parity, -1.0, 1.0)


def build_linear_cluster(n: int, input_state) -> np.ndarray:
    """Prepare qubit 1 in ``input_state``, qubits 2..n in |+>, then CZ each neighbour pair.

    A state vector input gives a ``2**n`` state vector; a 2x2 density matrix
    gives a ``2**n x 2**n`` density matrix.
    """
    if n < 2:
        raise ConfigError(f"a linear cluster needs n >= 2 qubits, got {n}")
    psi = _validate_qubit_state(input_state)
    phases = _cz_chain_phases(n)
    rest = np.ones(2 ** (n - 1), dtype=complex) / np.sqrt(2 ** (n - 1))
    if psi.ndim == 1:
        return np.kron(rest, psi) * phases
    full = np.kron(np.outer(rest, rest.conj()), psi)
    return full * np.outer(phases, phases)


def _apply_single(tensor: np.ndarray, gate: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(gate, tensor, axes=([1], [axis])), 0, axis)


def _reduce_angles(angles: Sequence[float]) -> list[float]:
    out = []
    for phi in angles:
        phi = float(phi)
        if not 0.0 <= phi <= math.pi:
            warnings.warn(f"measurement angle {phi} outside [0, pi]; reducing mod 2pi")
            phi = phi % (2 * math.pi)
        out.append(phi)
    return out


def measure_chain(state, angles: Sequence[float]) -> list[Branch]:
    """Enumerate every outcome of measuring qubits 1..n-1 in the given directions.

    ``state`` is either a state vector or a density matrix on n qubits. Branch
    probabilities are exact and each output state is the normalised density
    matrix left on qubit n.
    """
    state = np.asarray(state, dtype=complex)
    n = int(round(math.log2(state.shape[0])))
    if len(angles) != n - 1:
        raise AngleCountMismatch(f"{n}-qubit chain needs {n - 1} angles, got {len(angles)}")
    angles = _reduce_angles(angles)
    rotations = [H @ rz(phi) for phi in angles]
    outcomes = outcome_strings(n - 1)
    branches = []

    if state.ndim == 1:
        psi = state.reshape((2,) * n)
        for q, g in enumerate(rotations, start=1):
            psi = _apply_single(psi, g, n - q)
        # rows: qubit n, columns: outcome index
        amps = psi.reshape(2, 2 ** (n - 1))
        for j, outcome in enumerate(outcomes):
            v = amps[:, j]
            prob = float(np.vdot(v, v).real)
            rho = np.outer(v, v.conj()) / prob if prob > 0 else np.eye(2) / 2
            branches.append(Branch(outcome, prob, rho))
        return branches

    rho = state.reshape((2,) * (2 * n))
    for q, g in enumerate(rotations, start=1):
        rho = _apply_single(rho, g, n - q)
        rho = _apply_single(rho, g.conj(), 2 * n - q)
    blocks = rho.reshape(2, 2 ** (n - 1), 2, 2 ** (n - 1))
    for j, outcome in enumerate(outcomes):
        block = blocks[:, j, :, j]
        prob = float(np.trace(block).real)
        out = block / prob if prob > 0 else np.eye(2) / 2
        branches.append(Branch(outcome, prob, out))
    return branches


def branch_distribution(branches: Iterable[Branch]) -> dict[str, float]:
    return {b.outcome: b.probability for b in branches}


def sample_counts(distribution, shots: int, seed: int) -> dict[str, int]:
    """Multinomial sample of ``shots`` outcomes, reproducible for a given seed.

    ``distribution`` is a list of :class:`Branch` or a mapping outcome -> probability.
    """
    if not isinstance(distribution, Mapping):
        distribution = branch_distribution(distribution)
    keys = list(distribution)
    probs = np.clip(np.array([distribution[k] for k in keys], dtype=float), 0, None)
    total = probs.sum()
    if abs(total - 1) > 1e-8:
        raise ConfigError(f"probabilities sum to {total}, not 1")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(int(shots), probs / total)
    return {k: int(c) for k, c in zip(keys, counts)}


def counts_to_json(counts: Mapping[str, int], *, shots: int, seed: int | None,
                   angles: Sequence[float], n: int) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "n": n,
        "shots": shots,
        "seed": seed,
        "angles": [float(a) for a in angles],
        "counts": {k: int(v) for k, v in counts.items()},
    }
    return json.dumps(doc, indent=2)


def counts_from_json(text: str) -> dict:
    doc = json.loads(text)
    if "counts" not in doc:
        # flat form: bitstrings at top level next to the metadata fields
        doc = {
            "counts": {k: v for k, v in doc.items() if set(k) <= {"0", "1"}},
            **{k: v for k, v in doc.items() if not set(k) <= {"0", "1"}},
        }
    return doc


def all_outcome_unitaries(angles: Sequence[float]) -> dict[str, np.ndarray]:
    links = len(angles)
    return {o: logical_unitary(o, angles) for o in outcome_strings(links)}


def cz_from_cx_identity() -> np.ndarray:
    """(I x H) CX (I x H), which equals CZ."""
    from .numerics import CX

    ih = np.kron(I2, H)
    return ih @ CX @ ih


__all__ = [
    "Branch",
    "PLUS",
    "all_outcome_unitaries",
    "branch_distribution",
    "build_linear_cluster",
    "counts_from_json",
    "counts_to_json",
    "cz_from_cx_identity",
    "link_unitary",
    "logical_unitary",
    "measure_chain",
    "outcome_bits",
    "outcome_strings",
    "sample_counts",
]
