"""Simulated experiment pipeline: the 12-circuit channel-tomography protocol.

Each circuit prepares one of the four probe states on qubit 1, measures
qubits 1..n-1 in their phi-directions and measures qubit n in the X, Y or Z
basis. A circuit yields an n-bit outcome string whose leftmost bit is the
qubit-n tomography result and whose remaining bits are the chain outcome.

Circuits can be evaluated exactly or sampled with a fixed number of shots,
optionally through a readout confusion model and readout mitigation.
"""

from __future__ import annotations

import dataclasses
from typing import Mapping, Sequence

import numpy as np

from .cluster import Branch, build_linear_cluster, measure_chain, outcome_strings
from .design import UnitaryEnsemble
from .errors import ConfigError, EmptyCounts
from .noise import (
    CalibrationMatrix,
    ConfusionModel,
    calibration_from_counts,
    calibration_matrix,
    distribution_to_vector,
    mitigate,
    vector_to_distribution,
)
from .numerics import H, S, dagger
from .tomography import (
    PROBE_KETS,
    PROBE_STATES,
    SAMPLED_CLIP_LIMIT,
    raw_chi_from_probe_outputs,
    repair_chi,
    state_tomography,
)

BASES = ("x", "y", "z")
# rotations taking the +1 eigenstate of each basis to |0>
_BASIS_ROTATIONS = {"x": H, "y": H @ dagger(S), "z": np.eye(2, dtype=complex)}
CALIBRATION_SHOTS = 8000


@dataclasses.dataclass
class ProtocolResult:
    """Per-circuit outcome frequencies keyed by ``(probe_index, basis)``."""

    links: int
    frequencies: dict
    shots: int | None
    mitigated: bool
    calibration: CalibrationMatrix | None = None


def cluster_probe_branches(angles: Sequence[float], probe: int) -> list[Branch]:
    """Exact branches of the ideal cluster with probe ``probe`` on qubit 1."""
    state = build_linear_cluster(len(angles) + 1, PROBE_KETS[probe])
    return measure_chain(state, angles)


def ensemble_probe_branches(ensemble: UnitaryEnsemble, probe: int) -> list[Branch]:
    """Branches of an ensemble of channels acting on probe ``probe``."""
    outs = ensemble.apply(PROBE_STATES[probe][None])[0]
    return [
        Branch(o, float(p), rho)
        for o, p, rho in zip(ensemble.outcomes, ensemble.probabilities, outs)
    ]


def joint_distribution(branches: Sequence[Branch], basis: str) -> dict[str, float]:
    """n-bit outcome distribution of one tomography circuit."""
    if basis not in _BASIS_ROTATIONS:
        raise ConfigError(f"unknown basis {basis!r}")
    r = _BASIS_ROTATIONS[basis]
    dist = {}
    for b in branches:
        diag = np.real(np.diag(r @ b.output_state @ dagger(r)))
        dist["0" + b.outcome] = b.probability * float(diag[0])
        dist["1" + b.outcome] = b.probability * float(diag[1])
    return dist


def protocol_distributions(branches_per_probe: Sequence[Sequence[Branch]]) -> dict:
    if len(branches_per_probe) != len(PROBE_KETS):
        raise ConfigError(f"need branches for {len(PROBE_KETS)} probes")
    return {
        (k, basis): joint_distribution(branches, basis)
        for k, branches in enumerate(branches_per_probe)
        for basis in BASES
    }


def _sample(vec: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    vec = np.clip(vec, 0.0, None)
    return rng.multinomial(int(shots), vec / vec.sum()).astype(float)


def sampled_calibration(model: ConfusionModel, shots: int, rng: np.random.Generator) -> CalibrationMatrix:
    """Calibration matrix estimated from ``shots`` readouts of every basis state."""
    lam = calibration_matrix(model).matrix
    cols = []
    for j in range(lam.shape[0]):
        counts = _sample(lam[:, j], shots, rng)
        cols.append(vector_to_distribution(counts, model.n))
    return calibration_from_counts(cols)


def run_distributions(
    distributions: Mapping,
    shots: int | None = None,
    seed: int = 0,
    confusion: ConfusionModel | None = None,
    mitigation: bool = False,
    calibration_shots: int | None = CALIBRATION_SHOTS,
    mode: str = "invert",
) -> tuple[dict, CalibrationMatrix | None]:
    """Pass each circuit's distribution through readout noise, sampling and mitigation.

    Returns relative frequencies per circuit and the calibration matrix used
    for mitigation (``None`` without mitigation). With ``shots=None`` every
    step is exact and the calibration matrix is the true one.
    """
    if mitigation and confusion is None:
        raise ConfigError("mitigation needs a confusion model")
    rng = np.random.default_rng(seed)
    first = next(iter(distributions.values()))
    n = len(next(iter(first)))
    if confusion is not None and confusion.n != n:
        raise ConfigError(f"confusion model has {confusion.n} qubits, circuits have {n}")
    lam_true = calibration_matrix(confusion).matrix if confusion is not None else None
    calib = None
    if mitigation:
        if shots is None or calibration_shots is None:
            calib = calibration_matrix(confusion)
        else:
            calib = sampled_calibration(confusion, calibration_shots, rng)
    out = {}
    for key, dist in distributions.items():
        vec = distribution_to_vector(dist, n)
        if lam_true is not None:
            vec = lam_true @ vec
        if shots is not None:
            vec = _sample(vec, shots, rng)
        vec = vec / vec.sum()
        if calib is not None:
            vec = mitigate(calib, vec, mode)
        out[key] = vector_to_distribution(vec, n)
    return out, calib


def _conditional_counts(freqs: Mapping[str, float], outcome: str) -> dict[str, float]:
    return {"0": freqs.get("0" + outcome, 0.0), "1": freqs.get("1" + outcome, 0.0)}


def probe_outputs_from_frequencies(frequencies: Mapping, links: int) -> dict[str, list]:
    """Tomographic output state of every probe, for every chain outcome."""
    outputs = {}
    for outcome in outcome_strings(links):
        states = []
        for k in range(len(PROBE_KETS)):
            try:
                states.append(
                    state_tomography(
                        *(_conditional_counts(frequencies[(k, b)], outcome) for b in BASES)
                    )
                )
            except EmptyCounts as exc:
                raise EmptyCounts(f"no data for outcome {outcome} with probe {k}") from exc
        outputs[outcome] = states
    return outputs


def chis_from_frequencies(
    frequencies: Mapping, links: int, corrections: Mapping[str, np.ndarray] | None = None,
    max_clip: float | None = None, return_clips: bool = False,
):
    """chi matrix per chain outcome; ``corrections`` are unitaries applied to the outputs first.

    With ``return_clips`` also returns the magnitude of the most negative
    eigenvalue removed from each raw chi.
    """
    chis, clips = {}, {}
    for outcome, states in probe_outputs_from_frequencies(frequencies, links).items():
        if corrections is not None:
            c = corrections[outcome]
            states = [c @ rho @ dagger(c) for rho in states]
        chis[outcome], clips[outcome] = repair_chi(raw_chi_from_probe_outputs(*states), max_clip)
    return (chis, clips) if return_clips else chis


def run_protocol(
    branches_per_probe: Sequence[Sequence[Branch]],
    shots: int | None = None,
    seed: int = 0,
    confusion: ConfusionModel | None = None,
    mitigation: bool = False,
    mode: str = "invert",
) -> ProtocolResult:
    links = len(branches_per_probe[0][0].outcome)
    freqs, calib = run_distributions(
        protocol_distributions(branches_per_probe), shots, seed, confusion, mitigation, mode=mode
    )
    return ProtocolResult(links, freqs, shots, mitigation, calib)


def protocol_chis(
    result: ProtocolResult, corrections: Mapping[str, np.ndarray] | None = None,
    return_clips: bool = False,
):
    # exact data must already be physical; sampled data gets the looser repair limit
    limit = None if result.shots is None and result.calibration is None else SAMPLED_CLIP_LIMIT
    return chis_from_frequencies(result.frequencies, result.links, corrections, limit, return_clips)


def outcome_frequencies(
    branches: Sequence[Branch],
    shots: int | None = None,
    seed: int = 0,
    confusion: ConfusionModel | None = None,
    mitigation: bool = False,
    mode: str = "invert",
) -> dict[str, float]:
    """Relative frequencies of the chain outcomes alone (qubits 1..n-1)."""
    dist = {b.outcome: b.probability for b in branches}
    freqs, _ = run_distributions({"chain": dist}, shots, seed, confusion, mitigation, mode=mode)
    return freqs["chain"]
