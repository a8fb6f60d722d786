"""Identity channel from X-basis measurements on odd-length chains.

With every angle set to 0 the chain implements a product of ``H Z^m``
factors. For an even number of links this product is always a Pauli
operator (up to phase), so a Pauli correction turns every branch into the
identity. Depolarising noise applied ``n`` times then shows up as a
single depolarising channel with ``p_eff = 1 - (1 - p)^n``.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np

from .cluster import SCHEMA_VERSION, logical_unitary, outcome_bits
from .errors import EvenN, NonPhysicalChi, OddLinkCount, TooNegative
from .experiment import ensemble_probe_branches, protocol_chis, run_protocol
from .noise import ConfusionModel, noisy_ensemble_stepwise
from .numerics import I2, X, Y, Z, dagger, global_phase_overlap, psd_sqrt
from .tomography import channel_fidelity, check_physical_chi, chi_to_dict, depolarising_chi

P_GRID_POINTS = 10000
_PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}
_IDENTITY_CHI = depolarising_chi(0.0)


def pauli_correction(outcome: str) -> np.ndarray:
    """Pauli P with P U_m(0) proportional to I, for an even number of links."""
    bits = outcome_bits(outcome)
    if len(bits) % 2:
        raise OddLinkCount(f"{len(bits)} links cannot implement the identity")
    u = logical_unitary(outcome, [0.0] * len(bits))
    for p in _PAULIS.values():
        if global_phase_overlap(p, u) > 1 - 1e-9:
            return dagger(p)
    raise AssertionError(f"chain product for {outcome!r} is not a Pauli")


def pauli_label(outcome: str) -> str:
    c = pauli_correction(outcome)
    return next(k for k, p in _PAULIS.items() if global_phase_overlap(p, c) > 1 - 1e-9)


@dataclasses.dataclass
class IdentityRunReport:
    n: int
    p_injected: float
    chi_per_outcome: dict
    probabilities: dict
    chi_average: np.ndarray
    inferred_p: float
    shots: int | None = None
    seed: int | None = None

    @property
    def per_outcome_fidelity(self) -> dict[str, float]:
        return {o: channel_fidelity(_IDENTITY_CHI, c) for o, c in self.chi_per_outcome.items()}

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "n": self.n,
            "p_injected": self.p_injected,
            "inferred_p": self.inferred_p,
            "shots": self.shots,
            "seed": self.seed,
            "chi_average": chi_to_dict(self.chi_average),
            "per_outcome_fidelity": self.per_outcome_fidelity,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def model_chi(p: float, n: int) -> np.ndarray:
    """chi of the identity followed by n depolarising channels of strength p."""
    return depolarising_chi(1 - (1 - p) ** n)


def _diagonal_model_fidelities(grid, n: int, chi) -> np.ndarray:
    # model chi is diagonal, so its square root is elementwise and the
    # fidelity is a batched nuclear norm of sqrt(chi) diag(root)
    chi = check_physical_chi(chi)
    try:
        root_c = psd_sqrt(0.5 * (chi + dagger(chi)))
    except TooNegative as exc:
        raise NonPhysicalChi(str(exc)) from exc
    p_eff = 1 - (1 - np.asarray(grid, dtype=float)) ** n
    root = np.sqrt(np.stack([1 - 0.75 * p_eff] + [p_eff / 4] * 3, axis=1))
    s = np.linalg.svd(root_c[None] * root[:, None, :], compute_uv=False)
    return np.clip(s.sum(axis=1), 0.0, 1.0)


def infer_p(chi_average, n: int, points: int = P_GRID_POINTS) -> float:
    """Grid value of p whose model chi has the highest fidelity with ``chi_average``."""
    grid = np.linspace(0.0, 1.0, points)
    fids = _diagonal_model_fidelities(grid, n, chi_average)
    # argmax returns the first maximum, i.e. ties go to the smaller p
    return float(grid[int(np.argmax(fids))])


def average_chi(chis: dict, probabilities: dict) -> np.ndarray:
    keys = sorted(chis)
    w = np.array([probabilities[k] for k in keys], dtype=float)
    avg = np.einsum("k,kij->ij", w / w.sum(), np.array([chis[k] for k in keys]))
    return 0.5 * (avg + dagger(avg))


def identity_bench(
    n: int,
    p: float = 0.0,
    shots: int | None = None,
    seed: int = 0,
    weighting: str = "probability",
    confusion: ConfusionModel | None = None,
    mitigation: bool = False,
) -> IdentityRunReport:
    """Simulate the corrected identity on an n-qubit chain with n depolarisations.

    ``shots`` is the number of shots per tomography circuit and outcome;
    ``None`` evaluates the protocol exactly. ``weighting`` selects how the
    per-outcome chi matrices are averaged: by branch ``probability`` (observed
    frequency when sampled) or ``uniform``.
    """
    if n < 3 or n % 2 == 0:
        raise EvenN(f"the identity needs an odd chain length n >= 3, got {n}")
    if weighting not in ("probability", "uniform"):
        raise ValueError(f"unknown weighting {weighting!r}")
    links = n - 1
    ensemble = noisy_ensemble_stepwise([0.0] * links, p, input_noise=True)
    branches = [ensemble_probe_branches(ensemble, k) for k in range(4)]
    total = None if shots is None else int(shots) * 2**links
    result = run_protocol(branches, total, seed, confusion, mitigation)
    corrections = {o: pauli_correction(o) for o in ensemble.outcomes}
    chis = protocol_chis(result, corrections)
    if weighting == "uniform":
        probs = {o: 1.0 for o in chis}
    elif shots is None:
        probs = dict(zip(ensemble.outcomes, ensemble.probabilities))
    else:
        # observed chain frequency, pooled over every circuit
        probs = {
            o: sum(f.get("0" + o, 0.0) + f.get("1" + o, 0.0) for f in result.frequencies.values())
            for o in chis
        }
    avg = average_chi(chis, probs)
    return IdentityRunReport(
        n=n,
        p_injected=float(p),
        chi_per_outcome=chis,
        probabilities=probs,
        chi_average=avg,
        inferred_p=infer_p(avg, n),
        shots=shots,
        seed=seed,
    )
