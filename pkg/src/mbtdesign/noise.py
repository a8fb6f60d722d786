"""Depolarising noise models and classical readout error mitigation.

Two depolarising models act on the ensemble of the exact 3-design:

``terminal``
    every member unitary is followed by a single depolarising channel.
``stepwise``
    the state is depolarised before the first link and after every link
    unitary of the measurement chain, i.e. ``links + 1`` applications.

Readout noise is modelled as independent per-qubit bit flips. Outcome
bitstrings are little-endian (qubit 1 is the rightmost character), and the
calibration matrix uses the same ordering for its rows and columns.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize

from .cluster import link_unitary, outcome_bits, outcome_strings
from .design import EXACT_3_ANGLES, UnitaryEnsemble, design_test
from .errors import (
    BadProbability,
    ConfigError,
    MissingColumn,
    SingularCalibration,
    Unreachable,
)
from .tomography import superop_to_chi, unitary_superop

log = logging.getLogger(__name__)

NOISE_MODELS = ("terminal", "stepwise")
DEFAULT_RADII = (0.66, 0.68, 0.69, 0.75, 0.81, 1.0)
MAX_CONDITION = 1e8


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise BadProbability(f"depolarising probability must lie in [0, 1], got {p}")
    return p


def depolarise(rho, p: float) -> np.ndarray:
    """rho -> p I/2 + (1 - p) rho."""
    p = _check_p(p)
    rho = np.asarray(rho, dtype=complex)
    return 0.5 * p * np.trace(rho) * np.eye(2) + (1 - p) * rho


def depolarising_superop(p: float) -> np.ndarray:
    p = _check_p(p)
    vec_id = np.eye(2, dtype=complex).reshape(-1)
    return (1 - p) * np.eye(4, dtype=complex) + 0.5 * p * np.outer(vec_id, vec_id)


def noisy_ensemble_terminal(ensemble: UnitaryEnsemble, p: float) -> UnitaryEnsemble:
    """Each member followed by one depolarising channel, as chi matrices."""
    if not ensemble.is_unitary:
        raise ConfigError("terminal noise needs an ensemble of unitaries")
    dep = depolarising_superop(p)
    chis = superop_to_chi(dep @ unitary_superop(ensemble.unitaries))
    return UnitaryEnsemble(list(ensemble.outcomes), ensemble.probabilities.copy(), chis=chis)


def noisy_ensemble_stepwise(
    angles: Sequence[float] = EXACT_3_ANGLES,
    p: float = 0.0,
    probabilities=None,
    input_noise: bool = True,
) -> UnitaryEnsemble:
    """Chain ensemble with depolarising noise interleaved between the link unitaries.

    With ``input_noise`` the input is depolarised once before the first link,
    giving ``len(angles) + 1`` applications in total; without it there is one
    application after each link.
    """
    dep = depolarising_superop(p)
    outcomes = outcome_strings(len(angles))
    # noisy link channels indexed [link, m]
    links = np.array([[dep @ unitary_superop(link_unitary(m, phi)) for m in (0, 1)] for phi in angles])
    bits = np.array([outcome_bits(o) for o in outcomes], dtype=int).reshape(len(outcomes), -1)
    channels = np.broadcast_to(dep if input_noise else np.eye(4), (len(outcomes), 4, 4))
    for k in range(len(angles)):
        channels = links[k, bits[:, k]] @ channels
    if probabilities is None:
        probabilities = np.full(len(outcomes), 1 / len(outcomes))
    return UnitaryEnsemble(outcomes, probabilities, chis=superop_to_chi(channels))


def noisy_ensemble(model: str, p: float, angles: Sequence[float] = EXACT_3_ANGLES) -> UnitaryEnsemble:
    from .design import ensemble_from_angles

    if model == "terminal":
        return noisy_ensemble_terminal(ensemble_from_angles(angles), p)
    if model == "stepwise":
        return noisy_ensemble_stepwise(angles, p)
    raise ConfigError(f"unknown noise model {model!r}; expected one of {NOISE_MODELS}")


def default_p_grid(points: int = 200) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)


def epsilon_vs_p_sweep(
    model: str,
    t: int,
    radii: Sequence[float] = DEFAULT_RADII,
    p_grid: Sequence[float] | None = None,
    sample=None,
    angles: Sequence[float] = EXACT_3_ANGLES,
) -> list[dict]:
    """Test epsilon on every (radius, p) cell, rows ordered by radius then p."""
    p_grid = default_p_grid() if p_grid is None else np.asarray(p_grid, dtype=float)
    if len(radii) == 0 or len(p_grid) == 0:
        raise ConfigError("sweep grids must be nonempty")
    ensembles = [noisy_ensemble(model, p, angles) for p in p_grid]
    rows = []
    for radius in radii:
        for p, ens in zip(p_grid, ensembles):
            eps = design_test(ens, t, float(radius), sample).epsilon
            rows.append({"model": model, "t": int(t), "radius": float(radius),
                         "p": float(p), "epsilon": eps})
    return rows


def infer_p_from_test(
    model: str,
    t: int,
    radius: float,
    epsilon_target: float,
    p_grid: Sequence[float] | None = None,
    sample=None,
) -> float:
    """Read p off the epsilon-versus-p curve at a fixed truncation radius.

    Finds the first grid point whose epsilon reaches the target and linearly
    interpolates against the previous grid point.
    """
    if epsilon_target < 0:
        raise ConfigError("epsilon_target must be non-negative")
    rows = epsilon_vs_p_sweep(model, t, [radius], p_grid, sample)
    ps = np.array([r["p"] for r in rows])
    eps = np.array([r["epsilon"] for r in rows])
    hits = np.flatnonzero(eps >= epsilon_target)
    if len(hits) == 0:
        raise Unreachable(
            f"epsilon {epsilon_target} exceeds the curve maximum {eps.max():.4f} at radius {radius}"
        )
    i = int(hits[0])
    if i == 0 or not np.isfinite(eps[i]):
        return float(ps[i])
    e0, e1 = eps[i - 1], eps[i]
    frac = (epsilon_target - e0) / (e1 - e0) if e1 > e0 else 1.0
    return float(ps[i - 1] + frac * (ps[i] - ps[i - 1]))


@dataclasses.dataclass(frozen=True)
class ConfusionModel:
    """Independent per-qubit readout flips; ``per_qubit[0]`` is qubit 1.

    Each entry is ``(p01, p10)``: the probability of reading 1 when 0 was
    prepared, and of reading 0 when 1 was prepared.
    """

    per_qubit: tuple

    def __post_init__(self):
        pairs = tuple((float(a), float(b)) for a, b in self.per_qubit)
        for a, b in pairs:
            if not (0 <= a <= 1 and 0 <= b <= 1):
                raise BadProbability(f"flip probabilities must lie in [0, 1], got {(a, b)}")
        object.__setattr__(self, "per_qubit", pairs)

    @classmethod
    def uniform(cls, n: int, p01: float, p10: float | None = None) -> "ConfusionModel":
        return cls(tuple((p01, p01 if p10 is None else p10) for _ in range(n)))

    @property
    def n(self) -> int:
        return len(self.per_qubit)


@dataclasses.dataclass(frozen=True)
class CalibrationMatrix:
    n: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (2**self.n, 2**self.n):
            raise ConfigError(f"calibration matrix for n={self.n} must be {2**self.n} square")
        object.__setattr__(self, "matrix", m)

    def to_dict(self) -> dict:
        return {"n": self.n, "lambda": self.matrix.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CalibrationMatrix":
        return cls(int(doc["n"]), np.asarray(doc["lambda"], dtype=float))

    @classmethod
    def from_json(cls, text: str) -> "CalibrationMatrix":
        return cls.from_dict(json.loads(text))


def calibration_matrix(model: ConfusionModel) -> CalibrationMatrix:
    lam = np.ones((1, 1))
    # qubit n is the most significant index, so it is the leftmost factor
    for p01, p10 in reversed(model.per_qubit):
        lam = np.kron(lam, np.array([[1 - p01, p10], [p01, 1 - p10]]))
    return CalibrationMatrix(model.n, lam)


def distribution_to_vector(distribution: Mapping[str, float], n: int | None = None) -> np.ndarray:
    if n is None:
        n = len(next(iter(distribution)))
    vec = np.zeros(2**n)
    for key, value in distribution.items():
        if len(key) != n:
            raise ConfigError(f"bitstring {key!r} does not have {n} bits")
        vec[int(key, 2)] += float(value)
    return vec


def vector_to_distribution(vec, n: int) -> dict[str, float]:
    return {k: float(v) for k, v in zip(outcome_strings(n), vec)}


def calibration_from_counts(prepared_basis_counts: Sequence[Mapping[str, int]]) -> CalibrationMatrix:
    """Empirical calibration matrix; entry j of the list was measured with basis state j prepared."""
    size = len(prepared_basis_counts)
    n = int(round(np.log2(size))) if size else 0
    if size == 0 or 2**n != size:
        raise MissingColumn(f"need 2^n count maps, got {size}")
    lam = np.zeros((size, size))
    for j, counts in enumerate(prepared_basis_counts):
        col = distribution_to_vector(counts, n) if counts else np.zeros(size)
        total = col.sum()
        if total <= 0:
            raise MissingColumn(f"no counts for prepared basis state {j}")
        lam[:, j] = col / total
    return CalibrationMatrix(n, lam)


def apply_readout_noise(
    distribution: Mapping[str, float], model: ConfusionModel, seed: int, shots: int
) -> dict[str, int]:
    """Sample ``shots`` readouts of ``distribution`` through the confusion model."""
    p = distribution_to_vector(distribution, model.n)
    if abs(p.sum() - 1) > 1e-8:
        raise ConfigError(f"distribution sums to {p.sum()}")
    noisy = np.clip(calibration_matrix(model).matrix @ p, 0, None)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(int(shots), noisy / noisy.sum())
    return {k: int(c) for k, c in zip(outcome_strings(model.n), counts)}


def project_to_simplex(v) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1} by sorting."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(v) + 1)
    rho = np.flatnonzero(u + (1 - css) / k > 0)[-1]
    shift = (1 - css[rho]) / (rho + 1)
    return np.maximum(v + shift, 0.0)


def _lstsq_simplex(lam: np.ndarray, p_exp: np.ndarray) -> np.ndarray:
    x0 = project_to_simplex(np.linalg.solve(lam, p_exp))
    res = optimize.minimize(
        lambda x: np.sum((lam @ x - p_exp) ** 2),
        x0,
        jac=lambda x: 2 * lam.T @ (lam @ x - p_exp),
        method="SLSQP",
        bounds=[(0.0, 1.0)] * len(x0),
        constraints={"type": "eq", "fun": lambda x: np.sum(x) - 1, "jac": lambda x: np.ones_like(x)},
        options={"ftol": 1e-14, "maxiter": 500},
    )
    return project_to_simplex(res.x)


def mitigate(lam, p_exp, mode: str = "invert") -> np.ndarray:
    """Readout-mitigated probability vector.

    ``invert`` applies the inverse calibration matrix and projects the
    result onto the probability simplex; ``lstsq`` instead minimises
    ``||lam x - p_exp||`` over the simplex.
    """
    matrix = lam.matrix if isinstance(lam, CalibrationMatrix) else np.asarray(lam, dtype=float)
    p_exp = np.asarray(p_exp, dtype=float)
    if abs(p_exp.sum() - 1) > 1e-6:
        raise ConfigError(f"frequency vector sums to {p_exp.sum()}")
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularCalibration(f"calibration matrix condition number {cond:.3g}")
    log.debug("calibration condition number %.3g", cond)
    if mode == "invert":
        return project_to_simplex(np.linalg.solve(matrix, p_exp))
    if mode == "lstsq":
        return _lstsq_simplex(matrix, p_exp)
    raise ConfigError(f"unknown mitigation mode {mode!r}")


def mitigate_distribution(lam: CalibrationMatrix, distribution: Mapping[str, float], mode: str = "invert"):
    vec = distribution_to_vector(distribution, lam.n)
    total = vec.sum()
    if total <= 0:
        raise ConfigError("empty distribution")
    return vector_to_distribution(mitigate(lam, vec / total, mode), lam.n)
