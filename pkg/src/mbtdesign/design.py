"""Unitary ensembles from cluster measurements and the epsilon-approximate t-design test.

The test compares, for single-qubit states rho, the ensemble moment
``sum_i p_i rho_i'^{(x)t}`` with the Haar moment ``E_H^t(rho^{(x)t})`` and
reports the smallest epsilon with

    (1 - eps) E  <=  D  <=  (1 + eps) E

in the PSD order. Haar moments are obtained by averaging over the exact
32-element 3-design, which is exact for t <= 3.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from typing import Sequence

import numpy as np

from . import kernels
from .cluster import logical_unitary, outcome_strings
from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptyFilteredSample,
    NonPhysicalChi,
    UnsupportedOrder,
)
from .numerics import TOL, I2, X, Y, Z, dagger
from .tomography import chi_of_unitary, chi_to_superop, unitary_superop

EXACT_3_ANGLES = (0.0, math.pi / 4, math.acos(math.sqrt(1 / 3)), math.pi / 4, 0.0)
APPROX_2_ANGLES = (0.0, math.pi / 4, math.pi / 4, 0.0)
PASS_THRESHOLD = 0.5
# float slack on the pass comparison; the approximate 2-design sits exactly on 0.5
PASS_SLACK = 1e-9
MAX_ORDER = 3


@dataclasses.dataclass
class UnitaryEnsemble:
    """Weighted single-qubit channels keyed by outcome bitstring.

    Exactly one of ``unitaries`` (M, 2, 2) and ``chis`` (M, 4, 4) is set.
    """

    outcomes: list[str]
    probabilities: np.ndarray
    unitaries: np.ndarray | None = None
    chis: np.ndarray | None = None

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        if (self.unitaries is None) == (self.chis is None):
            raise ConfigError("give exactly one of unitaries or chis")
        members = self.unitaries if self.unitaries is not None else self.chis
        members = np.asarray(members, dtype=complex)
        if self.unitaries is not None:
            self.unitaries = members
        else:
            self.chis = members
            traces = np.trace(members, axis1=1, axis2=2).real
            if np.any(np.abs(traces - 1) > 0.05):
                raise NonPhysicalChi("ensemble contains a chi with trace far from 1")
        m = len(self.outcomes)
        if members.shape[0] != m or self.probabilities.shape != (m,):
            raise ConfigError("outcomes, probabilities and members differ in length")
        if np.any(self.probabilities < -1e-12):
            raise ConfigError("negative ensemble probability")
        if abs(self.probabilities.sum() - 1) > 1e-9:
            raise ConfigError(f"probabilities sum to {self.probabilities.sum()}")

    def __len__(self) -> int:
        return len(self.outcomes)

    @property
    def is_unitary(self) -> bool:
        return self.unitaries is not None

    def superops(self) -> np.ndarray:
        if self.is_unitary:
            return unitary_superop(self.unitaries)
        return chi_to_superop(self.chis)

    def chi_matrices(self) -> np.ndarray:
        if self.chis is not None:
            return self.chis
        return np.array([chi_of_unitary(u) for u in self.unitaries])

    def apply(self, states: np.ndarray) -> np.ndarray:
        """Outputs of every member on every state, shape (S, M, 2, 2)."""
        states = np.asarray(states, dtype=complex).reshape(-1, 4)
        out = np.tensordot(states, self.superops(), axes=([1], [2])).reshape(
            states.shape[0], len(self), 2, 2
        )
        if not self.is_unitary:
            out = 0.5 * (out + dagger(out))
            out /= np.trace(out, axis1=2, axis2=3).real[..., None, None]
        return out

    def with_probabilities(self, probabilities) -> "UnitaryEnsemble":
        return dataclasses.replace(self, probabilities=np.asarray(probabilities, float))

    def permuted(self, order: Sequence[int]) -> "UnitaryEnsemble":
        order = list(order)
        return UnitaryEnsemble(
            outcomes=[self.outcomes[i] for i in order],
            probabilities=self.probabilities[order],
            unitaries=None if self.unitaries is None else self.unitaries[order],
            chis=None if self.chis is None else self.chis[order],
        )


def ensemble_from_angles(angles: Sequence[float], probabilities=None) -> UnitaryEnsemble:
    """Ensemble {p_m, U_m(phi)} over all outcomes of a chain with the given angles."""
    outcomes = outcome_strings(len(angles))
    unitaries = np.array([logical_unitary(o, angles) for o in outcomes])
    if probabilities is None:
        probabilities = np.full(len(outcomes), 1 / len(outcomes))
    return UnitaryEnsemble(outcomes, probabilities, unitaries=unitaries)


def exact_three_design() -> UnitaryEnsemble:
    return ensemble_from_angles(EXACT_3_ANGLES)


def approx_two_design() -> UnitaryEnsemble:
    return ensemble_from_angles(APPROX_2_ANGLES)


@functools.lru_cache(maxsize=1)
def _haar_reference() -> UnitaryEnsemble:
    return exact_three_design()


def _check_order(t: int) -> int:
    if int(t) != t or t < 1:
        raise ConfigError(f"order t must be a positive integer, got {t}")
    if t > MAX_ORDER:
        raise UnsupportedOrder(f"Haar moments are only exact up to t={MAX_ORDER}")
    return int(t)


def _as_state_stack(states) -> tuple[np.ndarray, bool]:
    states = np.asarray(states, dtype=complex)
    single = states.ndim == 2
    return (states[None] if single else states), single


def ensemble_moments(ensemble: UnitaryEnsemble, states, t: int) -> np.ndarray:
    """sum_i p_i (rho_i')^{(x)t} for each state in a stack, shape (S, 2^t, 2^t)."""
    states, _ = _as_state_stack(states)
    return kernels.weighted_tensor_power_sum(ensemble.apply(states), ensemble.probabilities, int(t))


def ensemble_moment(ensemble: UnitaryEnsemble, rho, t: int) -> np.ndarray:
    return ensemble_moments(ensemble, np.asarray(rho)[None], t)[0]


def haar_moments(states, t: int) -> np.ndarray:
    t = _check_order(t)
    return ensemble_moments(_haar_reference(), states, t)


def haar_moment(rho, t: int) -> np.ndarray:
    """E_H^t(rho^{(x)t}) computed from the exact 3-design."""
    return haar_moments(np.asarray(rho)[None], t)[0]


def epsilons(d_stack, e_stack) -> np.ndarray:
    """Smallest epsilon per state; +inf where D has weight outside the support of E."""
    d_stack = np.asarray(d_stack, dtype=complex)
    e_stack = np.asarray(e_stack, dtype=complex)
    if d_stack.shape != e_stack.shape:
        raise DimensionMismatch(f"D {d_stack.shape} vs E {e_stack.shape}")
    e_stack = 0.5 * (e_stack + dagger(e_stack))
    w, v = np.linalg.eigh(e_stack)
    keep = w > TOL.support_rel * w[:, -1:]
    dt = dagger(v) @ d_stack @ v
    diag = np.diagonal(dt, axis1=1, axis2=2).real
    outside = np.where(keep, 0.0, diag).sum(axis=1)
    scale = np.where(keep, 1.0 / np.sqrt(np.where(keep, w, 1.0)), 0.0)
    m = scale[:, :, None] * dt * scale[:, None, :]
    idx = np.arange(m.shape[-1])
    m[:, idx, idx] += np.where(keep, 0.0, 1.0)
    lam = np.linalg.eigvalsh(0.5 * (m + dagger(m)))
    eps = np.maximum(np.maximum(lam[:, -1] - 1.0, 1.0 - lam[:, 0]), 0.0)
    return np.where(outside > TOL.support_weight, np.inf, eps)


def epsilon_for_state(d, e) -> float:
    d = np.asarray(d)
    e = np.asarray(e)
    if d.shape != e.shape:
        raise DimensionMismatch(f"D {d.shape} vs E {e.shape}")
    return float(epsilons(d[None], e[None])[0])


@dataclasses.dataclass(frozen=True)
class BlochSample:
    vectors: np.ndarray
    states: np.ndarray
    grid_spec: tuple

    def __len__(self) -> int:
        return len(self.vectors)

    @property
    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)

    def subset(self, mask) -> "BlochSample":
        return BlochSample(self.vectors[mask], self.states[mask], ("subset",) + self.grid_spec)


def states_from_vectors(vectors) -> np.ndarray:
    v = np.asarray(vectors, dtype=float).reshape(-1, 3)
    return 0.5 * (
        I2[None]
        + v[:, 0, None, None] * X[None]
        + v[:, 1, None, None] * Y[None]
        + v[:, 2, None, None] * Z[None]
    )


def sample_from_vectors(vectors, grid_spec=("custom",)) -> BlochSample:
    vectors = np.asarray(vectors, dtype=float).reshape(-1, 3)
    return BlochSample(vectors, states_from_vectors(vectors), tuple(grid_spec))


@functools.lru_cache(maxsize=256)
def bloch_sample_spherical(
    radius: float = 1.0,
    n_r: int = 10,
    n_phi: int = 10,
    n_theta: int = 10,
    theta_endpoint: bool = False,
) -> BlochSample:
    """Spherical-grid sample of the Bloch ball of the given radius.

    r runs over ``linspace(0, radius, n_r)``, the azimuth over
    ``2*pi*k/n_phi`` and the polar angle over ``pi*k/n_theta`` (or
    ``linspace(0, pi, n_theta)`` when ``theta_endpoint`` is set). All
    combinations are kept, including the repeated points at r = 0 and the pole.
    """
    r = np.linspace(0.0, radius, n_r)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    theta = np.linspace(0.0, np.pi, n_theta, endpoint=theta_endpoint)
    rr, pp, tt = np.meshgrid(r, phi, theta, indexing="ij")
    vectors = np.stack(
        [rr * np.sin(tt) * np.cos(pp), rr * np.sin(tt) * np.sin(pp), rr * np.cos(tt)], axis=-1
    ).reshape(-1, 3)
    grid_spec = ("spherical", float(radius), n_r, n_phi, n_theta, bool(theta_endpoint))
    return BlochSample(vectors, states_from_vectors(vectors), grid_spec)


def cube_sample(points_per_axis: int = 20) -> BlochSample:
    """Valid states among an evenly spaced grid on [-1, 1]^3 (endpoints included)."""
    g = np.linspace(-1.0, 1.0, points_per_axis)
    vectors = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
    vectors = vectors[np.linalg.norm(vectors, axis=1) <= 1.0 + 1e-12]
    return sample_from_vectors(vectors, ("cube", points_per_axis))


@functools.lru_cache(maxsize=64)
def _cached_haar(grid_spec: tuple, t: int, sample_ref) -> np.ndarray:
    out = haar_moments(sample_ref().states, t)
    out.setflags(write=False)
    return out


class _Ref:
    # hashable handle so lru_cache keys on the grid parameters, not the arrays
    def __init__(self, sample):
        self.sample = sample

    def __call__(self):
        return self.sample

    def __hash__(self):
        return hash(self.sample.grid_spec)

    def __eq__(self, other):
        return isinstance(other, _Ref) and other.sample.grid_spec == self.sample.grid_spec


def sample_haar_moments(sample: BlochSample, t: int) -> np.ndarray:
    t = _check_order(t)
    if sample.grid_spec and sample.grid_spec[0] in ("spherical", "cube"):
        return _cached_haar(sample.grid_spec, t, _Ref(sample))
    return haar_moments(sample.states, t)


@dataclasses.dataclass
class TestReport:
    t: int
    epsilon: float
    radius: float
    per_state_epsilon: np.ndarray
    n_states: int
    passing: bool

    __test__ = False  # not a pytest class

    def to_dict(self, include_per_state: bool = False) -> dict:
        doc = {
            "t": self.t,
            "radius": self.radius,
            "epsilon": _json_float(self.epsilon),
            "passing": self.passing,
            "n_states": self.n_states,
        }
        if include_per_state:
            doc["per_state_epsilon"] = [_json_float(e) for e in self.per_state_epsilon]
        return doc


def _json_float(x: float):
    return float(x) if math.isfinite(x) else "inf"


def state_epsilons(ensemble: UnitaryEnsemble, t: int, sample: BlochSample) -> np.ndarray:
    t = _check_order(t)
    e = sample_haar_moments(sample, t)
    d = ensemble_moments(ensemble, sample.states, t)
    return epsilons(d, e)


def design_test(
    ensemble: UnitaryEnsemble,
    t: int,
    radius: float = 1.0,
    sample: BlochSample | None = None,
    eps_max: float = PASS_THRESHOLD,
) -> TestReport:
    """Run the t-design test on states of Bloch radius <= ``radius``.

    Without an explicit sample, the default spherical grid is regenerated
    on the ball of the requested radius so that the truncation radius itself
    is one of the sampled shells. An explicit sample is filtered instead.
    """
    if not 0 < radius <= 1 + 1e-12:
        raise ConfigError(f"radius must lie in (0, 1], got {radius}")
    if sample is None:
        sample = bloch_sample_spherical(round(float(radius), 12))
    else:
        sample = sample.subset(sample.radii <= radius + 1e-12)
    if len(sample) == 0:
        raise EmptyFilteredSample(f"no sample states within radius {radius}")
    per_state = state_epsilons(ensemble, t, sample)
    eps = float(np.max(per_state))
    passing = bool(eps <= eps_max + PASS_SLACK)
    return TestReport(int(t), eps, float(radius), per_state, len(sample), passing)


def radius_grid(step: float = 0.01) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.round(np.arange(1, n + 1) * step, 12)


def truncation_radius_search(
    ensemble: UnitaryEnsemble,
    t: int,
    sample: BlochSample | None = None,
    eps_max: float = PASS_THRESHOLD,
    step: float = 0.01,
) -> tuple[float, float]:
    """Largest grid radius whose test epsilon stays within ``eps_max``.

    Returns ``(radius, epsilon)``, or ``(0.0, inf)`` when even the smallest
    radius fails.
    """
    if eps_max <= 0:
        raise ConfigError("eps_max must be positive")
    for radius in radius_grid(step)[::-1]:
        try:
            report = design_test(ensemble, t, float(radius), sample, eps_max)
        except EmptyFilteredSample:
            continue
        if report.epsilon <= eps_max + PASS_SLACK:
            return float(radius), report.epsilon
    return 0.0, math.inf


def passing_fraction(
    ensemble: UnitaryEnsemble,
    t: int,
    eps_max: float = PASS_THRESHOLD,
    points_per_axis: int = 20,
) -> float:
    """Fraction of valid cube-grid states whose epsilon is at most ``eps_max``."""
    sample = cube_sample(points_per_axis)
    per_state = state_epsilons(ensemble, t, sample)
    return float(np.count_nonzero(per_state <= eps_max + PASS_SLACK) / len(sample))
