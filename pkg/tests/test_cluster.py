import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mbtdesign.cluster import (
    PLUS,
    build_linear_cluster,
    counts_from_json,
    counts_to_json,
    cz_from_cx_identity,
    link_unitary,
    logical_unitary,
    measure_chain,
    outcome_bits,
    outcome_strings,
    sample_counts,
)
from mbtdesign.design import EXACT_3_ANGLES
from mbtdesign.errors import AngleCountMismatch, ConfigError, InvalidState, LengthMismatch
from mbtdesign.numerics import CZ, H, X, global_phase_overlap

from conftest import random_density

KET0 = np.array([1, 0], dtype=complex)


def test_two_qubit_plus_input():
    psi = build_linear_cluster(2, PLUS)
    assert np.allclose(psi, np.array([1, 1, 1, -1]) / 2)


def test_two_qubit_zero_input():
    psi = build_linear_cluster(2, KET0)
    # index = 2*q2 + q1, so |q2 q1> = |00> and |10>
    assert np.allclose(psi, np.array([1, 0, 1, 0]) / np.sqrt(2))


def _reduced(psi, n, qubit):
    t = psi.reshape((2,) * n)
    axis = n - qubit
    t = np.moveaxis(t, axis, 0).reshape(2, -1)
    return t @ t.conj().T


def test_six_qubit_reduced_states():
    psi = build_linear_cluster(6, KET0)
    assert abs(np.vdot(psi, psi) - 1) < 1e-12
    assert np.allclose(_reduced(psi, 6, 1), np.diag([1, 0]))
    for q in range(2, 6):
        assert np.allclose(_reduced(psi, 6, q), np.eye(2) / 2)


def test_mixed_input_matches_pure():
    psi = build_linear_cluster(3, PLUS)
    rho = build_linear_cluster(3, np.outer(PLUS, PLUS.conj()))
    assert np.allclose(rho, np.outer(psi, psi.conj()))


@pytest.mark.parametrize("bad", [np.array([1, 1]), np.eye(2), np.diag([1.5, -0.5]), np.ones(3)])
def test_invalid_inputs(bad):
    with pytest.raises(InvalidState):
        build_linear_cluster(3, bad)


def test_too_short_chain():
    with pytest.raises(ConfigError):
        build_linear_cluster(1, KET0)


def test_outcome_encoding():
    assert outcome_strings(2) == ["00", "01", "10", "11"]
    assert outcome_bits("10") == [0, 1]


def test_logical_unitary_examples():
    assert np.allclose(logical_unitary("0", [0.0]), H)
    assert global_phase_overlap(logical_unitary("10", [0.0, 0.0]), X) == pytest.approx(1)
    with pytest.raises(LengthMismatch):
        logical_unitary("01", [0.0])


def test_logical_unitary_all_zero_outcome_is_product():
    u = np.eye(2)
    for phi in EXACT_3_ANGLES:
        u = link_unitary(0, phi) @ u
    assert np.allclose(logical_unitary("00000", EXACT_3_ANGLES), u)


def test_exact_design_unitaries_distinct():
    us = [logical_unitary(o, EXACT_3_ANGLES) for o in outcome_strings(5)]
    for i in range(32):
        for j in range(i):
            assert global_phase_overlap(us[i], us[j]) < 1 - 1e-6


def test_single_link_outcome_zero_is_hadamard():
    rng = np.random.default_rng(0)
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v /= np.linalg.norm(v)
    b = {x.outcome: x for x in measure_chain(build_linear_cluster(2, v), [0.0])}
    assert np.allclose(b["0"].output_state, np.outer(H @ v, (H @ v).conj()))


angle_lists = st.integers(1, 7).flatmap(
    lambda k: st.lists(st.floats(0, math.pi), min_size=k, max_size=k)
)


@given(angle_lists)
def test_branches_uniform(angles):
    branches = measure_chain(build_linear_cluster(len(angles) + 1, KET0), angles)
    probs = np.array([b.probability for b in branches])
    assert len(branches) == 2 ** len(angles)
    assert np.allclose(probs, 1 / len(probs), atol=1e-12)


@given(angle_lists, st.integers(0, 10_000))
def test_branch_outputs_match_logical_unitary(angles, seed):
    rho = random_density(np.random.default_rng(seed))
    branches = measure_chain(build_linear_cluster(len(angles) + 1, rho), angles)
    for b in branches:
        u = logical_unitary(b.outcome, angles)
        assert np.allclose(b.output_state, u @ rho @ u.conj().T, atol=1e-10)


def test_angle_count_mismatch():
    with pytest.raises(AngleCountMismatch):
        measure_chain(build_linear_cluster(3, KET0), [0.0])


def test_out_of_range_angle_warns():
    psi = build_linear_cluster(2, PLUS)
    with pytest.warns(UserWarning):
        b = measure_chain(psi, [-math.pi / 2])
    with pytest.warns(UserWarning):
        ref = measure_chain(psi, [1.5 * math.pi])
    for x, y in zip(b, ref):
        assert np.allclose(x.output_state, y.output_state)


def test_phi_measurement_equals_projection():
    # H Rz(phi) then computational readout projects onto (|0> +- e^{-i phi}|1>)/sqrt2
    phi = 0.7
    psi = build_linear_cluster(2, PLUS)
    branches = {b.outcome: b for b in measure_chain(psi, [phi])}
    t = psi.reshape(2, 2)  # [q2, q1]
    for m, sign in (("0", 1), ("1", -1)):
        proj = np.array([1, sign * np.exp(-1j * phi)]) / np.sqrt(2)
        v = t @ proj.conj()
        assert branches[m].probability == pytest.approx(np.vdot(v, v).real)
        assert np.allclose(branches[m].output_state, np.outer(v, v.conj()) / np.vdot(v, v).real)


def test_sample_counts_concentration():
    dist = {o: 1 / 32 for o in outcome_strings(5)}
    counts = sample_counts(dist, 32000, seed=3)
    assert sum(counts.values()) == 32000
    sigma = math.sqrt(32000 * (1 / 32) * (31 / 32))
    assert all(abs(c - 1000) < 5 * sigma for c in counts.values())


def test_sample_counts_point_mass_and_determinism():
    assert sample_counts({"01": 1.0, "10": 0.0}, 100, seed=1) == {"01": 100, "10": 0}
    branches = measure_chain(build_linear_cluster(3, KET0), [0.2, 0.4])
    assert sample_counts(branches, 500, 7) == sample_counts(branches, 500, 7)


def test_sample_counts_rejects_bad_distribution():
    with pytest.raises(ConfigError):
        sample_counts({"0": 0.3, "1": 0.3}, 10, 0)


def test_counts_json_round_trip():
    text = counts_to_json({"00": 3, "11": 5}, shots=8, seed=2, angles=[0.0, 0.5], n=3)
    doc = counts_from_json(text)
    assert doc["counts"] == {"00": 3, "11": 5}
    assert doc["shots"] == 8 and doc["n"] == 3
    flat = counts_from_json(json.dumps({"00": 1, "01": 2, "shots": 3}))
    assert flat["counts"] == {"00": 1, "01": 2} and flat["shots"] == 3


def test_cz_decomposition_identity():
    assert np.allclose(cz_from_cx_identity(), CZ)
