import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mbtdesign.errors import NotHermitian, TooNegative
from mbtdesign.numerics import (
    CX,
    CZ,
    H,
    I2,
    TOL,
    X,
    Z,
    hermitian_eig,
    is_unitary,
    kron,
    kron_all,
    min_eigenvalue,
    psd_sqrt,
    rz,
    tolerances,
)
from mbtdesign.tomography import chi_of_unitary

from conftest import random_density

small = st.floats(-2, 2, allow_nan=False, allow_infinity=False)
cmat = arrays(np.float64, (2, 2, 2), elements=small).map(lambda a: a[0] + 1j * a[1])


def test_kron_examples():
    assert np.allclose(kron(I2, I2), np.eye(4))
    assert np.allclose(kron(Z, Z), np.diag([1, -1, -1, 1]))
    out = kron(H, H) @ np.array([1, 0, 0, 0])
    assert np.allclose(out, 0.5)


@given(cmat, cmat, cmat)
def test_kron_associative(a, b, c):
    assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)), atol=1e-12)


@given(cmat, cmat, cmat, small)
def test_kron_bilinear(a, b, c, s):
    assert np.allclose(kron(a + s * c, b), kron(a, b) + s * kron(c, b), atol=1e-12)


def test_hermitian_eig_paulis():
    w, _ = hermitian_eig(Z)
    assert np.allclose(w, [-1, 1])
    w, v = hermitian_eig(X)
    assert np.allclose(w, [-1, 1])
    minus = np.array([1, -1]) / np.sqrt(2)
    plus = np.array([1, 1]) / np.sqrt(2)
    assert abs(abs(np.vdot(v[:, 0], minus)) - 1) < 1e-12
    assert abs(abs(np.vdot(v[:, 1], plus)) - 1) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_hermitian_eig_reconstruction(seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = g + g.conj().T
    w, v = hermitian_eig(h)
    assert np.all(np.diff(w) >= 0)
    assert np.allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-9)
    assert np.allclose(v.conj().T @ v, np.eye(8), atol=1e-9)
    assert abs(w.sum() - np.trace(h).real) < 1e-9


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_eig(np.array([[0, 1], [0, 0]]))
    with pytest.raises(NotHermitian):
        hermitian_eig(np.ones((2, 3)))


def test_psd_sqrt_examples():
    assert np.allclose(psd_sqrt(I2), I2)
    assert np.allclose(psd_sqrt(np.diag([4.0, 0.0])), np.diag([2, 0]))
    chi = chi_of_unitary(H @ rz(0.3))
    assert np.allclose(psd_sqrt(chi), chi, atol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_psd_sqrt_squares_back(seed):
    rho = random_density(np.random.default_rng(seed), dim=4, rank=2)
    r = psd_sqrt(rho)
    assert np.allclose(r @ r, rho, atol=1e-8)
    assert np.allclose(r, r.conj().T)
    assert min_eigenvalue(r) >= -1e-9


def test_psd_sqrt_clips_tiny_negative():
    r = psd_sqrt(np.diag([1.0, -1e-8]))
    assert np.allclose(r, np.diag([1, 0]))


def test_psd_sqrt_rejects_negative():
    with pytest.raises(TooNegative):
        psd_sqrt(np.diag([1.0, -1e-3]))


def test_min_eigenvalue():
    assert min_eigenvalue(I2) == pytest.approx(1)
    assert min_eigenvalue(np.diag([1, -0.3])) == pytest.approx(-0.3)


@pytest.mark.parametrize("seed", range(5))
def test_tensor_power_of_state_is_psd(seed):
    rho = random_density(np.random.default_rng(seed))
    assert min_eigenvalue(kron(rho, rho)) >= -1e-12


def test_tolerance_override_restores():
    before = TOL.hermitian
    with tolerances(hermitian=1e-3):
        hermitian_eig(np.array([[1, 1e-5], [0, 1]]))
    assert TOL.hermitian == before
    with pytest.raises(AttributeError):
        with tolerances(nonexistent=1.0):
            pass


def test_gate_constants():
    assert is_unitary(H) and is_unitary(CX) and is_unitary(rz(1.1))
    ih = kron(I2, H)
    assert np.allclose(ih @ CX @ ih, CZ)
    assert np.allclose(kron_all(X, X, X) @ kron_all(X, X, X), np.eye(8))
