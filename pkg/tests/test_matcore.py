import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geophase.errors import DimMismatch, NotHermitian, NotUnitary
from geophase.matcore import (
    PAULI_X,
    PAULI_Z,
    canonical_gauge,
    conjugate,
    degenerate_clusters,
    eig_hermitian,
    eig_hermitian_batch,
    frobenius_distance,
    is_psd,
    is_unitary,
    polar_unitary,
)

from .conftest import random_hermitian, random_unitary


def test_pauli_z_eigensystem():
    w, v = eig_hermitian(PAULI_Z)
    np.testing.assert_allclose(w, [-1, 1])
    np.testing.assert_allclose(v[:, 0], [0, 1], atol=1e-15)
    np.testing.assert_allclose(v[:, 1], [1, 0], atol=1e-15)


def test_laser_hamiltonian_energies():
    h = np.array([[0.25, 1.0], [1.0, -0.25]], dtype=complex)
    w, _ = eig_hermitian(h)
    e = math.sqrt(1.0625)
    np.testing.assert_allclose(w, [-e, e], rtol=0, atol=1e-14)


@given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=2**32 - 1))
def test_reconstruction(n, seed):
    rng = np.random.default_rng(seed)
    m = random_hermitian(rng, n)
    w, v = eig_hermitian(m)
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-12)
    assert np.linalg.norm(v @ np.diag(w) @ v.conj().T - m) < 1e-12 * max(1, np.linalg.norm(m))
    np.testing.assert_allclose(w, np.linalg.eigvalsh(m), atol=1e-12)


def test_degenerate_spectrum():
    rng = np.random.default_rng(3)
    u = random_unitary(rng, 4)
    m = u @ np.diag([1.0, 1.0, -2.0, 3.0]) @ u.conj().T
    w, v = eig_hermitian(m)
    np.testing.assert_allclose(w, [-2, 1, 1, 3], atol=1e-12)
    assert np.linalg.norm(v @ np.diag(w) @ v.conj().T - m) < 1e-12
    assert degenerate_clusters(w, 1e-8) == [[0], [1, 2], [3]]


def test_canonical_gauge_pivot_real():
    rng = np.random.default_rng(5)
    _, v = eig_hermitian(random_hermitian(rng, 5))
    idx = np.argmax(np.abs(v), axis=0)
    piv = v[idx, np.arange(5)]
    np.testing.assert_allclose(piv.imag, 0, atol=1e-15)
    assert np.all(piv.real > 0)
    np.testing.assert_allclose(canonical_gauge(v * np.exp(1j * np.arange(5))), v, atol=1e-14)


def test_batch_matches_single():
    rng = np.random.default_rng(8)
    ms = np.stack([random_hermitian(rng, 3) for _ in range(6)])
    w, v = eig_hermitian_batch(ms)
    for k in range(6):
        w1, v1 = eig_hermitian(ms[k])
        np.testing.assert_allclose(w[k], w1, atol=1e-14)
        np.testing.assert_allclose(v[k], v1, atol=1e-12)


def test_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(DimMismatch):
        eig_hermitian(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        eig_hermitian(np.array([[np.nan, 0], [0, 1]]))


def test_conjugate_examples():
    rng = np.random.default_rng(0)
    m = random_hermitian(rng, 3)
    np.testing.assert_allclose(conjugate(np.eye(3), m), m)
    a = 0.3
    np.testing.assert_allclose(conjugate(PAULI_X, np.diag([a, 1 - a])), np.diag([1 - a, a]), atol=1e-16)
    with pytest.raises(NotUnitary):
        conjugate(2 * np.eye(3), m)
    with pytest.raises(DimMismatch):
        conjugate(np.eye(2), m)


@given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=2**32 - 1))
def test_conjugate_preserves_spectrum(n, seed):
    rng = np.random.default_rng(seed)
    m = random_hermitian(rng, n)
    u = random_unitary(rng, n)
    np.testing.assert_allclose(np.linalg.eigvalsh(conjugate(u, m)), np.linalg.eigvalsh(m), atol=1e-12)


def test_frobenius_examples():
    a = np.eye(2)
    assert frobenius_distance(a, a) == 0
    assert frobenius_distance(np.zeros((2, 2)), np.eye(2)) == pytest.approx(math.sqrt(2), abs=1e-15)
    rng = np.random.default_rng(2)
    x, y = random_hermitian(rng, 4), random_hermitian(rng, 4)
    direct = math.sqrt(sum(abs(x[i, j] - y[i, j]) ** 2 for i in range(4) for j in range(4)))
    assert abs(frobenius_distance(x, y) - direct) < 1e-14
    with pytest.raises(DimMismatch):
        frobenius_distance(np.eye(2), np.eye(3))


def test_unitary_psd_polar():
    rng = np.random.default_rng(4)
    u = random_unitary(rng, 3)
    assert is_unitary(u)
    assert not is_unitary(1.01 * u)
    assert is_psd(np.diag([0.5, 0.5, 0.0]))
    assert not is_psd(np.diag([1.5, -0.5]))
    m = u @ np.diag([1.0, 2.0, 3.0])
    np.testing.assert_allclose(polar_unitary(m), u, atol=1e-12)
