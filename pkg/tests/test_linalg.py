import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcond.errors import NotHermitian, RankDeficient
from qcond.linalg import (
    dagger,
    eig_hermitian,
    from_json,
    is_unitary,
    kron,
    partial_trace,
    qr_orthonormalize,
    to_json,
)


def random_hermitian(d, rng):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (g + g.conj().T) / 2


def kron_loops(a, b):
    """Reference Kronecker product from the index definition."""
    (m, n), (p, q) = a.shape, b.shape
    out = np.zeros((m * p, n * q), dtype=complex)
    for i in range(m):
        for j in range(n):
            for k in range(p):
                for l in range(q):
                    out[i * p + k, j * q + l] = a[i, j] * b[k, l]
    return out


def test_eig_identity():
    es = eig_hermitian(np.eye(3))
    np.testing.assert_allclose(es.eigenvalues, [1, 1, 1])
    np.testing.assert_allclose(es.reconstruct(), np.eye(3), atol=1e-14)
    assert es.groups == ((0, 1, 2),)


def test_eig_diagonal():
    es = eig_hermitian(np.diag([0.25, 0.75]))
    np.testing.assert_allclose(es.eigenvalues, [0.25, 0.75])
    np.testing.assert_allclose(np.abs(es.eigenvectors), np.eye(2), atol=1e-14)


def test_eig_pauli_x():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    es = eig_hermitian(x)
    np.testing.assert_allclose(es.eigenvalues, [-1, 1], atol=1e-14)
    for k in range(2):
        v = es.eigenvectors[:, k]
        np.testing.assert_allclose(x @ v, es.eigenvalues[k] * v, atol=1e-13)
    # eigenvector for -1 is (1, -1)/sqrt(2) up to phase
    assert abs(abs(np.vdot(es.eigenvectors[:, 0], [1, -1])) / np.sqrt(2) - 1) < 1e-13


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6, 8])
def test_eig_against_numpy(d):
    rng = np.random.default_rng(d)
    m = random_hermitian(d, rng)
    es = eig_hermitian(m)
    np.testing.assert_allclose(es.eigenvalues, np.linalg.eigvalsh(m), atol=1e-12)
    v = es.eigenvectors
    np.testing.assert_allclose(dagger(v) @ v, np.eye(d), atol=1e-12)
    np.testing.assert_allclose(es.reconstruct(), m, atol=1e-12)


def test_eig_degenerate_basis_is_deterministic():
    rng = np.random.default_rng(3)
    u = qr_orthonormalize(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    m = u @ np.diag([0.1, 0.3, 0.3, 0.3]) @ dagger(u)
    a, b = eig_hermitian(m), eig_hermitian(m.copy())
    assert a.groups == ((0,), (1, 2, 3))
    np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)
    np.testing.assert_allclose(a.reconstruct(), m, atol=1e-12)


def test_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        eig_hermitian(np.array([[0, 1], [0, 0]]))


def test_eig_does_not_mutate_input():
    m = random_hermitian(3, np.random.default_rng(0))
    keep = m.copy()
    eig_hermitian(m)
    np.testing.assert_array_equal(m, keep)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_eig_reconstruction_property(d, seed):
    m = random_hermitian(d, np.random.default_rng(seed))
    es = eig_hermitian(m)
    assert np.all(np.diff(es.eigenvalues) >= -1e-12)
    assert np.max(np.abs(es.reconstruct() - m)) <= 1e-10 * max(1.0, np.abs(m).max())


def test_kron_examples():
    np.testing.assert_array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    np.testing.assert_array_equal(kron(np.diag([1, 0]), np.diag([0, 1])), np.diag([0, 1, 0, 0]))


def test_kron_matches_loop_oracle():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    np.testing.assert_allclose(kron(a, b), kron_loops(a, b), atol=0)


def test_partial_trace_product_state():
    ra, rb = np.diag([0.3, 0.7]), np.diag([0.2, 0.5, 0.3])
    np.testing.assert_allclose(partial_trace(kron(ra, rb), "B", 2, 3), ra, atol=1e-15)
    np.testing.assert_allclose(partial_trace(kron(ra, rb), "A", 2, 3), rb, atol=1e-15)


def test_partial_trace_bell():
    psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    p = np.outer(psi, psi.conj())
    np.testing.assert_allclose(partial_trace(p, "A", 2, 2), np.eye(2) / 2, atol=1e-15)
    np.testing.assert_allclose(partial_trace(p, "B", 2, 2), np.eye(2) / 2, atol=1e-15)


def test_partial_trace_loop_oracle():
    rng = np.random.default_rng(5)
    dA, dB = 2, 3
    m = random_hermitian(dA * dB, rng)
    ref = np.zeros((dA, dA), dtype=complex)
    for i in range(dA):
        for j in range(dA):
            ref[i, j] = sum(m[i * dB + k, j * dB + k] for k in range(dB))
    np.testing.assert_allclose(partial_trace(m, "B", dA, dB), ref, atol=1e-14)


def test_qr_examples():
    np.testing.assert_allclose(np.abs(qr_orthonormalize(np.eye(3))), np.eye(3))
    v = qr_orthonormalize(np.array([3.0, 4.0]))
    np.testing.assert_allclose(v[:, 0], [0.6, 0.8])
    with pytest.raises(RankDeficient):
        qr_orthonormalize(np.array([[1, 2], [2, 4]]))


def test_qr_gives_unitary():
    rng = np.random.default_rng(2)
    u = qr_orthonormalize(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))
    assert is_unitary(u)
    assert not is_unitary(2 * u)


def test_json_round_trip():
    rng = np.random.default_rng(9)
    m = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    doc = json.loads(json.dumps(to_json(m)))
    np.testing.assert_array_equal(from_json(doc), m)
