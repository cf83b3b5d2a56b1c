import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcond.channels import depolarizing, identity_channel, random_channel
from qcond.conditional import conditional_probs
from qcond.errors import NotPSD, OutputNotResolutionOfIdentity, PowerOutOfRange, RankTooSmall
from qcond.generalized import (
    concavity_probe,
    decomposition_from_isometry,
    generalized_qcp,
    lieb_quantity,
    random_decomposition,
    random_psd,
    spectral_decomposition,
)
from qcond.states import random_density, spectral


def test_identity_isometry_recovers_spectral():
    rho = random_density(3, seed=1)
    dec = decomposition_from_isometry(rho, np.eye(3))
    s = spectral(rho)
    np.testing.assert_allclose(dec.weights, s.probabilities, atol=1e-12)
    overlaps = np.abs(np.sum(dec.vectors.conj() * s.vectors, axis=0))
    np.testing.assert_allclose(overlaps, 1.0, atol=1e-12)


def test_random_decomposition_reconstructs():
    for seed in range(100):
        rho = random_density(2, seed=seed)
        dec = random_decomposition(rho, 3, seed=seed)
        assert dec.count == 3
        assert abs(dec.weights.sum() - 1) <= 1e-12
        np.testing.assert_allclose(dec.reconstruct(), rho.matrix, atol=1e-10)


def test_random_decomposition_rank_too_small():
    with pytest.raises(RankTooSmall):
        random_decomposition(random_density(3, seed=1), 2, seed=0)


def test_reduction_to_spectral_table():
    rho = random_density(3, seed=4)
    ch = random_channel(3, 3, 2, seed=5)
    res = conditional_probs(ch, rho)
    g = generalized_qcp(ch, spectral_decomposition(rho), res.table.basis_to)
    np.testing.assert_allclose(g.entries, res.table.probs, atol=1e-10)
    np.testing.assert_allclose(g.Lambda_out, res.table.p_to, atol=1e-10)


def test_lambda_relation_and_gap_identity_channel():
    rho = random_density(2, seed=6)
    dec = random_decomposition(rho, 3, seed=7)
    assert dec.max_overlap() > 1e-3
    g = generalized_qcp(identity_channel(2), dec, dec, require_identity=False)
    assert not g.resolves_identity
    assert g.lambda_relation_residual() <= 1e-9
    assert g.lambda_gap() > 1e-3
    with pytest.raises(OutputNotResolutionOfIdentity):
        generalized_qcp(identity_channel(2), dec, dec)


def test_fully_depolarizing_rows_uniform():
    rho = random_density(3, seed=2)
    dec = random_decomposition(rho, 5, seed=3)
    g = generalized_qcp(depolarizing(3, 1.0), dec, np.eye(3))
    np.testing.assert_allclose(g.entries, np.full((3, 5), 1 / 3), atol=1e-12)


def test_lieb_identity():
    for p in (0.0, 0.3, 1.0):
        assert lieb_quantity(np.eye(3), np.eye(3), np.eye(3), p) == pytest.approx(3.0, abs=1e-12)


def test_lieb_kraus_terms_sum_to_entry():
    rho = random_density(3, seed=8)
    ch = random_channel(3, 3, 3, seed=9)
    dec = random_decomposition(rho, 4, seed=10)
    out = spectral(conditional_probs(ch, rho).rho_to).vectors
    g = generalized_qcp(ch, dec, out)
    for r in range(3):
        pr = np.outer(out[:, r], out[:, r].conj())
        for k in range(dec.count):
            pk = dec.projectors[k]
            total = sum(lieb_quantity(pr, pk, K, 0.5) for K in ch.kraus)
            assert total == pytest.approx(g.entries[r, k], abs=1e-10)


def test_lieb_diagonal_closed_form():
    a, b = np.array([0.2, 1.5, 0.7]), np.array([0.9, 0.4, 2.0])
    K = np.diag([1.0 + 1j, -0.5, 2.0])
    p = 0.35
    expected = np.sum(a ** p * np.abs(np.diag(K)) ** 2 * b ** (1 - p))
    assert lieb_quantity(np.diag(a), np.diag(b), K, p) == pytest.approx(expected, abs=1e-12)


def test_lieb_errors():
    with pytest.raises(PowerOutOfRange):
        lieb_quantity(np.eye(2), np.eye(2), np.eye(2), 1.5)
    with pytest.raises(NotPSD):
        lieb_quantity(np.diag([1.0, -0.5]), np.eye(2), np.eye(2), 0.5)


def test_concavity_probe_constant_segment():
    rng = np.random.default_rng(1)
    A, B, K = random_psd(3, rng), random_psd(3, rng), rng.normal(size=(3, 3))
    rep = concavity_probe(A, A, B, B, K, 0.4)
    assert np.max(np.abs(rep.slacks)) <= 1e-10


def test_concavity_probe_linear_endpoints():
    rng = np.random.default_rng(2)
    A0, A1, B0, B1 = (random_psd(3, rng) for _ in range(4))
    K = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    for p in (0.0, 1.0):
        rep = concavity_probe(A0, A1, B0, B1, K, p)
        assert rep.clean(1e-8)
        # linear in one argument: slack vanishes when the other is held fixed
        fixed = concavity_probe(A0, A0, B0, B1, K, 1.0) if p == 1.0 else concavity_probe(A0, A1, B0, B0, K, 0.0)
        assert np.max(np.abs(fixed.slacks)) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 4), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_lieb_properties(d, p, seed):
    rng = np.random.default_rng(seed)
    A0, A1, B0, B1 = (random_psd(d, rng, rank=int(rng.integers(1, d + 1))) for _ in range(4))
    K = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    assert lieb_quantity(A0, B0, K, p) >= -1e-10
    assert concavity_probe(A0, A1, B0, B1, K, p).clean(1e-8)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_generalized_kolmogorov(d, seed):
    rho = random_density(d, seed=seed)
    ch = random_channel(d, d, 2, seed=seed + 1)
    dec = random_decomposition(rho, d + 2, seed=seed + 2)
    g = generalized_qcp(ch, dec, spectral(conditional_probs(ch, rho).rho_to).vectors)
    assert g.entries.min() >= -1e-12 and g.entries.max() <= 1 + 1e-12
    assert g.column_residual() <= 1e-9
    assert g.lambda_relation_residual() <= 1e-9
