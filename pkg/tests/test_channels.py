import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from qcond.channels import (
    amplitude_damping,
    apply,
    apply_to_operator,
    compose,
    dephasing,
    depolarizing,
    identity_channel,
    is_unital,
    partial_trace_channel,
    pinching,
    pinching_in_basis,
    random_channel,
    random_pinching,
    random_unital_channel,
    random_unitary,
    unitary_channel,
    validate_channel,
    weyl_operators,
)
from qcond.errors import NotAResolutionOfIdentity, NotTracePreserving, NotUnitary, ParameterOutOfRange
from qcond.linalg import kron, partial_trace
from qcond.states import density_from_matrix, random_density

X = np.array([[0, 1], [1, 0]], dtype=complex)
DECAY = [np.array([[1, 0], [0, 0]]), np.array([[0, 1], [0, 0]])]


def test_validate_examples():
    assert validate_channel([np.eye(2)]).n_kraus == 1
    assert validate_channel(DECAY).n_kraus == 2
    with pytest.raises(NotTracePreserving):
        validate_channel([np.eye(2) / 2])


def test_validate_does_not_mutate():
    ks = [k.copy() for k in DECAY]
    ch = validate_channel(ks)
    ks[0][0, 0] = 5.0
    assert ch.kraus[0][0, 0] == 1.0


def test_apply_examples():
    rho = np.diag([0.75, 0.25])
    np.testing.assert_allclose(apply(identity_channel(2), rho).matrix, rho)
    np.testing.assert_allclose(apply(depolarizing(2, 0.5), rho).matrix, np.diag([0.625, 0.375]), atol=1e-15)
    np.testing.assert_allclose(apply(unitary_channel(X), rho).matrix, np.diag([0.25, 0.75]), atol=1e-15)


def test_apply_to_operator_examples():
    m = np.array([[1, 2], [3, 4j]])
    np.testing.assert_allclose(apply_to_operator(identity_channel(2), m), m)
    off = np.array([[0, 1], [0, 0]])
    np.testing.assert_allclose(apply_to_operator(pinching_in_basis(np.eye(2)), off), np.zeros((2, 2)))


def test_compose_order():
    # decay then X lands in |1>; X then decay lands in |0>
    decay, flip = validate_channel(DECAY), unitary_channel(X)
    rho = np.diag([0.3, 0.7])
    np.testing.assert_allclose(apply_to_operator(compose(flip, decay), rho), np.diag([0, 1]), atol=1e-15)
    np.testing.assert_allclose(apply_to_operator(compose(decay, flip), rho), np.diag([1, 0]), atol=1e-15)


def test_unitality_examples():
    assert is_unital(unitary_channel(random_unitary(3, 1)))
    assert is_unital(random_pinching(4, 2))
    assert not is_unital(validate_channel(DECAY))


def test_pinching_examples():
    rho = np.diag([0.6, 0.4])
    np.testing.assert_allclose(apply_to_operator(pinching_in_basis(np.eye(2)), rho), rho)
    m = np.array([[0.6, 0.2 - 0.1j], [0.2 + 0.1j, 0.4]])
    np.testing.assert_allclose(apply_to_operator(pinching_in_basis(np.eye(2)), m), rho)
    with pytest.raises(NotAResolutionOfIdentity):
        pinching([np.diag([1, 0, 0]), np.diag([0, 1, 0])])


def test_unitary_examples():
    np.testing.assert_allclose(unitary_channel(np.eye(2)).kraus[0], np.eye(2))
    rho = random_density(3, seed=1).matrix
    u = random_unitary(3, 4)
    np.testing.assert_allclose(apply_to_operator(unitary_channel(u), rho), u @ rho @ u.conj().T, atol=1e-14)
    with pytest.raises(NotUnitary):
        unitary_channel(2 * np.eye(2))


def test_depolarizing_examples():
    rho = random_density(3, seed=3).matrix
    np.testing.assert_allclose(apply_to_operator(depolarizing(3, 0), rho), rho, atol=1e-14)
    np.testing.assert_allclose(apply_to_operator(depolarizing(3, 1), rho), np.eye(3) / 3, atol=1e-14)
    np.testing.assert_allclose(apply_to_operator(depolarizing(3, 0.3), rho),
                               0.7 * rho + 0.3 * np.eye(3) / 3, atol=1e-14)
    with pytest.raises(ParameterOutOfRange):
        depolarizing(2, 1.5)


def test_weyl_operators_are_orthogonal():
    w = weyl_operators(3)
    gram = np.einsum("aij,bij->ab", w.conj(), w)
    np.testing.assert_allclose(gram, 3 * np.eye(9), atol=1e-13)


def test_dephasing_kills_coherences():
    m = random_density(3, seed=6).matrix
    out = apply_to_operator(dephasing(3, 1.0), m)
    np.testing.assert_allclose(out, np.diag(np.diag(m)), atol=1e-14)


def test_partial_trace_channel_examples():
    ra, rb = random_density(2, seed=1).matrix, random_density(3, seed=2).matrix
    np.testing.assert_allclose(apply_to_operator(partial_trace_channel(2, 3, "B"), kron(ra, rb)), ra, atol=1e-14)
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    np.testing.assert_allclose(apply_to_operator(partial_trace_channel(2, 2, "A"), np.outer(bell, bell)),
                               np.eye(2) / 2, atol=1e-15)
    for seed in range(50):
        rho = random_density(6, seed=seed).matrix
        for which in "AB":
            np.testing.assert_allclose(apply_to_operator(partial_trace_channel(2, 3, which), rho),
                                       partial_trace(rho, which, 2, 3), atol=1e-12)


def test_random_channel_examples():
    ch = random_channel(3, 3, 1, seed=5)
    assert ch.n_kraus == 1
    u = ch.kraus[0]
    np.testing.assert_allclose(u.conj().T @ u, np.eye(3), atol=1e-12)
    for seed in range(100):
        validate_channel(random_channel(3, 2, 3, seed=seed).kraus)
    np.testing.assert_array_equal(random_channel(3, seed=8).kraus, random_channel(3, seed=8).kraus)


def test_random_unital_examples():
    assert random_unital_channel(3, 1, seed=2).n_kraus == 1
    for seed in range(100):
        assert is_unital(random_unital_channel(3, 3, seed=seed))
    composed = compose(random_pinching(3, 1), random_unital_channel(3, 2, seed=0))
    assert is_unital(composed)


def test_amplitude_damping():
    ch = amplitude_damping(1.0)
    np.testing.assert_allclose(apply_to_operator(ch, np.diag([0, 1])), np.diag([1, 0]), atol=1e-15)
    assert not is_unital(ch)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_channel_output_is_density(din, dout, env, seed):
    assume(dout * env >= din)
    ch = random_channel(din, dout, env, seed=seed)
    out = apply(ch, random_density(din, seed=seed))
    assert abs(np.trace(out.matrix) - 1) < 1e-12
    assert np.linalg.eigvalsh(out.matrix).min() > -1e-12
