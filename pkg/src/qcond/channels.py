"""CPTP maps in Kraus form and the named channels used throughout qcond."""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    NotAResolutionOfIdentity,
    NotTracePreserving,
    NotUnitary,
    ParameterOutOfRange,
    ShapeMismatch,
)
from .linalg import as_matrix, dagger, max_abs, qr_orthonormalize
from .states import DensityMatrix, complex_gaussian, density_from_matrix

CHANNEL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """``rho -> sum_k K_k rho K_k^dagger`` with ``sum_k K_k^dagger K_k = I``.

    ``kraus`` is a read-only array of shape ``(n_kraus, dim_out, dim_in)``.
    """

    kraus: np.ndarray

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    @property
    def n_kraus(self) -> int:
        return self.kraus.shape[0]

    def __call__(self, m) -> np.ndarray:
        return apply_to_operator(self, m)


def _stack(kraus) -> np.ndarray:
    if isinstance(kraus, np.ndarray) and kraus.ndim == 3:
        ops = [as_matrix(k) for k in kraus]
    elif isinstance(kraus, np.ndarray) and kraus.ndim == 2:
        ops = [as_matrix(kraus)]
    else:
        ops = [as_matrix(k) for k in kraus]
    if not ops:
        raise ShapeMismatch("a channel needs at least one Kraus operator")
    shape = ops[0].shape
    for k in ops:
        if k.shape != shape:
            raise ShapeMismatch(f"Kraus operators have mixed shapes {shape} and {k.shape}")
    return np.stack(ops)


def tp_deviation(kraus: np.ndarray) -> float:
    """``||sum_k K_k^dagger K_k - I||_max``."""
    s = np.einsum("kji,kjl->il", kraus.conj(), kraus)
    return max_abs(s - np.eye(kraus.shape[2]))


def validate_channel(kraus, tol: float = CHANNEL_TOL) -> QuantumChannel:
    """Check trace preservation of a Kraus list and wrap it as a channel.

    :raises NotTracePreserving: with ``.deviation`` set to the max-entry error
    :raises ShapeMismatch: if operators disagree in shape or the list is empty
    """
    ops = _stack(kraus)
    dev = tp_deviation(ops)
    if dev > tol:
        raise NotTracePreserving(f"sum K^dagger K deviates from identity by {dev:.3g}", deviation=dev)
    ops = ops.copy()
    ops.setflags(write=False)
    return QuantumChannel(kraus=ops)


def apply_to_operator(channel: QuantumChannel, m) -> np.ndarray:
    """Linear action on an arbitrary operator (no state validation)."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (channel.dim_in, channel.dim_in):
        raise DimensionMismatch(f"operator shape {m.shape} does not match dim_in={channel.dim_in}")
    k = channel.kraus
    return np.sum(k @ m @ k.conj().transpose(0, 2, 1), axis=0)


def apply(channel: QuantumChannel, rho) -> DensityMatrix:
    """Evolve a state; the output is re-validated as a density matrix."""
    rho = density_from_matrix(rho)
    if rho.dimension != channel.dim_in:
        raise DimensionMismatch(f"state dimension {rho.dimension} != dim_in {channel.dim_in}")
    return density_from_matrix(apply_to_operator(channel, rho.matrix))


def compose(second: QuantumChannel, first: QuantumChannel) -> QuantumChannel:
    """``second o first`` with Kraus set ``{K2_j K1_i}``."""
    if first.dim_out != second.dim_in:
        raise DimensionMismatch(f"cannot compose: first outputs {first.dim_out}, second takes {second.dim_in}")
    ops = np.einsum("jab,ibc->jiac", second.kraus, first.kraus)
    ops = ops.reshape(-1, second.dim_out, first.dim_in)
    ops.setflags(write=False)
    return QuantumChannel(kraus=ops)


def is_unital(channel: QuantumChannel, tol: float = CHANNEL_TOL) -> bool:
    if channel.dim_in != channel.dim_out:
        return False
    return unital_deviation(channel) <= tol


def unital_deviation(channel: QuantumChannel) -> float:
    k = channel.kraus
    return max_abs(np.einsum("kij,klj->il", k, k.conj()) - np.eye(channel.dim_out))


def identity_channel(d: int) -> QuantumChannel:
    return validate_channel([np.eye(d)])


def unitary_channel(u, tol: float = CHANNEL_TOL) -> QuantumChannel:
    u = as_matrix(u)
    if u.shape[0] != u.shape[1] or max_abs(dagger(u) @ u - np.eye(u.shape[0])) > tol:
        raise NotUnitary("U^dagger U deviates from the identity")
    return validate_channel([u])


def pinching(projectors: Sequence, tol: float = CHANNEL_TOL) -> QuantumChannel:
    """Projective measurement ``rho -> sum_m P_m rho P_m`` (outcome discarded).

    :raises NotAResolutionOfIdentity: unless the projectors are Hermitian,
        mutually orthogonal, idempotent and sum to the identity
    """
    ops = _stack(projectors)
    d = ops.shape[1]
    if ops.shape[1] != ops.shape[2]:
        raise NotAResolutionOfIdentity("projectors must be square")
    if max_abs(ops.sum(axis=0) - np.eye(d)) > tol:
        raise NotAResolutionOfIdentity("projectors do not sum to the identity")
    for i, p in enumerate(ops):
        if max_abs(p - dagger(p)) > tol:
            raise NotAResolutionOfIdentity(f"projector {i} is not Hermitian")
        for j in range(i, len(ops)):
            target = p if i == j else 0.0
            if max_abs(p @ ops[j] - target) > tol:
                raise NotAResolutionOfIdentity(f"projectors {i} and {j} are not orthogonal projectors")
    return validate_channel(ops, tol=tol)


def pinching_in_basis(vectors, tol: float = CHANNEL_TOL) -> QuantumChannel:
    """Pinching onto the rank-1 projectors of the columns of ``vectors``."""
    v = as_matrix(vectors)
    if max_abs(dagger(v) @ v - np.eye(v.shape[1])) > tol or v.shape[0] != v.shape[1]:
        raise NotAResolutionOfIdentity("basis vectors are not a complete orthonormal set")
    return validate_channel(np.einsum("iq,jq->qij", v, v.conj()), tol=tol)


def weyl_operators(d: int) -> np.ndarray:
    """The d^2 shift/clock products ``X^a Z^b``, index ``a*d + b``."""
    omega = np.exp(2j * np.pi / d)
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(omega ** np.arange(d))
    ops = []
    for a in range(d):
        xa = np.linalg.matrix_power(shift, a)
        for b in range(d):
            ops.append(xa @ np.linalg.matrix_power(clock, b))
    return np.stack(ops).astype(complex)


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ParameterOutOfRange(f"lambda must lie in [0, 1], got {lam}")
    return lam


def depolarizing(d: int, lam: float) -> QuantumChannel:
    """``rho -> (1 - lam) rho + lam I/d`` via the generalized Pauli twirl."""
    lam = _check_lambda(lam)
    w = weyl_operators(d)
    coeffs = np.full(d * d, lam / d**2)
    coeffs[0] += 1.0 - lam
    return validate_channel(np.sqrt(coeffs)[:, None, None] * w)


def dephasing(d: int, lam: float) -> QuantumChannel:
    """``rho -> (1 - lam) rho + lam sum_i P_i rho P_i`` in the computational basis."""
    lam = _check_lambda(lam)
    ops = [np.sqrt(1.0 - lam) * np.eye(d)]
    for i in range(d):
        p = np.zeros((d, d))
        p[i, i] = np.sqrt(lam)
        ops.append(p)
    return validate_channel(ops)


def partial_trace_channel(dA: int, dB: int, which: str = "B") -> QuantumChannel:
    """Channel tracing out subsystem ``which`` of a ``dA x dB`` system."""
    if dA < 1 or dB < 1:
        raise ParameterOutOfRange("subsystem dimensions must be positive")
    if which == "B":
        ops = [np.kron(np.eye(dA), np.eye(dB)[k:k + 1, :]) for k in range(dB)]
    elif which == "A":
        ops = [np.kron(np.eye(dA)[k:k + 1, :], np.eye(dB)) for k in range(dA)]
    else:
        raise ValueError(f"which must be 'A' or 'B', got {which!r}")
    return validate_channel(ops)


def amplitude_damping(gamma: float) -> QuantumChannel:
    gamma = _check_lambda(gamma)
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return validate_channel([k0, k1])


def random_unitary(d: int, seed=None) -> np.ndarray:
    """Haar-random unitary from the QR of a complex Gaussian matrix."""
    rng = np.random.default_rng(seed)
    return qr_orthonormalize(complex_gaussian((d, d), rng))


def random_channel(dim_in: int, dim_out: int = None, env_dim: int = 2, seed=None) -> QuantumChannel:
    """Random CPTP map from a Stinespring isometry ``V: C^dim_in -> C^dim_out (x) C^env_dim``.

    Kraus operators are ``K_k = (I (x) <k|) V``.
    """
    dim_out = dim_in if dim_out is None else dim_out
    if env_dim < 1:
        raise ParameterOutOfRange("env_dim must be at least 1")
    if dim_out * env_dim < dim_in:
        raise ParameterOutOfRange(f"dim_out*env_dim = {dim_out * env_dim} < dim_in = {dim_in}")
    rng = np.random.default_rng(seed)
    v = qr_orthonormalize(complex_gaussian((dim_out * env_dim, dim_in), rng))
    v = v.reshape(dim_out, env_dim, dim_in)
    return validate_channel(np.transpose(v, (1, 0, 2)))


def random_unital_channel(d: int, n_unitaries: int = 3, seed=None) -> QuantumChannel:
    """Random mixture of Haar unitaries with Dirichlet(1, ..., 1) weights."""
    if n_unitaries < 1:
        raise ParameterOutOfRange("need at least one unitary")
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(n_unitaries))
    ops = [np.sqrt(w) * qr_orthonormalize(complex_gaussian((d, d), rng)) for w in weights]
    return validate_channel(ops)


def random_pinching(d: int, seed=None) -> QuantumChannel:
    """Pinching in a Haar-random orthonormal basis."""
    return pinching_in_basis(random_unitary(d, seed))
