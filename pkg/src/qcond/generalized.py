"""Conditional quantities over general (non-orthogonal) convex decompositions.

``P(rho|kappa) = Tr[Pi_rho E{Pi_kappa}]`` replaces the eigenprojectors of
the spectral table with arbitrary rank-1 decompositions. The output
weights ``Lambda_rho = Tr[Pi_rho rho_R]`` then obey
``Lambda_rho = sum_kappa P(rho|kappa) lambda_kappa`` but in general differ
from the weights of a decomposition of ``rho_R`` on the same projectors.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import QuantumChannel, apply_to_operator
from .errors import (
    DimensionMismatch,
    NotPSD,
    OutputNotResolutionOfIdentity,
    PowerOutOfRange,
    RankTooSmall,
)
from .linalg import as_matrix, dagger, max_abs, qr_orthonormalize
from .states import EIGCLIP, complex_gaussian, density_from_matrix, spectral

DECOMP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ConvexDecomposition:
    """``rho = sum_k weights[k] |v_k><v_k|`` with unit columns ``vectors[:, k]``."""

    weights: np.ndarray
    vectors: np.ndarray

    @property
    def count(self) -> int:
        return len(self.weights)

    @property
    def projectors(self) -> np.ndarray:
        v = self.vectors
        return np.einsum("ik,jk->kij", v, v.conj())

    def reconstruct(self) -> np.ndarray:
        v = self.vectors
        return (v * self.weights) @ dagger(v)

    def max_overlap(self) -> float:
        """Largest ``|<v_i|v_j>|`` over distinct members; zero for orthogonal families."""
        g = np.abs(dagger(self.vectors) @ self.vectors)
        np.fill_diagonal(g, 0.0)
        return float(g.max()) if self.count > 1 else 0.0


def spectral_decomposition(rho) -> ConvexDecomposition:
    s = spectral(density_from_matrix(rho))
    return ConvexDecomposition(weights=s.probabilities.copy(), vectors=s.vectors.copy())


def decomposition_from_isometry(rho, isometry) -> ConvexDecomposition:
    """Decomposition induced by an ``m x rank`` isometry acting on the spectral one.

    ``|phi_k> = sum_i U[k, i] sqrt(p_i) |psi_i>`` over the nonzero
    eigenvalues; members with zero weight are dropped.
    """
    s = spectral(density_from_matrix(rho))
    rank = int(np.sum(s.probabilities > EIGCLIP))
    u = as_matrix(isometry)
    if u.shape[1] != rank:
        raise RankTooSmall(f"isometry has {u.shape[1]} columns but rank is {rank}")
    amps = s.vectors[:, :rank] * np.sqrt(s.probabilities[:rank])
    phi = amps @ u.T
    weights = np.sum(np.abs(phi) ** 2, axis=0)
    keep = weights > 1e-15
    phi = phi[:, keep] / np.sqrt(weights[keep])
    return ConvexDecomposition(weights=weights[keep] / weights[keep].sum(), vectors=phi)


def random_decomposition(rho, m: int, seed=None) -> ConvexDecomposition:
    """Random ``m``-member rank-1 decomposition of ``rho`` from a Haar isometry."""
    s = spectral(density_from_matrix(rho))
    rank = int(np.sum(s.probabilities > EIGCLIP))
    if m < rank:
        raise RankTooSmall(f"m={m} members cannot decompose a rank-{rank} state")
    rng = np.random.default_rng(seed)
    u = qr_orthonormalize(complex_gaussian((m, rank), rng))
    return decomposition_from_isometry(rho, u)


@dataclass(frozen=True, eq=False)
class GeneralizedTable:
    """``entries[rho, kappa] = P(rho|kappa)`` with input weights and output overlaps."""

    entries: np.ndarray
    lambda_in: np.ndarray
    Lambda_out: np.ndarray
    lambda_out: Optional[np.ndarray] = None
    resolves_identity: bool = True

    def lambda_relation_residual(self) -> float:
        """``max |Lambda_rho - sum_kappa P(rho|kappa) lambda_kappa|``."""
        return float(np.max(np.abs(self.Lambda_out - self.entries @ self.lambda_in)))

    def column_residual(self) -> float:
        return float(np.max(np.abs(self.entries.sum(axis=0) - 1.0)))

    def lambda_gap(self) -> Optional[float]:
        """``max |Lambda_rho - lambda_rho|`` when output weights are known."""
        if self.lambda_out is None:
            return None
        return float(np.max(np.abs(self.Lambda_out - self.lambda_out)))


def generalized_qcp(channel: QuantumChannel, dec_in: ConvexDecomposition, out,
                    tol: float = 1e-9, require_identity: bool = True) -> GeneralizedTable:
    """Generalized conditional table between two rank-1 families.

    :param out: either a matrix whose columns are the output unit vectors,
        or a :class:`ConvexDecomposition` of the output state (its weights
        then give ``lambda_out`` for the gap diagnostic)
    :param require_identity: raise unless the output projectors sum to ``I``;
        turn off only to study non-orthogonal output decompositions, for which
        the entries are not normalized
    """
    if isinstance(out, ConvexDecomposition):
        vr, lam_out = out.vectors, out.weights
    else:
        vr, lam_out = as_matrix(out), None
    if dec_in.vectors.shape[0] != channel.dim_in or vr.shape[0] != channel.dim_out:
        raise DimensionMismatch("decomposition dimensions do not match the channel")
    resolution = max_abs(vr @ dagger(vr) - np.eye(channel.dim_out))
    resolves = resolution <= tol
    if require_identity and not resolves:
        raise OutputNotResolutionOfIdentity(f"output projectors miss the identity by {resolution:.3g}")
    amps = dagger(vr) @ channel.kraus @ dec_in.vectors
    entries = np.sum(np.abs(amps) ** 2, axis=0)
    rho_out = apply_to_operator(channel, dec_in.reconstruct())
    Lambda = np.real(np.einsum("ir,ij,jr->r", vr.conj(), rho_out, vr))
    return GeneralizedTable(entries=entries, lambda_in=np.asarray(dec_in.weights),
                            Lambda_out=Lambda, lambda_out=lam_out, resolves_identity=bool(resolves))


def _psd_power(a: np.ndarray, p: float, name: str, tol: float) -> np.ndarray:
    # a matrix power is basis-independent, so LAPACK's eigh is used directly
    w, v = np.linalg.eigh(0.5 * (a + dagger(a)))
    if w[0] < -tol:
        raise NotPSD(f"{name} has eigenvalue {w[0]:.3g}")
    w = np.where(w <= EIGCLIP, 0.0, w)
    # 0**0 = 1 keeps A^0 = I on the support complement, matching the spectral-calculus identity.
    powered = np.where(w > 0, w ** p, 1.0 if p == 0 else 0.0)
    return (v * powered) @ dagger(v)


def lieb_quantity(A, B, K, p: float, tol: float = 1e-10) -> float:
    """``Tr[A^p K B^(1-p) K^dagger]`` for PSD ``A``, ``B`` and ``0 <= p <= 1``.

    :raises NotPSD: if ``A`` or ``B`` has an eigenvalue below ``-tol``
    :raises PowerOutOfRange: if ``p`` lies outside ``[0, 1]``
    """
    if not 0.0 <= p <= 1.0:
        raise PowerOutOfRange(f"p={p} outside [0, 1]")
    A, B, K = as_matrix(A), as_matrix(B), as_matrix(K)
    ap = _psd_power(A, p, "A", tol)
    bp = _psd_power(B, 1.0 - p, "B", tol)
    value = np.trace(ap @ K @ bp @ dagger(K))
    scale = max(1.0, abs(value))
    if abs(value.imag) > 1e-10 * scale:
        raise ValueError(f"imaginary residual {value.imag:.3g} in trace")
    return float(value.real)


@dataclass(frozen=True)
class ConcavityReport:
    grid: np.ndarray
    slacks: np.ndarray

    @property
    def worst_slack(self) -> float:
        return float(self.slacks.min())

    def clean(self, tol: float = 1e-8) -> bool:
        return self.worst_slack >= -tol


def concavity_probe(A0, A1, B0, B1, K, p: float, n_points: int = 11) -> ConcavityReport:
    """Slack of joint concavity of ``(A, B) -> F_p(A, B; K)`` along a segment.

    At each grid point ``t`` the slack is
    ``F(tA0 + (1-t)A1, tB0 + (1-t)B1) - [t F(A0, B0) + (1-t) F(A1, B1)]``.
    """
    A0, A1, B0, B1 = (as_matrix(x) for x in (A0, A1, B0, B1))
    f0 = lieb_quantity(A0, B0, K, p)
    f1 = lieb_quantity(A1, B1, K, p)
    grid = np.linspace(0.0, 1.0, n_points)
    slacks = np.array([
        lieb_quantity(t * A0 + (1 - t) * A1, t * B0 + (1 - t) * B1, K, p) - (t * f0 + (1 - t) * f1)
        for t in grid
    ])
    return ConcavityReport(grid=grid, slacks=slacks)


def random_psd(d: int, rng, rank: Optional[int] = None) -> np.ndarray:
    """Unnormalized Wishart-style PSD matrix ``G G^dagger``."""
    g = complex_gaussian((d, d if rank is None else rank), rng)
    return g @ dagger(g)
