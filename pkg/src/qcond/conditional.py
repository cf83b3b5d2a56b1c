"""Quantum conditional probabilities between eigenbases of initial and final states.

Given ``rho_R = E{rho_Q}`` with complete eigenbases ``{|q>}`` and ``{|r>}``,
the table entry ``p(r|q) = <r| E{|q><q|} |r>`` is the probability that the
final underlying eigenstate is ``r`` given the initial eigenstate ``q``.
Tables are stored as ``probs[r, q]`` so each column is a distribution.
"""
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from .channels import QuantumChannel, apply, apply_to_operator
from .errors import DimensionMismatch, ShapeMismatch
from .linalg import as_matrix, dagger, max_abs
from .states import (
    DensityMatrix,
    SpectralDecomposition,
    density_from_matrix,
    density_from_spectrum,
    spectral,
)


@dataclass(frozen=True, eq=False)
class ConditionalTable:
    """Column-stochastic table ``probs[r, q] = p(r|q)`` and the marginals it links."""

    probs: np.ndarray
    p_from: np.ndarray
    p_to: np.ndarray
    basis_from: Optional[np.ndarray] = None
    basis_to: Optional[np.ndarray] = None
    degenerate_from: Tuple[Tuple[int, ...], ...] = ()
    degenerate_to: Tuple[Tuple[int, ...], ...] = ()

    @property
    def n_from(self) -> int:
        return self.probs.shape[1]

    @property
    def n_to(self) -> int:
        return self.probs.shape[0]

    @property
    def basis_dependent(self) -> bool:
        """True when a degenerate eigenspace makes entries depend on the basis choice."""
        return any(len(g) > 1 for g in self.degenerate_from + self.degenerate_to)

    def column_residual(self) -> float:
        """``max_q |sum_r p(r|q) - 1|``."""
        return float(np.max(np.abs(self.probs.sum(axis=0) - 1.0)))

    def row_residual(self) -> float:
        """``max_r |sum_q p(r|q) - 1|``; zero for doubly stochastic tables."""
        return float(np.max(np.abs(self.probs.sum(axis=1) - 1.0)))

    def total_probability_residual(self) -> float:
        """``max_r |p_r - sum_q p(r|q) p_q|``."""
        return float(np.max(np.abs(self.p_to - self.probs @ self.p_from)))

    def joint(self) -> np.ndarray:
        """``joint[r, q] = p(r|q) p_q``."""
        return self.probs * self.p_from[None, :]


class ConditionalResult(NamedTuple):
    table: ConditionalTable
    rho_to: DensityMatrix
    spectral_from: SpectralDecomposition
    spectral_to: SpectralDecomposition


def transition_table(channel: QuantumChannel, basis_from, basis_to) -> np.ndarray:
    """``T[r, q] = <r| E{|q><q|} |r>`` for columns ``|q>`` of ``basis_from`` and ``|r>`` of ``basis_to``."""
    vq = as_matrix(basis_from)
    vr = as_matrix(basis_to)
    if vq.shape[0] != channel.dim_in or vr.shape[0] != channel.dim_out:
        raise DimensionMismatch("basis dimensions do not match the channel")
    amps = dagger(vr) @ channel.kraus @ vq
    return np.sum(np.abs(amps) ** 2, axis=0)


def conditional_probs(channel: QuantumChannel, rho_from) -> ConditionalResult:
    """Conditional probability table of ``channel`` acting on ``rho_from``.

    Both eigenbases are complete: eigenvectors with zero probability are
    kept so the initial projectors resolve the identity.
    """
    rho_from = density_from_matrix(rho_from)
    if rho_from.dimension != channel.dim_in:
        raise DimensionMismatch(f"state dimension {rho_from.dimension} != dim_in {channel.dim_in}")
    rho_to = apply(channel, rho_from)
    sq = spectral(rho_from)
    sr = spectral(rho_to)
    probs = transition_table(channel, sq.vectors, sr.vectors)
    table = ConditionalTable(
        probs=probs,
        p_from=sq.probabilities,
        p_to=sr.probabilities,
        basis_from=sq.vectors,
        basis_to=sr.vectors,
        degenerate_from=sq.degeneracy_groups,
        degenerate_to=sr.degeneracy_groups,
    )
    return ConditionalResult(table, rho_to, sq, sr)


def evolved_projector_family(channel: QuantumChannel, rho_from) -> List[DensityMatrix]:
    """The states ``E{P_q}`` for every initial eigenprojector ``P_q``."""
    rho_from = density_from_matrix(rho_from)
    if rho_from.dimension != channel.dim_in:
        raise DimensionMismatch(f"state dimension {rho_from.dimension} != dim_in {channel.dim_in}")
    v = spectral(rho_from).vectors
    return [density_from_matrix(apply_to_operator(channel, np.outer(v[:, q], v[:, q].conj())))
            for q in range(v.shape[1])]


def family_mixture(p_from, family) -> np.ndarray:
    return sum(p * np.asarray(rho.matrix) for p, rho in zip(p_from, family))


def conditional_states(table: ConditionalTable, basis_to=None) -> List[DensityMatrix]:
    """``rho_{R|q} = sum_r p(r|q) |r><r|``, one state per initial eigenstate."""
    basis = table.basis_to if basis_to is None else as_matrix(basis_to)
    if basis is None:
        raise ValueError("table carries no output basis; pass basis_to")
    if basis.shape != (table.n_to, table.n_to) or max_abs(dagger(basis) @ basis - np.eye(table.n_to)) > 1e-9:
        raise ValueError("basis_to must be a complete orthonormal basis matching the table")
    return [density_from_spectrum(table.probs[:, q], basis) for q in range(table.n_from)]


def pinch(m, basis) -> np.ndarray:
    """``sum_r P_r M P_r`` for the rank-1 projectors onto the columns of ``basis``."""
    v = as_matrix(basis)
    diag = np.einsum("ir,ij,jr->r", v.conj(), np.asarray(m), v)
    return (v * diag) @ dagger(v)


@dataclass(frozen=True, eq=False)
class BornOverlapTable:
    """Per initial eigenstate ``q``: ``beta[q][r, r_q] = |<r|r_q>|^2``."""

    beta: List[np.ndarray]
    family_probs: List[np.ndarray] = field(default_factory=list)

    def doubly_stochastic_residual(self) -> float:
        worst = 0.0
        for b in self.beta:
            worst = max(worst, float(np.max(np.abs(b.sum(axis=0) - 1))), float(np.max(np.abs(b.sum(axis=1) - 1))))
        return worst

    def decomposition(self) -> np.ndarray:
        """``sum_{r_q} beta(r|r_q) p(r_q|q)`` as a table indexed ``[r, q]``."""
        return np.column_stack([b @ p for b, p in zip(self.beta, self.family_probs)])


def born_overlap(basis_to, family: List[DensityMatrix]) -> BornOverlapTable:
    """Overlaps between the final eigenbasis and each evolved projector's eigenbasis."""
    v = as_matrix(basis_to)
    betas, probs = [], []
    for rho in family:
        s = spectral(rho)
        betas.append(np.abs(dagger(v) @ s.vectors) ** 2)
        probs.append(s.probabilities)
    return BornOverlapTable(beta=betas, family_probs=probs)


def max_overlap_pairing(table: ConditionalTable) -> np.ndarray:
    """For each ``q`` the index ``argmax_r p(r|q)``; ties go to the lowest index."""
    return np.argmax(table.probs, axis=0)


def paired_table(table: ConditionalTable) -> np.ndarray:
    """Table with rows reordered by the max-overlap pairing, so a perfect pairing is the identity."""
    return table.probs[max_overlap_pairing(table), :]


def joint_asymmetry(table: ConditionalTable) -> float:
    """``max_{q,r} |p(r|q) p_q - p(q|r) p_r|`` reading ``p(q|r)`` as the transposed entry."""
    if table.n_from != table.n_to:
        raise ShapeMismatch("joint asymmetry needs a square table")
    forward = table.probs * table.p_from[None, :]
    backward = table.probs.T * table.p_to[:, None]
    return float(np.max(np.abs(forward - backward)))
