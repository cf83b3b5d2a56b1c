"""Scalar information measures built on conditional probability tables.

``J`` is the entropy the evolution adds (Shannon entropy of each column of
``p(r|q)`` averaged over ``p_q``) and ``I`` the information shared between
initial and final eigenstates. ``I`` is evaluated from its double sum and
cross-checked against ``S(rho_R) - J``.
"""
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .channels import QuantumChannel
from .conditional import ConditionalTable, conditional_probs
from .errors import DimensionMismatch, InconsistentTable, IndexOutOfRange
from .linalg import partial_trace
from .states import (
    Base,
    DensityMatrix,
    density_from_matrix,
    log_fn,
    shannon_entropy,
    von_neumann_entropy,
)

TABLE_TOL = 1e-9


def j_given(table: ConditionalTable, q: int, base: Base = 2) -> float:
    """Entropy of the column ``p(.|q)``; equals ``S(rho_{R|q})``."""
    if not 0 <= q < table.n_from:
        raise IndexOutOfRange(f"q={q} outside 0..{table.n_from - 1}")
    return shannon_entropy(table.probs[:, q], base)


def j_per_q(table: ConditionalTable, base: Base = 2) -> List[float]:
    return [j_given(table, q, base) for q in range(table.n_from)]


def j_conditional(table: ConditionalTable, base: Base = 2) -> float:
    return float(np.dot(table.p_from, j_per_q(table, base)))


def mutual_information(table: ConditionalTable, base: Base = 2, tol: float = TABLE_TOL) -> float:
    """``sum_{q,r} p(r|q) p_q log[p(r|q) / p_r]`` by direct summation.

    :raises InconsistentTable: if a cell with joint weight above ``tol``
        points at an outcome with ``p_r = 0``
    """
    log = log_fn(base)
    joint = table.joint()
    total = 0.0
    for r in range(table.n_to):
        pr = table.p_to[r]
        for q in range(table.n_from):
            w = joint[r, q]
            if w <= 0.0:
                continue
            if pr <= 0.0:
                if w > tol:
                    raise InconsistentTable(f"p_r=0 for r={r} but p(r|q)p_q={w:.3g}")
                continue
            total += w * log(table.probs[r, q] / pr)
    return float(total)


def mutual_information_via_entropy(table: ConditionalTable, base: Base = 2) -> float:
    """Second route to ``I``: ``S(rho_R) - J`` with ``S(rho_R)`` from ``p_r``."""
    return shannon_entropy(table.p_to, base) - j_conditional(table, base)


@dataclass(frozen=True)
class InfoSummary:
    S_initial: float
    S_final: float
    J: float
    I: float
    J_per_q: List[float] = field(default_factory=list)
    base: Base = 2

    @property
    def identity_residual(self) -> float:
        """``|I - (S_final - J)|``."""
        return abs(self.I - (self.S_final - self.J))

    def to_dict(self) -> dict:
        return {"S_Q": self.S_initial, "S_R": self.S_final, "J": self.J, "I": self.I,
                "J_per_q": list(self.J_per_q), "base": self.base}


def summarize(table: ConditionalTable, base: Base = 2) -> InfoSummary:
    per_q = j_per_q(table, base)
    return InfoSummary(
        S_initial=shannon_entropy(table.p_from, base),
        S_final=shannon_entropy(table.p_to, base),
        J=float(np.dot(table.p_from, per_q)),
        I=mutual_information(table, base),
        J_per_q=per_q,
        base=base,
    )


def info_summary(channel: QuantumChannel, rho_from, base: Base = 2) -> InfoSummary:
    return summarize(conditional_probs(channel, rho_from).table, base)


def classical_conditional_entropy(joint=None, cond=None, marginal=None, base: Base = 2) -> float:
    """``H(Y|X) = -sum p(y|x) p(x) log p(y|x)``.

    Pass either ``joint[y, x]`` or a column-stochastic ``cond[y, x]`` with
    ``marginal[x]``.
    """
    log = log_fn(base)
    if joint is not None:
        joint = np.asarray(joint, dtype=float)
        px = joint.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            cond = np.where(px[None, :] > 0, joint / px[None, :], 0.0)
        marginal = px
    elif cond is None or marginal is None:
        raise ValueError("give either joint or (cond, marginal)")
    cond = np.asarray(cond, dtype=float)
    marginal = np.asarray(marginal, dtype=float)
    w = cond * marginal[None, :]
    mask = (w > 0) & (cond > 0)
    return float(max(0.0, -np.sum(w[mask] * log(cond[mask]))))


def classical_mutual_information(cond, marginal, base: Base = 2) -> float:
    """Classical ``I(X:Y)`` for ``cond[y, x] = p(y|x)`` and ``marginal[x]``."""
    cond = np.asarray(cond, dtype=float)
    marginal = np.asarray(marginal, dtype=float)
    py = cond @ marginal
    return shannon_entropy(py, base) - classical_conditional_entropy(cond=cond, marginal=marginal, base=base)


def conditional_vn_entropy(rho_AB, dA: int, dB: int, base: Base = 2) -> float:
    """``S(A|B) = S(rho_AB) - S(rho_B)``; negative for entangled states."""
    rho_AB = density_from_matrix(rho_AB)
    if rho_AB.dimension != dA * dB:
        raise DimensionMismatch(f"state dimension {rho_AB.dimension} != {dA}*{dB}")
    rho_B = partial_trace(rho_AB.matrix, "A", dA, dB)
    return von_neumann_entropy(rho_AB, base) - von_neumann_entropy(rho_B, base)


@dataclass(frozen=True, eq=False)
class Ensemble:
    weights: np.ndarray
    states: Sequence[DensityMatrix]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.states) or len(w) == 0:
            raise DimensionMismatch("weights and states must have equal, nonzero length")
        if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("ensemble weights must be a probability vector")
        dims = {s.dimension for s in self.states}
        if len(dims) != 1:
            raise DimensionMismatch(f"ensemble mixes dimensions {sorted(dims)}")
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))

    @classmethod
    def of(cls, weights, states) -> "Ensemble":
        return cls(np.asarray(weights, dtype=float), [density_from_matrix(s) for s in states])

    @property
    def dimension(self) -> int:
        return self.states[0].dimension

    def average(self) -> DensityMatrix:
        return density_from_matrix(sum(w * np.asarray(s.matrix) for w, s in zip(self.weights, self.states)))


def holevo_chi(ensemble: Ensemble, base: Base = 2) -> float:
    """``S(sum p_x rho_x) - sum p_x S(rho_x)``."""
    avg = von_neumann_entropy(ensemble.average(), base)
    return avg - float(sum(w * von_neumann_entropy(s, base) for w, s in zip(ensemble.weights, ensemble.states)))

