"""Conditional probabilities from a parent system's eigenstates to a subsystem's.

The partial trace is a CPTP map, so ``p(a|m) = Tr[P_a Tr_B{P_m}]`` is just the
conditional table of the partial-trace channel acting on ``rho_AB``.
"""
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .channels import partial_trace_channel
from .conditional import (
    BornOverlapTable,
    ConditionalTable,
    born_overlap,
    conditional_probs,
    conditional_states,
    evolved_projector_family,
)
from .errors import DimensionMismatch
from .measures import j_conditional, j_per_q
from .states import Base, DensityMatrix, density_from_matrix, shannon_entropy, von_neumann_entropy


@dataclass(frozen=True, eq=False)
class ParentChild:
    """Parent state ``rho_AB`` linked to the kept subsystem ``which``."""

    rho_AB: DensityMatrix
    rho_sub: DensityMatrix
    rho_other: DensityMatrix
    dims: Tuple[int, int]
    which: str
    table: ConditionalTable
    reduced_projectors: List[DensityMatrix]
    conditional: List[DensityMatrix]
    overlaps: BornOverlapTable

    def mixture_residual(self) -> float:
        """``max |sum_m p_m rho_m^A - rho_A|``."""
        mix = sum(p * np.asarray(r.matrix) for p, r in zip(self.table.p_from, self.reduced_projectors))
        return float(np.max(np.abs(mix - self.rho_sub.matrix)))


def subsystem_conditional(rho_AB, dA: int, dB: int, which: str = "A") -> ParentChild:
    """Table ``p(a|m)`` from parent eigenstates ``m`` to eigenstates of subsystem ``which``."""
    rho_AB = density_from_matrix(rho_AB)
    if rho_AB.dimension != dA * dB:
        raise DimensionMismatch(f"state dimension {rho_AB.dimension} != {dA}*{dB}")
    if which not in ("A", "B"):
        raise ValueError(f"which must be 'A' or 'B', got {which!r}")
    traced = "B" if which == "A" else "A"
    keep = partial_trace_channel(dA, dB, traced)
    drop = partial_trace_channel(dA, dB, which)
    result = conditional_probs(keep, rho_AB)
    family = evolved_projector_family(keep, rho_AB)
    return ParentChild(
        rho_AB=rho_AB,
        rho_sub=result.rho_to,
        rho_other=density_from_matrix(drop(rho_AB.matrix)),
        dims=(dA, dB),
        which=which,
        table=result.table,
        reduced_projectors=family,
        conditional=conditional_states(result.table),
        overlaps=born_overlap(result.table.basis_to, family),
    )


def j_given_parent(pc: ParentChild, base: Base = 2) -> Tuple[List[float], float]:
    """Per-eigenstate ``J(A|m)`` and the average ``J(A|AB)``."""
    return j_per_q(pc.table, base), j_conditional(pc.table, base)


def reduced_entropies(pc: ParentChild, base: Base = 2) -> List[float]:
    """``S(Tr_B P_m)``: entanglement entropy of each parent eigenstate."""
    return [von_neumann_entropy(r, base) for r in pc.reduced_projectors]


def entanglement_bound_check(pc: ParentChild, base: Base = 2) -> Tuple[float, float, float]:
    """Return ``(-S(B|A), J(A|AB), slack)`` where ``S(B|A) = S(rho_AB) - S(rho_A)``.

    With ``which='B'`` the roles of the subsystems are swapped.
    """
    s_ab = shannon_entropy(pc.table.p_from, base)
    s_sub = shannon_entropy(pc.table.p_to, base)
    lhs = s_sub - s_ab
    rhs = j_conditional(pc.table, base)
    return lhs, rhs, rhs - lhs
