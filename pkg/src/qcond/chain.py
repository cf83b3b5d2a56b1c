"""Two-step processes Q -> R -> S, data processing and trajectory sampling.

The second stage is made consistent with the first by pre-composing a
pinching in the eigenbasis of ``rho_R``. With that structure the tables
obey ``p(s|q) = sum_r p(s|r) p(r|q)`` exactly, which is what the
data-processing and Holevo-type bounds rest on.
"""
import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .channels import QuantumChannel, compose, pinching_in_basis
from .conditional import ConditionalTable, conditional_probs, conditional_states, transition_table
from .errors import ConsistencyResidual, DimensionMismatch, EmptyBatch
from .measures import Ensemble, holevo_chi, mutual_information
from .states import Base, DensityMatrix, density_from_matrix

CHAIN_TOL = 1e-9


def make_consistent(raw: QuantumChannel, basis_R) -> QuantumChannel:
    """``raw o pinching(basis_R)``: the second stage measures along ``{P_r}`` first."""
    basis_R = np.asarray(basis_R)
    if basis_R.shape[0] != raw.dim_in:
        raise DimensionMismatch(f"basis of dimension {basis_R.shape[0]} does not fit dim_in {raw.dim_in}")
    return compose(raw, pinching_in_basis(basis_R))


@dataclass(frozen=True, eq=False)
class TwoStepProcess:
    rho_Q: DensityMatrix
    rho_R: DensityMatrix
    rho_S: DensityMatrix
    stage1: QuantumChannel
    stage2: QuantumChannel
    raw_stage2: QuantumChannel
    table_RQ: ConditionalTable
    table_SR: ConditionalTable
    table_SQ: ConditionalTable
    raw_table_SQ: np.ndarray

    @property
    def chain_residual(self) -> float:
        """``max |p(s|q) - sum_r p(s|r) p(r|q)|`` for the consistent process."""
        return float(np.max(np.abs(self.table_SQ.probs - self.table_SR.probs @ self.table_RQ.probs)))

    @property
    def raw_chain_residual(self) -> float:
        """Same residual with the unadjusted second stage."""
        return float(np.max(np.abs(self.raw_table_SQ - self.table_SR.probs @ self.table_RQ.probs)))

    @property
    def ps_residuals(self) -> Tuple[float, float]:
        """Deviation of ``p_s`` from the two total-probability routes (through ``r`` and through ``q``)."""
        p_s = self.table_SQ.p_to
        via_r = self.table_SR.probs @ self.table_RQ.p_to
        via_q = self.table_SQ.probs @ self.table_SQ.p_from
        return float(np.max(np.abs(p_s - via_r))), float(np.max(np.abs(p_s - via_q)))


def build_two_step(rho_Q, stage1: QuantumChannel, raw_stage2: QuantumChannel,
                   tol: float = CHAIN_TOL) -> TwoStepProcess:
    """Assemble a consistent two-step process and validate the chain property.

    :raises ConsistencyResidual: if the chain or total-probability residuals exceed ``tol``
    """
    rho_Q = density_from_matrix(rho_Q)
    if stage1.dim_out != raw_stage2.dim_in:
        raise DimensionMismatch("stage dimensions do not chain")
    first = conditional_probs(stage1, rho_Q)
    stage2 = make_consistent(raw_stage2, first.spectral_to.vectors)
    second = conditional_probs(stage2, first.rho_to)
    overall = compose(stage2, stage1)
    basis_Q = first.spectral_from.vectors
    basis_S = second.spectral_to.vectors
    table_SQ = ConditionalTable(
        probs=transition_table(overall, basis_Q, basis_S),
        p_from=first.table.p_from,
        p_to=second.table.p_to,
        basis_from=basis_Q,
        basis_to=basis_S,
        degenerate_from=first.table.degenerate_from,
        degenerate_to=second.table.degenerate_to,
    )
    raw_SQ = transition_table(compose(raw_stage2, stage1), basis_Q, basis_S)
    proc = TwoStepProcess(
        rho_Q=rho_Q, rho_R=first.rho_to, rho_S=second.rho_to,
        stage1=stage1, stage2=stage2, raw_stage2=raw_stage2,
        table_RQ=first.table, table_SR=second.table, table_SQ=table_SQ,
        raw_table_SQ=raw_SQ,
    )
    worst = max(proc.chain_residual, *proc.ps_residuals)
    if worst > tol:
        raise ConsistencyResidual(f"chain residual {worst:.3g} exceeds {tol:.3g}", residual=worst)
    return proc


def dpi_check(proc: TwoStepProcess, base: Base = 2) -> Tuple[float, float, float]:
    """Return ``(I(R:Q), I(S:Q), I(R:Q) - I(S:Q))``; the slack is nonnegative in exact arithmetic."""
    i_rq = mutual_information(proc.table_RQ, base)
    i_sq = mutual_information(proc.table_SQ, base)
    return i_rq, i_sq, i_rq - i_sq


def holevo_bound_check(proc: TwoStepProcess, base: Base = 2) -> Tuple[float, float, float]:
    """Return ``(I(R:Q), chi, |I(R:Q) - chi|)``.

    ``chi`` is evaluated from the ensemble ``{p_q, rho_{R|q}}`` by
    diagonalizing the conditional states and their average, independently
    of the table-based mutual information.
    """
    i_rq = mutual_information(proc.table_RQ, base)
    states = conditional_states(proc.table_RQ)
    chi = holevo_chi(Ensemble(proc.table_RQ.p_from, states), base)
    return i_rq, chi, abs(i_rq - chi)


@dataclass(frozen=True, eq=False)
class TrajectoryBatch:
    """Counts over ``(q, r)`` or ``(q, r, s)`` paths."""

    n_samples: int
    counts: np.ndarray
    seed: int
    workers: int = 1


def _worker_seed(seed: int, worker: int) -> int:
    digest = hashlib.sha256(f"{seed}:{worker}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _draw(cdfs: np.ndarray, given: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(len(given))
    out = np.empty(len(given), dtype=np.int64)
    n_out = cdfs.shape[0]
    for g in np.unique(given):
        mask = given == g
        idx = np.searchsorted(cdfs[:, g], u[mask], side="right")
        out[mask] = np.minimum(idx, n_out - 1)
    return out


def _cdf(p: np.ndarray) -> np.ndarray:
    c = np.cumsum(p, axis=0)
    return c / c[-1]


def _sample_chunk(p_q, tables, n, seed):
    rng = np.random.default_rng(seed)
    q = np.minimum(np.searchsorted(_cdf(np.asarray(p_q)), rng.random(n), side="right"), len(p_q) - 1)
    path = [q]
    for t in tables:
        path.append(_draw(_cdf(t), path[-1], rng))
    shape = (len(p_q),) + tuple(t.shape[0] for t in tables)
    counts = np.zeros(shape, dtype=np.int64)
    np.add.at(counts, tuple(path), 1)
    return counts


def sample_trajectories(source, n: int, seed: int, p_q=None, workers: int = 1) -> TrajectoryBatch:
    """Draw ``q ~ p_q``, then ``r ~ p(.|q)`` (and ``s ~ p(.|r)`` for a two-step process).

    ``source`` is a :class:`TwoStepProcess` or a :class:`ConditionalTable`
    (optionally with an explicit ``p_q``). Each worker draws from its own
    generator seeded by a hash of ``(seed, worker)``; counts are summed so
    the result is independent of scheduling.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(source, TwoStepProcess):
        p_q = source.table_RQ.p_from
        tables = [source.table_RQ.probs, source.table_SR.probs]
    else:
        p_q = source.p_from if p_q is None else np.asarray(p_q, dtype=float)
        tables = [source.probs]
    sizes = [n // workers + (1 if w < n % workers else 0) for w in range(workers)]
    jobs = [(p_q, tables, size, _worker_seed(seed, w)) for w, size in enumerate(sizes) if size]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _sample_chunk(*job), jobs))
    else:
        parts = [_sample_chunk(*job) for job in jobs]
    return TrajectoryBatch(n_samples=n, counts=sum(parts), seed=seed, workers=workers)


@dataclass(frozen=True, eq=False)
class EmpiricalTable:
    table: ConditionalTable
    n_given: np.ndarray
    insufficient: np.ndarray

    def binomial_violations(self, exact: np.ndarray, sigmas: float = 4.0, min_count: int = 100) -> int:
        """Cells with ``n_q >= min_count`` whose estimate misses ``exact`` by more than ``sigmas`` std devs."""
        bad = 0
        for q in range(exact.shape[1]):
            nq = self.n_given[q]
            if nq < min_count:
                continue
            p = exact[:, q]
            bound = sigmas * np.sqrt(p * (1 - p) / nq)
            # a zero-variance cell must be hit exactly
            bad += int(np.sum(np.abs(self.table.probs[:, q] - p) > bound + 1e-12))
        return bad


def empirical_table(batch: TrajectoryBatch, stage: int = 1, min_count: int = 100) -> EmpiricalTable:
    """Normalized frequencies of one transition.

    ``stage=1`` estimates ``p(r|q)``, ``stage=2`` estimates ``p(s|r)`` from a
    two-step batch. Cells conditioned on fewer than ``min_count`` samples
    are flagged in ``insufficient``.
    """
    counts = batch.counts
    if counts.sum() == 0:
        raise EmptyBatch("batch has no samples")
    axes = tuple(range(counts.ndim))
    keep = (stage - 1, stage)
    pair = counts.sum(axis=tuple(a for a in axes if a not in keep))  # [from, to]
    n_given = pair.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(n_given[None, :] > 0, pair.T / np.maximum(n_given, 1)[None, :], 0.0)
    p_from = n_given / n_given.sum()
    p_to = pair.sum(axis=0) / n_given.sum()
    table = ConditionalTable(probs=probs, p_from=p_from, p_to=p_to)
    return EmpiricalTable(table=table, n_given=n_given, insufficient=n_given < min_count)


def total_variation(a: np.ndarray, b: np.ndarray, weights: Optional[np.ndarray] = None) -> float:
    """Weighted mean over columns of ``0.5 * sum_r |a[r, q] - b[r, q]|``."""
    tv = 0.5 * np.abs(np.asarray(a) - np.asarray(b)).sum(axis=0)
    if weights is None:
        return float(tv.max())
    return float(np.dot(weights, tv))
