"""Density matrices, spectral decompositions and entropies."""
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatch, NotHermitian, NotPositive, ZeroTrace
from .linalg import (
    DEGENERACY_TOL,
    HERMITICITY_TOL,
    HermitianEigensystem,
    _group_eigenvalues,
    as_matrix,
    dagger,
    eig_hermitian,
    hermiticity_error,
)

EIGCLIP = 1e-12
# clipped mass below this is round-off and leaves the matrix untouched
REBUILD_MASS = 1e-14

Base = Union[int, float, str]


def log_fn(base: Base = 2):
    """Return a logarithm in the requested base (2 or e)."""
    if base in (2, "2", "bits"):
        return np.log2
    if base in ("e", "nats") or base == math.e:
        return np.log
    raise ValueError(f"unsupported log base {base!r}; use 2 or 'e'")


@dataclass(frozen=True)
class SpectralDecomposition:
    """Complete eigen-decomposition ``rho = sum_i p_i |psi_i><psi_i|``.

    Probabilities are in descending order and include zeros; ``vectors``
    holds the unit eigenvectors as columns.
    """

    probabilities: np.ndarray
    vectors: np.ndarray
    degeneracy_groups: Tuple[Tuple[int, ...], ...] = ()

    @property
    def dimension(self) -> int:
        return len(self.probabilities)

    @property
    def projectors(self) -> np.ndarray:
        """Stack of rank-1 eigenprojectors, shape ``(d, d, d)``."""
        v = self.vectors
        return np.einsum("iq,jq->qij", v, v.conj())

    @property
    def is_degenerate(self) -> bool:
        return any(len(g) > 1 for g in self.degeneracy_groups)

    def reconstruct(self) -> np.ndarray:
        v = self.vectors
        return (v * self.probabilities) @ dagger(v)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated Hermitian, positive semi-definite, unit-trace matrix.

    Build with :func:`density_from_matrix`. ``spectrum`` holds the ascending
    eigenvalues found during validation; the Jacobi eigensystem (needed
    only when a basis is) is computed on first access and cached.
    """

    matrix: np.ndarray
    spectrum: np.ndarray = field(repr=False)
    corrections: Dict[str, float] = field(default_factory=dict, compare=False)
    _eigensystem: Optional[HermitianEigensystem] = field(default=None, repr=False, compare=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigensystem(self) -> HermitianEigensystem:
        if self._eigensystem is None:
            es = eig_hermitian(self.matrix)
            es = HermitianEigensystem(eigenvalues=np.clip(es.eigenvalues, 0.0, None),
                                      eigenvectors=es.eigenvectors, groups=es.groups, sweeps=es.sweeps)
            object.__setattr__(self, "_eigensystem", es)
        return self._eigensystem

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def _freeze(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex)
    m.setflags(write=False)
    return m


def density_from_matrix(m, tol: float = HERMITICITY_TOL, eigclip: float = EIGCLIP) -> DensityMatrix:
    """Validate ``m`` as a density matrix, clipping tiny negative eigenvalues.

    Eigenvalues in ``[-eigclip, 0)`` are set to zero and the trace is
    renormalized to one; both corrections are recorded on the result.
    """
    if isinstance(m, DensityMatrix):
        return m
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"density matrix must be square, got {m.shape}")
    herm = hermiticity_error(m)
    if herm > tol:
        raise NotHermitian(f"matrix differs from its adjoint by {herm:.3g}")
    m = 0.5 * (m + dagger(m))
    # eigenvalues do not depend on a basis choice, so LAPACK is used here;
    # the deterministic Jacobi basis is built lazily when a caller needs it
    w = np.linalg.eigvalsh(m)
    if w[0] < -eigclip:
        raise NotPositive(f"eigenvalue {w[0]:.3g} below -{eigclip:g}")
    clipped = np.where(w < 0, 0.0, w)
    trace = float(np.sum(clipped))
    if trace <= eigclip:
        raise ZeroTrace(f"trace {trace:.3g} is not positive")
    probs = clipped / trace
    clip_mass = float(np.sum(clipped - w))
    es = None
    if clip_mass > REBUILD_MASS:
        es = eig_hermitian(m, tol=tol)
        probs = np.clip(es.eigenvalues, 0.0, None)
        probs = probs / probs.sum()
        matrix = (es.eigenvectors * probs) @ dagger(es.eigenvectors)
        es = HermitianEigensystem(eigenvalues=probs, eigenvectors=es.eigenvectors,
                                  groups=es.groups, sweeps=es.sweeps)
    else:
        # already unit trace up to rounding: leave the entries untouched so
        # serialized states round-trip exactly
        t = float(np.trace(m).real)
        matrix = m if abs(t - 1.0) <= 64 * np.finfo(float).eps * len(w) else m / t
    spectrum = probs.copy()
    spectrum.setflags(write=False)
    return DensityMatrix(matrix=_freeze(matrix), spectrum=spectrum, _eigensystem=es,
                         corrections={"clipped_mass": clip_mass, "trace_before": trace})


def density_from_spectrum(probs: Sequence[float], vectors) -> DensityMatrix:
    """Density matrix ``sum_i p_i |v_i><v_i|`` with a known orthonormal eigenbasis.

    The supplied basis is kept verbatim (no re-diagonalization), which is
    what conditional states built on a fixed eigenbasis need.
    """
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    total = p.sum()
    if total <= 0:
        raise ZeroTrace("probabilities sum to zero")
    p = p / total
    v = as_matrix(vectors)
    if v.shape != (len(p), len(p)):
        raise DimensionMismatch(f"basis shape {v.shape} does not match {len(p)} probabilities")
    order = np.argsort(p, kind="stable")
    es = HermitianEigensystem(eigenvalues=p[order], eigenvectors=v[:, order],
                              groups=tuple(_group_eigenvalues(p[order], DEGENERACY_TOL)))
    return DensityMatrix(matrix=_freeze((v * p) @ dagger(v)), spectrum=p[order], _eigensystem=es)


def spectral(rho: DensityMatrix) -> SpectralDecomposition:
    """Complete spectral decomposition, zero eigenvalues and their vectors included."""
    rho = density_from_matrix(rho)
    es = rho.eigensystem
    n = es.dimension
    order = np.arange(n)[::-1]
    inverse = {int(old): new for new, old in enumerate(order)}
    groups = tuple(tuple(sorted(inverse[i] for i in g)) for g in reversed(es.groups))
    return SpectralDecomposition(probabilities=es.eigenvalues[order].copy(),
                                 vectors=es.eigenvectors[:, order].copy(),
                                 degeneracy_groups=groups)


def shannon_entropy(p, base: Base = 2) -> float:
    """``-sum p log p`` with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float).reshape(-1)
    nz = p[p > 0]
    return float(max(0.0, -np.sum(nz * log_fn(base)(nz))))


def von_neumann_entropy(rho, base: Base = 2) -> float:
    return shannon_entropy(density_from_matrix(rho).spectrum, base)


def _rng(seed):
    return np.random.default_rng(seed)


def complex_gaussian(shape, rng) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def random_density(d: int, rank: int = None, seed=None) -> DensityMatrix:
    """Hilbert-Schmidt style random state ``G G^dagger / Tr(G G^dagger)``.

    ``G`` is ``d x rank`` with standard complex Gaussian entries drawn from
    ``numpy.random.default_rng(seed)``.
    """
    rank = d if rank is None else rank
    if not 1 <= rank <= d:
        raise ValueError(f"rank must be in [1, {d}], got {rank}")
    g = complex_gaussian((d, rank), _rng(seed))
    m = g @ dagger(g)
    return density_from_matrix(m / np.trace(m).real)


def pure_state(vector) -> DensityMatrix:
    v = np.asarray(vector, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return density_from_matrix(np.outer(v, v.conj()))


def random_pure_state(d: int, seed=None) -> DensityMatrix:
    return random_density(d, 1, seed)


def maximally_mixed(d: int) -> DensityMatrix:
    return density_from_matrix(np.eye(d) / d)


def bell_state() -> DensityMatrix:
    """Projector onto ``(|00> + |11>)/sqrt(2)``."""
    return pure_state(np.array([1, 0, 0, 1]) / math.sqrt(2))
