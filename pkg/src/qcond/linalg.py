"""Dense complex linear algebra for small Hermitian problems.

Matrices are plain ``numpy`` complex arrays. The eigensolver is a cyclic
Jacobi method with a deterministic post-processing step: eigenvalues that
agree to within ``DEGENERACY_TOL`` are grouped and each group's basis is
rebuilt from the eigenspace projector by pivoted Gram-Schmidt over the
standard basis, so the basis depends only on the eigenspace and not on
the rotation history.
"""
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .errors import DimensionMismatch, NoConvergence, NotHermitian, RankDeficient

HERMITICITY_TOL = 1e-10
CONVERGENCE_TOL = 1e-13
ORTHONORMALITY_TOL = 1e-10
DEGENERACY_TOL = 1e-10
MAX_SWEEPS = 60


def as_matrix(m) -> np.ndarray:
    """Coerce to a 2-D complex array and reject non-finite entries."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix contains NaN or Inf entries")
    return arr


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def max_abs(m) -> float:
    """Max-entry norm ``||M||_max``."""
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def hermiticity_error(m: np.ndarray) -> float:
    return max_abs(m - dagger(m))


def projector(v: np.ndarray) -> np.ndarray:
    """Rank-1 projector ``|v><v|`` for a (not necessarily normalized) vector."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class HermitianEigensystem:
    """Complete eigensystem with ascending eigenvalues.

    ``eigenvectors[:, i]`` belongs to ``eigenvalues[i]``. ``groups`` lists
    index tuples of eigenvalues equal within the degeneracy tolerance.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    groups: Tuple[Tuple[int, ...], ...] = field(default=())
    sweeps: int = 0

    @property
    def dimension(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def _jacobi(m: np.ndarray, tol: float) -> Tuple[np.ndarray, np.ndarray, int]:
    # Plain Python complex arithmetic: at d <= 8 this beats per-rotation numpy calls.
    n = m.shape[0]
    a = m.tolist()
    v = [[1.0 + 0j if i == j else 0j for j in range(n)] for i in range(n)]
    target = tol * max(1.0, float(np.linalg.norm(m)))
    rng = range(n)

    def off_norm() -> float:
        return sum(abs(a[i][j]) ** 2 for i in rng for j in rng if i != j) ** 0.5

    off = off_norm()
    for sweep in range(MAX_SWEEPS + 1):
        if off <= target:
            w = np.array([a[i][i].real for i in rng])
            return w, np.array(v, dtype=complex), sweep
        if sweep == MAX_SWEEPS:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                app = a[p][p].real
                aqq = a[q][q].real
                ph = (apq / mag).conjugate()
                phc = ph.conjugate()
                theta = (aqq - app) / (2.0 * mag)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + (theta * theta + 1.0) ** 0.5)
                c = 1.0 / (t * t + 1.0) ** 0.5
                s = t * c
                # A <- G^dagger A G with G = diag(1, ph) @ [[c, s], [-s, c]] on (p, q)
                for k in rng:
                    row = a[k]
                    xp = row[p]
                    xq = row[q] * ph
                    row[p] = c * xp - s * xq
                    row[q] = s * xp + c * xq
                    row = v[k]
                    xp = row[p]
                    xq = row[q] * ph
                    row[p] = c * xp - s * xq
                    row[q] = s * xp + c * xq
                ap = a[p]
                aq = a[q]
                for k in rng:
                    xp = ap[k]
                    xq = aq[k] * phc
                    ap[k] = c * xp - s * xq
                    aq[k] = s * xp + c * xq
                ap[q] = aq[p] = 0j
                ap[p] = complex(app - t * mag)
                aq[q] = complex(aqq + t * mag)
        off = off_norm()
    raise NoConvergence(f"Jacobi sweeps did not reduce off-diagonal norm below {target:.3g} (last {off:.3g})")


def _group_eigenvalues(w: np.ndarray, tol: float) -> List[Tuple[int, ...]]:
    groups: List[List[int]] = []
    for i, lam in enumerate(w):
        if groups and lam - w[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return [tuple(g) for g in groups]


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    mags = np.abs(v)
    k = int(np.argmax(mags >= mags.max() - 1e-9))
    return v * (np.conj(v[k]) / mags[k])


def _rebuild_group_basis(vecs: np.ndarray) -> np.ndarray:
    """Canonical orthonormal basis of span(vecs) from pivoted Gram-Schmidt on e_i."""
    n, k = vecs.shape
    proj = vecs @ dagger(vecs)
    basis: List[np.ndarray] = []
    residual = proj.copy()
    for _ in range(k):
        norms = np.linalg.norm(residual, axis=0)
        j = int(np.argmax(norms >= norms.max() * (1 - 1e-9)))
        u = residual[:, j] / norms[j]
        basis.append(u)
        residual = residual - np.outer(u, u.conj() @ residual)
    out = np.column_stack(basis)
    # one re-orthonormalization pass for precision
    q, r = np.linalg.qr(out)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def eig_hermitian(m, tol: float = HERMITICITY_TOL, conv_tol: float = CONVERGENCE_TOL,
                  degeneracy_tol: float = DEGENERACY_TOL) -> HermitianEigensystem:
    """Complete eigensystem of a Hermitian matrix by cyclic Jacobi rotations.

    :param m: square Hermitian matrix
    :param tol: allowed ``||M - M^dagger||_max`` before raising ``NotHermitian``
    :param conv_tol: relative off-diagonal Frobenius norm at which sweeps stop
    :param degeneracy_tol: eigenvalues closer than this share a canonical basis
    :return: ``HermitianEigensystem`` with ascending eigenvalues
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {m.shape}")
    err = hermiticity_error(m)
    if err > tol:
        raise NotHermitian(f"||M - M^dagger||_max = {err:.3g} exceeds {tol:.3g}")
    a = 0.5 * (m + dagger(m))
    w, v, sweeps = _jacobi(a, conv_tol)
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    groups = _group_eigenvalues(w, degeneracy_tol)
    for g in groups:
        if len(g) > 1:
            v[:, list(g)] = _rebuild_group_basis(v[:, list(g)])
        else:
            v[:, g[0]] = v[:, g[0]] / np.linalg.norm(v[:, g[0]])
    for i in range(v.shape[1]):
        v[:, i] = _canonical_phase(v[:, i])
    return HermitianEigensystem(eigenvalues=w, eigenvectors=v, groups=tuple(groups), sweeps=sweeps)


def kron(a, b) -> np.ndarray:
    """Kronecker product, ``(A (x) B)[i*rB + k, j*cB + l] = A[i, j] B[k, l]``."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(m, which: str, dA: int, dB: int) -> np.ndarray:
    """Trace out subsystem ``which`` ('A' or 'B') of an operator on ``dA*dB``."""
    m = as_matrix(m)
    if m.shape != (dA * dB, dA * dB):
        raise DimensionMismatch(f"operator of shape {m.shape} is not on {dA}x{dB}")
    t = m.reshape(dA, dB, dA, dB)
    if which == "B":
        return np.einsum("ikjk->ij", t)
    if which == "A":
        return np.einsum("kikj->ij", t)
    raise ValueError(f"which must be 'A' or 'B', got {which!r}")


def qr_orthonormalize(m, tol: float = ORTHONORMALITY_TOL) -> np.ndarray:
    """Orthonormalize columns, keeping their span and ordering.

    Phases are fixed so that ``R`` has a positive diagonal; applied to a
    complex Gaussian matrix this yields Haar-distributed isometries.
    """
    arr = np.asarray(m, dtype=complex)
    m = as_matrix(arr.reshape(-1, 1) if arr.ndim == 1 else arr)
    rows, cols = m.shape
    if cols > rows:
        raise RankDeficient(f"{cols} columns cannot be orthonormal in dimension {rows}")
    q, r = np.linalg.qr(m)
    diag = np.diag(r)
    scale = max(max_abs(r), 1e-300)
    if np.any(np.abs(diag) <= tol * scale):
        raise RankDeficient("columns are linearly dependent within tolerance")
    return q * (diag / np.abs(diag))


def is_unitary(u, tol: float = ORTHONORMALITY_TOL) -> bool:
    u = as_matrix(u)
    return u.shape[0] == u.shape[1] and max_abs(dagger(u) @ u - np.eye(u.shape[0])) <= tol


def to_json(m) -> dict:
    m = as_matrix(m)
    return {"rows": m.shape[0], "cols": m.shape[1],
            "data": [[float(z.real), float(z.imag)] for z in m.reshape(-1)]}


def from_json(doc: dict) -> np.ndarray:
    rows, cols = doc["rows"], doc["cols"]
    data = doc["data"]
    if len(data) != rows * cols:
        raise DimensionMismatch(f"data has {len(data)} entries, expected {rows * cols}")
    flat = np.array([complex(re, im) for re, im in data], dtype=complex)
    return as_matrix(flat.reshape(rows, cols))
