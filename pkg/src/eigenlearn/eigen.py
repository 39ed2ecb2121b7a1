"""Dense symmetric eigensolver via cyclic Jacobi rotations.

This is the ground-truth oracle of the toolkit: spectra produced here feed the
training targets and every invariance check. The implementation is the
classical cyclic-by-row Jacobi method with threshold skipping, which is exact
to machine precision at the dense desk scale (n up to ~100) this package
targets.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, KTooLarge, NoConvergence, NotSymmetric

SYMMETRY_TOL = 1e-10
OFFDIAG_TOL = 1e-12
SWEEP_BUDGET = 100
SIGN_TOL = 1e-10
CLUSTER_GAP = 1e-8


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in nondecreasing order; column i of eigenvectors pairs with
    eigenvalues[i]."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


def _jacobi(a: np.ndarray, sweep_budget: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize symmetric a in place; returns (diagonal, rotation product)."""
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return np.array([a[0, 0]]), v
    # Entries this small cannot push the off-diagonal norm above tolerance,
    # so rotating them is wasted work in any sweep.
    floor = OFFDIAG_TOL / (2.0 * n)
    for sweep in range(sweep_budget):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off <= OFFDIAG_TOL:
            return np.diag(a).copy(), v
        # Early sweeps defer small rotations (classical thresholding); later
        # sweeps rotate everything above the floor for quadratic convergence.
        threshold = max(0.2 * off / (n * n), floor) if sweep < 3 else floor
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= threshold:
                    continue
                app, aqq = a[p, p], a[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
    if off <= OFFDIAG_TOL:
        return np.diag(a).copy(), v
    raise NoConvergence(
        f"off-diagonal norm {off:.3e} above {OFFDIAG_TOL} after {sweep_budget} sweeps"
    )


def canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its first component with |value| > tolerance is positive."""
    out = vectors.copy()
    for i in range(out.shape[1]):
        col = out[:, i]
        nz = np.nonzero(np.abs(col) > SIGN_TOL)[0]
        if nz.size and col[nz[0]] < 0:
            out[:, i] = -col
    return out


def eigendecompose(m: np.ndarray, sweep_budget: int = SWEEP_BUDGET) -> Spectrum:
    """Full spectrum of a symmetric matrix, eigenvalues ascending.

    The input is symmetrized as (M + M^T)/2 before solving; asymmetry beyond
    SYMMETRY_TOL is rejected. Within numerically degenerate eigenvalue
    clusters the returned columns are some orthonormal basis of the cluster
    subspace, so comparisons there must go through projectors, not vectors.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {m.shape}")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > SYMMETRY_TOL:
        raise NotSymmetric(f"asymmetry {asym:.3e} exceeds {SYMMETRY_TOL}")
    work = (m + m.T) / 2.0
    values, vectors = _jacobi(work.copy(), sweep_budget)
    order = np.argsort(values, kind="stable")
    return Spectrum(values[order], canonical_signs(vectors[:, order]))


def lowest_k(s: Spectrum, k: int) -> tuple[np.ndarray, np.ndarray]:
    """First k eigenvalues and eigenvector columns (trivial eigenvector included)."""
    if k < 1:
        raise InvalidParams(f"k must be >= 1, got {k}")
    if k > s.n:
        raise KTooLarge(f"k={k} exceeds matrix dimension {s.n}")
    return s.eigenvalues[:k].copy(), s.eigenvectors[:, :k].copy()


def eigenvalue_clusters(eigenvalues: np.ndarray, gap: float = CLUSTER_GAP) -> list[tuple[int, int]]:
    """Contiguous index ranges [start, stop) of numerically degenerate eigenvalues.

    Adjacent eigenvalues closer than `gap` fall in one cluster; invariance
    tests rotate bases inside these subspaces.
    """
    clusters = []
    start = 0
    for i in range(1, len(eigenvalues)):
        if eigenvalues[i] - eigenvalues[i - 1] >= gap:
            clusters.append((start, i))
            start = i
    clusters.append((start, len(eigenvalues)))
    return clusters
