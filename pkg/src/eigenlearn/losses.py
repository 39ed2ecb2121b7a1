"""Loss family over predicted eigenvector matrices, plus the rotation
machinery used to check their invariances.

All functions here are pure numpy evaluations; the differentiable versions
used in training are assembled from tape ops in `nn` and must agree with these
to float precision (tests enforce that).

Norm convention: matrix losses use the Frobenius norm. The per-vector sum of
Euclidean norms is available behind `per_vector=True` for the eigenvector
residual; the two differ (quadrature vs plain sum) and the Frobenius form is
the default everywhere, training and reporting alike.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, NotOrthonormal, ShapeMismatch

ORTHONORMAL_TOL = 1e-8


@dataclass(frozen=True)
class LossWeights:
    """Coefficients of the combined objective. Defaults: 1*energy + 2*eigvec."""

    alpha_energy: float = 1.0
    beta_eigvec: float = 2.0
    gamma_ortho: float = 0.0

    def __post_init__(self):
        if min(self.alpha_energy, self.beta_eigvec, self.gamma_ortho) < 0:
            raise InvalidParams("loss weights must be nonnegative")
        if self.alpha_energy == self.beta_eigvec == self.gamma_ortho == 0:
            raise InvalidParams("at least one loss weight must be positive")


def _check_prediction(u_hat: np.ndarray, laplacian: np.ndarray | None = None,
                      lambda_k: np.ndarray | None = None) -> None:
    if u_hat.ndim != 2:
        raise ShapeMismatch(f"prediction must be 2-D, got shape {u_hat.shape}")
    n, k = u_hat.shape
    if laplacian is not None and laplacian.shape != (n, n):
        raise ShapeMismatch(f"operator shape {laplacian.shape} does not match n={n}")
    if lambda_k is not None and lambda_k.shape != (k,):
        raise ShapeMismatch(f"need {k} eigenvalues, got shape {lambda_k.shape}")


def eigvec_loss(u_hat: np.ndarray, laplacian: np.ndarray, lambda_k: np.ndarray,
                per_vector: bool = False) -> float:
    """(1/k) * ||L U - U diag(lambda)||_F, zero iff each column is an exact
    eigenvector of its target eigenvalue.

    per_vector=True switches to the plain sum of per-column Euclidean residual
    norms (which differs from the Frobenius quadrature form).
    """
    u_hat = np.asarray(u_hat, dtype=np.float64)
    laplacian = np.asarray(laplacian, dtype=np.float64)
    lambda_k = np.asarray(lambda_k, dtype=np.float64)
    _check_prediction(u_hat, laplacian, lambda_k)
    k = u_hat.shape[1]
    residual = laplacian @ u_hat - u_hat * lambda_k[None, :]
    if per_vector:
        return float(np.sum(np.linalg.norm(residual, axis=0))) / k
    return float(np.linalg.norm(residual)) / k


def energy_loss(u_hat: np.ndarray, laplacian: np.ndarray) -> float:
    """(1/k) * trace(U^T L U): the mean Rayleigh quotient of the columns."""
    u_hat = np.asarray(u_hat, dtype=np.float64)
    laplacian = np.asarray(laplacian, dtype=np.float64)
    _check_prediction(u_hat, laplacian)
    k = u_hat.shape[1]
    return float(np.trace(u_hat.T @ laplacian @ u_hat)) / k


def energy_abs_loss(u_hat: np.ndarray, laplacian: np.ndarray, lambda_k: np.ndarray) -> float:
    """(1/k) * sum_i |u_i^T L u_i - lambda_i|.

    The absolute value applies to the diagonal Gram entries only (the
    per-vector reading), not to the whole matrix before the trace.
    """
    u_hat = np.asarray(u_hat, dtype=np.float64)
    laplacian = np.asarray(laplacian, dtype=np.float64)
    lambda_k = np.asarray(lambda_k, dtype=np.float64)
    _check_prediction(u_hat, laplacian, lambda_k)
    k = u_hat.shape[1]
    quotients = np.einsum("ij,ij->j", u_hat, laplacian @ u_hat)
    return float(np.sum(np.abs(quotients - lambda_k))) / k


def ortho_loss(u_hat: np.ndarray) -> float:
    """(1/k) * ||U^T U - I||_F; zero iff the columns are orthonormal."""
    u_hat = np.asarray(u_hat, dtype=np.float64)
    _check_prediction(u_hat)
    k = u_hat.shape[1]
    gram = u_hat.T @ u_hat
    return float(np.linalg.norm(gram - np.eye(k))) / k


def abs_cos_mae_loss(u_hat: np.ndarray, psi_k: np.ndarray) -> float:
    """Baseline loss on elementwise absolute values: per column, the mean
    absolute error between |u_i| and |psi_i| plus one minus their cosine
    similarity, averaged over the k columns.

    An all-zero column on either side takes the maximal cosine penalty 1.
    """
    u_hat = np.asarray(u_hat, dtype=np.float64)
    psi_k = np.asarray(psi_k, dtype=np.float64)
    _check_prediction(u_hat)
    if psi_k.shape != u_hat.shape:
        raise ShapeMismatch(f"targets shape {psi_k.shape} != prediction shape {u_hat.shape}")
    n, k = u_hat.shape
    total = 0.0
    for i in range(k):
        a = np.abs(u_hat[:, i])
        b = np.abs(psi_k[:, i])
        mae = float(np.mean(np.abs(a - b)))
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na == 0.0 or nb == 0.0:
            cos = 0.0
        else:
            cos = float(a @ b) / (na * nb)
        total += mae + (1.0 - cos)
    return total / k


def combined_loss(u_hat: np.ndarray, laplacian: np.ndarray, lambda_k: np.ndarray,
                  weights: LossWeights = LossWeights()) -> float:
    """alpha * energy + beta * eigvec + gamma * ortho."""
    value = 0.0
    if weights.alpha_energy:
        value += weights.alpha_energy * energy_loss(u_hat, laplacian)
    if weights.beta_eigvec:
        value += weights.beta_eigvec * eigvec_loss(u_hat, laplacian, lambda_k)
    if weights.gamma_ortho:
        value += weights.gamma_ortho * ortho_loss(u_hat)
    return value


def eigenspace_rotation(psi: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Orthogonal map psi A psi^T + (I - psi psi^T): rotates span(psi) by A,
    identity on the orthogonal complement.

    psi must have orthonormal columns and A must be special orthogonal of
    matching size.
    """
    psi = np.asarray(psi, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if psi.ndim != 2:
        raise ShapeMismatch(f"psi must be 2-D, got {psi.shape}")
    n, m = psi.shape
    if a.shape != (m, m):
        raise ShapeMismatch(f"rotation must be {m}x{m}, got {a.shape}")
    if np.linalg.norm(psi.T @ psi - np.eye(m)) > ORTHONORMAL_TOL:
        raise NotOrthonormal("psi columns are not orthonormal")
    if np.linalg.norm(a.T @ a - np.eye(m)) > ORTHONORMAL_TOL:
        raise NotOrthonormal("A is not orthogonal")
    if abs(np.linalg.det(a) - 1.0) > ORTHONORMAL_TOL:
        raise NotOrthonormal("A must have determinant +1")
    return psi @ a @ psi.T + (np.eye(n) - psi @ psi.T)


def random_special_orthogonal(m: int, seed: int = 0) -> np.ndarray:
    """Haar-ish random rotation with det +1, deterministic per seed."""
    if m < 1:
        raise ShapeMismatch("m must be >= 1")
    if m == 1:
        return np.ones((1, 1))
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    q = q * np.where(np.diag(r) >= 0, 1.0, -1.0)[None, :]
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def flip_column_signs(matrix: np.ndarray, flips: list[int]) -> np.ndarray:
    """Copy of the matrix with the listed columns negated (one-dimensional
    basis changes; the rotation helper above handles dimensions >= 2)."""
    out = np.array(matrix, dtype=np.float64, copy=True)
    for i in flips:
        out[:, i] = -out[:, i]
    return out
