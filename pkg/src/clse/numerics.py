"""Dense linear-algebra substrate shared by all other modules.

Everything operates on plain float64 numpy arrays. Matrices are dense and
small (dimension capped at 64 by scenario validation), so O(n^3)
factorizations are used throughout.
"""

import numpy as np
import scipy.linalg

MAX_DIM = 64

# Relative symmetry slack accepted before a matrix is rejected as non-SPD.
SYMMETRY_RTOL = 1e-12


class NumericsError(Exception):
    """Base class for numerical failures in this package."""


class NotPositiveDefinite(NumericsError):
    """Raised when a Cholesky factorization meets a non-positive pivot."""


class NoConvergence(NumericsError):
    """Raised when an iterative method fails to stabilize."""


def check_symmetric(M, rtol=SYMMETRY_RTOL):
    """Raise ValueError unless M is square and symmetric to within rtol."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = np.max(np.abs(M)) or 1.0
    if np.max(np.abs(M - M.T)) > rtol * scale:
        raise ValueError("matrix is not symmetric")
    return M


def cholesky_factor(M):
    """Lower-triangular F with F @ F.T == M for symmetric positive-definite M."""
    M = check_symmetric(M)
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def solve_spd(M, b):
    """Solve M x = b via Cholesky for symmetric positive-definite M.

    b may be a vector or a matrix of stacked right-hand-side columns.
    """
    M = check_symmetric(M)
    try:
        c, low = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return scipy.linalg.cho_solve((c, low), np.asarray(b, dtype=float),
                                  check_finite=False)


def inverse_spd(M):
    """Inverse of a symmetric positive-definite matrix, symmetrized."""
    W = solve_spd(M, np.eye(np.asarray(M).shape[0]))
    return (W + W.T) / 2.0


def trace(M):
    """Sum of diagonal entries of a square matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"trace needs a square matrix, got shape {M.shape}")
    return float(np.trace(M))


def is_symmetric(M, rtol=1e-10):
    M = np.asarray(M, dtype=float)
    scale = np.max(np.abs(M)) or 1.0
    return bool(np.max(np.abs(M - M.T)) <= rtol * scale)


def spectral_radius(M, max_iter=10_000, tol=1e-10, seed=0):
    """Largest eigenvalue magnitude of a square matrix.

    Symmetric inputs go through a dense symmetric eigensolver. For general
    inputs the value returned is the operator 2-norm (power iteration on
    M.T @ M), which upper-bounds the spectral radius and coincides with it
    for symmetric matrices. Callers needing the true spectral radius of a
    non-symmetric product should hand in a symmetric similarity transform
    of it instead (see clse.theory for the transforms used there).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if is_symmetric(M):
        return float(np.max(np.abs(np.linalg.eigvalsh(M))))
    return _operator_norm(M, max_iter=max_iter, tol=tol, seed=seed)


def _operator_norm(M, max_iter, tol, seed):
    """Power iteration on M.T @ M; returns sqrt of its dominant eigenvalue."""
    n = M.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = M.T @ (M @ x)
        norm_y = np.linalg.norm(y)
        if norm_y == 0.0:
            return 0.0
        lam_new = float(x @ y)
        x = y / norm_y
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1.0):
            return float(np.sqrt(max(lam_new, 0.0)))
        lam = lam_new
    raise NoConvergence(
        f"power iteration did not stabilize in {max_iter} iterations")
