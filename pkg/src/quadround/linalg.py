"""Dense symmetric linear algebra used by every other module.

Matrices are stored fully (not packed) as float64 arrays; dimensions stay
small (at most a few hundred) in all intended uses, so simplicity wins over
memory. Factorizations are delegated to LAPACK through numpy, but every
operation checks its own contract (residuals, orthonormality, positivity)
against explicit tolerances and fails loudly instead of returning garbage.

Positive definiteness is tested by Cholesky: a failed factorization is the
validation gate for user-supplied quadratic forms.
"""

from __future__ import annotations

import numpy as np

from .config import DEFAULTS


class LinalgError(Exception):
    """Base class for numerical failures in this module."""


class NotPositiveDefinite(LinalgError):
    """Cholesky pivot <= 0: the matrix is not positive definite."""


class EigenConvergenceError(LinalgError):
    """The symmetric eigensolver failed to meet its residual contract."""


class SymMatrix:
    """Real symmetric n x n matrix, symmetrized via (M + M') / 2 on construction.

    All entries must be finite; n >= 1. Instances are treated as immutable:
    no operation in this package writes to ``mat`` after construction.
    """

    __slots__ = ("mat",)

    def __init__(self, mat):
        a = np.array(mat, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("matrix dimension must be at least 1")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        self.mat = 0.5 * (a + a.T)

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


def as_sym(x) -> SymMatrix:
    """Coerce an array-like (or pass through a SymMatrix) to SymMatrix."""
    return x if isinstance(x, SymMatrix) else SymMatrix(x)


def frobenius_inner(a, b) -> float:
    """Entrywise inner product sum_ij A_ij B_ij = trace(AB)."""
    A, B = as_sym(a), as_sym(b)
    if A.n != B.n:
        raise ValueError(f"dimension mismatch: {A.n} vs {B.n}")
    return float(np.sum(A.mat * B.mat))


def outer(x) -> SymMatrix:
    """Rank <= 1 PSD matrix x (x) x with entries x_i x_j; trace equals ||x||^2."""
    v = np.asarray(x, dtype=float).reshape(-1)
    return SymMatrix(np.outer(v, v))


def _eigh_checked(a: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric array with residual verification.

    Returns (eigenvalues ascending, orthonormal eigenvectors as columns).
    Raises EigenConvergenceError if LAPACK fails or the residual
    ||A V - V diag(w)||_F exceeds tol * max(||A||_F, 1e-300).
    """
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigenConvergenceError(str(exc)) from exc
    scale = max(float(np.linalg.norm(a)), 1e-300)
    resid = float(np.linalg.norm(a @ v - v * w))
    if resid > tol * scale:
        raise EigenConvergenceError(
            f"eigen residual {resid:.3e} exceeds {tol:.1e} * ||A||_F")
    ortho = float(np.linalg.norm(v.T @ v - np.eye(a.shape[0])))
    if ortho > tol * max(1.0, scale):
        raise EigenConvergenceError(f"eigenvector basis not orthonormal: {ortho:.3e}")
    return w, v


def sym_eigen(a, tol: float = DEFAULTS.eigen_residual):
    """Full eigendecomposition: eigenvalues ascending, orthonormal eigenvectors.

    Satisfies ||A v_j - w_j v_j|| <= tol * ||A||_F and V'V = I to tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = as_sym(a)
    return _eigh_checked(A.mat, tol)


def cholesky(a, rel_tol: float = DEFAULTS.cholesky_relative) -> np.ndarray:
    """Lower-triangular L with L L' = A for positive definite A.

    Raises NotPositiveDefinite otherwise; this is the validation gate for
    quadratic-form input. The factorization residual is checked against
    rel_tol * ||A||_F.
    """
    A = as_sym(a)
    try:
        L = np.linalg.cholesky(A.mat)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    scale = max(float(np.linalg.norm(A.mat)), 1e-300)
    resid = float(np.linalg.norm(L @ L.T - A.mat))
    if resid > rel_tol * scale:
        raise LinalgError(f"cholesky residual {resid:.3e} out of tolerance")
    return L


def sqrt_psd(a, clamp: float = DEFAULTS.psd_clamp,
             resid_tol: float = DEFAULTS.sqrt_residual) -> SymMatrix:
    """Symmetric PSD square root T with T^2 = A, via eigendecomposition.

    Eigenvalues in [-clamp * ||A||_F, 0] are set to zero (rounding routinely
    produces slightly indefinite near-PSD matrices); anything more negative
    raises NotPositiveDefinite. The residual ||T^2 - A||_F is verified
    against resid_tol * max(1, ||A||_F).
    """
    A = as_sym(a)
    w, v = _eigh_checked(A.mat, DEFAULTS.eigen_residual)
    scale = max(float(np.linalg.norm(A.mat)), 1e-300)
    if w[0] < -clamp * scale:
        raise NotPositiveDefinite(
            f"eigenvalue {w[0]:.3e} below -{clamp:.1e} * ||A||_F")
    w = np.clip(w, 0.0, None)
    T = (v * np.sqrt(w)) @ v.T
    T = 0.5 * (T + T.T)
    resid = float(np.linalg.norm(T @ T - A.mat))
    if resid > resid_tol * max(1.0, scale):
        raise LinalgError(f"sqrt residual {resid:.3e} out of tolerance")
    return SymMatrix(T)


def inverse_spd(a, resid_tol: float = DEFAULTS.inverse_residual) -> SymMatrix:
    """Inverse of a positive definite matrix via Cholesky solves.

    Verifies ||A A^-1 - I||_F <= resid_tol; raises NotPositiveDefinite when
    the factorization fails.
    """
    A = as_sym(a)
    L = cholesky(A)
    n = A.n
    # Solve L L' X = I by forward then back substitution.
    y = np.linalg.solve(L, np.eye(n))
    inv = np.linalg.solve(L.T, y)
    inv = 0.5 * (inv + inv.T)
    resid = float(np.linalg.norm(A.mat @ inv - np.eye(n)))
    if resid > resid_tol:
        raise LinalgError(f"inverse residual {resid:.3e} out of tolerance")
    return SymMatrix(inv)
