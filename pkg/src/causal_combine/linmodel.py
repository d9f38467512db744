"""Linear regression solvers: OLS, ridge and coordinate-descent LASSO.

All solvers work on a :class:`Dataset` and return a :class:`FitResult`.
Symmetric positive-definite systems are solved by Cholesky factorization,
falling back to an eigendecomposition pseudo-solve if the factorization
breaks down.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numba import njit

from .errors import DimensionMismatch, InsufficientData, NoConvergence, SingularMoment

# relative eigenvalue threshold below which a moment matrix counts as singular
SINGULAR_RTOL = 1e-10

LASSO_TOL = 1e-8
LASSO_MAX_ITER = 10_000


class Regime(str, enum.Enum):
    OBSERVATIONAL = "observational"
    INTERVENTIONAL = "interventional"
    POOLED = "pooled"


@dataclass(frozen=True)
class Dataset:
    """Design matrix ``X`` (rows are samples) and outcome ``y`` from one regime."""

    X: np.ndarray
    y: np.ndarray
    regime: Regime = Regime.OBSERVATIONAL

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or y.ndim != 1:
            raise DimensionMismatch(f"expected 2-d X and 1-d y, got {X.shape} and {y.shape}")
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "regime", Regime(self.regime))

    @property
    def rows(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def take(self, index) -> Dataset:
        return Dataset(self.X[index], self.y[index], self.regime)


def concatenate(*datasets: Dataset) -> Dataset:
    """Row-concatenate datasets into a single pooled dataset."""
    p = {d.p for d in datasets}
    if len(p) != 1:
        raise DimensionMismatch(f"datasets disagree on the number of columns: {sorted(p)}")
    X = np.vstack([d.X for d in datasets])
    y = np.concatenate([d.y for d in datasets])
    regimes = {d.regime for d in datasets}
    regime = regimes.pop() if len(regimes) == 1 else Regime.POOLED
    return Dataset(X, y, regime)


@dataclass(frozen=True)
class FitResult:
    """Fitted coefficients of a linear model.

    ``moment_inverse`` is ``(X'X)^{-1}`` for OLS, ``(X'X + lam I)^{-1}`` for
    ridge and ``None`` for the LASSO. ``residual_variance`` always uses the
    divisor ``rows - 1``.
    """

    coef: np.ndarray
    moment_inverse: np.ndarray | None
    residual_variance: float
    method: str = "ols"
    lam: float = 0.0
    converged: bool = True
    n_iter: int = 0
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def p(self) -> int:
        return self.coef.shape[0]

    def covariance(self) -> np.ndarray:
        """Plug-in covariance of the coefficients, ``moment_inverse * residual_variance``."""
        if self.moment_inverse is None:
            raise ValueError(f"{self.method} fit has no moment inverse")
        return self.moment_inverse * self.residual_variance


def check_nonsingular(G: np.ndarray, rtol: float = SINGULAR_RTOL) -> None:
    """Raise :class:`SingularMoment` unless ``lambda_min(G) > rtol * lambda_max(G)``."""
    eig = np.linalg.eigvalsh(G)
    lmax = eig[-1]
    if not np.all(np.isfinite(eig)) or lmax <= 0 or eig[0] <= rtol * lmax:
        raise SingularMoment(
            f"moment matrix is singular (eigenvalue range [{eig[0]:.3g}, {lmax:.3g}])"
        )


def spd_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``A Z = B`` for symmetric positive-definite ``A``.

    Uses Cholesky; if that fails the system is solved through the
    eigendecomposition of ``A`` with eigenvalues below ``SINGULAR_RTOL *
    max`` treated as zero.
    """
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
        return scipy.linalg.cho_solve(factor, B, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        evals, evecs = np.linalg.eigh((A + A.T) / 2)
        cutoff = SINGULAR_RTOL * max(abs(evals[-1]), np.finfo(float).tiny)
        inv = np.where(evals > cutoff, 1.0 / np.where(evals > cutoff, evals, 1.0), 0.0)
        return evecs @ (inv[:, None] * (evecs.T @ B)) if B.ndim == 2 else evecs @ (inv * (evecs.T @ B))


def spd_inverse(A: np.ndarray) -> np.ndarray:
    inv = spd_solve(A, np.eye(A.shape[0]))
    return (inv + inv.T) / 2


def _residual_variance(data: Dataset, coef: np.ndarray) -> float:
    if data.rows < 2:
        raise InsufficientData("residual variance needs at least two rows")
    resid = data.y - data.X @ coef
    return float(resid @ resid / (data.rows - 1))


def fit_ols(data: Dataset) -> FitResult:
    """Ordinary least squares with residual variance ``||y - X b||^2 / (rows - 1)``."""
    if data.rows < data.p + 1:
        raise SingularMoment(f"need at least p + 1 = {data.p + 1} rows, got {data.rows}")
    G = data.X.T @ data.X
    check_nonsingular(G)
    G_inv = spd_inverse(G)
    coef = spd_solve(G, data.X.T @ data.y)
    return FitResult(coef, G_inv, _residual_variance(data, coef), "ols")


def fit_ridge(data: Dataset, lam: float) -> FitResult:
    """Ridge regression ``(X'X + lam I)^{-1} X'y``."""
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    if lam == 0:
        fit = fit_ols(data)
        return FitResult(fit.coef, fit.moment_inverse, fit.residual_variance, "ridge", 0.0)
    G = data.X.T @ data.X + lam * np.eye(data.p)
    G_inv = spd_inverse(G)
    coef = spd_solve(G, data.X.T @ data.y)
    return FitResult(coef, G_inv, _residual_variance(data, coef), "ridge", float(lam))


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


@njit(cache=True)
def _lasso_gram_cd(G, c, lam, beta, tol, max_iter):
    # minimizes b'Gb - 2c'b + lam*|b|_1, i.e. ||y - Xb||^2 + lam*|b|_1 with G = X'X, c = X'y
    p = G.shape[0]
    half = 0.5 * lam
    for it in range(max_iter):
        max_change = 0.0
        for j in range(p):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            rho = c[j]
            for k in range(p):
                rho -= G[j, k] * beta[k]
            rho += gjj * beta[j]
            if rho > half:
                new = (rho - half) / gjj
            elif rho < -half:
                new = (rho + half) / gjj
            else:
                new = 0.0
            change = abs(new - beta[j])
            if change > max_change:
                max_change = change
            beta[j] = new
        if max_change < tol:
            return it + 1, True
    return max_iter, False


def lasso_gram(
    G: np.ndarray,
    c: np.ndarray,
    lam: float,
    tol: float = LASSO_TOL,
    max_iter: int = LASSO_MAX_ITER,
    init: np.ndarray | None = None,
) -> tuple[np.ndarray, int, bool]:
    """Cyclic coordinate descent on precomputed ``G = X'X`` and ``c = X'y``.

    Returns ``(coef, n_sweeps, converged)``.
    """
    beta = np.zeros(G.shape[0]) if init is None else np.array(init, dtype=float)
    n_iter, converged = _lasso_gram_cd(
        np.ascontiguousarray(G, dtype=float), np.ascontiguousarray(c, dtype=float),
        float(lam), beta, float(tol), int(max_iter),
    )
    return beta, int(n_iter), bool(converged)


def fit_lasso(
    data: Dataset,
    lam: float,
    tol: float = LASSO_TOL,
    max_iter: int = LASSO_MAX_ITER,
    init: np.ndarray | None = None,
) -> FitResult:
    """LASSO for ``||y - X b||^2 + lam * ||b||_1`` (no ``1/(2n)`` scaling).

    Coordinate descent stops once the largest coordinate change in a sweep is
    below ``tol``. If ``max_iter`` sweeps pass first, a :class:`NoConvergence`
    warning is issued and the last iterate is returned with
    ``converged=False``.
    """
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    X = data.X
    if not np.any(X):
        raise ValueError("design matrix is identically zero")
    coef, n_iter, converged = lasso_gram(X.T @ X, X.T @ data.y, lam, tol, max_iter, init)
    if not converged:
        warnings.warn(
            f"lasso did not converge in {max_iter} sweeps (lam={lam}, tol={tol})",
            NoConvergence,
            stacklevel=2,
        )
    return FitResult(
        coef, None, _residual_variance(data, coef), "lasso", float(lam), converged, n_iter
    )
