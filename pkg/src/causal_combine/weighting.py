"""Weight matrices for combining the interventional and observational OLS fits.

A weight matrix ``W`` defines the combined estimator::

    alpha_W = W @ alpha_int + (I - W) @ alpha_obs

``W = I`` recovers the interventional fit, ``W = 0`` the observational one.
Pooling the data and ridge regression are both special cases; the remaining
schemes minimize (or estimate the minimizer of) the mean squared error::

    MSE(W) = ||(I - W) delta||^2 + tr(W C_int W') + tr((I - W) C_obs (I - W)')

where ``C_int`` and ``C_obs`` are the covariances of the two fits and
``delta`` is the confounding bias of the observational fit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateWeight, DimensionMismatch, InsufficientData
from .linmodel import (
    LASSO_MAX_ITER,
    LASSO_TOL,
    Dataset,
    FitResult,
    check_nonsingular,
    lasso_gram,
    spd_solve,
)
from .scm import make_rng

DEGENERATE_TOL = 1e-15
ROSENMAN_TOL = 1e-12
DEFAULT_LAMBDA_GRID = np.logspace(-3, 3, 13)
DEFAULT_FOLDS = 5


class Scheme(str, enum.Enum):
    INTERVENTIONAL = "interventional"
    OBSERVATIONAL = "observational"
    POOLED = "pooled"
    RIDGE = "ridge"
    OPT_SCALAR = "opt-scalar"
    OPT_DIAG = "opt-diag"
    OPT_MATRIX = "opt-matrix"
    PLUGIN = "plugin"
    PLUGIN_L2 = "plugin-l2"
    PLUGIN_L1 = "plugin-l1"
    ROSENMAN = "rosenman"
    ORACLE = "oracle"


class Penalty(str, enum.Enum):
    L2 = "l2"
    L1 = "l1"


@dataclass(frozen=True)
class WeightMatrix:
    W: np.ndarray
    scheme: Scheme
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        if W.shape[0] != W.shape[1]:
            raise DimensionMismatch(f"weight matrix must be square, got {W.shape}")
        if not np.all(np.isfinite(W)):
            raise ValueError(f"{self.scheme} weight matrix has non-finite entries")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    @property
    def p(self) -> int:
        return self.W.shape[0]

    def to_dict(self) -> dict:
        return {"scheme": self.scheme.value, "params": dict(self.params), "W": self.W.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> WeightMatrix:
        return cls(np.asarray(doc["W"], dtype=float), Scheme(doc["scheme"]), dict(doc.get("params", {})))


@dataclass(frozen=True)
class EstimatorInputs:
    """Plug-in quantities that feed the optimal-weight formulas."""

    fit_obs: FitResult
    fit_int: FitResult
    cov_obs_hat: np.ndarray
    cov_int_hat: np.ndarray
    delta_hat: np.ndarray


def _coef(fit) -> np.ndarray:
    return np.asarray(fit.coef if isinstance(fit, FitResult) else fit, dtype=float)


def _matrix(W) -> np.ndarray:
    return W.W if isinstance(W, WeightMatrix) else np.atleast_2d(np.asarray(W, dtype=float))


def combine(W, fit_int, fit_obs) -> np.ndarray:
    """``W @ alpha_int + (I - W) @ alpha_obs``."""
    W = _matrix(W)
    a_int, a_obs = _coef(fit_int), _coef(fit_obs)
    if not W.shape == (a_int.size, a_int.size) or a_int.shape != a_obs.shape:
        raise DimensionMismatch(f"W {W.shape}, alpha_int {a_int.shape}, alpha_obs {a_obs.shape}")
    return a_obs + W @ (a_int - a_obs)


def weighted_mse(W, cov_obs: np.ndarray, cov_int: np.ndarray, delta: np.ndarray) -> float:
    """Mean squared error of ``alpha_W`` given the fits' covariances and the bias."""
    W = _matrix(W)
    R = np.eye(W.shape[0]) - W
    bias = R @ delta
    return float(bias @ bias + np.sum((W @ cov_int) * W) + np.sum((R @ cov_obs) * R))


def weight_interventional(p: int) -> WeightMatrix:
    return WeightMatrix(np.eye(p), Scheme.INTERVENTIONAL)


def weight_observational(p: int) -> WeightMatrix:
    return WeightMatrix(np.zeros((p, p)), Scheme.OBSERVATIONAL)


def weight_pooled(obs: Dataset, int: Dataset) -> WeightMatrix:
    """``(X_O'X_O + X_I'X_I)^{-1} X_I'X_I``; combining with it equals OLS on the pooled rows."""
    if obs.p != int.p:
        raise DimensionMismatch(f"p differs: {obs.p} vs {int.p}")
    G_int = int.X.T @ int.X
    G = obs.X.T @ obs.X + G_int
    check_nonsingular(G)
    return WeightMatrix(spd_solve(G, G_int), Scheme.POOLED)


def weight_ridge(int: Dataset, lam: float) -> WeightMatrix:
    """``(X_I'X_I + lam I)^{-1} X_I'X_I``; pair it with a zero observational estimate."""
    if not lam > 0:
        raise ValueError(f"ridge weight needs lam > 0, got {lam}")
    G_int = int.X.T @ int.X
    return WeightMatrix(spd_solve(G_int + lam * np.eye(int.p), G_int), Scheme.RIDGE, {"lambda": float(lam)})


def optimal_scalar_weight(tr_cov_obs: float, tr_cov_int: float, delta_sq_norm: float) -> float:
    if min(tr_cov_obs, tr_cov_int, delta_sq_norm) < 0:
        raise ValueError("traces and squared bias norm must be nonnegative")
    num = tr_cov_obs + delta_sq_norm
    den = tr_cov_int + num
    if den <= DEGENERATE_TOL:
        raise DegenerateWeight("both fits are exact and the bias vanishes")
    return num / den


def optimal_diagonal_weight(cov_obs: np.ndarray, cov_int: np.ndarray, delta: np.ndarray) -> WeightMatrix:
    """Per-coordinate optimal weights; the MSE decouples over coordinates for diagonal ``W``."""
    c_obs, c_int = np.diag(cov_obs), np.diag(cov_int)
    if np.any(c_obs < 0) or np.any(c_int < 0):
        raise ValueError("covariance diagonals must be nonnegative")
    num = c_obs + np.asarray(delta) ** 2
    den = c_int + num
    if np.any(den <= DEGENERATE_TOL):
        bad = np.flatnonzero(den <= DEGENERATE_TOL).tolist()
        raise DegenerateWeight(f"vanishing denominator at coordinates {bad}")
    return WeightMatrix(np.diag(num / den), Scheme.OPT_DIAG)


def optimal_scalar_weight_matrix(cov_obs, cov_int, delta) -> WeightMatrix:
    delta = np.asarray(delta, dtype=float)
    w = optimal_scalar_weight(float(np.trace(cov_obs)), float(np.trace(cov_int)), float(delta @ delta))
    return WeightMatrix(w * np.eye(delta.size), Scheme.OPT_SCALAR, {"w": w})


def _optimal_matrix(A: np.ndarray, M: np.ndarray) -> np.ndarray:
    # A M^{-1} with both symmetric, computed as (M^{-1} A)'
    return spd_solve(M, A).T


def optimal_weight_matrix(
    cov_obs: np.ndarray, cov_int: np.ndarray, delta: np.ndarray, scheme: Scheme = Scheme.OPT_MATRIX
) -> WeightMatrix:
    """``(C_obs + dd')(C_int + C_obs + dd')^{-1}``, the unconstrained MSE minimizer."""
    delta = np.asarray(delta, dtype=float)
    A = cov_obs + np.outer(delta, delta)
    M = cov_int + A
    check_nonsingular(M)
    return WeightMatrix(_optimal_matrix(A, M), scheme)


def default_epsilon(delta_hat: np.ndarray) -> float:
    return 1e-6 * (1.0 + float(delta_hat @ delta_hat))


def estimator_inputs(fit_obs: FitResult, fit_int: FitResult, delta_hat: np.ndarray | None = None) -> EstimatorInputs:
    """Plug-in covariances from the fits; ``delta_hat`` defaults to ``alpha_obs - alpha_int``."""
    if fit_obs.p != fit_int.p:
        raise DimensionMismatch(f"p differs: {fit_obs.p} vs {fit_int.p}")
    if delta_hat is None:
        delta_hat = delta_hat_plain(fit_obs, fit_int)
    return EstimatorInputs(fit_obs, fit_int, fit_obs.covariance(), fit_int.covariance(), np.asarray(delta_hat, dtype=float))


def plugin_weight_matrix(
    inputs: EstimatorInputs, epsilon: float | None = None, scheme: Scheme = Scheme.PLUGIN
) -> WeightMatrix:
    """Plug-in optimal weights, stabilized by ``epsilon * I`` in both factors.

    With ``epsilon=None`` the default ``1e-6 * (1 + ||delta_hat||^2)`` is used.
    """
    d = inputs.delta_hat
    if epsilon is None:
        epsilon = default_epsilon(d)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    A = inputs.cov_obs_hat + np.outer(d, d) + epsilon * np.eye(d.size)
    M = inputs.cov_int_hat + A
    return WeightMatrix(_optimal_matrix(A, M), scheme, {"epsilon": float(epsilon)})


def rosenman_weight(inputs: EstimatorInputs) -> WeightMatrix:
    """``max(1 - tr(C_int) / ||alpha_int - alpha_obs||^2, 0) * I``."""
    diff = inputs.fit_int.coef - inputs.fit_obs.coef
    sq = float(diff @ diff)
    if np.sqrt(sq) < ROSENMAN_TOL:
        raise DegenerateWeight("interventional and observational fits coincide")
    w = max(1.0 - float(np.trace(inputs.cov_int_hat)) / sq, 0.0)
    return WeightMatrix(w * np.eye(diff.size), Scheme.ROSENMAN, {"w": w})


def delta_hat_plain(fit_obs: FitResult, fit_int: FitResult, intercept: bool = False) -> np.ndarray:
    """``alpha_obs - alpha_int``; with ``intercept`` the last coordinate is pinned to 0."""
    a_obs, a_int = _coef(fit_obs), _coef(fit_int)
    if a_obs.shape != a_int.shape:
        raise DimensionMismatch(f"{a_obs.shape} vs {a_int.shape}")
    delta = a_obs - a_int
    if intercept:
        delta[-1] = 0.0
    return delta


def _bias_design(int: Dataset, alpha_obs: np.ndarray, intercept: bool):
    # two-step regression: r = y_I - X_I alpha_obs, then regress -r on X_I
    target = int.X @ alpha_obs - int.y
    X = int.X[:, :-1] if intercept else int.X
    return X, target


def _pad(delta: np.ndarray, intercept: bool) -> np.ndarray:
    return np.append(delta, 0.0) if intercept else delta


def delta_hat_regularized(
    fit_obs: FitResult,
    int: Dataset,
    penalty: Penalty | str,
    lam: float,
    intercept: bool = False,
    tol: float = LASSO_TOL,
    max_iter: int = LASSO_MAX_ITER,
) -> np.ndarray:
    """Penalized estimate of the confounding bias from the residuals of ``alpha_obs``.

    Minimizes ``||r + X_I d||^2 + lam * pen(d)`` with ``r = y_I - X_I alpha_obs``
    and ``pen`` the squared l2 or the l1 norm. ``fit_obs`` may be a fit or a
    plain coefficient vector. With ``intercept`` the last
    column of ``X_I`` is left out and the bias there is set to 0.
    """
    penalty = Penalty(penalty)
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    X, target = _bias_design(int, _coef(fit_obs), intercept)
    G, c = X.T @ X, X.T @ target
    if penalty is Penalty.L2:
        if lam == 0:
            check_nonsingular(G)
        delta = spd_solve(G + lam * np.eye(G.shape[0]), c)
    else:
        delta, _, _ = lasso_gram(G, c, lam, tol, max_iter)
    return _pad(delta, intercept)


def _l2_path(G: np.ndarray, c: np.ndarray, grid: np.ndarray) -> list[np.ndarray]:
    evals, evecs = np.linalg.eigh(G)
    proj = evecs.T @ c
    cutoff = 1e-10 * max(evals[-1], np.finfo(float).tiny)
    out = []
    for lam in grid:
        den = evals + lam
        inv = np.where(den > cutoff, 1.0 / np.where(den > cutoff, den, 1.0), 0.0)
        out.append(evecs @ (inv * proj))
    return out


def _l1_path(G: np.ndarray, c: np.ndarray, grid: np.ndarray, tol: float, max_iter: int) -> list[np.ndarray]:
    # warm start from the largest penalty down
    order = np.argsort(grid)[::-1]
    out: list[np.ndarray] = [None] * len(grid)  # type: ignore[list-item]
    beta = None
    for i in order:
        beta, _, _ = lasso_gram(G, c, grid[i], tol, max_iter, beta)
        out[i] = beta.copy()
    return out


def cv_scores(
    fit_obs: FitResult,
    int: Dataset,
    penalty_kind: Penalty | str,
    grid=DEFAULT_LAMBDA_GRID,
    folds: int = DEFAULT_FOLDS,
    seed=0,
    intercept: bool = False,
    tol: float = LASSO_TOL,
    max_iter: int = LASSO_MAX_ITER,
) -> np.ndarray:
    """Mean held-out squared prediction error of ``alpha_obs - delta_hat`` per grid point.

    Folds are a seeded random partition of the interventional rows. In each
    fold the bias is estimated on the training rows and the corrected
    coefficients predict the held-out outcomes.
    """
    penalty_kind = Penalty(penalty_kind)
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if np.any(grid < 0):
        raise ValueError("penalty grid must be nonnegative")
    alpha_obs = _coef(fit_obs)
    rng = make_rng(seed)
    parts = np.array_split(rng.permutation(int.rows), folds)
    if min(len(s) for s in parts) < 1:
        raise InsufficientData(f"{int.rows} rows cannot fill {folds} folds")
    mask = np.ones(int.rows, dtype=bool)
    scores = np.zeros(grid.size)
    for test in parts:
        mask[:] = True
        mask[test] = False
        X, target = _bias_design(int.take(mask), alpha_obs, intercept)
        G, c = X.T @ X, X.T @ target
        if penalty_kind is Penalty.L2:
            path = _l2_path(G, c, grid)
        else:
            path = _l1_path(G, c, grid, tol, max_iter)
        X_te, y_te = int.X[test], int.y[test]
        for k, delta in enumerate(path):
            resid = y_te - X_te @ (alpha_obs - _pad(delta, intercept))
            scores[k] += resid @ resid / len(test)
    return scores / folds


def cross_validate_lambda(
    fit_obs: FitResult,
    int: Dataset,
    penalty_kind: Penalty | str,
    grid=DEFAULT_LAMBDA_GRID,
    folds: int = DEFAULT_FOLDS,
    seed=0,
    intercept: bool = False,
    tol: float = LASSO_TOL,
    max_iter: int = LASSO_MAX_ITER,
) -> float:
    """Grid value with the lowest :func:`cv_scores`; ties go to the larger value."""
    grid = np.asarray(grid, dtype=float).reshape(-1)
    scores = cv_scores(fit_obs, int, penalty_kind, grid, folds, seed, intercept, tol, max_iter)
    best = scores.min()
    return float(grid[scores == best].max())
