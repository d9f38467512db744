"""End-to-end estimation: fits, bias estimates and weights for a set of schemes."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .linmodel import Dataset, FitResult, concatenate, fit_ols
from .preprocess import center_and_augment
from .scm import GroundTruth, ScmParams, ground_truth
from .weighting import (
    DEFAULT_FOLDS,
    DEFAULT_LAMBDA_GRID,
    Penalty,
    Scheme,
    EstimatorInputs,
    WeightMatrix,
    combine,
    cross_validate_lambda,
    delta_hat_plain,
    delta_hat_regularized,
    estimator_inputs,
    optimal_diagonal_weight,
    optimal_scalar_weight_matrix,
    optimal_weight_matrix,
    plugin_weight_matrix,
    rosenman_weight,
    weight_interventional,
    weight_observational,
    weight_pooled,
    weight_ridge,
)


@dataclass(frozen=True)
class EstimateOptions:
    center: bool = False
    ridge_lambda: float = 1.0
    l2_lambda: float | None = None  # None: choose by cross-validation
    l1_lambda: float | None = None
    cv_folds: int = DEFAULT_FOLDS
    lambda_grid: tuple = tuple(DEFAULT_LAMBDA_GRID.tolist())
    epsilon: float | None = None
    seed: int = 0


@dataclass(frozen=True)
class EffectEstimate:
    """Combined estimate for one scheme.

    ``alpha_hat`` covers the treatments only; with centering the intercept is
    reported separately and ``weight``/``delta_hat`` keep the extra coordinate.
    """

    scheme: Scheme
    alpha_hat: np.ndarray
    weight: WeightMatrix
    delta_hat: np.ndarray
    intercept: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "alpha_hat": self.alpha_hat.tolist(),
            "intercept": self.intercept,
            "W": self.weight.to_dict(),
            "delta_hat": self.delta_hat.tolist(),
            "diagnostics": self.diagnostics,
        }


def _oracle_truth(truth) -> GroundTruth:
    if isinstance(truth, ScmParams):
        return ground_truth(truth)
    if isinstance(truth, GroundTruth):
        return truth
    raise ValueError("the oracle scheme needs the true SEM (ScmParams or GroundTruth)")


def _treatment_block(inputs: EstimatorInputs, p: int) -> EstimatorInputs:
    # drop the intercept coordinate so scalar weights only see the treatments
    def cut(fit):
        return replace(fit, coef=fit.coef[:p], moment_inverse=fit.moment_inverse[:p, :p])

    return EstimatorInputs(
        cut(inputs.fit_obs),
        cut(inputs.fit_int),
        inputs.cov_obs_hat[:p, :p],
        inputs.cov_int_hat[:p, :p],
        inputs.delta_hat[:p],
    )


def _widen(W: WeightMatrix, size: int) -> WeightMatrix:
    return WeightMatrix(W.params["w"] * np.eye(size), W.scheme, W.params)


def estimate_effects(
    obs: Dataset,
    int: Dataset,
    schemes,
    options: EstimateOptions = EstimateOptions(),
    truth: ScmParams | GroundTruth | None = None,
) -> dict[Scheme, EffectEstimate]:
    """Fit both regimes once and build every requested weighting scheme.

    With ``options.center`` the scalar schemes compute their weight from the
    treatment coordinates and apply it to the intercept as well.
    ``truth`` is only needed for :attr:`Scheme.ORACLE`, which plugs the true
    bias and conditional variances into the optimal weight formula.
    """
    schemes = [Scheme(s) for s in schemes]
    p = obs.p
    if options.center:
        pair = center_and_augment(obs, int)
        obs, int = pair.obs, pair.int
    intercept = options.center

    fit_obs = fit_ols(obs)
    fit_int = fit_ols(int)
    base = estimator_inputs(fit_obs, fit_int, delta_hat_plain(fit_obs, fit_int, intercept))
    scalar_base = _treatment_block(base, p) if intercept else base
    diag_common = {
        "residual_variance_obs": fit_obs.residual_variance,
        "residual_variance_int": fit_int.residual_variance,
        "n": obs.rows,
        "m": int.rows,
        "centered": intercept,
    }

    grid = np.asarray(options.lambda_grid, dtype=float)
    regularized: dict[Penalty, tuple[np.ndarray, float]] = {}

    # The two regimes' intercepts differ by alpha'(E_obs[X] - E_int[X]) when the
    # treatment means differ. That offset is not confounding bias, so the bias
    # regression and its cross-validation use the interventional intercept.
    alpha_for_bias = fit_obs.coef.copy()
    if intercept:
        alpha_for_bias[-1] = fit_int.coef[-1]

    def regularized_delta(penalty: Penalty):
        if penalty not in regularized:
            lam = options.l2_lambda if penalty is Penalty.L2 else options.l1_lambda
            if lam is None:
                lam = cross_validate_lambda(
                    alpha_for_bias, int, penalty, grid, options.cv_folds, options.seed, intercept
                )
            regularized[penalty] = (delta_hat_regularized(alpha_for_bias, int, penalty, lam, intercept), lam)
        return regularized[penalty]

    out: dict[Scheme, EffectEstimate] = {}
    for scheme in schemes:
        delta = base.delta_hat
        diag = dict(diag_common)
        a_obs: FitResult | np.ndarray = fit_obs
        if scheme is Scheme.INTERVENTIONAL:
            W = weight_interventional(fit_int.p)
        elif scheme is Scheme.OBSERVATIONAL:
            W = weight_observational(fit_int.p)
        elif scheme is Scheme.POOLED:
            W = weight_pooled(obs, int)
        elif scheme is Scheme.RIDGE:
            W = weight_ridge(int, options.ridge_lambda)
            a_obs = np.zeros(fit_int.p)
        elif scheme is Scheme.OPT_SCALAR:
            W = optimal_scalar_weight_matrix(scalar_base.cov_obs_hat, scalar_base.cov_int_hat, scalar_base.delta_hat)
            W = _widen(W, fit_int.p)
        elif scheme is Scheme.OPT_DIAG:
            W = optimal_diagonal_weight(base.cov_obs_hat, base.cov_int_hat, delta)
        elif scheme is Scheme.OPT_MATRIX:
            W = optimal_weight_matrix(base.cov_obs_hat, base.cov_int_hat, delta)
        elif scheme is Scheme.PLUGIN:
            W = plugin_weight_matrix(base, options.epsilon)
        elif scheme in (Scheme.PLUGIN_L2, Scheme.PLUGIN_L1):
            penalty = Penalty.L2 if scheme is Scheme.PLUGIN_L2 else Penalty.L1
            delta, lam = regularized_delta(penalty)
            inputs = estimator_inputs(fit_obs, fit_int, delta)
            W = plugin_weight_matrix(inputs, options.epsilon, scheme)
            W.params["lambda"] = float(lam)
        elif scheme is Scheme.ROSENMAN:
            W = _widen(rosenman_weight(scalar_base), fit_int.p)
        elif scheme is Scheme.ORACLE:
            gt = _oracle_truth(truth)
            delta = np.append(gt.delta, 0.0) if intercept else gt.delta
            W = optimal_weight_matrix(
                fit_obs.moment_inverse * gt.var_y_given_x_obs,
                fit_int.moment_inverse * gt.var_y_given_do,
                delta,
                Scheme.ORACLE,
            )
        else:  # pragma: no cover
            raise ValueError(f"unknown scheme {scheme}")
        full = combine(W, fit_int, a_obs)
        out[scheme] = EffectEstimate(
            scheme,
            full[:p],
            W,
            delta,
            float(full[p]) if intercept else None,
            diag,
        )
    return out


def pooled_ols(obs: Dataset, int: Dataset) -> FitResult:
    """OLS on the row-concatenated data, the reference for :func:`weight_pooled`."""
    return fit_ols(concatenate(obs, int))
