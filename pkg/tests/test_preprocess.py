import numpy as np
import pytest

from causal_combine.errors import DimensionMismatch, InsufficientData
from causal_combine.linmodel import Dataset, Regime, fit_ols
from causal_combine.pipeline import EstimateOptions, estimate_effects
from causal_combine.preprocess import center_and_augment
from causal_combine.scm import ScmParams, ground_truth, sample_interventional, sample_observational
from causal_combine.weighting import Scheme, delta_hat_plain, delta_hat_regularized


def antithetic(data):
    # stacking (X, y) with (-X, -y) gives exactly mean-zero columns
    return Dataset(np.vstack([data.X, -data.X]), np.concatenate([data.y, -data.y]), data.regime)


def test_centering_invariants(rng):
    obs = Dataset(rng.normal(3.0, 1.0, (40, 3)), rng.standard_normal(40), Regime.OBSERVATIONAL)
    int = Dataset(rng.normal(-2.0, 2.0, (25, 3)), rng.standard_normal(25), Regime.INTERVENTIONAL)
    pair = center_and_augment(obs, int)
    assert pair.obs.X.shape == (40, 4) and pair.int.X.shape == (25, 4)
    assert np.abs(pair.obs.X[:, :3].mean(axis=0)).max() < 1e-10
    assert np.abs(pair.int.X[:, :3].mean(axis=0)).max() < 1e-10
    assert np.all(pair.obs.X[:, -1] == 1.0) and np.all(pair.int.X[:, -1] == 1.0)
    np.testing.assert_allclose(pair.obs_mean, obs.X.mean(axis=0))
    np.testing.assert_allclose(pair.obs.X[:, :3] + pair.obs_mean, obs.X)
    assert pair.p == 3 and pair.augmented


def test_zero_mean_data_only_gains_ones_column(rng):
    obs = antithetic(Dataset(rng.standard_normal((10, 2)), rng.standard_normal(10)))
    pair = center_and_augment(obs, obs)
    np.testing.assert_allclose(pair.obs.X[:, :2], obs.X, atol=1e-15)
    np.testing.assert_array_equal(pair.obs.y, obs.y)


def test_translation_invariance(rng):
    X = rng.standard_normal((30, 3))
    y = rng.standard_normal(30)
    a = center_and_augment(Dataset(X, y), Dataset(X, y))
    b = center_and_augment(Dataset(X + np.array([5.0, -7.0, 100.0]), y), Dataset(X, y))
    np.testing.assert_allclose(a.obs.X, b.obs.X, atol=1e-12)


def test_no_augmentation(rng):
    pair = center_and_augment(Dataset(rng.standard_normal((5, 2)), np.ones(5)),
                              Dataset(rng.standard_normal((5, 2)), np.ones(5)), augment=False)
    assert pair.obs.X.shape == (5, 2) and not pair.augmented


def test_errors(rng):
    with pytest.raises(DimensionMismatch):
        center_and_augment(Dataset(np.ones((4, 2)), np.ones(4)), Dataset(np.ones((4, 3)), np.ones(4)))
    with pytest.raises(InsufficientData):
        center_and_augment(Dataset(np.ones((0, 2)), np.ones(0)), Dataset(np.ones((4, 2)), np.ones(4)))


def test_interventional_intercept_identity():
    params = ScmParams(
        B=[[0.8], [-0.5]], gamma=[1.3], alpha=[1.0, 2.0], sigma_nz=[[1.0]], sigma_nx=np.eye(2),
        var_ny=1.0, mu_nz=[1.0], mu_ny=2.0, intervention_mean=[0.0, 0.0],
    )
    m = 1_000_000
    int = sample_interventional(params, m, seed=5)
    pair = center_and_augment(sample_observational(params, 100, seed=6), int)
    fit = fit_ols(pair.int)
    target = params.gamma @ params.mu_nz + params.mu_ny
    # intercept of a centered design is the outcome mean, whose spread includes alpha'X
    var_y = ground_truth(params).var_y_given_do + params.alpha @ params.intervention_cov @ params.alpha
    assert abs(fit.coef[-1] - target) < 3 * np.sqrt(var_y / m)


def test_bias_estimates_pin_intercept(rng, small_scm):
    obs = sample_observational(small_scm.replace(mu_nz=np.array([1.0, -1.0])), 200, seed=1)
    int = sample_interventional(small_scm, 150, seed=2)
    pair = center_and_augment(obs, int)
    fo, fi = fit_ols(pair.obs), fit_ols(pair.int)
    assert delta_hat_plain(fo, fi, intercept=True)[-1] == 0.0
    for penalty in ("l2", "l1"):
        for lam in (0.0, 0.5, 50.0):
            assert delta_hat_regularized(fo, pair.int, penalty, lam, intercept=True)[-1] == 0.0


def test_pipeline_equivalence_for_zero_mean_data(small_scm):
    obs = antithetic(sample_observational(small_scm, 150, seed=10))
    int = antithetic(sample_interventional(small_scm, 60, seed=11))
    schemes = [s for s in Scheme]
    plain = estimate_effects(obs, int, schemes, EstimateOptions(center=False), truth=small_scm)
    centered = estimate_effects(obs, int, schemes, EstimateOptions(center=True), truth=small_scm)
    for s in schemes:
        np.testing.assert_allclose(centered[s].alpha_hat, plain[s].alpha_hat, atol=1e-8, err_msg=s.value)
        assert centered[s].weight.W.shape == (4, 4)
        assert centered[s].delta_hat[-1] == 0.0
        assert plain[s].intercept is None
