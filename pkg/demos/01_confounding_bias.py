"""A hidden confounder pushes observational regression away from the causal effect.

One confounder Z drives three treatments and the outcome. Regressing y on X
in observational data recovers alpha + delta, not alpha. Randomizing X
removes the bias but we usually get far fewer such rows.
"""
import numpy as np

from causal_combine import ScmParams, fit_ols, ground_truth, sample_interventional, sample_observational

params = ScmParams(
    B=[[1.0], [0.5], [-0.8]],      # how Z loads on each treatment
    gamma=[2.0],                   # how Z moves the outcome
    alpha=[1.0, -1.0, 0.5],        # the causal effect we want
    sigma_nz=[[1.0]],
    sigma_nx=np.eye(3),
    var_ny=1.0,
)
truth = ground_truth(params)
print("alpha          ", params.alpha)
print("bias delta     ", truth.delta.round(3))
print("var(y|x) obs   ", round(truth.var_y_given_x_obs, 3), " under do(x):", round(truth.var_y_given_do, 3))

# lots of observational rows, few interventional ones
obs = sample_observational(params, 5000, seed=1)
intv = sample_interventional(params, 100, seed=2)

a_obs = fit_ols(obs).coef
a_int = fit_ols(intv).coef
print()
print("observational OLS ", a_obs.round(3), " (close to alpha + delta)")
print("interventional OLS", a_int.round(3), " (unbiased but noisy)")
print("squared errors: obs %.3f   int %.3f" % (np.sum((a_obs - params.alpha) ** 2), np.sum((a_int - params.alpha) ** 2)))
