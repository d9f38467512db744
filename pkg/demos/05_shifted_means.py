"""Data with nonzero means.

Centering each regime on its own and adding an intercept column keeps the
slope estimates intact. The bias estimate never touches the intercept.
"""
import numpy as np

from causal_combine import EstimateOptions, estimate_effects, sample_interventional, sample_observational
from causal_combine.scm import table1_params

params = table1_params("spread", 1.0, seed=8)
shifted = params.replace(mu_nz=np.array([1.5]), mu_nx=np.full(30, 4.0), mu_ny=-2.0,
                         intervention_mean=np.full(30, 1.0))

obs = sample_observational(shifted, 600, seed=1)
intv = sample_interventional(shifted, 300, seed=2)
print("obs column means  ", obs.X.mean(axis=0)[:4].round(2), "...")
print("int column means  ", intv.X.mean(axis=0)[:4].round(2), "...")

for center in (False, True):
    est = estimate_effects(obs, intv, ["pooled", "plugin-l2"], EstimateOptions(center=center))
    errs = {k.value: round(float(np.sum((v.alpha_hat - params.alpha) ** 2)), 3) for k, v in est.items()}
    print("center=%-5s squared errors %s" % (center, errs))

est = estimate_effects(obs, intv, ["plugin-l2"], EstimateOptions(center=True))
print("intercept entry of delta_hat:", est["plugin-l2"].delta_hat[-1])
