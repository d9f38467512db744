"""Every weighting scheme on one pair of datasets.

The combined estimate is W a_int + (I - W) a_obs. We run all schemes on the
strongly confounded benchmark SEM and compare squared errors. The oracle
uses the true bias, so it only shows how much room there is.
"""
import numpy as np

from causal_combine import EstimateOptions, Scheme, estimate_effects, sample_interventional, sample_observational
from causal_combine.scm import table1_params

params = table1_params("spread", 5.0, seed=3)   # p = 30 treatments, one confounder
obs = sample_observational(params, 600, seed=4)
intv = sample_interventional(params, 300, seed=5)

results = estimate_effects(obs, intv, list(Scheme), EstimateOptions(seed=0), truth=params)

print("%-15s %10s   %s" % ("scheme", "sq. error", "notes"))
for scheme, est in sorted(results.items(), key=lambda kv: np.sum((kv[1].alpha_hat - params.alpha) ** 2)):
    err = np.sum((est.alpha_hat - params.alpha) ** 2)
    note = ""
    if "lambda" in est.weight.params:
        note = "lambda=%g" % est.weight.params["lambda"]
    if "w" in est.weight.params:
        note = "w=%.3f" % est.weight.params["w"]
    print("%-15s %10.4f   %s" % (scheme.value, err, note))

# the raw plug-in lands next to the interventional estimate: its bias estimate
# a_obs - a_int is as noisy as a_int, so every direction looks confounded
gap = results[Scheme.PLUGIN].alpha_hat - results[Scheme.INTERVENTIONAL].alpha_hat
print("\n||alpha_plugin - alpha_int|| =", round(float(np.linalg.norm(gap)), 3))
