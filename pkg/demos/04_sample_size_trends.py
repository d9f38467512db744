"""How the estimators scale with data.

Left: grow m with n = 3m. Pooling stalls at its bias while the weighted
estimators keep improving. Right: hold m = 500 and add observational rows.
"""
from dataclasses import replace

from causal_combine.evaluation import ExperimentConfig, Table1Source, sweep_ratio, sweep_sample_size

methods = ["interventional", "pooled", "plugin", "plugin-l2", "oracle"]
base = ExperimentConfig(Table1Source("spread", 5.0), 300, 100, 50, methods, master_seed=0)

print("n = 3m")
print("%6s" % "m" + "".join("%16s" % k for k in methods))
for report in sweep_sample_size(base, [100, 300, 1000, 3000], ratio=3.0):
    s = report.summary()
    print("%6d" % report.config["m"] + "".join("%16.4f" % s[k][0] for k in methods))

print("\nm = 500")
print("%6s" % "n/m" + "".join("%16s" % k for k in methods))
for report in sweep_ratio(replace(base, m=500, n=500), [50, 500, 5000, 50000]):
    s = report.summary()
    print("%6g" % (report.config["n"] / 500) + "".join("%16.4f" % s[k][0] for k in methods))
