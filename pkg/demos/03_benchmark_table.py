"""Mean squared error table for the four benchmark settings.

    python demos/03_benchmark_table.py [replications]

With 1000 replications this takes a bit under a minute on one core.
"""
import sys

from causal_combine.evaluation import TABLE1_METHODS, run_experiment, table1_configs

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 100
names = [m.value for m in TABLE1_METHODS]

print("%-16s" % "setting" + "".join("%16s" % n for n in names))
for config in table1_configs(replications=reps):
    report = run_experiment(config)
    row = "".join("%9.3f ±%5.2f" % report.summary()[n] for n in names)
    print("%-16s" % config.scm_source.label + row)
print("\n(%d replications per setting, mean ± std of squared error)" % reps)
