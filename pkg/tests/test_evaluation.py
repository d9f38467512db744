from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import spearmanr

from causal_combine import evaluation
from causal_combine.errors import ExcessiveFailures, SingularMoment
from causal_combine.evaluation import (
    TABLE1_METHODS,
    ExperimentConfig,
    Table1Source,
    bias_variance_decomposition,
    check_weight_convergence,
    delta_variance_additivity,
    imbalance_limit,
    oracle_imbalance,
    run_experiment,
    run_trial,
    sweep_ratio,
    sweep_sample_size,
    table1_configs,
    trial_seeds,
)
from causal_combine.scm import ScmParams
from causal_combine.weighting import Scheme


@pytest.fixture(scope="module")
def sample_size_sweep():
    base = ExperimentConfig(Table1Source("spread", 5.0), 300, 100, 100, TABLE1_METHODS, 0)
    return sweep_sample_size(base, [100, 300, 1000, 3000], 3.0, workers=1)


@pytest.fixture(scope="module")
def ratio_sweep():
    base = ExperimentConfig(Table1Source("spread", 5.0), 500, 500, 100, TABLE1_METHODS, 0)
    return sweep_ratio(base, [50, 500, 5000, 50000], workers=1)


def test_noiseless_interventional_trial(small_scm):
    params = small_scm.replace(gamma=np.zeros(2), var_ny=1e-12)
    config = ExperimentConfig(params, 20, 20, 1, ["interventional"], 3)
    assert run_trial(config, 0)["interventional"] < 1e-8


def test_trial_determinism():
    config = ExperimentConfig(Table1Source("sparse", 1.0), 100, 60, 5, TABLE1_METHODS, 11)
    assert run_trial(config, 3) == run_trial(config, 3)
    assert run_trial(config, 3) != run_trial(config, 4)
    assert trial_seeds(11, 3) == trial_seeds(11, 3)
    assert len(set(trial_seeds(11, 3))) == 4


def test_report_consistency_and_determinism():
    config = ExperimentConfig(Table1Source("spread", 1.0), 100, 60, 20, TABLE1_METHODS, 1)
    a = run_experiment(config, workers=1)
    b = run_experiment(config, workers=1)
    assert a.to_json() == b.to_json()
    for stats in a.per_method.values():
        assert np.all(stats.per_replication >= 0)
        assert abs(stats.mean_mse - stats.per_replication.mean()) < 1e-10
        assert abs(stats.std_mse - stats.per_replication.std()) < 1e-10
    rows = list(a.csv_rows())
    assert len(rows) == 20 * len(TABLE1_METHODS)
    assert rows[0][:2] == ("rosenman", 0)


def test_parallel_matches_serial():
    config = ExperimentConfig(Table1Source("sparse", 5.0), 100, 60, 8, TABLE1_METHODS, 2)
    assert run_experiment(config, workers=2).to_json() == run_experiment(config, workers=1).to_json()


def test_failed_trials_are_excluded(monkeypatch):
    real = evaluation.run_trial

    def flaky(config, index):
        if index == 3:
            raise SingularMoment("forced")
        return real(config, index)

    monkeypatch.setattr(evaluation, "run_trial", flaky)
    config = ExperimentConfig(Table1Source("spread", 1.0), 60, 40, 100, ["interventional"], 0)
    report = run_experiment(config, workers=1)
    assert report.failed == (3,)
    assert 3 not in report.replication_index
    assert report.per_method["interventional"].per_replication.size == 99
    with pytest.raises(ExcessiveFailures):
        run_experiment(replace(config, replications=50), workers=1)


def test_singular_design_raises_excessive_failures():
    params = ScmParams(B=[[1.0], [0.0]], gamma=[1.0], alpha=[1.0, 1.0], sigma_nz=[[1.0]],
                       sigma_nx=np.diag([1.0, 1e-30]), var_ny=1.0, intervention_cov=np.diag([1.0, 1e-30]))
    with pytest.raises(ExcessiveFailures):
        run_experiment(ExperimentConfig(params, 10, 10, 5, ["pooled"], 0), workers=1)


def test_config_validation_and_round_trip(small_scm):
    with pytest.raises(ValueError):
        ExperimentConfig(Table1Source("spread", 1.0), 30, 300, 1, TABLE1_METHODS, 0)
    with pytest.raises(ValueError):
        ExperimentConfig(Table1Source("spread", 1.0), 600, 300, 0, TABLE1_METHODS, 0)
    for config in (table1_configs(5)[3], ExperimentConfig(small_scm, 10, 8, 2, ["pooled", "oracle"], 4, 1.25)):
        back = ExperimentConfig.from_dict(config.to_dict())
        assert back.to_dict() == config.to_dict()


def test_table1_configs_shape():
    configs = table1_configs()
    assert [c.scm_source.label for c in configs] == ["spread/gamma=1", "spread/gamma=5", "sparse/gamma=1", "sparse/gamma=5"]
    assert all(c.n == 600 and c.m == 300 and c.replications == 1000 for c in configs)


def test_sample_size_sweep_trends(sample_size_sweep):
    ms = [100, 300, 1000, 3000]
    for scheme in (s.value for s in TABLE1_METHODS):
        means = [r.per_method[scheme].mean_mse for r in sample_size_sweep]
        assert spearmanr(ms, means).statistic < 0, scheme
    plugin = [r.per_method["plugin"].mean_mse for r in sample_size_sweep]
    assert plugin[3] < 0.25 * plugin[0]
    assert [r.config["n"] for r in sample_size_sweep] == [300, 900, 3000, 9000]


def test_ratio_sweep(ratio_sweep):
    inter = [r.per_method["interventional"] for r in ratio_sweep]
    se = inter[0].std_mse / np.sqrt(inter[0].per_replication.size)
    assert all(abs(s.mean_mse - inter[0].mean_mse) <= 2 * se for s in inter)
    last = ratio_sweep[-1].summary()
    best = min((k for k in last if k != "oracle"), key=lambda k: last[k][0])
    assert best == "plugin-l2"


def test_weight_convergence_table(small_scm):
    rows = check_weight_convergence(small_scm, [(200, 100), (2000, 1000)], epsilon=0.01, replications=5)
    assert [r["n"] for r in rows] == [200, 2000]
    assert rows[0]["median"] > rows[1]["median"]
    assert all(r["q25"] <= r["median"] <= r["q75"] for r in rows)


def test_imbalance_limit_zero_bias_and_diagnostic(small_scm):
    params = small_scm.replace(gamma=np.zeros(2))
    np.testing.assert_array_equal(imbalance_limit(params, np.eye(3)), 0.0)
    rows = oracle_imbalance(params, 50, [1000, 10_000])
    # without bias the weights are only reported, no limit is asserted
    assert all(np.isfinite(r["norm"]) for r in rows)


def test_bias_variance_identity(small_scm):
    out = bias_variance_decomposition(small_scm, 60, 40, ["pooled", "plugin"], replications=200)
    for v in out.values():
        assert abs(v["mse"] - v["bias_sq"] - v["trace_cov"]) <= 3 * v["mc_se"]


def test_delta_variance_keys(small_scm):
    out = delta_variance_additivity(small_scm, 200, 200, replications=50)
    assert set(out) == {"trace_delta", "trace_int", "trace_obs"}
    assert out["trace_delta"] > 0
