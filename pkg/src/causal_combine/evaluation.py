"""Monte Carlo harness: benchmark tables, sample-size sweeps and limit checks.

Every replication derives its random streams from
``SeedSequence(master_seed, spawn_key=(index,))`` so results do not depend on
execution order or on how replications are spread over worker processes.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ExcessiveFailures, SingularMoment
from .linmodel import Regime, check_nonsingular, fit_ols, spd_inverse
from .pipeline import EstimateOptions, estimate_effects
from .scm import (
    Confounding,
    ScmParams,
    ground_truth,
    sample_interventional,
    sample_joint,
    sample_observational,
    table1_params,
)
from .weighting import (
    Scheme,
    estimator_inputs,
    optimal_weight_matrix,
    plugin_weight_matrix,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
THREADS_ENV = "CAUSAL_COMBINE_THREADS"
MAX_FAILURE_FRACTION = 0.01

TABLE1_METHODS = (
    Scheme.ROSENMAN,
    Scheme.INTERVENTIONAL,
    Scheme.POOLED,
    Scheme.PLUGIN,
    Scheme.PLUGIN_L1,
    Scheme.PLUGIN_L2,
    Scheme.ORACLE,
)
TABLE1_ROWS = (
    (Confounding.SPREAD, 1.0),
    (Confounding.SPREAD, 5.0),
    (Confounding.SPARSE, 1.0),
    (Confounding.SPARSE, 5.0),
)


@dataclass(frozen=True)
class Table1Source:
    """Draw a fresh random benchmark SEM in every replication."""

    confounding: Confounding
    gamma_scale: float

    def __post_init__(self):
        object.__setattr__(self, "confounding", Confounding(self.confounding))
        object.__setattr__(self, "gamma_scale", float(self.gamma_scale))

    @property
    def p(self) -> int:
        return 30

    @property
    def label(self) -> str:
        return f"{self.confounding.value}/gamma={self.gamma_scale:g}"


@dataclass(frozen=True)
class ExperimentConfig:
    scm_source: Table1Source | ScmParams
    n: int
    m: int
    replications: int
    methods: tuple = TABLE1_METHODS
    master_seed: int = 0
    ratio_c: float | None = None
    options: EstimateOptions = EstimateOptions()

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(Scheme(s) for s in self.methods))
        p = self.scm_source.p
        if self.n < p + 1 or self.m < p + 1:
            raise ValueError(f"n and m must be at least p + 1 = {p + 1} (got n={self.n}, m={self.m})")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")

    def to_dict(self) -> dict:
        if isinstance(self.scm_source, Table1Source):
            source = {"table1": {"confounding": self.scm_source.confounding.value,
                                 "gamma_scale": self.scm_source.gamma_scale}}
        else:
            source = {"custom": self.scm_source.to_dict()}
        opts = self.options
        return {
            "schema_version": SCHEMA_VERSION,
            "scm_source": source,
            "n": self.n,
            "m": self.m,
            "replications": self.replications,
            "methods": [s.value for s in self.methods],
            "master_seed": self.master_seed,
            "ratio_c": self.ratio_c,
            "options": {
                "center": opts.center,
                "ridge_lambda": opts.ridge_lambda,
                "l2_lambda": opts.l2_lambda,
                "l1_lambda": opts.l1_lambda,
                "cv_folds": opts.cv_folds,
                "lambda_grid": list(opts.lambda_grid),
                "epsilon": opts.epsilon,
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        src = doc["scm_source"]
        if "table1" in src:
            source: Table1Source | ScmParams = Table1Source(**src["table1"])
        elif "custom" in src:
            source = ScmParams.from_dict(src["custom"])
        else:
            raise ValueError("scm_source must contain 'table1' or 'custom'")
        opts = dict(doc.get("options", {}))
        if "lambda_grid" in opts:
            opts["lambda_grid"] = tuple(float(x) for x in opts["lambda_grid"])
        return cls(
            scm_source=source,
            n=int(doc["n"]),
            m=int(doc["m"]),
            replications=int(doc["replications"]),
            methods=tuple(doc.get("methods", [s.value for s in TABLE1_METHODS])),
            master_seed=int(doc.get("master_seed", 0)),
            ratio_c=doc.get("ratio_c"),
            options=EstimateOptions(**opts),
        )


def trial_seeds(master_seed: int, index: int) -> tuple[int, int, int, int]:
    """Seeds for (SEM draw, observational sample, interventional sample, CV folds)."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return tuple(int(s) for s in ss.generate_state(4, dtype=np.uint64))  # type: ignore[return-value]


def run_trial(config: ExperimentConfig, replication_index: int) -> dict[str, float]:
    """Squared error ``||alpha_hat - alpha||^2`` of every configured scheme in one replication."""
    s_params, s_obs, s_int, s_cv = trial_seeds(config.master_seed, replication_index)
    src = config.scm_source
    params = table1_params(src.confounding, src.gamma_scale, s_params) if isinstance(src, Table1Source) else src
    obs = sample_observational(params, config.n, s_obs)
    int_ = sample_interventional(params, config.m, s_int)
    opts = replace(config.options, seed=s_cv)
    estimates = estimate_effects(obs, int_, config.methods, opts, truth=params)
    out = {}
    for scheme in config.methods:
        err = estimates[scheme].alpha_hat - params.alpha
        out[scheme.value] = float(err @ err)
    return out


@dataclass(frozen=True)
class MethodStats:
    mean_mse: float
    std_mse: float
    per_replication: np.ndarray


@dataclass(frozen=True)
class MseReport:
    per_method: dict[str, MethodStats]
    replication_index: np.ndarray
    failed: tuple = ()
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "failed_replications": list(self.failed),
            "per_method": {
                k: {"mean_mse": v.mean_mse, "std_mse": v.std_mse, "per_replication": v.per_replication.tolist()}
                for k, v in self.per_method.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def csv_rows(self):
        """Rows ``(scheme, replication, squared_error)`` for plotting."""
        for scheme, stats in self.per_method.items():
            for idx, err in zip(self.replication_index.tolist(), stats.per_replication.tolist()):
                yield scheme, idx, err

    def summary(self) -> dict[str, tuple[float, float]]:
        return {k: (v.mean_mse, v.std_mse) for k, v in self.per_method.items()}


def _trial_or_failure(args):
    config, index = args
    try:
        return index, run_trial(config, index)
    except SingularMoment as exc:
        log.info("replication %d failed: %s", index, exc)
        return index, None


def worker_count() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> MseReport:
    """Aggregate :func:`run_trial` over all replications.

    Trials with singular moment matrices are excluded and listed in
    ``failed``; more than 1% failures raise :class:`ExcessiveFailures`.
    """
    workers = worker_count() if workers is None else workers
    tasks = [(config, i) for i in range(config.replications)]
    if workers > 1 and config.replications > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_or_failure, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_trial_or_failure(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    failed = tuple(i for i, r in results if r is None)
    if len(failed) > MAX_FAILURE_FRACTION * config.replications:
        raise ExcessiveFailures(f"{len(failed)} of {config.replications} replications failed")
    ok = [(i, r) for i, r in results if r is not None]
    index = np.array([i for i, _ in ok], dtype=int)
    per_method = {}
    for scheme in config.methods:
        errs = np.array([r[scheme.value] for _, r in ok])
        per_method[scheme.value] = MethodStats(float(errs.mean()), float(errs.std()), errs)
    return MseReport(per_method, index, failed, config.to_dict())


def table1_configs(replications: int = 1000, master_seed: int = 0, n: int = 600, m: int = 300,
                   options: EstimateOptions = EstimateOptions()) -> list[ExperimentConfig]:
    """The four benchmark settings (spread/sparse confounding, gamma in {1, 5})."""
    return [
        ExperimentConfig(Table1Source(conf, g), n, m, replications, TABLE1_METHODS, master_seed, n / m, options)
        for conf, g in TABLE1_ROWS
    ]


def sweep_sample_size(base: ExperimentConfig, m_grid, ratio: float, workers: int | None = None) -> list[MseReport]:
    """One report per ``m`` with ``n = round(ratio * m)``."""
    if not ratio > 0:
        raise ValueError("ratio must be positive")
    return [
        run_experiment(replace(base, m=int(m), n=int(round(ratio * m)), ratio_c=ratio), workers)
        for m in m_grid
    ]


def sweep_ratio(base: ExperimentConfig, n_grid, workers: int | None = None) -> list[MseReport]:
    """One report per ``n`` with ``m`` held at ``base.m``."""
    return [run_experiment(replace(base, n=int(n), ratio_c=int(n) / base.m), workers) for n in n_grid]


def check_weight_convergence(
    params: ScmParams,
    sizes,
    epsilon: float | None = None,
    replications: int = 20,
    seed: int = 0,
) -> list[dict]:
    """Distribution of ``||W_plugin - I||_2`` for each ``(n, m)`` in ``sizes``."""
    rows = []
    for k, (n, m) in enumerate(sizes):
        dists = []
        for r in range(replications):
            ss = np.random.SeedSequence(seed, spawn_key=(k, r))
            s_obs, s_int = ss.spawn(2)
            fit_obs = fit_ols(sample_observational(params, n, s_obs))
            fit_int = fit_ols(sample_interventional(params, m, s_int))
            W = plugin_weight_matrix(estimator_inputs(fit_obs, fit_int), epsilon).W
            dists.append(np.linalg.norm(W - np.eye(params.p), 2))
        dists = np.array(dists)
        rows.append({
            "n": int(n), "m": int(m),
            "median": float(np.median(dists)),
            "q25": float(np.quantile(dists, 0.25)),
            "q75": float(np.quantile(dists, 0.75)),
            "mean": float(dists.mean()),
        })
    return rows


def _observational_moment(params: ScmParams, n: int, seed, chunk: int = 200_000) -> np.ndarray:
    G = np.zeros((params.p, params.p))
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    children = seed.spawn((n + chunk - 1) // chunk)
    for k, child in enumerate(children):
        size = min(chunk, n - k * chunk)
        X, _, _ = sample_joint(params, size, child, Regime.OBSERVATIONAL)
        G += X.T @ X
    return G


def imbalance_limit(params: ScmParams, cov_int: np.ndarray) -> np.ndarray:
    """Limit of the oracle weights for fixed ``m`` and ``n -> inf``: ``dd'(C_int + dd')^{-1}``."""
    d = ground_truth(params).delta
    A = np.outer(d, d)
    return np.linalg.solve(cov_int + A, A).T


def oracle_imbalance(params: ScmParams, m: int, n_grid, seed: int = 0) -> list[dict]:
    """Oracle weights for a fixed interventional sample as the observational sample grows.

    Reports the spectral distance to :func:`imbalance_limit` and the
    spectral norm of the weights. With zero bias the limit is the zero
    matrix only along directions where pooling is favored, so the norm is a
    diagnostic rather than something expected to vanish.
    """
    gt = ground_truth(params)
    X_int = sample_interventional(params, m, np.random.SeedSequence(seed, spawn_key=(0,))).X
    G_int = X_int.T @ X_int
    check_nonsingular(G_int)
    cov_int = spd_inverse(G_int) * gt.var_y_given_do
    limit = imbalance_limit(params, cov_int)
    rows = []
    for k, n in enumerate(n_grid):
        G_obs = _observational_moment(params, int(n), np.random.SeedSequence(seed, spawn_key=(1, k)))
        check_nonsingular(G_obs)
        cov_obs = spd_inverse(G_obs) * gt.var_y_given_x_obs
        W = optimal_weight_matrix(cov_obs, cov_int, gt.delta, Scheme.ORACLE).W
        rows.append({
            "n": int(n), "m": int(m),
            "distance_to_limit": float(np.linalg.norm(W - limit, 2)),
            "norm": float(np.linalg.norm(W, 2)),
        })
    return rows


def bias_variance_decomposition(
    params: ScmParams,
    n: int,
    m: int,
    schemes,
    replications: int = 2000,
    seed: int = 0,
    options: EstimateOptions = EstimateOptions(),
) -> dict[str, dict]:
    """Empirical MSE next to squared bias plus covariance trace for each scheme.

    The SEM is held fixed; each replication resamples both datasets.
    """
    schemes = [Scheme(s) for s in schemes]
    errs = {s: [] for s in schemes}
    for r in range(replications):
        s_obs, s_int, s_cv = np.random.SeedSequence(seed, spawn_key=(r,)).generate_state(3, dtype=np.uint64)
        obs = sample_observational(params, n, int(s_obs))
        int_ = sample_interventional(params, m, int(s_int))
        est = estimate_effects(obs, int_, schemes, replace(options, seed=int(s_cv)), truth=params)
        for s in schemes:
            errs[s].append(est[s].alpha_hat - params.alpha)
    out = {}
    for s in schemes:
        E = np.array(errs[s])
        sq = np.sum(E**2, axis=1)
        bias = E.mean(axis=0)
        out[s.value] = {
            "mse": float(sq.mean()),
            "bias_sq": float(bias @ bias),
            "trace_cov": float(np.trace(np.cov(E, rowvar=False, ddof=0))),
            "mc_se": float(sq.std(ddof=1) / np.sqrt(replications)),
        }
    return out


def delta_variance_additivity(
    params: ScmParams, n: int, m: int, replications: int = 2000, seed: int = 0
) -> dict[str, float]:
    """Empirical covariance traces of ``delta_hat``, ``alpha_int`` and ``alpha_obs``."""
    a_int, a_obs = [], []
    for r in range(replications):
        s_obs, s_int = np.random.SeedSequence(seed, spawn_key=(r,)).spawn(2)
        a_obs.append(fit_ols(sample_observational(params, n, s_obs)).coef)
        a_int.append(fit_ols(sample_interventional(params, m, s_int)).coef)
    a_int, a_obs = np.array(a_int), np.array(a_obs)

    def tr(A):
        return float(np.trace(np.cov(A, rowvar=False)))

    return {"trace_delta": tr(a_obs - a_int), "trace_int": tr(a_int), "trace_obs": tr(a_obs)}


def compare_centering(
    params: ScmParams,
    shift: dict,
    n: int,
    m: int,
    schemes,
    replications: int = 200,
    seed: int = 0,
    options: EstimateOptions = EstimateOptions(),
) -> dict[str, dict]:
    """Paired errors of the centered pipeline on shifted data vs the plain pipeline on zero-mean data.

    ``shift`` holds nonzero mean fields (``mu_nz``, ``mu_nx``, ``mu_ny``,
    ``intervention_mean``) applied to ``params``. Both pipelines see the same
    noise draws in each replication.
    """
    schemes = [Scheme(s) for s in schemes]
    shifted = params.replace(**shift)
    rows = {s: {"centered": [], "plain": [], "max_abs_intercept_delta": 0.0} for s in schemes}
    for r in range(replications):
        s_obs, s_int, s_cv = (int(x) for x in np.random.SeedSequence(seed, spawn_key=(r,)).generate_state(3, dtype=np.uint64))
        opts = replace(options, seed=s_cv)
        plain = estimate_effects(
            sample_observational(params, n, s_obs), sample_interventional(params, m, s_int),
            schemes, replace(opts, center=False), truth=params,
        )
        centered = estimate_effects(
            sample_observational(shifted, n, s_obs), sample_interventional(shifted, m, s_int),
            schemes, replace(opts, center=True), truth=shifted,
        )
        for s in schemes:
            rows[s]["plain"].append(float(np.sum((plain[s].alpha_hat - params.alpha) ** 2)))
            rows[s]["centered"].append(float(np.sum((centered[s].alpha_hat - params.alpha) ** 2)))
            rows[s]["max_abs_intercept_delta"] = max(
                rows[s]["max_abs_intercept_delta"], abs(float(centered[s].delta_hat[-1]))
            )
    out = {}
    for s in schemes:
        c, p_ = np.array(rows[s]["centered"]), np.array(rows[s]["plain"])
        diff = c - p_
        out[s.value] = {
            "mse_centered": float(c.mean()),
            "mse_plain": float(p_.mean()),
            # standard error of the difference of the two MSE estimates
            "mc_se": float(np.sqrt((c.var(ddof=1) + p_.var(ddof=1)) / replications)),
            # pairing cancels the shared noise and exposes the small cost of fitting an intercept
            "paired_se": float(diff.std(ddof=1) / np.sqrt(replications)),
            "max_abs_intercept_delta": rows[s]["max_abs_intercept_delta"],
        }
    return out

