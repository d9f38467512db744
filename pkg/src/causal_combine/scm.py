"""Linear Gaussian structural equation model with a hidden confounder.

Observational regime::

    Z ~ N(mu_nz, sigma_nz)
    X = B Z + N_X,        N_X ~ N(mu_nx, sigma_nx)
    Y = Z'gamma + X'alpha + N_Y,   N_Y ~ N(mu_ny, var_ny)

Interventional regime replaces the treatment assignment by
``X ~ N(intervention_mean, intervention_cov)`` drawn independently of ``Z``.

Random numbers come from numpy's ``PCG64`` bit generator seeded through
``SeedSequence``; a given ``(params, size, seed)`` reproduces bit-identical
samples on the same numpy version.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, fields

import numpy as np

from .errors import DimensionMismatch
from .linmodel import Dataset, Regime, check_nonsingular, spd_solve

SCHEMA_VERSION = 1


def make_rng(seed) -> np.random.Generator:
    """``PCG64`` generator from an int, a ``SeedSequence`` or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(seed))


def _cov_factor(cov: np.ndarray) -> np.ndarray:
    # L with L L' = cov; eigen fallback handles semidefinite covariances
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        evals, evecs = np.linalg.eigh(cov)
        return evecs * np.sqrt(np.clip(evals, 0.0, None))


def _gaussian(rng: np.random.Generator, mean: np.ndarray, cov: np.ndarray, size: int) -> np.ndarray:
    L = _cov_factor(cov)
    return mean + rng.standard_normal((size, len(mean))) @ L.T


def _is_psd(a: np.ndarray, strict: bool) -> bool:
    if not np.allclose(a, a.T, atol=1e-10):
        return False
    evals = np.linalg.eigvalsh(a)
    return bool(evals[0] > 0) if strict else bool(evals[0] >= -1e-10 * max(1.0, evals[-1]))


@dataclass(frozen=True)
class ScmParams:
    """Parameters of the SEM in both regimes.

    Shapes: ``B`` (p, d), ``gamma`` (d,), ``alpha`` (p,), ``sigma_nz`` (d, d),
    ``sigma_nx`` (p, p), ``mu_nz`` (d,), ``mu_nx`` (p,),
    ``intervention_cov`` (p, p), ``intervention_mean`` (p,).
    """

    B: np.ndarray
    gamma: np.ndarray
    alpha: np.ndarray
    sigma_nz: np.ndarray
    sigma_nx: np.ndarray
    var_ny: float
    mu_nz: np.ndarray | None = None
    mu_nx: np.ndarray | None = None
    mu_ny: float = 0.0
    intervention_cov: np.ndarray | None = None
    intervention_mean: np.ndarray | None = None

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        p, d = B.shape
        conv = {
            "B": B,
            "gamma": np.asarray(self.gamma, dtype=float).reshape(-1),
            "alpha": np.asarray(self.alpha, dtype=float).reshape(-1),
            "sigma_nz": np.atleast_2d(np.asarray(self.sigma_nz, dtype=float)),
            "sigma_nx": np.atleast_2d(np.asarray(self.sigma_nx, dtype=float)),
            "var_ny": float(self.var_ny),
            "mu_nz": np.zeros(d) if self.mu_nz is None else np.asarray(self.mu_nz, dtype=float).reshape(-1),
            "mu_nx": np.zeros(p) if self.mu_nx is None else np.asarray(self.mu_nx, dtype=float).reshape(-1),
            "mu_ny": float(self.mu_ny),
            "intervention_mean": (
                np.zeros(p) if self.intervention_mean is None
                else np.asarray(self.intervention_mean, dtype=float).reshape(-1)
            ),
        }
        if self.intervention_cov is None:
            conv["intervention_cov"] = conv["sigma_nx"] + B @ conv["sigma_nz"] @ B.T
        else:
            conv["intervention_cov"] = np.atleast_2d(np.asarray(self.intervention_cov, dtype=float))
        for k, v in conv.items():
            object.__setattr__(self, k, v)
        self._validate()

    def _validate(self):
        p, d = self.p, self.d
        expected = {
            "gamma": (d,), "alpha": (p,), "sigma_nz": (d, d), "sigma_nx": (p, p),
            "mu_nz": (d,), "mu_nx": (p,), "intervention_cov": (p, p), "intervention_mean": (p,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise DimensionMismatch(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if not self.var_ny > 0:
            raise ValueError("var_ny must be positive")
        if not _is_psd(self.sigma_nz, strict=False):
            raise ValueError("sigma_nz must be symmetric positive semidefinite")
        if not _is_psd(self.sigma_nx, strict=True):
            raise ValueError("sigma_nx must be symmetric positive definite")
        if not _is_psd(self.intervention_cov, strict=True):
            raise ValueError("intervention_cov must be symmetric positive definite")

    @property
    def p(self) -> int:
        return self.B.shape[0]

    @property
    def d(self) -> int:
        return self.B.shape[1]

    def replace(self, **changes) -> ScmParams:
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return ScmParams(**kw)

    def to_dict(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.tolist() if isinstance(v, np.ndarray) else v
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> ScmParams:
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names - {"schema_version"}
        if unknown:
            raise ValueError(f"unknown ScmParams fields: {sorted(unknown)}")
        missing = {"B", "gamma", "alpha", "sigma_nz", "sigma_nx", "var_ny"} - set(doc)
        if missing:
            raise ValueError(f"missing ScmParams fields: {sorted(missing)}")
        return cls(**{k: v for k, v in doc.items() if k in names})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> ScmParams:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GroundTruth:
    delta: np.ndarray
    var_y_given_x_obs: float
    var_y_given_do: float
    cov_x_obs: np.ndarray


def ground_truth(params: ScmParams) -> GroundTruth:
    """Population quantities: confounding bias and the two conditional variances.

    ``var_y_given_x_obs`` follows from Gaussian conditioning of ``Z`` on ``X``.
    """
    B, S_z, g = params.B, params.sigma_nz, params.gamma
    cov_x = params.sigma_nx + B @ S_z @ B.T
    check_nonsingular(cov_x)
    cross = B @ S_z  # Cov(X, Z)
    delta = spd_solve(cov_x, cross @ g)
    cond_z = S_z - cross.T @ spd_solve(cov_x, cross)
    var_obs = params.var_ny + float(g @ cond_z @ g)
    var_do = params.var_ny + float(g @ S_z @ g)
    return GroundTruth(delta, var_obs, var_do, cov_x)


def sample_joint(params: ScmParams, size: int, seed, regime: Regime | str):
    """Draw ``(X, y, Z)`` including the hidden confounder, mainly for diagnostics."""
    regime = Regime(regime)
    if size < 1:
        raise ValueError(f"sample size must be at least 1, got {size}")
    rng = make_rng(seed)
    Z = _gaussian(rng, params.mu_nz, params.sigma_nz, size)
    if regime is Regime.OBSERVATIONAL:
        X = Z @ params.B.T + _gaussian(rng, params.mu_nx, params.sigma_nx, size)
    elif regime is Regime.INTERVENTIONAL:
        X = _gaussian(rng, params.intervention_mean, params.intervention_cov, size)
    else:
        raise ValueError(f"cannot sample regime {regime}")
    y = Z @ params.gamma + X @ params.alpha + params.mu_ny + np.sqrt(params.var_ny) * rng.standard_normal(size)
    return X, y, Z


def sample_observational(params: ScmParams, n: int, seed) -> Dataset:
    X, y, _ = sample_joint(params, n, seed, Regime.OBSERVATIONAL)
    return Dataset(X, y, Regime.OBSERVATIONAL)


def sample_interventional(params: ScmParams, m: int, seed) -> Dataset:
    X, y, _ = sample_joint(params, m, seed, Regime.INTERVENTIONAL)
    return Dataset(X, y, Regime.INTERVENTIONAL)


class Confounding(str, enum.Enum):
    SPREAD = "spread"
    SPARSE = "sparse"


TABLE1_P = 30
TABLE1_SPARSE_SUPPORT = 5


def table1_params(confounding: Confounding | str, gamma_scale: float, seed) -> ScmParams:
    """Random SEM of the benchmark setup: p=30, one confounder, unit variances.

    ``alpha ~ N(0, 9 I)``; the loading ``b`` is standard normal on all
    treatments (spread) or on the first five only (sparse); ``gamma`` equals
    ``gamma_scale``; the intervention covariance is the population covariance
    of the observational treatments.
    """
    confounding = Confounding(confounding)
    rng = make_rng(seed)
    p = TABLE1_P
    alpha = 3.0 * rng.standard_normal(p)
    b = rng.standard_normal(p)
    if confounding is Confounding.SPARSE:
        b[TABLE1_SPARSE_SUPPORT:] = 0.0
    B = b[:, None]
    return ScmParams(
        B=B,
        gamma=np.array([float(gamma_scale)]),
        alpha=alpha,
        sigma_nz=np.eye(1),
        sigma_nx=np.eye(p),
        var_ny=1.0,
        intervention_cov=np.eye(p) + B @ B.T,
    )
