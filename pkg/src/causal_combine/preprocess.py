"""Handling of non-zero-mean data.

Each regime is centered by its own column means (no scaling) and a constant
column is appended. The constant is the last coordinate; downstream bias
estimates must keep that coordinate at exactly zero, because the intercept
carries no confounding bias once both regimes are centered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InsufficientData
from .linmodel import Dataset


@dataclass(frozen=True)
class PreprocessedPair:
    obs: Dataset
    int: Dataset
    obs_mean: np.ndarray
    int_mean: np.ndarray
    augmented: bool = True

    @property
    def p(self) -> int:
        """Number of treatments, excluding the intercept column."""
        return self.obs_mean.shape[0]


def _center(data: Dataset, augment: bool) -> tuple[Dataset, np.ndarray]:
    mean = data.X.mean(axis=0)
    X = data.X - mean
    if augment:
        X = np.hstack([X, np.ones((data.rows, 1))])
    return Dataset(X, data.y, data.regime), mean


def center_and_augment(obs: Dataset, int: Dataset, augment: bool = True) -> PreprocessedPair:
    if obs.rows == 0 or int.rows == 0:
        raise InsufficientData("both datasets must be nonempty")
    if obs.p != int.p:
        raise DimensionMismatch(f"observational data has p={obs.p}, interventional p={int.p}")
    obs_c, obs_mean = _center(obs, augment)
    int_c, int_mean = _center(int, augment)
    return PreprocessedPair(obs_c, int_c, obs_mean, int_mean, augment)
