from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, MetricError


@dataclass(frozen=True)
class ScoreReport:
    mse: float
    r2: float
    n_scored: int
    n_divergent: int = 0


def score(predicted, actual, n_divergent: int = 0) -> ScoreReport:
    """MSE and R^2 with full-state squared 2-norms.

    ``mse = mean_i |x_i - xhat_i|^2`` and
    ``r2 = 1 - sum_i |x_i - xhat_i|^2 / sum_i |x_i - xbar|^2`` where ``xbar`` is
    the mean of the scored rows of ``actual``.
    """
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if predicted.ndim == 1:
        predicted = predicted[:, None]
    if actual.ndim == 1:
        actual = actual[:, None]
    if predicted.shape != actual.shape:
        raise InputError(f"shapes differ: {predicted.shape} vs {actual.shape}")
    if actual.shape[0] < 2:
        raise InputError("need at least two scored rows")
    residual = np.sum((actual - predicted) ** 2)
    spread = np.sum((actual - actual.mean(axis=0)) ** 2)
    if spread == 0.0:
        raise MetricError("actual values have zero variance; R^2 undefined")
    n = actual.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        mse = residual / n
        r2 = 1.0 - residual / spread
    if np.isnan(mse):
        mse, r2 = np.inf, -np.inf
    return ScoreReport(float(mse), float(r2), n, int(n_divergent))
