"""Chunked multi-step forecasting on a test series.

The test series is cut into consecutive chunks of ``horizon + delay`` samples.
Each chunk is seeded with its first ``delay`` true states; every later state
is predicted from the model's own previous outputs.  Observation times are
treated as known, so the irregular and Euler variants read the true gaps.
All chunks advance together, one step per model evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import TimeSeries, Variant, input_dim, make_inputs
from .errors import InputError, NumericError
from .interpolant import FittedModel, predict_many

# beyond this magnitude a forecast is treated as divergent; keeps squared
# distances inside the kernel finite
DIVERGENCE_LIMIT = 1e100


@dataclass(frozen=True)
class ForecastConfig:
    horizon: int
    delay: int = 1
    variant: Variant = Variant.IRREGULAR

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant is Variant.EULER:
            object.__setattr__(self, "delay", 1)
        if self.horizon < 1 or self.delay < 1:
            raise InputError("horizon and delay must be >= 1")


@dataclass(frozen=True)
class ForecastResult:
    predicted: np.ndarray
    actual: np.ndarray
    indices: np.ndarray
    chunk_boundaries: np.ndarray
    divergent: np.ndarray

    @property
    def n_divergent(self) -> int:
        return int(self.divergent.sum())


def chunk_layout(n: int, horizon: int, delay: int):
    """(start, length) for every chunk; a short tail is kept if it has > delay samples."""
    length = horizon + delay
    chunks = [(s, length) for s in range(0, n - length + 1, length)]
    tail_start = len(chunks) * length
    if n - tail_start >= delay + 1:
        chunks.append((tail_start, n - tail_start))
    return chunks


def _bad(rows: np.ndarray) -> np.ndarray:
    return ~np.all(np.isfinite(rows), axis=1) | np.any(np.abs(rows) > DIVERGENCE_LIMIT, axis=1)


def _safe_predict(m: FittedModel, inputs: np.ndarray) -> np.ndarray:
    try:
        return predict_many(m, inputs)
    except NumericError:
        out = np.full((inputs.shape[0], m.output_dim), np.nan)
        for i, row in enumerate(inputs):
            try:
                out[i] = predict_many(m, row[None, :])[0]
            except NumericError:
                pass
        return out


def forecast_chunked(m: FittedModel, test: TimeSeries, cfg: ForecastConfig) -> ForecastResult:
    variant = cfg.variant
    tau = cfg.delay
    d = test.dim
    if m.variant is not None and Variant(m.variant) is not variant:
        raise InputError(f"model was fitted for the {Variant(m.variant).value} variant, "
                         f"config asks for {variant.value}")
    if m.input_dim != input_dim(variant, tau, d):
        raise InputError(f"model input dimension {m.input_dim} does not match "
                         f"{variant.value} embedding with delay {tau} and state dim {d}")
    n = len(test)
    if n < tau + 1:
        raise InputError(f"test series of length {n} is shorter than delay + 1")

    chunks = chunk_layout(n, cfg.horizon, tau)
    starts = np.array([s for s, _ in chunks], dtype=int)
    steps = np.array([length - tau for _, length in chunks], dtype=int)
    n_chunks = len(chunks)
    times = test.times
    gaps = test.gaps

    # rolling windows of the latest tau states for every chunk: (C, tau, d)
    seed_idx = starts[:, None] + np.arange(tau)[None, :]
    window = test.states[seed_idx].copy()
    preds = np.full((n_chunks, int(steps.max()), d), np.nan)
    diverged = np.zeros(n_chunks, dtype=bool)
    divergent_rows = np.zeros((n_chunks, int(steps.max())), dtype=bool)
    last_good = window[:, -1, :].copy()

    for j in range(int(steps.max())):
        active = (steps > j) & ~diverged
        target = starts + tau + j
        if np.any(active):
            act = np.flatnonzero(active)
            if variant is Variant.EULER:
                gap = (times[target[act]] - times[target[act] - 1])[:, None]
                x_prev = window[act, -1, :]
                step = x_prev + gap * _safe_predict(m, x_prev)
            else:
                win_gaps = None
                if variant is Variant.IRREGULAR:
                    gidx = target[act, None] - tau + np.arange(tau)[None, :]
                    win_gaps = gaps[gidx]
                step = _safe_predict(m, make_inputs(variant, window[act], win_gaps))
            bad = _bad(step)
            if np.any(bad):
                diverged[act[bad]] = True
            good = act[~bad]
            window[good] = np.concatenate([window[good, 1:, :], step[~bad][:, None, :]], axis=1)
            last_good[good] = step[~bad]
            preds[good, j] = step[~bad]
        # divergent chunks are frozen at their last finite value for the rest of the chunk
        filled = (steps > j) & diverged
        preds[filled, j] = last_good[filled]
        divergent_rows[filled, j] = True

    rows, cols = np.nonzero(np.arange(preds.shape[1])[None, :] < steps[:, None])
    indices = starts[rows] + tau + cols
    return ForecastResult(
        predicted=preds[rows, cols],
        actual=test.states[indices],
        indices=indices,
        chunk_boundaries=starts,
        divergent=divergent_rows[rows, cols],
    )
