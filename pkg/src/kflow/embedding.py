"""Time series containers and the three regression embeddings.

``regular``
    X_k = (x_k, ..., x_{k+tau-1}),  Y_k = x_{k+tau}
``irregular``
    X_k = (x_k, D_k, ..., x_{k+tau-1}, D_{k+tau-1}),  Y_k = x_{k+tau},
    where D_k = t_{k+1} - t_k.  The last gap is the one leading to the target.
``euler``
    X_k = x_k,  Y_k = (x_{k+1} - x_k) / D_k, so the learned map is the vector
    field and a step is x + D * f(x).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InputError


class Variant(str, Enum):
    REGULAR = "regular"
    IRREGULAR = "irregular"
    EULER = "euler"


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if states.ndim != 2 or states.shape[0] != times.size:
            raise InputError(
                f"times ({times.size}) and states {states.shape} do not pair up"
            )
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise InputError("observation times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def __len__(self):
        return self.times.size

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.times)

    def slice(self, start, stop=None) -> "TimeSeries":
        return TimeSeries(self.times[start:stop], self.states[start:stop])


@dataclass(frozen=True)
class EmbeddedDataset:
    variant: Variant
    delay: int
    inputs: np.ndarray
    targets: np.ndarray
    input_shift: np.ndarray | None = field(default=None, repr=False)
    input_scale: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]


def input_dim(variant: Variant, delay: int, state_dim: int) -> int:
    variant = Variant(variant)
    if variant is Variant.REGULAR:
        return delay * state_dim
    if variant is Variant.IRREGULAR:
        return delay * (state_dim + 1)
    return state_dim


def _check_length(ts: TimeSeries, delay: int):
    if not isinstance(delay, (int, np.integer)) or delay < 1:
        raise InputError(f"delay must be a positive integer, got {delay!r}")
    if len(ts) < delay + 1:
        raise InputError(f"series of length {len(ts)} is too short for delay {delay}")


def make_inputs(variant: Variant, windows: np.ndarray, gaps: np.ndarray | None = None) -> np.ndarray:
    """Regression inputs from state windows.

    ``windows`` has shape (..., tau, d); ``gaps`` has shape (..., tau) and holds
    the gap following each state of the window (irregular variant only).
    """
    variant = Variant(variant)
    windows = np.asarray(windows, dtype=float)
    lead = windows.shape[:-2]
    if variant is Variant.IRREGULAR:
        if gaps is None:
            raise InputError("the irregular embedding needs time gaps")
        interleaved = np.concatenate([windows, np.asarray(gaps, dtype=float)[..., None]], axis=-1)
        return interleaved.reshape(lead + (-1,))
    return windows.reshape(lead + (-1,))


def _windows(states: np.ndarray, delay: int, count: int) -> np.ndarray:
    idx = np.arange(count)[:, None] + np.arange(delay)[None, :]
    return states[idx]


def _normalized(data: EmbeddedDataset) -> EmbeddedDataset:
    shift = data.inputs.mean(axis=0)
    scale = data.inputs.std(axis=0)
    scale[scale == 0.0] = 1.0
    return EmbeddedDataset(
        data.variant, data.delay, (data.inputs - shift) / scale, data.targets, shift, scale
    )


def embed_regular(ts: TimeSeries, delay: int, normalize: bool = False) -> EmbeddedDataset:
    _check_length(ts, delay)
    X = make_inputs(Variant.REGULAR, _windows(ts.states, delay, len(ts) - delay))
    data = EmbeddedDataset(Variant.REGULAR, delay, X, ts.states[delay:].copy())
    return _normalized(data) if normalize else data


def embed_irregular(ts: TimeSeries, delay: int, normalize: bool = False) -> EmbeddedDataset:
    _check_length(ts, delay)
    gaps = ts.gaps
    windows = _windows(ts.states, delay, len(ts) - delay)
    gap_windows = _windows(gaps, delay, len(ts) - delay)
    X = make_inputs(Variant.IRREGULAR, windows, gap_windows)
    data = EmbeddedDataset(Variant.IRREGULAR, delay, X, ts.states[delay:].copy())
    return _normalized(data) if normalize else data


def embed_euler(ts: TimeSeries, normalize: bool = False) -> EmbeddedDataset:
    _check_length(ts, 1)
    gaps = ts.gaps
    if np.any(gaps <= 0):
        raise InputError("euler embedding needs strictly positive time gaps")
    slopes = np.diff(ts.states, axis=0) / gaps[:, None]
    data = EmbeddedDataset(Variant.EULER, 1, ts.states[:-1].copy(), slopes)
    return _normalized(data) if normalize else data


def embed(ts: TimeSeries, variant: Variant, delay: int = 1, normalize: bool = False) -> EmbeddedDataset:
    variant = Variant(variant)
    if variant is Variant.REGULAR:
        return embed_regular(ts, delay, normalize)
    if variant is Variant.IRREGULAR:
        return embed_irregular(ts, delay, normalize)
    return embed_euler(ts, normalize)
