"""Benchmark dynamical systems and the irregular subsampling scheme."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .embedding import TimeSeries
from .errors import DivergenceError, InputError, LengthError

HENON_DIVERGENCE = 1e6


class SystemKind(str, Enum):
    HENON = "henon"
    VANDERPOL = "vanderpol"
    LORENZ = "lorenz"


@dataclass(frozen=True)
class SystemSpec:
    kind: SystemKind
    params: dict
    initial_state: tuple
    base_step: float = 1.0
    micro_substeps: int = 1
    burn_in: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "kind", SystemKind(self.kind))
        object.__setattr__(self, "initial_state", tuple(float(v) for v in self.initial_state))
        if self.base_step <= 0:
            raise InputError("base_step must be > 0")
        if self.micro_substeps < 1:
            raise InputError("micro_substeps must be >= 1")
        if self.kind is SystemKind.VANDERPOL and self.params.get("eps", 0) <= 0:
            raise InputError("Van der Pol needs eps > 0")

    @property
    def continuous(self) -> bool:
        return self.kind is not SystemKind.HENON

    @property
    def dim(self) -> int:
        return len(self.initial_state)


@dataclass(frozen=True)
class SamplingScheme:
    alpha_max: int
    rng_seed: int = 0

    def __post_init__(self):
        if self.alpha_max < 1:
            raise InputError("alpha_max must be >= 1")


def henon_spec(a=1.4, b=0.3, x0=(0.0, 0.0), burn_in=1000) -> SystemSpec:
    return SystemSpec(SystemKind.HENON, {"a": a, "b": b}, x0, 1.0, 1, burn_in)


def vanderpol_spec(eps=0.01, x0=(0.0, 0.0), base_step=1e-3, micro_substeps=100, burn_in=1000) -> SystemSpec:
    return SystemSpec(SystemKind.VANDERPOL, {"eps": eps}, x0, base_step, micro_substeps, burn_in)


def lorenz_spec(sigma=10.0, rho=28.0, beta=8.0 / 3.0, x0=(1.0, 1.0, 1.0),
                base_step=1e-2, micro_substeps=10, burn_in=1000) -> SystemSpec:
    return SystemSpec(
        SystemKind.LORENZ, {"sigma": sigma, "rho": rho, "beta": beta}, x0, base_step, micro_substeps, burn_in
    )


def henon_orbit(a: float, b: float, x0, n: int) -> TimeSeries:
    """n iterates of the Henon map starting at x0, on the clock 0..n-1."""
    if n < 1:
        raise InputError("n must be >= 1")
    out = np.empty((n, 2))
    x, y = (float(v) for v in x0)
    for k in range(n):
        if abs(x) > HENON_DIVERGENCE or abs(y) > HENON_DIVERGENCE:
            raise DivergenceError(f"Henon orbit diverged at step {k}", step=k)
        out[k] = x, y
        x, y = 1.0 - a * x * x + y, b * x
    return TimeSeries(np.arange(n, dtype=float), out)


def vanderpol_field(eps: float):
    inv = 1.0 / eps

    def field(s):
        x, y = s
        return (inv * (y - 6.75 * x * x * (x + 1.0)), -0.5 - x)

    return field


def lorenz_field(sigma: float, rho: float, beta: float):
    def field(s):
        x, y, z = s
        return (sigma * (y - x), x * (rho - z) - y, x * y - beta * z)

    return field


def rk4_trajectory(field, x0, step: float, n_samples: int, substeps: int = 1) -> np.ndarray:
    """Classical RK4 with internal step ``step/substeps``, recording every ``step``.

    ``field`` maps a sequence of floats to a sequence of floats.  Plain float
    arithmetic is used on purpose: for 2-3 dimensional states it is several
    times faster than small numpy arrays.
    """
    h = step / substeps
    h2 = 0.5 * h
    h6 = h / 6.0
    x = [float(v) for v in x0]
    out = np.empty((n_samples, len(x)))
    for k in range(n_samples):
        out[k] = x
        for _ in range(substeps):
            k1 = field(x)
            k2 = field([a + h2 * b for a, b in zip(x, k1)])
            k3 = field([a + h2 * b for a, b in zip(x, k2)])
            k4 = field([a + h * b for a, b in zip(x, k3)])
            x = [a + h6 * (b + 2.0 * c + 2.0 * d + e) for a, b, c, d, e in zip(x, k1, k2, k3, k4)]
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"integration produced a non-finite state after sample {k}", step=k)
    return out


def vector_field(spec: SystemSpec):
    if spec.kind is SystemKind.VANDERPOL:
        return vanderpol_field(spec.params["eps"])
    if spec.kind is SystemKind.LORENZ:
        p = spec.params
        return lorenz_field(p["sigma"], p["rho"], p["beta"])
    raise InputError(f"{spec.kind.value} is not a continuous-time system")


def integrate(spec: SystemSpec, n_samples: int) -> TimeSeries:
    if not spec.continuous:
        raise InputError("integrate() needs a continuous-time system; use henon_orbit")
    if n_samples < 2:
        raise InputError("n_samples must be >= 2")
    states = rk4_trajectory(vector_field(spec), spec.initial_state, spec.base_step, n_samples,
                            spec.micro_substeps)
    return TimeSeries(np.arange(n_samples) * spec.base_step, states)


def generate(spec: SystemSpec, n_samples: int) -> TimeSeries:
    """Regularly spaced trajectory of either kind (Henon uses its step index as time)."""
    if spec.kind is SystemKind.HENON:
        p = spec.params
        return henon_orbit(p["a"], p["b"], spec.initial_state, n_samples)
    return integrate(spec, n_samples)


def draw_gaps(scheme: SamplingScheme, count: int) -> np.ndarray:
    """Multiplicities alpha_k, i.i.d. uniform on {1, ..., alpha_max}."""
    rng = np.random.default_rng(scheme.rng_seed)
    return rng.integers(1, scheme.alpha_max + 1, size=count)


def subsample_irregular(ts: TimeSeries, scheme: SamplingScheme, n_out: int | None = None) -> TimeSeries:
    """Keep samples separated by alpha_k source steps.

    With ``n_out=None`` as many samples as fit in ``ts`` are kept.
    """
    if len(ts) == 0:
        raise LengthError("empty source series")
    if n_out is None:
        # alpha_max >= every gap, so len(ts) draws always overshoot the source
        gaps = draw_gaps(scheme, len(ts))
        idx = np.concatenate([[0], np.cumsum(gaps)])
        idx = idx[idx < len(ts)]
    else:
        if n_out < 1:
            raise InputError("n_out must be >= 1")
        gaps = draw_gaps(scheme, n_out - 1)
        idx = np.concatenate([[0], np.cumsum(gaps)]).astype(int)
        if idx[-1] >= len(ts):
            raise LengthError(
                f"source of length {len(ts)} exhausted after "
                f"{int(np.searchsorted(idx, len(ts)))} of {n_out} samples"
            )
    return TimeSeries(ts.times[idx], ts.states[idx])


def source_length(scheme: SamplingScheme, n_out: int) -> int:
    """Number of regular samples guaranteed to cover ``n_out`` irregular ones."""
    return scheme.alpha_max * (n_out - 1) + 1


def irregular_series(spec: SystemSpec, scheme: SamplingScheme, n_out: int) -> TimeSeries:
    """Generate, drop ``spec.burn_in`` recorded samples, then subsample."""
    n_needed = spec.burn_in + source_length(scheme, n_out)
    full = generate(spec, n_needed)
    return subsample_irregular(full.slice(spec.burn_in), scheme, n_out)
