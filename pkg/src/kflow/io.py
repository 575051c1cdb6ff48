"""File formats.

Datasets are CSV with header ``t,x1,...,xd``.  Experiment configuration is a
flat ``key = value`` text file; ``#`` starts a comment.  Floats are written
with 17 significant digits so they read back bit for bit.
"""
from __future__ import annotations

import json
import os
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from .embedding import TimeSeries
from .errors import InputError, IOFailure
from .kernels import KernelParams

PRESETS = ("henon", "vdp", "lorenz")


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".17g")


def atomic_write(path, text: str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        with os.fdopen(fd, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IOFailure(f"could not write {path}: {exc}") from exc


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"could not read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# datasets

def series_to_csv(ts: TimeSeries) -> str:
    header = ",".join(["t"] + [f"x{i + 1}" for i in range(ts.dim)])
    lines = [header]
    for t, row in zip(ts.times, ts.states):
        lines.append(",".join([fmt(t)] + [fmt(v) for v in row]))
    return "\n".join(lines) + "\n"


def write_series(path, ts: TimeSeries) -> None:
    atomic_write(path, series_to_csv(ts))


def read_series(path) -> TimeSeries:
    text = _read_text(path)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputError(f"{path}: empty dataset file")
    header = [h.strip() for h in lines[0].split(",")]
    if header[0] != "t" or len(header) < 2:
        raise InputError(f"{path}: header must be t,x1,...,xd")
    try:
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if rows.size == 0:
        raise InputError(f"{path}: no observations")
    if rows.shape[1] != len(header):
        raise InputError(f"{path}: rows do not match the header width")
    return TimeSeries(rows[:, 0], rows[:, 1:])


# ---------------------------------------------------------------------------
# forecasts

def forecast_to_csv(fc, test: TimeSeries) -> str:
    d = fc.predicted.shape[1]
    chunk_of = np.searchsorted(fc.chunk_boundaries, fc.indices, side="right") - 1
    header = ["index", "t", "chunk_start", "divergent"]
    header += [f"pred{i + 1}" for i in range(d)] + [f"true{i + 1}" for i in range(d)]
    lines = [",".join(header)]
    for k, idx in enumerate(fc.indices):
        row = [str(int(idx)), fmt(test.times[idx]), str(int(fc.chunk_boundaries[chunk_of[k]])),
               str(int(fc.divergent[k]))]
        row += [fmt(v) for v in fc.predicted[k]] + [fmt(v) for v in fc.actual[k]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_forecast(path, fc, test: TimeSeries) -> None:
    atomic_write(path, forecast_to_csv(fc, test))


def read_forecast(path) -> dict:
    """Columns of a forecast CSV: index, t, chunk_start, divergent, predicted, actual."""
    text = _read_text(path)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    if header[:4] != ["index", "t", "chunk_start", "divergent"]:
        raise InputError(f"{path}: not a forecast file")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
    d = (len(header) - 4) // 2
    return {
        "index": data[:, 0].astype(int),
        "t": data[:, 1],
        "chunk_start": data[:, 2].astype(int),
        "divergent": data[:, 3].astype(bool),
        "predicted": data[:, 4:4 + d],
        "actual": data[:, 4 + d:4 + 2 * d],
    }


# ---------------------------------------------------------------------------
# kernel parameters

def params_to_json(p: KernelParams) -> str:
    return json.dumps({"gamma": list(p.gamma), "sigma": list(p.sigma)}, indent=2) + "\n"


def read_params(path) -> KernelParams:
    try:
        raw = json.loads(_read_text(path))
        return KernelParams(tuple(raw["gamma"]), tuple(raw["sigma"]))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: not a kernel parameter file ({exc})") from exc


# ---------------------------------------------------------------------------
# experiment configuration

def parse_key_values(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{source}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.lower()] = value
    return out


def _bool(v: str) -> bool:
    v = v.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise InputError(f"not a boolean: {v!r}")


def _floats(v: str) -> tuple:
    return tuple(float(x) for x in v.split(",") if x.strip())


_SYSTEM_PARAMS = {
    "henon": {"a": 1.4, "b": 0.3},
    "vanderpol": {"eps": 0.01},
    "lorenz": {"sigma_l": 10.0, "rho_l": 28.0, "beta_l": 8.0 / 3.0},
}
_SYSTEM_ALIASES = {"vdp": "vanderpol", "van_der_pol": "vanderpol"}
_PARAM_RENAME = {"sigma_l": "sigma", "rho_l": "rho", "beta_l": "beta"}

KNOWN_KEYS = {
    "name", "system", "initial_state", "base_step", "micro_substeps", "burn_in", "alpha_max",
    "sampling_seed", "n_train", "n_test", "delay", "horizon", "learning_rate", "batch_size",
    "iterations", "nugget", "smoothing_window", "clip_norm", "max_skip_fraction", "approaches",
    "repetitions", "seed", "normalize", "solver", "output_dir",
} | {k for params in _SYSTEM_PARAMS.values() for k in params}


def config_from_dict(values: dict):
    """Build an ExperimentConfig from string values (missing keys take defaults)."""
    from .experiment import ExperimentConfig
    from .kernel_flows import KFConfig
    from .systems import SamplingScheme, SystemSpec

    unknown = set(values) - KNOWN_KEYS
    if unknown:
        raise InputError(f"unknown configuration keys: {sorted(unknown)}")
    v = dict(values)
    try:
        kind = v.get("system", "henon").lower()
        kind = _SYSTEM_ALIASES.get(kind, kind)
        if kind not in _SYSTEM_PARAMS:
            raise InputError(f"unknown system {kind!r}")
        params = {
            _PARAM_RENAME.get(k, k): float(v.get(k, default))
            for k, default in _SYSTEM_PARAMS[kind].items()
        }
        default_x0 = "1,1,1" if kind == "lorenz" else "0,0"
        default_step = {"henon": "1", "vanderpol": "0.001", "lorenz": "0.01"}[kind]
        default_sub = {"henon": "1", "vanderpol": "100", "lorenz": "10"}[kind]
        system = SystemSpec(
            kind,
            params,
            _floats(v.get("initial_state", default_x0)),
            float(v.get("base_step", default_step)),
            int(v.get("micro_substeps", default_sub)),
            int(v.get("burn_in", "1000")),
        )
        sampling = SamplingScheme(int(v.get("alpha_max", "1")), int(v.get("sampling_seed", "0")))
        kf = KFConfig(
            batch_size=int(v.get("batch_size", "100")),
            learning_rate=float(v.get("learning_rate", "0.1")),
            iterations=int(v.get("iterations", "1000")),
            nugget=float(v.get("nugget", "1e-6")),
            smoothing_window=int(v.get("smoothing_window", "50")),
            clip_norm=float(v.get("clip_norm", "1000")),
            max_skip_fraction=float(v.get("max_skip_fraction", "0.2")),
        )
        default_approaches = "A,B,D,E" if kind == "henon" else "A,B,C,D,E"
        return ExperimentConfig(
            system=system,
            sampling=sampling,
            n_train=int(v.get("n_train", "600")),
            n_test=int(v.get("n_test", "400")),
            kf=kf,
            horizon=int(v.get("horizon", "5")),
            delay=int(v.get("delay", "1")),
            approaches=tuple(a for a in v.get("approaches", default_approaches).split(",") if a.strip()),
            repetitions=int(v.get("repetitions", "5")),
            seed=int(v.get("seed", "0")),
            normalize=_bool(v.get("normalize", "false")),
            solver=v.get("solver", "auto"),
            output_dir=v.get("output_dir") or None,
            name=v.get("name", kind),
        )
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad configuration value: {exc}") from exc


def load_config(path, overrides: dict | None = None):
    values = parse_key_values(_read_text(path), str(path))
    values.update({k.lower(): str(val) for k, val in (overrides or {}).items()})
    return config_from_dict(values)


def preset_text(name: str) -> str:
    name = {"vanderpol": "vdp"}.get(name, name)
    if name not in PRESETS:
        raise InputError(f"unknown preset {name!r}; choose from {PRESETS}")
    return resources.files("kflow.presets").joinpath(f"{name}.cfg").read_text(encoding="utf-8")


def load_preset(name: str, overrides: dict | None = None):
    values = parse_key_values(preset_text(name), f"preset {name}")
    values.update({k.lower(): str(val) for k, val in (overrides or {}).items()})
    return config_from_dict(values)


def dump_config(cfg) -> str:
    """Inverse of :func:`config_from_dict` (every key written explicitly)."""
    s = cfg.system
    lines = [
        f"name = {cfg.name}",
        f"system = {s.kind.value}",
    ]
    inverse = {v: k for k, v in _PARAM_RENAME.items()}
    for k, val in s.params.items():
        lines.append(f"{inverse.get(k, k)} = {fmt(val)}")
    lines += [
        f"initial_state = {','.join(fmt(x) for x in s.initial_state)}",
        f"base_step = {fmt(s.base_step)}",
        f"micro_substeps = {s.micro_substeps}",
        f"burn_in = {s.burn_in}",
        f"alpha_max = {cfg.sampling.alpha_max}",
        f"sampling_seed = {cfg.sampling.rng_seed}",
        f"n_train = {cfg.n_train}",
        f"n_test = {cfg.n_test}",
        f"delay = {cfg.delay}",
        f"horizon = {cfg.horizon}",
        f"learning_rate = {fmt(cfg.kf.learning_rate)}",
        f"batch_size = {cfg.kf.batch_size}",
        f"iterations = {cfg.kf.iterations}",
        f"nugget = {fmt(cfg.kf.nugget)}",
        f"smoothing_window = {cfg.kf.smoothing_window}",
        f"clip_norm = {fmt(cfg.kf.clip_norm)}",
        f"max_skip_fraction = {fmt(cfg.kf.max_skip_fraction)}",
        f"approaches = {','.join(cfg.approaches)}",
        f"repetitions = {cfg.repetitions}",
        f"seed = {cfg.seed}",
        f"normalize = {str(cfg.normalize).lower()}",
        f"solver = {cfg.solver}",
    ]
    if cfg.output_dir:
        lines.append(f"output_dir = {cfg.output_dir}")
    return "\n".join(lines) + "\n"
