"""Five-approach comparison: configuration, runner, report files.

Approaches
----------
A  irregular (time-aware) embedding, kernel learned with Kernel Flows
B  regular delay embedding, kernel learned
C  Euler embedding, kernel learned (continuous systems only)
D  irregular embedding, random kernel
E  regular embedding, random kernel

Seeding: repetition ``r`` draws its initial kernel parameters from
``seed + 1000*(r+1)``; the SGD minibatch stream of approach ``i`` (A=0..E=4) in
that repetition uses ``seed + 1000*(r+1) + 1 + i``.  Every approach of one
repetition therefore starts from the same parameters, and no approach's
results depend on which other approaches are enabled.
"""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import io as kio
from .embedding import TimeSeries, Variant, embed
from .errors import InputError, KFlowError
from .forecaster import ForecastConfig, ForecastResult, forecast_chunked
from .interpolant import fit_dataset
from .kernel_flows import KFConfig, TrainTrace, train
from .kernels import KernelParams
from .metrics import ScoreReport, score
from .systems import SamplingScheme, SystemKind, SystemSpec, irregular_series

log = logging.getLogger(__name__)

APPROACHES = {
    "A": (Variant.IRREGULAR, True),
    "B": (Variant.REGULAR, True),
    "C": (Variant.EULER, True),
    "D": (Variant.IRREGULAR, False),
    "E": (Variant.REGULAR, False),
}
APPROACH_ORDER = tuple(APPROACHES)
SEED_STRIDE = 1000


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemSpec
    sampling: SamplingScheme
    n_train: int
    n_test: int
    kf: KFConfig
    horizon: int
    delay: int = 1
    approaches: tuple = APPROACH_ORDER
    repetitions: int = 5
    seed: int = 0
    normalize: bool = False
    solver: str = "auto"
    output_dir: str | None = None
    name: str = "experiment"

    def __post_init__(self):
        approaches = tuple(a.strip().upper() for a in self.approaches)
        unknown = [a for a in approaches if a not in APPROACHES]
        if unknown:
            raise InputError(f"unknown approaches {unknown}; choose from {list(APPROACHES)}")
        if self.system.kind is SystemKind.HENON and "C" in approaches:
            raise InputError("approach C (Euler) is not applicable to the Henon map")
        if self.repetitions < 1:
            raise InputError("repetitions must be >= 1")
        if self.n_train < 2 or self.n_test < 2:
            raise InputError("n_train and n_test must be >= 2")
        if self.horizon < 1 or self.delay < 1:
            raise InputError("horizon and delay must be >= 1")
        # keep approaches in canonical order so reports do not depend on spelling
        object.__setattr__(self, "approaches", tuple(a for a in APPROACH_ORDER if a in approaches))

    def forecast_config(self, approach: str) -> ForecastConfig:
        variant, _ = APPROACHES[approach]
        return ForecastConfig(self.horizon, self.delay, variant)

    def init_seed(self, rep: int) -> int:
        return self.seed + SEED_STRIDE * (rep + 1)

    def kf_seed(self, rep: int, approach: str) -> int:
        return self.init_seed(rep) + 1 + APPROACH_ORDER.index(approach)


@dataclass
class RunResult:
    approach: str
    repetition: int
    score: ScoreReport | None
    init_params: KernelParams
    params: KernelParams | None = None
    trace: TrainTrace | None = None
    forecast: ForecastResult | None = None
    error: str | None = None
    positive_definite: bool | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def mse(self) -> float:
        return self.score.mse if self.score is not None else math.inf

    @property
    def r2(self) -> float:
        return self.score.r2 if self.score is not None else -math.inf


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    runs: list = field(default_factory=list)
    train: TimeSeries | None = None
    test: TimeSeries | None = None

    def runs_for(self, approach: str) -> list:
        return [r for r in self.runs if r.approach == approach]

    def aggregate(self, approach: str) -> dict:
        runs = self.runs_for(approach)
        mse = np.array([r.mse for r in runs], dtype=float)
        r2 = np.array([r.r2 for r in runs], dtype=float)
        with np.errstate(invalid="ignore", over="ignore"):
            return {
                "approach": approach,
                "n_runs": len(runs),
                "n_failed": sum(not r.ok for r in runs),
                "mse_mean": float(np.mean(mse)),
                "mse_std": float(np.std(mse)),
                "mse_median": float(np.median(mse)),
                "r2_mean": float(np.mean(r2)),
                "r2_std": float(np.std(r2)),
                "r2_median": float(np.median(r2)),
            }

    def aggregates(self) -> list:
        return [self.aggregate(a) for a in self.config.approaches]


def split_series(ts: TimeSeries, n_train: int, n_test: int):
    if len(ts) < n_train + n_test:
        raise InputError(f"series has {len(ts)} samples, need {n_train + n_test}")
    return ts.slice(0, n_train), ts.slice(n_train, n_train + n_test)


def make_data(cfg: ExperimentConfig):
    """Generate, burn in, subsample and split."""
    ts = irregular_series(cfg.system, cfg.sampling, cfg.n_train + cfg.n_test)
    return split_series(ts, cfg.n_train, cfg.n_test)


def initial_params(cfg: ExperimentConfig, rep: int) -> KernelParams:
    return KernelParams.random(np.random.default_rng(cfg.init_seed(rep)))


def learn_params(cfg: ExperimentConfig, approach: str, train_ts: TimeSeries, init: KernelParams,
                 rep: int = 0, sink=None):
    """Embed the training series for ``approach`` and run Kernel Flows if it learns."""
    variant, learns = APPROACHES[approach]
    data = embed(train_ts, variant, cfg.delay, normalize=cfg.normalize)
    if not learns:
        return data, init, None
    kf_cfg = replace(cfg.kf, rng_seed=cfg.kf_seed(rep, approach), solver=cfg.solver)
    trace = train(data, kf_cfg, init, sink=sink)
    return data, trace.best_params, trace


def run_single(cfg: ExperimentConfig, approach: str, rep: int, train_ts: TimeSeries,
               test_ts: TimeSeries, sink=None) -> RunResult:
    init = initial_params(cfg, rep)
    result = RunResult(approach, rep, None, init)
    try:
        data, params, trace = learn_params(cfg, approach, train_ts, init, rep, sink)
        result.params, result.trace = params, trace
        model = fit_dataset(params, data, cfg.kf.nugget, solver=cfg.solver)
        result.positive_definite = model.positive_definite
        fc = forecast_chunked(model, test_ts, cfg.forecast_config(approach))
        result.forecast = fc
        result.score = score(fc.predicted, fc.actual, fc.n_divergent)
    except KFlowError as exc:
        result.error = f"{type(exc).__name__}: {exc}"
        log.warning("approach %s repetition %d failed: %s", approach, rep, result.error)
    return result


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentReport:
    """Run every enabled approach for every repetition; write outputs if configured."""
    train_ts, test_ts = make_data(cfg)
    report = ExperimentReport(cfg, [], train_ts, test_ts)
    traces = {}
    for rep in range(cfg.repetitions):
        for approach in cfg.approaches:
            sink = io.StringIO()
            result = run_single(cfg, approach, rep, train_ts, test_ts, sink)
            if sink.getvalue():
                # failed trainings keep their partial trace for diagnosis
                traces[(approach, rep)] = sink.getvalue()
            report.runs.append(result)
            log.info("%s rep %d: %s", approach, rep,
                     result.error or f"mse={result.mse:.4g} r2={result.r2:.4f}")
    if write and cfg.output_dir:
        write_report(report, cfg.output_dir, traces)
    return report


# ---------------------------------------------------------------------------
# tables

def _fmt_pm(mean, std):
    return f"{mean:.3f} ± {std:.3f}"


def emit_table(report: ExperimentReport) -> str:
    """Aligned text table of mean ± std per approach.

    Means with MSE above one print as ``>>1`` and negative R^2 as ``<<0``.
    """
    header = ("Method", "MSE", "R2", "runs")
    rows = []
    for agg in report.aggregates():
        mse = ">>1" if not agg["mse_mean"] <= 1.0 else _fmt_pm(agg["mse_mean"], agg["mse_std"])
        r2 = "<<0" if not agg["r2_mean"] >= 0.0 else _fmt_pm(agg["r2_mean"], agg["r2_std"])
        runs = f"{agg['n_runs'] - agg['n_failed']}/{agg['n_runs']}"
        rows.append((agg["approach"], mse, r2, runs))
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


SUMMARY_FIELDS = ("approach", "n_runs", "n_failed", "mse_mean", "mse_std", "mse_median",
                  "r2_mean", "r2_std", "r2_median")

RUN_FIELDS = ("approach", "repetition", "status", "mse", "r2", "n_scored", "n_divergent",
              "init_seed", "kf_seed", "iterations", "skipped", "best_iteration",
              "positive_definite", "theta")


def emit_table_csv(report: ExperimentReport) -> str:
    lines = [",".join(SUMMARY_FIELDS)]
    for agg in report.aggregates():
        lines.append(",".join([agg["approach"]] + [kio.fmt(agg[k]) for k in SUMMARY_FIELDS[1:]]))
    return "\n".join(lines) + "\n"


def runs_csv(report: ExperimentReport) -> str:
    cfg = report.config
    lines = [",".join(RUN_FIELDS)]
    for r in report.runs:
        learns = APPROACHES[r.approach][1]
        s = r.score
        theta = r.params.as_vector() if r.params is not None else r.init_params.as_vector()
        status = "ok" if r.ok else r.error.split(":")[0]
        row = [
            r.approach,
            str(r.repetition),
            status,
            kio.fmt(r.mse),
            kio.fmt(r.r2),
            str(s.n_scored) if s else "0",
            str(s.n_divergent) if s else "0",
            str(cfg.init_seed(r.repetition)),
            str(cfg.kf_seed(r.repetition, r.approach)) if learns else "",
            str(cfg.kf.iterations) if learns else "0",
            str(r.trace.n_skipped) if r.trace else "",
            str(r.trace.best_iteration) if r.trace and r.trace.best_iteration is not None else "",
            "" if r.positive_definite is None else str(int(r.positive_definite)),
            ";".join(kio.fmt(v) for v in theta),
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_report(report: ExperimentReport, output_dir, traces=None) -> Path:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = report.config
    kio.atomic_write(out / "config.cfg", kio.dump_config(cfg))
    kio.atomic_write(out / "runs.csv", runs_csv(report))
    kio.atomic_write(out / "summary.csv", emit_table_csv(report))
    kio.atomic_write(out / "table.txt", emit_table(report))
    if report.train is not None:
        kio.write_series(out / "train.csv", report.train)
        kio.write_series(out / "test.csv", report.test)
    pred_dir = out / "predictions"
    pred_dir.mkdir(exist_ok=True)
    for r in report.runs:
        if r.forecast is not None:
            kio.write_forecast(pred_dir / f"{r.approach}_rep{r.repetition}.csv", r.forecast, report.test)
    if traces:
        trace_dir = out / "traces"
        trace_dir.mkdir(exist_ok=True)
        for (approach, rep), text in sorted(traces.items()):
            kio.atomic_write(trace_dir / f"{approach}_rep{rep}.csv", text)
    return out
