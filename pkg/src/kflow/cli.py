"""Command line front end.

Every verb reads an experiment configuration from ``--preset`` or
``--config`` (the henon preset when neither is given) and applies
``--set key=value`` overrides on top.  Exit status: 0 on success, 2 for bad
input or configuration, 3 for numerical failures, 4 for file I/O errors.
The ``KFLOW_LOG`` environment variable sets the log level (e.g. ``INFO``).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from io import StringIO
from pathlib import Path

import numpy as np

from . import io as kio
from .embedding import Variant, embed
from .errors import InputError, KFlowError
from .experiment import APPROACHES, emit_table, initial_params, make_data, run_experiment
from .forecaster import ForecastConfig, forecast_chunked
from .interpolant import fit_dataset
from .kernel_flows import train
from .metrics import score

log = logging.getLogger("kflow")


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise InputError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip().lower()] = value.strip()
    return out


def _config(args):
    overrides = _overrides(args.set)
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if getattr(args, "output_dir", None):
        overrides["output_dir"] = str(args.output_dir)
    if args.config:
        return kio.load_config(args.config, overrides)
    return kio.load_preset(args.preset or "henon", overrides)


def _variant(args, cfg):
    if args.approach:
        approach = args.approach.upper()
        if approach not in APPROACHES:
            raise InputError(f"unknown approach {args.approach!r}")
        return APPROACHES[approach][0]
    return Variant(args.variant)


def cmd_generate(args) -> int:
    cfg = _config(args)
    train_ts, test_ts = make_data(cfg)
    out = Path(args.output_dir or ".")
    kio.write_series(out / "train.csv", train_ts)
    kio.write_series(out / "test.csv", test_ts)
    print(f"wrote {out / 'train.csv'} ({len(train_ts)} samples) and "
          f"{out / 'test.csv'} ({len(test_ts)} samples)")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    variant = _variant(args, cfg)
    delay = 1 if variant is Variant.EULER else cfg.delay
    data = embed(kio.read_series(args.train), variant, delay, normalize=cfg.normalize)
    init = initial_params(cfg, args.repetition)
    approach = (args.approach or "A").upper()
    kf_cfg = replace(cfg.kf, rng_seed=cfg.kf_seed(args.repetition, approach), solver=cfg.solver)
    sink = StringIO()
    trace = train(data, kf_cfg, init, sink=sink)
    kio.atomic_write(args.params, kio.params_to_json(trace.best_params))
    if args.trace:
        kio.atomic_write(args.trace, sink.getvalue())
    print(f"best iteration {trace.best_iteration}, {trace.n_skipped} skipped; wrote {args.params}")
    return 0


def cmd_forecast(args) -> int:
    cfg = _config(args)
    variant = _variant(args, cfg)
    params = kio.read_params(args.params) if args.params else initial_params(cfg, args.repetition)
    train_ts = kio.read_series(args.train)
    test_ts = kio.read_series(args.test)
    fcfg = ForecastConfig(cfg.horizon, cfg.delay, variant)
    data = embed(train_ts, variant, fcfg.delay, normalize=cfg.normalize)
    model = fit_dataset(params, data, cfg.kf.nugget, solver=cfg.solver)
    fc = forecast_chunked(model, test_ts, fcfg)
    kio.write_forecast(args.output, fc, test_ts)
    print(f"wrote {args.output} ({fc.predicted.shape[0]} predictions, {fc.n_divergent} divergent)")
    return 0


def cmd_evaluate(args) -> int:
    fc = kio.read_forecast(args.forecast)
    rep = score(fc["predicted"], fc["actual"], int(np.sum(fc["divergent"])))
    print(json.dumps({"mse": rep.mse, "r2": rep.r2, "n_scored": rep.n_scored,
                      "n_divergent": rep.n_divergent}))
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    if args.repetitions is not None:
        cfg = replace(cfg, repetitions=args.repetitions)
    if args.approaches:
        cfg = replace(cfg, approaches=tuple(args.approaches.split(",")))
    report = run_experiment(cfg, write=True)
    sys.stdout.write(emit_table(report))
    if cfg.output_dir and args.plots:
        from .plotting import emit_plots

        emit_plots(cfg.output_dir, report.test.times)
    return 0


def cmd_plot(args) -> int:
    from .plotting import emit_plots

    test_times = None
    test_csv = Path(args.output_dir) / "test.csv"
    if test_csv.exists():
        test_times = kio.read_series(test_csv).times
    written = emit_plots(args.output_dir, test_times)
    print(f"wrote {len(written)} SVG files under {Path(args.output_dir) / 'plots'}")
    return 0


def cmd_preset(args) -> int:
    sys.stdout.write(kio.preset_text(args.name))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kflow", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=kio.PRESETS, help="shipped configuration")
    src.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("--seed", type=int, help="master seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write train.csv and test.csv")
    p.add_argument("-o", "--output-dir", type=Path)
    p.set_defaults(func=cmd_generate)

    def variant_args(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--approach", help="A-E; selects the embedding variant")
        g.add_argument("--variant", choices=[v.value for v in Variant], default="irregular")
        p.add_argument("--repetition", type=int, default=0,
                       help="repetition index used to derive seeds")

    p = sub.add_parser("train", parents=[common], help="learn kernel parameters with Kernel Flows")
    p.add_argument("--train", type=Path, required=True)
    p.add_argument("--params", type=Path, required=True, help="output JSON")
    p.add_argument("--trace", type=Path, help="optional per-iteration CSV")
    variant_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("forecast", parents=[common], help="chunked forecast of a test series")
    p.add_argument("--train", type=Path, required=True)
    p.add_argument("--test", type=Path, required=True)
    p.add_argument("--params", type=Path, help="kernel parameter JSON (random draw if omitted)")
    p.add_argument("-o", "--output", type=Path, required=True)
    variant_args(p)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("evaluate", help="MSE and R^2 of a forecast file")
    p.add_argument("forecast", type=Path)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", parents=[common], help="full comparison of approaches A-E")
    p.add_argument("-o", "--output-dir", type=Path)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--approaches", help="comma separated subset of A,B,C,D,E")
    p.add_argument("--plots", action="store_true", help="also write SVG figures")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="SVG figures for a run directory")
    p.add_argument("output_dir", type=Path)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("preset", help="print a shipped configuration")
    p.add_argument("name", choices=kio.PRESETS)
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("KFLOW_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KFlowError as exc:
        print(f"kflow {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
