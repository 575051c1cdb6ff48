"""Learning kernel parameters with Kernel Flows on an irregular Henon series.

Trains the composite kernel on the irregular embedding, prints the smoothed
loss, then forecasts the held-out part with learned and with initial
parameters.

    python demos/henon_training.py
"""
from dataclasses import replace

import numpy as np

from kflow import ForecastConfig, Variant, embed, fit_dataset, forecast_chunked, score, train
from kflow import io as kio
from kflow.experiment import initial_params, make_data

cfg = kio.load_preset("henon")
train_ts, test_ts = make_data(cfg)
print(f"{len(train_ts)} training and {len(test_ts)} test samples, "
      f"gaps in {sorted(set(np.diff(train_ts.times).astype(int).tolist()))}")

data = embed(train_ts, Variant.IRREGULAR, cfg.delay)
init = initial_params(cfg, 0)
trace = train(data, replace(cfg.kf, rng_seed=cfg.kf_seed(0, "A")), init)
smooth = trace.smoothed(cfg.kf.smoothing_window)
for it in range(cfg.kf.smoothing_window - 1, cfg.kf.iterations, 200):
    print(f"iteration {it:4d}  smoothed rho {smooth[it]:.4f}")
print(f"best iteration {trace.best_iteration}, {trace.n_skipped} skipped steps")

fcfg = ForecastConfig(cfg.horizon, cfg.delay, Variant.IRREGULAR)
for label, params in (("learned", trace.best_params), ("initial", init)):
    model = fit_dataset(params, data, cfg.kf.nugget, solver=cfg.solver)
    fc = forecast_chunked(model, test_ts, fcfg)
    rep = score(fc.predicted, fc.actual, fc.n_divergent)
    print(f"{label:8s} parameters: MSE {rep.mse:.4g}  R2 {rep.r2:.4f}")
