"""SVG figures of forecasts: phase-plane scatter and per-coordinate overlays.

Output bytes are reproducible: the SVG id salt is fixed and no date metadata is
written.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import IOFailure  # noqa: E402

_RC = {"svg.hashsalt": "kflow", "svg.fonttype": "none", "path.simplify": False}


def _save(fig, path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    except OSError as exc:
        raise IOFailure(f"could not write {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path


def plot_attractor(predicted, actual, path, dims=(0, 1), title=None):
    predicted = np.atleast_2d(np.asarray(predicted, dtype=float))
    actual = np.atleast_2d(np.asarray(actual, dtype=float))
    i, j = dims
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 5))
        ax.plot(actual[:, i], actual[:, j], linestyle="none", marker="o", markersize=2,
                color="0.6", label="true", gid="true")
        ax.plot(predicted[:, i], predicted[:, j], linestyle="none", marker="x", markersize=2,
                color="tab:red", label="predicted", gid="predicted")
        ax.set_xlabel(f"x{i + 1}")
        ax.set_ylabel(f"x{j + 1}")
        ax.legend(loc="best")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_timeseries(times, predicted, actual, path, chunk_starts=None, title=None):
    times = np.asarray(times, dtype=float)
    predicted = np.atleast_2d(np.asarray(predicted, dtype=float))
    actual = np.atleast_2d(np.asarray(actual, dtype=float))
    d = actual.shape[1]
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(d, 1, figsize=(9, 2.2 * d), sharex=True, squeeze=False)
        for k, ax in enumerate(axes[:, 0]):
            ax.plot(times, actual[:, k], color="0.4", linewidth=0.8, label="true")
            ax.plot(times, predicted[:, k], color="tab:red", linewidth=0.8, linestyle="--",
                    label="predicted")
            if chunk_starts is not None:
                for t0 in np.asarray(chunk_starts, dtype=float):
                    ax.axvline(t0, color="0.85", linewidth=0.5, zorder=0)
            ax.set_ylabel(f"x{k + 1}")
        axes[0, 0].legend(loc="upper right")
        axes[-1, 0].set_xlabel("t")
        if title:
            axes[0, 0].set_title(title)
        return _save(fig, path)


def phase_dims(state_dim: int):
    """Projection used for the attractor plot: (x, z) for 3-d states."""
    return (0, 2) if state_dim >= 3 else (0, 1)


def emit_plots(output_dir, test_times=None) -> list:
    """Plot every ``predictions/*.csv`` in ``output_dir`` into ``plots/``."""
    from .io import read_forecast

    out = Path(output_dir)
    written = []
    files = sorted((out / "predictions").glob("*.csv"))
    if not files:
        raise IOFailure(f"no prediction files under {out / 'predictions'}")
    for f in files:
        fc = read_forecast(f)
        dims = phase_dims(fc["actual"].shape[1])
        written.append(plot_attractor(fc["predicted"], fc["actual"],
                                      out / "plots" / f"{f.stem}_attractor.svg", dims, f.stem))
        starts = np.unique(fc["chunk_start"])
        if test_times is not None:
            starts = np.asarray(test_times)[starts]
        else:
            # chunk starts are seed samples, not scored; mark the first scored time instead
            first = {c: t for c, t in zip(fc["chunk_start"][::-1], fc["t"][::-1])}
            starts = np.array([first[c] for c in np.unique(fc["chunk_start"])])
        written.append(plot_timeseries(fc["t"], fc["predicted"], fc["actual"],
                                       out / "plots" / f"{f.stem}_series.svg", starts, f.stem))
    return written
