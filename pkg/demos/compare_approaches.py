"""Full comparison of the five approaches on one shipped preset.

Approaches: A irregular embedding with learning, B regular embedding with
learning, C Euler-type embedding with learning, D and E are A and B with the
initial random parameters.  Writes the run directory and SVG figures.

    python demos/compare_approaches.py [henon|vdp|lorenz] [output_dir]
"""
import sys

from kflow import emit_table, run_experiment
from kflow import io as kio
from kflow.plotting import emit_plots

name = sys.argv[1] if len(sys.argv) > 1 else "henon"
out = sys.argv[2] if len(sys.argv) > 2 else f"demo_{name}"
cfg = kio.load_preset(name, {"output_dir": out, "repetitions": "2"})
report = run_experiment(cfg)
print(emit_table(report))
plots = emit_plots(out, report.test.times)
print(f"results and {len(plots)} figures in {out}/")
