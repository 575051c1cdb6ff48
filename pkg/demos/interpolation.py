"""Kernel interpolation of a scalar function and its pointwise error bound.

Fits a Gaussian-plus-Laplace kernel to samples of sin on [0, 2pi], then
grows the model one point at a time with the incremental Cholesky update and
checks it against a fresh fit.

    python demos/interpolation.py
"""
import numpy as np

from kflow import KernelParams, error_bounds, extend, fit, predict_many

p = KernelParams.from_vector([0.0, 1.0, 0.0, 0.0, 0.0, 0.3, 1.0, 1.0, 1.0, 1.0, 1.0])
X = np.linspace(0, 2 * np.pi, 12)[:, None]
Y = np.sin(X)
m = fit(p, X, Y, nugget=1e-8)

grid = np.linspace(0, 2 * np.pi, 7)[:, None]
pred = predict_many(m, grid)[:, 0]
bound = error_bounds(m, grid)
for x, f, s in zip(grid[:, 0], pred, bound):
    print(f"x={x:5.2f}  f={f:+.5f}  sin={np.sin(x):+.5f}  sigma={s:.2e}")

# add the midpoints incrementally and compare with refitting everything
mid = (X[:-1] + X[1:]) / 2
grown = extend(m, mid, np.sin(mid))
full = fit(p, np.vstack([X, mid]), np.vstack([Y, np.sin(mid)]), nugget=1e-8)
gap = np.max(np.abs(predict_many(grown, grid) - predict_many(full, grid)))
print(f"{grown.n_points} points after extend; max difference to a full refit {gap:.1e}")
