"""Composite parametric kernel and its parameter derivatives.

The kernel is a weighted sum of five base kernels of the distance r = ||x - y||_2::

    K(x, y) = g0^2 max(0, 1 - r^2/s0^2)                       triangular
            + g1^2 exp(-r^2/s1^2)                             gaussian
            + g2^2 exp(-r/s2^2)                               laplace
            + g3^2 exp(-s3 sin^2(s4 pi r^2)) exp(-r^2/s5^2)   locally periodic
            + g4^2 r^2                                        quadratic

with amplitudes ``gamma = (g0..g4)`` and scales ``sigma = (s0..s5)``.  The flat
parameter vector used by the optimizer is ``theta = (g0..g4, s0..s5)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericError

N_GAMMA = 5
N_SIGMA = 6
N_PARAMS = N_GAMMA + N_SIGMA

SCALE_FLOOR = 1e-8
# sigma entries that appear as divisors (s0, s1, s2, s5); s3 and s4 are plain factors
_DIVISOR_SCALES = (0, 1, 2, 5)

TERM_NAMES = ("triangular", "gaussian", "laplace", "locally_periodic", "quadratic")

PARAM_NAMES = tuple(f"gamma{i}" for i in range(N_GAMMA)) + tuple(
    f"sigma{i}" for i in range(N_SIGMA)
)

_BLOCK_ROWS = 1024


@dataclass(frozen=True)
class KernelParams:
    """Amplitudes ``gamma`` (5 values) and scales ``sigma`` (6 values)."""

    gamma: tuple
    sigma: tuple

    def __post_init__(self):
        gamma = tuple(float(g) for g in self.gamma)
        sigma = tuple(float(s) for s in self.sigma)
        if len(gamma) != N_GAMMA or len(sigma) != N_SIGMA:
            raise InputError(
                f"expected {N_GAMMA} gammas and {N_SIGMA} sigmas, "
                f"got {len(gamma)} and {len(sigma)}"
            )
        if not all(np.isfinite(gamma + sigma)):
            raise InputError("kernel parameters must be finite")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_vector(cls, theta) -> "KernelParams":
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.size != N_PARAMS:
            raise InputError(f"theta must have {N_PARAMS} entries, got {theta.size}")
        return cls(tuple(theta[:N_GAMMA]), tuple(theta[N_GAMMA:]))

    @classmethod
    def random(cls, rng) -> "KernelParams":
        """Independent U(0, 1) draw for every component."""
        return cls.from_vector(rng.uniform(0.0, 1.0, size=N_PARAMS))

    @classmethod
    def single(cls, term: str, gamma: float = 1.0, sigma=None) -> "KernelParams":
        """Parameters that switch on one base kernel only."""
        g = [0.0] * N_GAMMA
        g[TERM_NAMES.index(term)] = gamma
        s = [1.0] * N_SIGMA if sigma is None else list(sigma)
        return cls(tuple(g), tuple(s))

    def as_vector(self) -> np.ndarray:
        return np.array(self.gamma + self.sigma, dtype=float)

    def with_term_only(self, term: str) -> "KernelParams":
        keep = TERM_NAMES.index(term)
        g = tuple(v if i == keep else 0.0 for i, v in enumerate(self.gamma))
        return KernelParams(g, self.sigma)


def pairwise_sq_dists(A, B) -> np.ndarray:
    """Squared euclidean distances, summed coordinate by coordinate.

    Summing per coordinate (instead of the ``|a|^2 + |b|^2 - 2ab`` expansion)
    keeps the result exactly symmetric when ``A is B`` and exactly zero on the
    diagonal.
    """
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    out = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        diff = A[:, k, None] - B[None, :, k]
        out += diff * diff
    return out


def _effective_sq_scales(sigma):
    s2 = np.array(sigma, dtype=float) ** 2
    clamped = np.zeros(N_SIGMA, dtype=bool)
    for i in _DIVISOR_SCALES:
        if s2[i] < SCALE_FLOOR**2:
            s2[i] = SCALE_FLOOR**2
            clamped[i] = True
    return s2, clamped


def _terms(p: KernelParams, r2: np.ndarray):
    """Unweighted base kernels (without gamma^2) evaluated on squared distances."""
    s = p.sigma
    s2, _ = _effective_sq_scales(s)
    with np.errstate(over="ignore", invalid="ignore"):
        r = np.sqrt(r2)
        tri = np.maximum(0.0, 1.0 - r2 / s2[0])
        gauss = np.exp(-r2 / s2[1])
        lap = np.exp(-r / s2[2])
        phase = s[4] * np.pi * r2
        sin_phase = np.sin(phase)
        per = np.exp(-s[3] * sin_phase**2) * np.exp(-r2 / s2[5])
        quad = r2
    return (tri, gauss, lap, per, quad), (r, s2, phase)


def _combine(p: KernelParams, terms) -> np.ndarray:
    g = p.gamma
    out = np.zeros_like(terms[0])
    for i, (name, term) in enumerate(zip(TERM_NAMES, terms)):
        if g[i] == 0.0:
            continue
        with np.errstate(over="ignore", invalid="ignore"):
            contribution = np.float64(g[i]) ** 2 * term
        if not np.all(np.isfinite(contribution)):
            raise NumericError(f"non-finite value in the {name} kernel term")
        out += contribution
    return out


def kernel_from_sq_dists(p: KernelParams, r2) -> np.ndarray:
    terms, _ = _terms(p, np.asarray(r2, dtype=float))
    return _combine(p, terms)


def eval_kernel(p: KernelParams, x, y) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.ndim != 1 or x.shape != y.shape or x.size == 0:
        raise InputError(f"kernel arguments must be equal-length vectors, got {x.shape} and {y.shape}")
    d = x - y
    return float(kernel_from_sq_dists(p, np.array(np.dot(d, d))))


def _as_points(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise InputError(f"expected a non-empty (N, p) array of points, got shape {X.shape}")
    return X


def cross_gram(p: KernelParams, A, B) -> np.ndarray:
    """Matrix with entries K(A_i, B_j), assembled in row blocks."""
    A = _as_points(A)
    B = _as_points(B)
    if A.shape[1] != B.shape[1]:
        raise InputError(f"point dimensions differ: {A.shape[1]} vs {B.shape[1]}")
    if A.shape[0] <= _BLOCK_ROWS:
        return kernel_from_sq_dists(p, pairwise_sq_dists(A, B))
    out = np.empty((A.shape[0], B.shape[0]))
    for start in range(0, A.shape[0], _BLOCK_ROWS):
        stop = start + _BLOCK_ROWS
        out[start:stop] = kernel_from_sq_dists(p, pairwise_sq_dists(A[start:stop], B))
    return out


def gram(p: KernelParams, X) -> np.ndarray:
    """Gram matrix K(X, X); exactly symmetric."""
    X = _as_points(X)
    return cross_gram(p, X, X)


def gram_param_gradient(p: KernelParams, X) -> np.ndarray:
    """Derivatives of the Gram matrix, shape (11, N, N), ordered as ``theta``."""
    X = _as_points(X)
    return gram_param_gradient_from_sq_dists(p, pairwise_sq_dists(X, X))


def gram_and_gradient_from_sq_dists(p: KernelParams, r2: np.ndarray):
    """Gram matrix and its 11 parameter derivatives from one set of distances."""
    terms, (r, s2, phase) = _terms(p, r2)
    K = _combine(p, terms)
    g = p.gamma
    s = p.sigma
    _, clamped = _effective_sq_scales(s)
    tri, gauss, lap, per, quad = terms

    grads = np.zeros((N_PARAMS,) + r2.shape)
    for i, term in enumerate(terms):
        grads[i] = 2.0 * g[i] * term
    # d/ds of exp(-u/s^2) is exp(-u/s^2) * 2u/s^3, likewise for the triangle inside its support
    s_abs3 = {i: np.sqrt(s2[i]) ** 3 * np.sign(s[i] or 1.0) for i in _DIVISOR_SCALES}
    if not clamped[0]:
        grads[N_GAMMA + 0] = np.where(tri > 0.0, g[0] ** 2 * 2.0 * r2 / s_abs3[0], 0.0)
    if not clamped[1]:
        grads[N_GAMMA + 1] = g[1] ** 2 * gauss * 2.0 * r2 / s_abs3[1]
    if not clamped[2]:
        grads[N_GAMMA + 2] = g[2] ** 2 * lap * 2.0 * r / s_abs3[2]
    weighted_per = g[3] ** 2 * per
    grads[N_GAMMA + 3] = -weighted_per * np.sin(phase) ** 2
    grads[N_GAMMA + 4] = -weighted_per * s[3] * np.pi * r2 * np.sin(2.0 * phase)
    if not clamped[5]:
        grads[N_GAMMA + 5] = weighted_per * 2.0 * r2 / s_abs3[5]
    if not np.all(np.isfinite(grads)):
        raise NumericError("non-finite kernel parameter derivative")
    return K, grads


def gram_param_gradient_from_sq_dists(p: KernelParams, r2: np.ndarray) -> np.ndarray:
    return gram_and_gradient_from_sq_dists(p, r2)[1]
