"""Kernel Flows: learn kernel parameters by SGD on a half-sample loss.

Each iteration draws a batch ``pi`` of M training rows and a half ``beta`` of
that batch, then measures how much of the regularized RKHS energy of the
batch interpolant is lost when only the half is used::

    rho = 1 - Yb^T (K_b + lam I)^{-1} Yb / Yp^T (K_p + lam I)^{-1} Yp

For vector targets the quadratic forms are summed over output columns.
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericError, TrainingError
from .interpolant import DEFAULT_NUGGET, factorize, solve_factored
from .kernels import KernelParams, N_PARAMS, gram_and_gradient_from_sq_dists, pairwise_sq_dists

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class KFConfig:
    batch_size: int = 100
    learning_rate: float = 0.1
    iterations: int = 1000
    nugget: float = DEFAULT_NUGGET
    rng_seed: int = 0
    smoothing_window: int = 50
    clip_norm: float = 1e3
    max_skip_fraction: float = 0.2
    solver: str = "auto"
    # rho outside [0 - tol, 1 + tol] (possible only for indefinite K + lam*I) is kept
    # in the trace but left out of the moving average that selects best_params
    rho_tolerance: float = 1e-10

    def __post_init__(self):
        if self.batch_size < 2 or self.batch_size % 2:
            raise InputError(f"batch_size must be a positive even integer, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be > 0")
        if self.iterations < 0:
            raise InputError("iterations must be >= 0")
        if self.nugget < 0:
            raise InputError("nugget must be >= 0")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    rho: float
    grad_norm: float
    skipped: bool
    theta_hash: str


@dataclass
class TrainTrace:
    records: list
    best_params: KernelParams
    final_params: KernelParams
    n_skipped: int = 0
    thetas: np.ndarray = field(default=None, repr=False)
    best_iteration: int | None = None

    @property
    def rhos(self) -> np.ndarray:
        return np.array([r.rho for r in self.records])

    def smoothed(self, window: int = 50) -> np.ndarray:
        return moving_average(self.rhos, window)


def theta_hash(theta: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(theta, dtype="<f8").tobytes()).hexdigest()[:16]


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean over the last ``window`` finite entries' positions (NaNs ignored)."""
    values = np.asarray(values, dtype=float)
    out = np.full(values.shape, np.nan)
    finite = np.isfinite(values)
    csum = np.concatenate([[0.0], np.cumsum(np.where(finite, values, 0.0))])
    ccount = np.concatenate([[0], np.cumsum(finite)])
    for i in range(values.size):
        lo = max(0, i + 1 - window)
        count = ccount[i + 1] - ccount[lo]
        if count:
            out[i] = (csum[i + 1] - csum[lo]) / count
    return out


def _quad_form(K, dK, Y, nugget, solver):
    """Y^T (K + lam I)^{-1} Y summed over columns, and its derivative."""
    A = K.copy()
    A[np.diag_indices_from(A)] += nugget
    alpha = solve_factored(*factorize(A, solver), Y)
    q = float(np.sum(Y * alpha))
    outer = alpha @ alpha.T
    dq = -np.einsum("kij,ij->k", dK, outer)
    return q, dq


def _rho_and_grad(p, X_pi, Y_pi, beta_idx, nugget, solver="cholesky"):
    X_pi = np.asarray(X_pi, dtype=float)
    Y_pi = np.asarray(Y_pi, dtype=float)
    if Y_pi.ndim == 1:
        Y_pi = Y_pi[:, None]
    if X_pi.ndim == 1:
        X_pi = X_pi[:, None]
    beta_idx = np.asarray(beta_idx, dtype=int)
    M = X_pi.shape[0]
    if Y_pi.shape[0] != M:
        raise InputError("X_pi and Y_pi row counts differ")
    if beta_idx.size == 0 or beta_idx.min() < 0 or beta_idx.max() >= M:
        raise InputError("beta indices must be a non-empty subset of range(M)")

    K, dK = gram_and_gradient_from_sq_dists(p, pairwise_sq_dists(X_pi, X_pi))
    sub = np.ix_(beta_idx, beta_idx)
    q_pi, dq_pi = _quad_form(K, dK, Y_pi, nugget, solver)
    q_b, dq_b = _quad_form(K[sub], dK[(slice(None),) + sub], Y_pi[beta_idx], nugget, solver)
    if not q_pi > 0:
        raise NumericError(f"full-batch quadratic form is not positive ({q_pi})")
    value = 1.0 - q_b / q_pi
    grad = -(dq_b * q_pi - q_b * dq_pi) / q_pi**2
    if value < -1e-10:
        log.debug("rho = %.3e < 0 (nugget %.1e)", value, nugget)
    return value, grad


def rho(p: KernelParams, X_pi, Y_pi, beta_idx, nugget: float = DEFAULT_NUGGET,
        solver: str = "cholesky") -> float:
    """Half-sample loss; ``beta_idx`` indexes rows of ``X_pi`` (zero-based)."""
    return _rho_and_grad(p, X_pi, Y_pi, beta_idx, nugget, solver)[0]


def rho_gradient(p: KernelParams, X_pi, Y_pi, beta_idx, nugget: float = DEFAULT_NUGGET,
                 solver: str = "cholesky") -> np.ndarray:
    return _rho_and_grad(p, X_pi, Y_pi, beta_idx, nugget, solver)[1]


def rho_and_gradient(p, X_pi, Y_pi, beta_idx, nugget: float = DEFAULT_NUGGET, solver: str = "cholesky"):
    return _rho_and_grad(p, X_pi, Y_pi, beta_idx, nugget, solver)


def train(data, cfg: KFConfig, init: KernelParams, sink=None) -> TrainTrace:
    """Plain SGD, ``theta <- theta - lr * grad``, for ``cfg.iterations`` steps.

    A step whose factorization fails is skipped (theta unchanged).  Training
    aborts with :class:`TrainingError` once more than ``max_skip_fraction`` of
    the budget has been skipped.  ``sink`` is an optional text stream that
    receives ``iter,rho,grad_norm,skipped`` lines.
    """
    X = np.asarray(data.inputs, dtype=float)
    Y = np.asarray(data.targets, dtype=float)
    N = X.shape[0]
    M = cfg.batch_size
    if N < M:
        raise InputError(f"dataset has {N} rows, fewer than the batch size {M}")

    rng = np.random.default_rng(cfg.rng_seed)
    theta = init.as_vector()
    T = cfg.iterations
    thetas = np.empty((T, N_PARAMS))
    records = []
    skipped = 0
    max_skipped = int(np.floor(cfg.max_skip_fraction * T))
    if sink is not None:
        sink.write("iter,rho,grad_norm,skipped\n")

    for it in range(T):
        pi = rng.choice(N, size=M, replace=False)
        beta = rng.choice(M, size=M // 2, replace=False)
        thetas[it] = theta
        p = KernelParams.from_vector(theta)
        try:
            value, grad = _rho_and_grad(p, X[pi], Y[pi], beta, cfg.nugget, cfg.solver)
            if not np.all(np.isfinite(grad)):
                raise NumericError("non-finite gradient")
        except NumericError as exc:
            skipped += 1
            log.debug("iteration %d skipped: %s", it, exc)
            records.append(TraceRecord(it, float("nan"), float("nan"), True, theta_hash(theta)))
            if sink is not None:
                sink.write(f"{it},nan,nan,{skipped}\n")
            if skipped > max_skipped:
                raise TrainingError(
                    f"{skipped} of {T} iterations skipped (limit {cfg.max_skip_fraction:.0%})"
                ) from exc
            continue
        norm = float(np.linalg.norm(grad))
        if norm > cfg.clip_norm:
            grad = grad * (cfg.clip_norm / norm)
        records.append(TraceRecord(it, value, norm, False, theta_hash(theta)))
        if sink is not None:
            sink.write(f"{it},{value!r},{norm!r},{skipped}\n")
        theta = theta - cfg.learning_rate * grad

    final = KernelParams.from_vector(theta)
    if T == 0:
        return TrainTrace([], init, init, 0, thetas)
    rhos = np.array([r.rho for r in records])
    tol = cfg.rho_tolerance
    in_range = (rhos >= -tol) & (rhos <= 1.0 + tol)
    n_out = int(np.sum(np.isfinite(rhos) & ~in_range))
    if n_out:
        log.info("%d of %d rho values outside [0, 1]; excluded from best-parameter selection",
                 n_out, T)
    smooth = moving_average(np.where(in_range, rhos, np.nan), cfg.smoothing_window)
    start = min(cfg.smoothing_window, T) - 1
    window = smooth[start:]
    if np.all(np.isnan(window)):
        best_it = T - 1
    else:
        best_it = start + int(np.nanargmin(window))
    best = KernelParams.from_vector(thetas[best_it])
    log.info("trained %d iterations, %d skipped, best smoothed rho %.4g at %d",
             T, skipped, smooth[best_it], best_it)
    return TrainTrace(records, best, final, skipped, thetas, best_it)
