"""Kernel ridge regression with a shared Cholesky factor.

The regressor is ``f(x) = K(x, X) (K(X, X) + lam*I)^{-1} Y``.  One factorization
serves all ``d`` output columns.  Models are immutable; :func:`extend` returns a
new model whose factor is the old one bordered by the new block rows.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack, lu_solve, solve_triangular

from .errors import FitError, InputError
from .kernels import KernelParams, cross_gram, gram, kernel_from_sq_dists

DEFAULT_NUGGET = 1e-6

# "cholesky": non positive definite K + lam*I raises FitError.
# "auto": fall back to an LU factorization of the (symmetric, indefinite) matrix.
SOLVERS = ("cholesky", "auto")


@dataclass(frozen=True)
class FittedModel:
    params: KernelParams
    train_inputs: np.ndarray
    train_targets: np.ndarray
    nugget: float
    chol_factor: np.ndarray | None
    coeffs: np.ndarray
    # embedding metadata, set by fit_dataset; used by the forecaster
    variant: str | None = None
    delay: int | None = None
    input_shift: np.ndarray | None = field(default=None, repr=False)
    input_scale: np.ndarray | None = field(default=None, repr=False)
    # only set when K + lam*I was not positive definite and solver="auto"
    lu: tuple | None = field(default=None, repr=False)

    @property
    def positive_definite(self) -> bool:
        return self.chol_factor is not None

    @property
    def n_points(self) -> int:
        return self.train_inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.train_inputs.shape[1]

    @property
    def output_dim(self) -> int:
        return self.train_targets.shape[1]


@dataclass(frozen=True)
class NewtonBasis:
    """``back_transform`` is B = L^{-T}; basis function j is sum_i B_ij K(., x_i)."""

    back_transform: np.ndarray


def cholesky_lower(A: np.ndarray, pivot_offset: int = 0) -> np.ndarray:
    """Lower Cholesky factor; raises :class:`FitError` with the failing pivot."""
    c, info = lapack.dpotrf(A, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        pivot = pivot_offset + info - 1
        raise FitError(
            f"K + lambda*I is not positive definite (pivot {pivot} of "
            f"{pivot_offset + A.shape[0]})",
            pivot=pivot,
        )
    if info < 0:
        raise InputError(f"invalid argument {-info} passed to dpotrf")
    return c


def lu_factor_checked(A: np.ndarray):
    lu, piv = lapack.dgetrf(A)[:2]
    diag = np.abs(np.diag(lu))
    if diag.size and (not np.all(np.isfinite(diag)) or diag.min() <= np.finfo(float).eps * diag.max()):
        raise FitError("K + lambda*I is numerically singular")
    return lu, piv


def factorize(A: np.ndarray, solver: str = "cholesky"):
    """(chol, lu): exactly one is not None."""
    if solver not in SOLVERS:
        raise InputError(f"solver must be one of {SOLVERS}, got {solver!r}")
    try:
        return cholesky_lower(A), None
    except FitError:
        if solver == "cholesky":
            raise
    return None, lu_factor_checked(A)


def solve_factored(chol, lu, B) -> np.ndarray:
    if chol is not None:
        return solve_triangular(chol.T, solve_triangular(chol, B, lower=True), lower=False)
    return lu_solve(lu, B)


def _as_matrix(A, name) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise InputError(f"{name} must be 2-d, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} contains non-finite values")
    return A


def fit(p: KernelParams, X, Y, nugget: float = DEFAULT_NUGGET, solver: str = "cholesky",
        **metadata) -> FittedModel:
    X = _as_matrix(X, "X")
    Y = _as_matrix(Y, "Y")
    if X.shape[0] == 0:
        raise InputError("cannot fit on zero points")
    if X.shape[0] != Y.shape[0]:
        raise InputError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if nugget < 0:
        raise InputError(f"nugget must be >= 0, got {nugget}")
    A = gram(p, X)
    A[np.diag_indices_from(A)] += nugget
    L, lu = factorize(A, solver)
    C = solve_factored(L, lu, Y)
    return FittedModel(p, X, Y, float(nugget), L, C, lu=lu, **metadata)


def fit_dataset(p: KernelParams, data, nugget: float = DEFAULT_NUGGET,
                solver: str = "cholesky") -> FittedModel:
    """Fit on an :class:`~kflow.embedding.EmbeddedDataset`, keeping its variant."""
    return fit(
        p,
        data.inputs,
        data.targets,
        nugget,
        solver,
        variant=data.variant,
        delay=data.delay,
        input_shift=data.input_shift,
        input_scale=data.input_scale,
    )


def _query(m: FittedModel, Xq) -> np.ndarray:
    Xq = np.asarray(Xq, dtype=float)
    if Xq.ndim == 1:
        Xq = Xq[None, :]
    if Xq.shape[-1] != m.input_dim:
        raise InputError(f"query dimension {Xq.shape[-1]} != model input dimension {m.input_dim}")
    if m.input_shift is not None:
        Xq = (Xq - m.input_shift) / m.input_scale
    return Xq


def predict_many(m: FittedModel, Xq) -> np.ndarray:
    """Predictions for each row of ``Xq``, shape (q, d)."""
    return cross_gram(m.params, _query(m, Xq), m.train_inputs) @ m.coeffs


def predict(m: FittedModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError("predict takes a single input vector; use predict_many for batches")
    return predict_many(m, x)[0]


def error_bounds(m: FittedModel, Xq) -> np.ndarray:
    """sigma(x) = sqrt(K(x,x) - K(x,X)(K+lam I)^{-1}K(X,x)) for each query row."""
    Xq = _query(m, Xq)
    kxX = cross_gram(m.params, Xq, m.train_inputs)
    kxx = kernel_from_sq_dists(m.params, np.zeros(Xq.shape[0]))
    if m.positive_definite:
        W = solve_triangular(m.chol_factor, kxX.T, lower=True)
        var = kxx - np.sum(W * W, axis=0)
    else:
        var = kxx - np.sum(kxX.T * lu_solve(m.lu, kxX.T), axis=0)
    # at a training input x = X_i the expression above cancels catastrophically
    # (relative error ~1e-6 for lam ~1e-10); it equals lam - lam^2 [(K+lam I)^{-1}]_ii
    sites = {row.tobytes(): i for i, row in enumerate(m.train_inputs)}
    hits = [(q, sites[row.tobytes()]) for q, row in enumerate(Xq) if row.tobytes() in sites]
    if hits:
        rows, idx = map(np.array, zip(*hits))
        E = np.zeros((m.n_points, idx.size))
        E[idx, np.arange(idx.size)] = 1.0
        if m.positive_definite:
            inv_diag = np.sum(solve_triangular(m.chol_factor, E, lower=True) ** 2, axis=0)
        else:
            inv_diag = lu_solve(m.lu, E)[idx, np.arange(idx.size)]
        var[rows] = m.nugget - m.nugget**2 * inv_diag
    return np.sqrt(np.maximum(var, 0.0))


def error_bound(m: FittedModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError("error_bound takes a single input vector")
    return float(error_bounds(m, x)[0])


def extend(m: FittedModel, X_new, Y_new) -> FittedModel:
    """Add points without refactoring the existing block.

    With ``A' = [[A, k], [k^T, c]]`` the factor becomes ``[[L, 0], [l^T, L22]]``
    where ``l = L^{-1} k`` and ``L22 L22^T = c - l^T l``.  Cost is
    O(N^2 m + m^3) for the factor plus two triangular solves for the coefficients.
    A model fitted through the LU fallback has no factor to border and is refitted.
    """
    X_new = _as_matrix(X_new, "X_new")
    Y_new = _as_matrix(Y_new, "Y_new")
    if X_new.shape[0] == 0:
        return m
    if X_new.shape[1] != m.input_dim or Y_new.shape[1] != m.output_dim:
        raise InputError("new points do not match the model dimensions")
    if X_new.shape[0] != Y_new.shape[0]:
        raise InputError("X_new and Y_new row counts differ")
    if m.input_shift is not None:
        X_new = (X_new - m.input_shift) / m.input_scale
    if not m.positive_definite:
        return _refit(m, np.vstack([m.train_inputs, X_new]), np.vstack([m.train_targets, Y_new]))

    n = m.n_points
    L = m.chol_factor
    k_cross = cross_gram(m.params, m.train_inputs, X_new)
    corner = gram(m.params, X_new)
    corner[np.diag_indices_from(corner)] += m.nugget

    border = solve_triangular(L, k_cross, lower=True)
    schur = corner - border.T @ border
    L22 = cholesky_lower(schur, pivot_offset=n)

    size = n + X_new.shape[0]
    L_new = np.zeros((size, size))
    L_new[:n, :n] = L
    L_new[n:, :n] = border.T
    L_new[n:, n:] = L22

    # forward-substituted targets: old block is L^T C, new block from the border
    z_old = L.T @ m.coeffs
    z_new = solve_triangular(L22, Y_new - border.T @ z_old, lower=True)
    z = np.vstack([z_old, z_new])
    C = solve_triangular(L_new.T, z, lower=False)

    return FittedModel(
        m.params,
        np.vstack([m.train_inputs, X_new]),
        np.vstack([m.train_targets, Y_new]),
        m.nugget,
        L_new,
        C,
        variant=m.variant,
        delay=m.delay,
        input_shift=m.input_shift,
        input_scale=m.input_scale,
    )


def _refit(m: FittedModel, X, Y) -> FittedModel:
    A = gram(m.params, X)
    A[np.diag_indices_from(A)] += m.nugget
    L, lu = factorize(A, "auto")
    return FittedModel(m.params, X, Y, m.nugget, L, solve_factored(L, lu, Y), m.variant, m.delay,
                       m.input_shift, m.input_scale, lu)


def _require_cholesky(m: FittedModel):
    if not m.positive_definite:
        raise FitError("the Newton basis needs a positive definite K + lambda*I")


def newton_basis(m: FittedModel) -> NewtonBasis:
    _require_cholesky(m)
    eye = np.eye(m.n_points)
    B = solve_triangular(m.chol_factor.T, eye, lower=False)
    return NewtonBasis(np.triu(B))


def newton_coefficients(m: FittedModel) -> np.ndarray:
    """Coefficients b = L^T C of the interpolant in the Newton basis."""
    _require_cholesky(m)
    return m.chol_factor.T @ m.coeffs


def newton_values(m: FittedModel, basis: NewtonBasis, Xq) -> np.ndarray:
    """Basis functions evaluated at query rows, shape (q, N)."""
    return cross_gram(m.params, _query(m, Xq), m.train_inputs) @ basis.back_transform
