"""Weighted kernel ridge regression and GCV smoothing-parameter selection.

The estimator minimizes

    (1/2n) sum_i w_i (y_i - f(x_i))^2 + (lambda/2) ||f||_H^2

over the RKHS of the chosen kernel.  By the representer theorem the
minimizer is f = sum_i c_i k(x_i, .), and the coefficients solve the
normal equations (W K + n lambda I) c = W y.  We solve the equivalent
symmetrized system

    (W^{1/2} K W^{1/2} + n lambda I) z = W^{1/2} y,   c = W^{1/2} z,

so a symmetric positive-definite factorization applies even when some
weights are zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ConfigurationError, NumericalError
from .kernels import KernelSpec, as_points, gram_matrix, kernel_matrix

#: Default smoothing-parameter grid: 30 log-spaced points spanning
#: under- to over-smoothing for sample sizes up to ~1e4.
DEFAULT_LAMBDA_GRID = np.logspace(-8.0, 0.0, 30)


@dataclass(frozen=True)
class FittedRegressor:
    """Kernel ridge fit: f(x) = sum_i coeffs[i] * k(design[i], x)."""

    spec: KernelSpec
    design: np.ndarray
    coeffs: np.ndarray
    lam: float

    def predict(self, x):
        """Evaluate the fit at one point or an (m, d) array of points.

        Returns a scalar for a single point, else a 1-d array.
        """
        single = np.ndim(x) == 0 or (np.ndim(x) == 1 and self.design.shape[1] > 1)
        pts = as_points(x, self.design.shape[1])
        vals = kernel_matrix(pts, self.design, self.spec) @ self.coeffs
        return float(vals[0]) if single else vals


def predict(model: FittedRegressor, x):
    """Functional alias for :meth:`FittedRegressor.predict`."""
    return model.predict(x)


def _solve_spd(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cholesky solve with one jittered retry for near-singular systems."""
    try:
        return sla.cho_solve(sla.cho_factor(A, check_finite=False), b, check_finite=False)
    except np.linalg.LinAlgError:
        jitter = 1e-10 * np.trace(A) / A.shape[0]
        try:
            return sla.cho_solve(
                sla.cho_factor(A + jitter * np.eye(A.shape[0]), check_finite=False),
                b,
                check_finite=False,
            )
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"kernel system factorization failed: {exc}") from None


def _fit_with_gram(K, xs, ys, lam, spec, weights):
    n = ys.shape[0]
    if weights is None:
        A = K + n * lam * np.eye(n)
        coeffs = _solve_spd(A, ys)
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape[0] != n:
            raise ConfigurationError(
                f"weights have {w.shape[0]} entries but there are {n} observations"
            )
        if np.any(w < 0):
            raise ConfigurationError("weights must be nonnegative")
        sw = np.sqrt(w)
        A = sw[:, None] * K * sw[None, :]
        A[np.diag_indices(n)] += n * lam
        z = _solve_spd(A, sw * ys)
        coeffs = sw * z
    if not np.all(np.isfinite(coeffs)):
        raise NumericalError("solver produced non-finite coefficients")
    return FittedRegressor(spec=spec, design=xs, coeffs=coeffs, lam=float(lam))


def fit_wkrr(xs, ys, lam: float, spec: KernelSpec, weights=None) -> FittedRegressor:
    """Fit weighted kernel ridge regression.

    Args:
        xs: covariates, shape (n, d) (or (n,) when d == 1).
        ys: responses, shape (n,).
        lam: smoothing parameter, > 0.
        spec: kernel specification.
        weights: optional nonnegative weights aligned with the observations;
            omitted weights mean the plain unweighted solve (K + n lam I) c = y.
    """
    if not lam > 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    pts = as_points(xs, spec.dim)
    y = np.asarray(ys, dtype=float).reshape(-1)
    K = gram_matrix(pts, spec)
    return _fit_with_gram(K, pts, y, lam, spec, weights)


def _gram_eigensystem(xs, ys, spec):
    pts = as_points(xs, spec.dim)
    y = np.asarray(ys, dtype=float).reshape(-1)
    K = gram_matrix(pts, spec)
    evals, evecs = sla.eigh(K, driver="evd", check_finite=False)
    # PSD up to round-off; clamp so shrinkage factors stay in (0, 1].
    return np.clip(evals, 0.0, None), evecs.T @ y


def _gcv_from_eigensystem(evals, zy, lam):
    n = zy.shape[0]
    shrink = (n * lam) / (evals + n * lam)
    rss = float(np.sum((shrink * zy) ** 2))
    trace = float(np.sum(shrink))
    if trace <= 0:
        return float("inf")
    return n * rss / trace**2


def gcv_score(xs, ys, lam: float, spec: KernelSpec) -> float:
    """Generalized cross-validation score of the unit-weight fit.

    GCV(lambda) = n ||(I - A) y||^2 / tr(I - A)^2 with the smoother matrix
    A = K (K + n lambda I)^{-1}.
    """
    if not lam > 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    evals, zy = _gram_eigensystem(xs, ys, spec)
    return _gcv_from_eigensystem(evals, zy, lam)


def select_lambda_gcv(xs, ys, spec: KernelSpec, grid=None) -> float:
    """Pick the grid point minimizing GCV; ties break toward the larger lambda."""
    grid = DEFAULT_LAMBDA_GRID if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ConfigurationError("lambda grid is empty")
    if np.any(grid <= 0):
        raise ConfigurationError("lambda grid entries must be positive")
    evals, zy = _gram_eigensystem(xs, ys, spec)
    best_lam = None
    best_score = np.inf
    for lam in np.sort(grid):
        score = _gcv_from_eigensystem(evals, zy, float(lam))
        if score <= best_score:
            best_score = score
            best_lam = float(lam)
    return best_lam
