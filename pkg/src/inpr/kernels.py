"""Reproducing kernels and Gram-matrix assembly.

Two kernel families are supported:

* :class:`PeriodicSobolev` -- the periodic spline kernel of smoothness
  ``order`` on [0, 1], combined across coordinates by tensor product.
  The one-dimensional kernel has the closed form

      k(s, t) = 1 + sign * B_{2q}({s - t}) / (2q)!

  where q is the order, B_{2q} is the Bernoulli polynomial, {u} is the
  fractional part of u and sign = (-1)^(q-1).  The same kernel is the
  Fourier series 1 + sum_v 2 cos(2 pi v (s-t)) / (2 pi v)^{2q}.
* :class:`Exponential` -- exp(-(||x - x'||_2 / scale)^exponent) on R^d.

All evaluators are vectorized; :func:`gram_matrix` and
:func:`kernel_matrix` build dense kernel matrices from point arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigurationError, DomainError, InputError, ShapeError

# Bernoulli polynomials B_2, B_4, B_6 (np.polyval layout, highest degree first).
_BERNOULLI = {
    1: np.array([1.0, -1.0, 1.0 / 6.0]),
    2: np.array([1.0, -2.0, 1.0, 0.0, -1.0 / 30.0]),
    3: np.array([1.0, -3.0, 2.5, 0.0, -0.5, 0.0, 1.0 / 42.0]),
}
_KERNEL_SIGN = {1: 1.0, 2: -1.0, 3: 1.0}
_FACTORIAL_2Q = {1: 2.0, 2: 24.0, 3: 720.0}

SUPPORTED_ORDERS = tuple(sorted(_BERNOULLI))


@dataclass(frozen=True)
class PeriodicSobolev:
    """Tensor-product periodic Sobolev kernel on [0, 1]^dim.

    ``order`` is the smoothness (supported: 1, 2, 3); inputs must lie in
    the unit cube.
    """

    order: int = 2
    dim: int = 1

    def __post_init__(self) -> None:
        if self.order not in _BERNOULLI:
            raise ConfigurationError(
                f"unsupported periodic Sobolev order {self.order}; "
                f"supported orders: {SUPPORTED_ORDERS}"
            )
        if self.dim < 1:
            raise ConfigurationError(f"dim must be >= 1, got {self.dim}")


@dataclass(frozen=True)
class Exponential:
    """Exponential-type kernel exp(-(||x - x'|| / scale)^exponent) on R^dim."""

    scale: float = 1.0
    exponent: float = 1.0
    dim: int = 1

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ConfigurationError(f"scale must be positive, got {self.scale}")
        if not 0 < self.exponent <= 2:
            raise ConfigurationError(
                f"exponent must be in (0, 2], got {self.exponent}"
            )
        if self.dim < 1:
            raise ConfigurationError(f"dim must be >= 1, got {self.dim}")


KernelSpec = Union[PeriodicSobolev, Exponential]


def _bernoulli_kernel_1d(diff: np.ndarray, order: int) -> np.ndarray:
    # B_{2q} is symmetric about 1/2 on [0, 1], so the kernel depends only on
    # the circular distance |u - round(u)|; evaluating there makes
    # k(s, t) == k(t, s) bit-exact.
    w = np.abs(diff - np.round(diff))
    return 1.0 + _KERNEL_SIGN[order] * np.polyval(_BERNOULLI[order], w) / _FACTORIAL_2Q[order]


def as_points(x, dim: int) -> np.ndarray:
    """Coerce ``x`` to an (n, dim) float array.

    Scalars are a single point (dim must be 1).  A 1-d array is a column of
    points when dim == 1, otherwise a single point of length ``dim``.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ShapeError(f"points must be at most 2-d, got shape {arr.shape}")
    if arr.shape[1] != dim:
        raise ShapeError(f"points have dimension {arr.shape[1]}, expected {dim}")
    return arr


def _check_points(x, spec: KernelSpec) -> np.ndarray:
    pts = as_points(x, spec.dim)
    if isinstance(spec, PeriodicSobolev):
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise DomainError("periodic Sobolev kernel inputs must lie in [0, 1]^d")
    return pts


def periodic_sobolev_1d(s: float, t: float, order: int = 2) -> float:
    """One-dimensional periodic Sobolev kernel k(s, t) for s, t in [0, 1]."""
    if order not in _BERNOULLI:
        raise ConfigurationError(
            f"unsupported order {order}; supported orders: {SUPPORTED_ORDERS}"
        )
    s = float(s)
    t = float(t)
    if not (0.0 <= s <= 1.0 and 0.0 <= t <= 1.0):
        raise DomainError(f"inputs must lie in [0, 1], got s={s}, t={t}")
    return float(_bernoulli_kernel_1d(np.asarray(s - t), order))


def tensor_kernel(x, x2, spec: PeriodicSobolev) -> float:
    """Product of 1-d periodic Sobolev kernels over the coordinates of x, x2."""
    if not isinstance(spec, PeriodicSobolev):
        raise ConfigurationError("tensor_kernel requires a PeriodicSobolev spec")
    a = _check_points(x, spec)
    b = _check_points(x2, spec)
    if a.shape != (1, spec.dim) or b.shape != (1, spec.dim):
        raise ShapeError("tensor_kernel expects single points")
    return float(np.prod(_bernoulli_kernel_1d(a[0] - b[0], spec.order)))


def exponential_kernel(x, x2, spec: Exponential) -> float:
    """Exponential-type kernel value exp(-(||x - x2|| / scale)^exponent)."""
    if not isinstance(spec, Exponential):
        raise ConfigurationError("exponential_kernel requires an Exponential spec")
    a = as_points(x, spec.dim)
    b = as_points(x2, spec.dim)
    dist = float(np.sqrt(np.sum((a[0] - b[0]) ** 2)))
    return float(np.exp(-((dist / spec.scale) ** spec.exponent)))


def kernel_value(x, x2, spec: KernelSpec) -> float:
    """Evaluate the kernel selected by ``spec`` at a single pair of points."""
    if isinstance(spec, PeriodicSobolev):
        return tensor_kernel(x, x2, spec)
    return exponential_kernel(x, x2, spec)


def kernel_matrix(a, b, spec: KernelSpec) -> np.ndarray:
    """Cross kernel matrix with entries K[i, j] = k(a_i, b_j)."""
    pa = _check_points(a, spec)
    pb = _check_points(b, spec)
    diff = pa[:, None, :] - pb[None, :, :]
    if isinstance(spec, PeriodicSobolev):
        return np.prod(_bernoulli_kernel_1d(diff, spec.order), axis=2)
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    return np.exp(-((dist / spec.scale) ** spec.exponent))


def gram_matrix(points, spec: KernelSpec) -> np.ndarray:
    """Symmetric Gram matrix of the kernel on ``points``.

    The result is symmetric by construction; positive semi-definiteness
    holds up to round-off (smallest eigenvalue >= -1e-8 times the spectral
    radius in practice).
    """
    pts = _check_points(points, spec)
    if pts.shape[0] == 0:
        raise InputError("gram_matrix requires at least one point")
    return kernel_matrix(pts, pts, spec)
