"""Computable theory-side diagnostics.

Covers the effective dimension of a spectral eigenvalue law, the
sample-balance advisory relating per-source sizes to the pooled size, the
local variance estimate behind the bootstrap's pointwise spread, and
empirical rate-slope fitting for Monte Carlo convergence checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, InputError, ShapeError, TruncationError
from .ridge import _solve_spd

#: Precondition threshold for the polynomial balance exponent: the exponent
#: is guaranteed < 1 only when beta > (3 + sqrt 5) / 4 * dim.
BALANCE_BETA_FLOOR = (3.0 + math.sqrt(5.0)) / 4.0


@dataclass(frozen=True)
class PolynomialDecay:
    """Eigenvalue law rho_v = v^(2 beta / dim)."""

    beta: float
    dim: int = 1
    truncation: int = 10_000

    def __post_init__(self) -> None:
        if self.beta <= 0 or self.dim < 1:
            raise DomainError("beta must be > 0 and dim >= 1")
        if self.truncation < 10:
            raise DomainError("truncation must be >= 10")


@dataclass(frozen=True)
class ExponentialDecay:
    """Eigenvalue law rho_v = exp(v^beta)."""

    beta: float
    truncation: int = 10_000

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise DomainError("beta must be > 0")
        if self.truncation < 10:
            raise DomainError("truncation must be >= 10")


SpectralModel = Union[PolynomialDecay, ExponentialDecay]


def effective_dimension(lam: float, model: SpectralModel) -> float:
    """Effective dimension h with 1/h = sum_v 1 / (1 + lam * rho_v).

    The polynomial law truncates at ``model.truncation`` terms and adds the
    analytic integral tail bound, which must stay below 1e-6 of the partial
    sum; the exponential law sums until terms drop under 1e-16.
    """
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if isinstance(model, PolynomialDecay):
        p = 2.0 * model.beta / model.dim
        if p <= 1.0:
            raise TruncationError(
                f"eigenvalue exponent 2*beta/dim = {p} <= 1: series not summable"
            )
        v = np.arange(1, model.truncation + 1, dtype=float)
        partial = float(np.sum(1.0 / (1.0 + lam * v**p)))
        tail = model.truncation ** (1.0 - p) / (lam * (p - 1.0))
        if tail >= 1e-6 * partial:
            raise TruncationError(
                f"truncation {model.truncation} too small: tail bound {tail:.3e} "
                f"is not below 1e-6 of the partial sum {partial:.3e}"
            )
        return 1.0 / (partial + tail)
    # Exponential law: terms fall below 1e-16 once lam * exp(v^beta) > 1e16.
    v_stop = (math.log(1e16) - math.log(lam)) ** (1.0 / model.beta)
    if v_stop > model.truncation:
        raise TruncationError(
            f"truncation {model.truncation} too small for lambda={lam}: "
            f"need about {math.ceil(v_stop)} terms"
        )
    v = np.arange(1, min(model.truncation, math.ceil(v_stop) + 1) + 1, dtype=float)
    with np.errstate(over="ignore"):
        terms = 1.0 / (1.0 + lam * np.exp(np.minimum(v**model.beta, 745.0)))
    return 1.0 / float(np.sum(terms))


@dataclass(frozen=True)
class BalanceExponent:
    """Polynomial-law balance exponent with its precondition flag."""

    value: float
    valid: bool
    beta: float
    dim: int


def balance_exponent(beta: float, dim: int) -> BalanceExponent:
    """Exponent e such that every source size should exceed n^e (n pooled).

    e = (4 beta^2 + 10 beta d - d^2) / (4 beta (2 beta + d)).  The result is
    guaranteed below 1 only when beta > (3 + sqrt 5)/4 * d; violating calls
    still return the value but are flagged invalid.
    """
    if beta <= 0 or dim < 1:
        raise DomainError("beta must be > 0 and dim >= 1")
    value = (4.0 * beta**2 + 10.0 * beta * dim - dim**2) / (4.0 * beta * (2.0 * beta + dim))
    return BalanceExponent(
        value=value, valid=beta > BALANCE_BETA_FLOOR * dim, beta=beta, dim=dim
    )


@dataclass(frozen=True)
class BalanceAdvisory:
    """Per-source pass/fail of the heuristic size-balance check."""

    exponent: BalanceExponent
    total_n: int
    threshold: float
    slack: float
    sizes: tuple
    passes: tuple

    @property
    def flagged(self) -> tuple:
        return tuple(m for m, ok in enumerate(self.passes) if not ok)


def balance_check(
    sizes: Sequence[int], beta: float, dim: int, slack: float = 1.0
) -> BalanceAdvisory:
    """Flag sources whose size falls under slack * n^exponent, n = sum sizes.

    The exponent has no theory-supplied constant, so this is a labeled
    heuristic; ``slack`` scales the threshold.
    """
    sizes = tuple(int(s) for s in sizes)
    if not sizes:
        raise InputError("sizes must be nonempty")
    if any(s < 1 for s in sizes):
        raise InputError("sizes must be positive")
    exp = balance_exponent(beta, dim)
    n = sum(sizes)
    threshold = slack * n**exp.value
    passes = tuple(s >= threshold for s in sizes)
    return BalanceAdvisory(
        exponent=exp,
        total_n=n,
        threshold=threshold,
        slack=slack,
        sizes=sizes,
        passes=passes,
    )


def local_variance(residuals, gram_column, n_total: int) -> float:
    """Plug-in local variance (1/n^2) sum_i e_i^2 k_i^2.

    ``residuals`` are observation residuals against the unit-weight base
    fit and ``gram_column`` the matching kernel values at the evaluation
    point; both must have length ``n_total``.
    """
    r = np.asarray(residuals, dtype=float).reshape(-1)
    k = np.asarray(gram_column, dtype=float).reshape(-1)
    if r.shape[0] != n_total or k.shape[0] != n_total:
        raise ShapeError(
            f"residuals ({r.shape[0]}) and gram_column ({k.shape[0]}) "
            f"must both have length n_total={n_total}"
        )
    return float(np.sum(r * r * k * k) / n_total**2)


def equivalent_kernel_column(gram: np.ndarray, kernel_col, lam: float) -> np.ndarray:
    """Ridge-equivalent kernel values at the design points.

    For the penalized problem the kernel acting in the estimator's linear
    representation is not the raw kernel but its ridge-regularized version;
    its column at a point x is n * (K + n lam I)^{-1} k(x) where k(x) holds
    raw kernel values against the design.  This is the column to feed
    :func:`local_variance` when comparing with bootstrap spread.
    """
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    K = np.asarray(gram, dtype=float)
    k = np.asarray(kernel_col, dtype=float).reshape(-1)
    n = K.shape[0]
    if K.shape != (n, n) or k.shape[0] != n:
        raise ShapeError("gram must be (n, n) and kernel_col length n")
    return n * _solve_spd(K + n * lam * np.eye(n), k)


def rate_slope(mise_by_n) -> float:
    """Least-squares slope of log(mise) against log(n).

    Expects >= 3 pairs with distinct sample sizes and positive error values.
    """
    pairs = [(int(n), float(m)) for n, m in mise_by_n]
    if len(pairs) < 3:
        raise InputError("rate_slope needs at least 3 (n, mise) points")
    ns = np.array([p[0] for p in pairs], dtype=float)
    ms = np.array([p[1] for p in pairs], dtype=float)
    if len(set(ns.tolist())) != len(ns):
        raise InputError("sample sizes must be distinct")
    if np.any(ms <= 0):
        raise DomainError("mise values must be positive")
    slope, _ = np.polyfit(np.log(ns), np.log(ms), 1)
    return float(slope)
