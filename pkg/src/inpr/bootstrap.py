"""Multiplier bootstrap: weights, replicate ensembles, intervals and regions.

Replicate fits reuse the base fit's design points, Gram matrix and
smoothing parameter; only the observation weights change.  Pointwise
confidence intervals come from order statistics of the replicate-minus-base
deltas at a point; the global confidence region is the empirical-L2 ball
around the base fit whose radius is an upper percentile of the replicate
deltas' empirical norms.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import MultiSourceData
from .errors import ConfigurationError, InputError, ShapeError
from .kernels import KernelSpec, as_points, gram_matrix, kernel_matrix
from .ridge import FittedRegressor, _fit_with_gram
from .shift import OffsetSet, calibrate, estimate_offsets, split

#: Spawn-key tag for replicate weight streams (seed mixing).
_REPLICATE_STREAM = 1


class MultiplierDistribution(enum.Enum):
    """Bootstrap weight law.

    PIECEWISE is the mean-one variance-one density with value 3/4 on [0, 1]
    and 1/12 on (1, 4]; UNIT is the degenerate law of constant weights 1.
    """

    PIECEWISE = "piecewise"
    UNIT = "unit"


def multiplier_inverse_cdf(u, dist: MultiplierDistribution = MultiplierDistribution.PIECEWISE):
    """Map uniforms in [0, 1] to multiplier weights by inverse CDF."""
    u = np.asarray(u, dtype=float)
    if dist is MultiplierDistribution.UNIT:
        return np.ones_like(u)
    return np.where(u <= 0.75, 4.0 * u / 3.0, 1.0 + 12.0 * (u - 0.75))


def sample_multipliers(
    count: int,
    dist: MultiplierDistribution = MultiplierDistribution.PIECEWISE,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Draw iid multiplier weights.

    Uses the inverse-CDF transform of uniforms so the number of random
    variates consumed is fixed, keeping replicate streams reproducible.
    """
    if count < 1:
        raise InputError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng() if rng is None else rng
    return multiplier_inverse_cdf(rng.random(count), dist)


def replicate_seed_sequence(seed: int, b: int) -> np.random.SeedSequence:
    """Independent, individually re-runnable stream for replicate b."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(_REPLICATE_STREAM, int(b)))


@dataclass(frozen=True)
class PointwiseCI:
    """Bootstrap percentile confidence interval for f(x)."""

    x: np.ndarray
    lower: float
    upper: float
    alpha: float


@dataclass(frozen=True)
class GlobalRegion:
    """Empirical-L2 ball {f : ||f - center||_ep <= radius} on the design."""

    center: FittedRegressor
    radius: float
    alpha: float


class BootstrapEnsemble:
    """Base fit plus B replicate fits sharing design, kernel and lambda."""

    def __init__(self, base: FittedRegressor, replicates, mode: str, design: np.ndarray, gram: np.ndarray):
        self.base = base
        self.replicates = tuple(replicates)
        self.mode = mode
        self.design = design
        self._gram = gram
        self._coeffs = np.column_stack([r.coeffs for r in self.replicates])
        self._design_values = None

    @property
    def n_replicates(self) -> int:
        return len(self.replicates)

    def replicate_values(self, x) -> np.ndarray:
        """Replicate predictions at points x, shape (n_points, B)."""
        pts = as_points(x, self.design.shape[1])
        return kernel_matrix(pts, self.design, self.base.spec) @ self._coeffs

    def base_values(self, x) -> np.ndarray:
        pts = as_points(x, self.design.shape[1])
        return self.base.predict(pts)

    def design_replicate_values(self) -> np.ndarray:
        """Replicate predictions on the shared design, shape (n_design, B)."""
        if self._design_values is None:
            self._design_values = self._gram @ self._coeffs
        return self._design_values

    def design_base_values(self) -> np.ndarray:
        return self._gram @ self.base.coeffs


def bootstrap_ensemble(
    data: MultiSourceData,
    lam: float,
    spec: KernelSpec,
    B: int,
    mode: str = "cs",
    seed: int = 0,
    dist: MultiplierDistribution = MultiplierDistribution.PIECEWISE,
    shuffle: bool = False,
    threads: int = 1,
) -> BootstrapEnsemble:
    """Build the multiplier-bootstrap ensemble.

    The base fit uses unit weights.  Replicate b draws fresh multipliers
    from its own seed stream (mixed from ``seed`` and b) and refits.  In
    distribution-shift mode the split and the Step-1 offsets are computed
    once and shared by the base and every replicate; multipliers enter only
    through the Step-2 weighted fit.
    """
    if B < 1:
        raise ConfigurationError(f"B must be >= 1, got {B}")
    if mode not in ("cs", "ds"):
        raise ConfigurationError(f"mode must be 'cs' or 'ds', got {mode!r}")
    if mode == "ds":
        parts = split(data, seed=seed, shuffle=shuffle)
        if data.n_sources == 0:
            offsets = OffsetSet.zero(0)
        else:
            offsets = estimate_offsets(parts.first_half, lam, spec)
        work = calibrate(parts.second_half, offsets)
    else:
        work = data
    xs, ys = work.flattened()
    pts = as_points(xs, spec.dim)
    K = gram_matrix(pts, spec)
    base = _fit_with_gram(K, pts, ys, lam, spec, None)
    n = ys.shape[0]

    def one_replicate(b: int) -> FittedRegressor:
        rng = np.random.default_rng(replicate_seed_sequence(seed, b))
        w = sample_multipliers(n, dist, rng)
        return _fit_with_gram(K, pts, ys, lam, spec, w)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            replicates = list(pool.map(one_replicate, range(1, B + 1)))
    else:
        replicates = [one_replicate(b) for b in range(1, B + 1)]
    return BootstrapEnsemble(base, replicates, mode, pts, K)


def _order_stat(sorted_vals: np.ndarray, prob: float) -> float:
    """Inclusive order statistic at rank ceil(prob * B), 1-indexed.

    The tiny slack guards against floating-point round-up of exact integer
    ranks (e.g. 0.025 * 200).
    """
    B = sorted_vals.shape[0]
    rank = math.ceil(prob * B - 1e-9)
    return float(sorted_vals[min(max(rank, 1), B) - 1])


def pointwise_ci(ens: BootstrapEnsemble, x, alpha: float) -> PointwiseCI:
    """Percentile bootstrap interval for the mean function at x.

    With deltas D_b = replicate_b(x) - base(x), the interval is
    (base - q, base - p) where p, q are the alpha/2 and 1 - alpha/2
    percentiles of the deltas.
    """
    if ens.n_replicates < 2:
        raise ConfigurationError("pointwise_ci requires at least 2 replicates")
    if not 0 < alpha < 1:
        raise ConfigurationError(f"alpha must be in (0, 1), got {alpha}")
    pts = as_points(x, ens.design.shape[1])
    if pts.shape[0] != 1:
        raise ShapeError("pointwise_ci expects a single point")
    base = float(ens.base_values(pts)[0])
    deltas = np.sort(ens.replicate_values(pts)[0] - base)
    p = _order_stat(deltas, alpha / 2.0)
    q = _order_stat(deltas, 1.0 - alpha / 2.0)
    return PointwiseCI(x=pts[0], lower=base - q, upper=base - p, alpha=alpha)


def pointwise_ci_grid(ens: BootstrapEnsemble, xs, alpha: float):
    """Vectorized percentile intervals over many points.

    Returns (base, lower, upper) arrays aligned with ``xs``.
    """
    if ens.n_replicates < 2:
        raise ConfigurationError("pointwise_ci_grid requires at least 2 replicates")
    if not 0 < alpha < 1:
        raise ConfigurationError(f"alpha must be in (0, 1), got {alpha}")
    pts = as_points(xs, ens.design.shape[1])
    base = ens.base_values(pts)
    deltas = np.sort(ens.replicate_values(pts) - base[:, None], axis=1)
    B = deltas.shape[1]
    lo_rank = min(max(math.ceil(alpha / 2.0 * B - 1e-9), 1), B) - 1
    hi_rank = min(max(math.ceil((1.0 - alpha / 2.0) * B - 1e-9), 1), B) - 1
    return base, base - deltas[:, hi_rank], base - deltas[:, lo_rank]


def empirical_norm(values) -> float:
    """Empirical L2 norm: root mean square over the pooled design points."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 0:
        raise InputError("empirical_norm requires at least one value")
    return float(np.sqrt(np.mean(v * v)))


def global_region(ens: BootstrapEnsemble, alpha: float) -> GlobalRegion:
    """Confidence region radius: upper 1-alpha percentile of replicate norms."""
    if ens.n_replicates < 2:
        raise ConfigurationError("global_region requires at least 2 replicates")
    if not 0 < alpha < 1:
        raise ConfigurationError(f"alpha must be in (0, 1), got {alpha}")
    diffs = ens.design_replicate_values() - ens.design_base_values()[:, None]
    norms = np.sort(np.sqrt(np.mean(diffs * diffs, axis=0)))
    radius = _order_stat(norms, 1.0 - alpha)
    return GlobalRegion(center=ens.base, radius=radius, alpha=alpha)


def region_contains(region: GlobalRegion, f_on_design, base_on_design) -> bool:
    """Membership test ||f - base||_ep <= radius (boundary inclusive)."""
    f = np.asarray(f_on_design, dtype=float).reshape(-1)
    b = np.asarray(base_on_design, dtype=float).reshape(-1)
    if f.shape != b.shape:
        raise ShapeError(
            f"evaluation vectors must align, got {f.shape} vs {b.shape}"
        )
    return bool(empirical_norm(f - b) <= region.radius)
