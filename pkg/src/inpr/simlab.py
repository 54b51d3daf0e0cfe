"""Simulation laboratory: synthetic settings, error metrics, Monte Carlo runners.

The two built-in settings share one curve family,

    f(x) = 3 sin(2 pi (x1 - tau)) - exp(x1) + x1^2              (dim 1)
    f(x) = 3 sin(2 pi (x1 - tau)) - exp(x1) + (x1 - x2)^2       (dim 2)

with covariates uniform on the unit cube and Gaussian noise whose
variance is calibrated so the signal-to-noise ratio Var f / sigma^2 hits
a requested level.  The target population has tau = 0; a single source
population carries the similarity offset tau.

Experiment runners draw seeded replications of (target, source) data,
fit the distribution-shift estimator (plain target-only ridge when the
source/target size ratio is zero), and reduce to MISE or bootstrap
coverage tables with Monte Carlo standard errors.  Because the two-step
estimator halves whatever it receives, positive-ratio replications draw
blocks of twice the labeled sizes so each stage consumes n0 target and
n1 source points.  Replications run in a process pool; per-cell seeds
derive from (seed, ratio index, rep), so results are independent of
scheduling and of the bootstrap size B.
"""

from __future__ import annotations

import csv
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .bootstrap import bootstrap_ensemble, global_region, pointwise_ci_grid, region_contains
from .data import MultiSourceData, SampleSet
from .errors import ConfigurationError
from .kernels import PeriodicSobolev, as_points
from .ridge import DEFAULT_LAMBDA_GRID, fit_wkrr, select_lambda_gcv
from .shift import fit_distribution_shift

REPORT_COLUMNS = ("setting", "tau", "n0", "ratio", "statistic", "value", "mc_stderr", "reps", "seed")


@dataclass(frozen=True)
class SimSetting:
    """Synthetic-data family: covariate dimension (1 or 2) and target SNR."""

    dim: int = 1
    snr: float = 10.0

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ConfigurationError(f"dim must be 1 or 2, got {self.dim}")
        if not self.snr > 0:
            raise ConfigurationError(f"snr must be positive, got {self.snr}")

    @property
    def name(self) -> str:
        return f"s{self.dim}"


def truth(setting: SimSetting, tau: float, x):
    """True mean function of the population with similarity offset ``tau``."""
    single = np.ndim(x) == 0 or (np.ndim(x) == 1 and setting.dim > 1)
    pts = as_points(x, setting.dim)
    x1 = pts[:, 0]
    vals = 3.0 * np.sin(2.0 * np.pi * (x1 - tau)) - np.exp(x1)
    if setting.dim == 1:
        vals = vals + x1**2
    else:
        vals = vals + (x1 - pts[:, 1]) ** 2
    return float(vals[0]) if single else vals


def snr_sigma2(
    setting: SimSetting,
    tau0: float = 0.0,
    nodes: int = 200,
    fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> float:
    """Noise variance giving the requested SNR against the target curve.

    sigma^2 = Var_{X ~ U([0,1]^d)} f(X) / snr, with the variance computed by
    tensor Gauss-Legendre quadrature (``nodes`` points per axis).  ``fn``
    substitutes a custom curve (testing hook).
    """
    if nodes < 200:
        raise ConfigurationError("quadrature needs at least 200 nodes per axis")
    f = (lambda pts: truth(setting, tau0, pts)) if fn is None else fn
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = (x + 1.0) / 2.0
    w = w / 2.0
    if setting.dim == 1:
        vals = f(x.reshape(-1, 1))
        mean = float(w @ vals)
        msq = float(w @ (vals * vals))
    else:
        g1, g2 = np.meshgrid(x, x, indexing="ij")
        pts = np.column_stack([g1.ravel(), g2.ravel()])
        vals = f(pts)
        ww = np.outer(w, w).ravel()
        mean = float(ww @ vals)
        msq = float(ww @ (vals * vals))
    return (msq - mean * mean) / setting.snr


def generate(
    setting: SimSetting,
    tau: float,
    n: int,
    sigma2: float,
    rng: np.random.Generator,
    source_id: int = 0,
) -> SampleSet:
    """Draw n observations: uniform covariates, curve value plus N(0, sigma2) noise."""
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    if sigma2 < 0:
        raise ConfigurationError(f"sigma2 must be >= 0, got {sigma2}")
    xs = rng.random((n, setting.dim))
    ys = truth(setting, tau, xs) + rng.normal(0.0, math.sqrt(sigma2), n)
    return SampleSet(source_id, xs, ys)


def ise(model, setting: SimSetting, tau0: float = 0.0, grid_size: Optional[int] = None) -> float:
    """Integrated squared error of ``model`` against the target curve.

    Midpoint rule on a tensor grid (default 1000 points for dim 1, 100 per
    axis for dim 2); ``model`` only needs a ``predict`` method.
    """
    g = grid_size if grid_size is not None else (1000 if setting.dim == 1 else 100)
    if g < 10:
        raise ConfigurationError(f"grid_size must be >= 10, got {g}")
    mids = (np.arange(g) + 0.5) / g
    if setting.dim == 1:
        pts = mids.reshape(-1, 1)
    else:
        g1, g2 = np.meshgrid(mids, mids, indexing="ij")
        pts = np.column_stack([g1.ravel(), g2.ravel()])
    diff = np.asarray(model.predict(pts), dtype=float) - truth(setting, tau0, pts)
    return float(np.mean(diff * diff))


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment: data sizes, similarity, bootstrap and seeds."""

    setting: SimSetting
    n0: int
    ratios: tuple
    tau_source: float
    reps: int
    seed: int
    B: int = 200
    alpha: float = 0.05
    lambda_grid: tuple = tuple(DEFAULT_LAMBDA_GRID)
    eval_grid_size: int = 21
    ise_grid_size: Optional[int] = None
    kernel_order: int = 2
    gcv: str = "pooled"

    def __post_init__(self) -> None:
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        object.__setattr__(self, "lambda_grid", tuple(float(g) for g in self.lambda_grid))
        if self.n0 < 10:
            raise ConfigurationError(f"n0 must be >= 10, got {self.n0}")
        if self.reps < 1:
            raise ConfigurationError(f"reps must be >= 1, got {self.reps}")
        if not self.ratios:
            raise ConfigurationError("ratios must be nonempty")
        if any(r < 0 for r in self.ratios):
            raise ConfigurationError("ratios must be >= 0")
        if not 0.0 <= self.tau_source <= 0.5:
            raise ConfigurationError(f"tau_source must be in [0, 0.5], got {self.tau_source}")
        if not 0 < self.alpha < 1:
            raise ConfigurationError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.B < 1:
            raise ConfigurationError(f"B must be >= 1, got {self.B}")
        if not self.lambda_grid or any(g <= 0 for g in self.lambda_grid):
            raise ConfigurationError("lambda_grid must be nonempty and positive")
        if self.eval_grid_size < 3:
            raise ConfigurationError("eval_grid_size must be >= 3")
        if self.gcv not in ("pooled", "target"):
            raise ConfigurationError(f"gcv policy must be 'pooled' or 'target', got {self.gcv!r}")
        if self.seed < 0:
            raise ConfigurationError("seed must be >= 0")
        for r in self.ratios:
            if r > 0 and _source_size(r, self.n0) < 1:
                raise ConfigurationError(
                    f"ratio {r} rounds to an empty source sample at n0={self.n0}"
                )

    @property
    def kernel(self) -> PeriodicSobolev:
        return PeriodicSobolev(order=self.kernel_order, dim=self.setting.dim)


def _source_size(ratio: float, n0: int) -> int:
    return int(round(ratio * n0))


@dataclass(frozen=True)
class ReportRow:
    setting: str
    tau: float
    n0: int
    ratio: float
    statistic: str
    value: float
    mc_stderr: float
    reps: int
    seed: int


@dataclass(frozen=True)
class ExperimentReport:
    """Tabular experiment output; one row per (cell, statistic)."""

    rows: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))
        if any(r.mc_stderr < 0 for r in self.rows):
            raise ConfigurationError("mc_stderr must be >= 0")

    def value_of(self, statistic: str, ratio: Optional[float] = None, n0: Optional[int] = None):
        """Look up (value, mc_stderr) of a unique matching row."""
        hits = [
            r
            for r in self.rows
            if r.statistic == statistic
            and (ratio is None or r.ratio == ratio)
            and (n0 is None or r.n0 == n0)
        ]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {statistic!r} ratio={ratio} n0={n0}")
        return hits[0].value, hits[0].mc_stderr

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(REPORT_COLUMNS)
            for r in self.rows:
                writer.writerow(
                    [
                        r.setting,
                        repr(float(r.tau)),
                        r.n0,
                        repr(float(r.ratio)),
                        r.statistic,
                        repr(float(r.value)),
                        repr(float(r.mc_stderr)),
                        r.reps,
                        r.seed,
                    ]
                )


def _data_rng(seed: int, ratio_idx: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=(seed, ratio_idx, rep, 0)))


def _bootstrap_seed(seed: int, ratio_idx: int, rep: int) -> int:
    ss = np.random.SeedSequence(entropy=(seed, ratio_idx, rep, 1))
    return int(ss.generate_state(1, np.uint64)[0])


def _simulate_data(cell, rng: np.random.Generator) -> MultiSourceData:
    """Draw one replication's data block.

    Ratio-0 cells draw n0 target points and fit them directly.  Two-step
    cells draw 2*n0 target and 2*n1 source points: the pipeline splits each
    block in half, so every stage consumes the labeled sizes, realizing the
    original-plus-additional data model behind the two-step estimator.
    """
    if cell.n1 == 0:
        return MultiSourceData(
            (generate(cell.setting, 0.0, cell.n0, cell.sigma2, rng, source_id=0),)
        )
    target = generate(cell.setting, 0.0, 2 * cell.n0, cell.sigma2, rng, source_id=0)
    source = generate(
        cell.setting, cell.tau_source, 2 * cell.n1, cell.sigma2, rng, source_id=1
    )
    return MultiSourceData((target, source))


def _select_lambda(data: MultiSourceData, cell) -> float:
    spec = PeriodicSobolev(order=cell.kernel_order, dim=cell.setting.dim)
    if cell.gcv == "target" or data.n_sources == 0:
        xs, ys = data.target.xs, data.target.ys
    else:
        xs, ys = data.flattened()
    return select_lambda_gcv(xs, ys, spec, np.asarray(cell.lambda_grid))


@dataclass(frozen=True)
class _MiseCell:
    setting: SimSetting
    n0: int
    n1: int
    tau_source: float
    sigma2: float
    lambda_grid: tuple
    kernel_order: int
    gcv: str
    ise_grid_size: Optional[int]
    seed: int
    ratio_idx: int
    rep: int


def _run_mise_cell(cell: _MiseCell) -> float:
    # Single-threaded BLAS inside cells keeps results identical for any
    # process-pool width.
    with threadpool_limits(limits=1):
        rng = _data_rng(cell.seed, cell.ratio_idx, cell.rep)
        data = _simulate_data(cell, rng)
        spec = PeriodicSobolev(order=cell.kernel_order, dim=cell.setting.dim)
        lam = _select_lambda(data, cell)
        if cell.n1 == 0:
            model = fit_wkrr(data.target.xs, data.target.ys, lam, spec)
        else:
            model = fit_distribution_shift(data, lam, spec, seed=cell.seed)
        return ise(model, cell.setting, 0.0, cell.ise_grid_size)


@dataclass(frozen=True)
class _CoverageCell:
    setting: SimSetting
    n0: int
    n1: int
    tau_source: float
    sigma2: float
    lambda_grid: tuple
    kernel_order: int
    gcv: str
    B: int
    alpha: float
    eval_grid_size: int
    seed: int
    ratio_idx: int
    rep: int


def _run_coverage_cell(cell: _CoverageCell):
    with threadpool_limits(limits=1):
        rng = _data_rng(cell.seed, cell.ratio_idx, cell.rep)
        data = _simulate_data(cell, rng)
        spec = PeriodicSobolev(order=cell.kernel_order, dim=cell.setting.dim)
        lam = _select_lambda(data, cell)
        mode = "cs" if cell.n1 == 0 else "ds"
        ens = bootstrap_ensemble(
            data,
            lam,
            spec,
            B=cell.B,
            mode=mode,
            seed=_bootstrap_seed(cell.seed, cell.ratio_idx, cell.rep),
        )
        grid = np.linspace(0.0, 1.0, cell.eval_grid_size)
        f_true = truth(cell.setting, 0.0, grid.reshape(-1, 1))
        _, lower, upper = pointwise_ci_grid(ens, grid.reshape(-1, 1), cell.alpha)
        covered = (lower <= f_true) & (f_true <= upper)
        region = global_region(ens, cell.alpha)
        truth_on_design = truth(cell.setting, 0.0, ens.design)
        region_covered = region_contains(region, truth_on_design, ens.design_base_values())
        return covered, region_covered


def _pool_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    ctx = multiprocessing.get_context("fork")
    chunk = max(1, len(items) // (threads * 8))
    with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def run_mise_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Mean ISE per source/target size ratio, with Monte Carlo standard errors.

    Ratio 0 is the target-only baseline: n0 target points fitted directly
    with no splitting.  Positive ratios run the two-step fit on blocks of
    2*n0 and 2*n1 points so that each stage sees n0 target and n1 source
    observations (see :func:`_simulate_data`).
    """
    sigma2 = snr_sigma2(cfg.setting)
    cells = [
        _MiseCell(
            setting=cfg.setting,
            n0=cfg.n0,
            n1=_source_size(r, cfg.n0),
            tau_source=cfg.tau_source,
            sigma2=sigma2,
            lambda_grid=cfg.lambda_grid,
            kernel_order=cfg.kernel_order,
            gcv=cfg.gcv,
            ise_grid_size=cfg.ise_grid_size,
            seed=cfg.seed,
            ratio_idx=ridx,
            rep=rep,
        )
        for ridx, r in enumerate(cfg.ratios)
        for rep in range(cfg.reps)
    ]
    values = _pool_map(_run_mise_cell, cells, threads)
    rows = []
    order = sorted(range(len(cfg.ratios)), key=lambda i: cfg.ratios[i])
    for ridx in order:
        ises = np.array(values[ridx * cfg.reps : (ridx + 1) * cfg.reps])
        stderr = float(np.std(ises, ddof=1) / math.sqrt(cfg.reps)) if cfg.reps > 1 else 0.0
        rows.append(
            ReportRow(
                setting=cfg.setting.name,
                tau=cfg.tau_source,
                n0=cfg.n0,
                ratio=cfg.ratios[ridx],
                statistic="mise",
                value=float(np.mean(ises)),
                mc_stderr=stderr,
                reps=cfg.reps,
                seed=cfg.seed,
            )
        )
    return ExperimentReport(tuple(rows))


def run_coverage_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Pointwise CI and global-region coverage of the true target curve.

    Emits one row per evaluation point plus interior-averaged and
    interior-minimum pointwise coverage and the region coverage.  Interior
    means the evaluation grid without its two endpoints, which avoids
    boundary artifacts in the summary statistics.
    """
    if cfg.B < 50:
        raise ConfigurationError(f"coverage experiments need B >= 50, got {cfg.B}")
    if cfg.setting.dim != 1:
        raise ConfigurationError("coverage experiments support dim 1 only")
    sigma2 = snr_sigma2(cfg.setting)
    cells = [
        _CoverageCell(
            setting=cfg.setting,
            n0=cfg.n0,
            n1=_source_size(r, cfg.n0),
            tau_source=cfg.tau_source,
            sigma2=sigma2,
            lambda_grid=cfg.lambda_grid,
            kernel_order=cfg.kernel_order,
            gcv=cfg.gcv,
            B=cfg.B,
            alpha=cfg.alpha,
            eval_grid_size=cfg.eval_grid_size,
            seed=cfg.seed,
            ratio_idx=ridx,
            rep=rep,
        )
        for ridx, r in enumerate(cfg.ratios)
        for rep in range(cfg.reps)
    ]
    results = _pool_map(_run_coverage_cell, cells, threads)
    grid = np.linspace(0.0, 1.0, cfg.eval_grid_size)
    rows = []
    order = sorted(range(len(cfg.ratios)), key=lambda i: cfg.ratios[i])
    for ridx in order:
        block = results[ridx * cfg.reps : (ridx + 1) * cfg.reps]
        covered = np.array([b[0] for b in block])  # (reps, G)
        region_hits = np.array([b[1] for b in block], dtype=float)

        def _row(stat, vals):
            return ReportRow(
                setting=cfg.setting.name,
                tau=cfg.tau_source,
                n0=cfg.n0,
                ratio=cfg.ratios[ridx],
                statistic=stat,
                value=float(np.mean(vals)),
                mc_stderr=float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
                if len(vals) > 1
                else 0.0,
                reps=cfg.reps,
                seed=cfg.seed,
            )

        for j, x in enumerate(grid):
            rows.append(_row(f"coverage_x={x:g}", covered[:, j].astype(float)))
        interior = covered[:, 1:-1].astype(float)
        rows.append(_row("coverage_avg", interior.mean(axis=1)))
        point_rates = interior.mean(axis=0)
        rows.append(
            ReportRow(
                setting=cfg.setting.name,
                tau=cfg.tau_source,
                n0=cfg.n0,
                ratio=cfg.ratios[ridx],
                statistic="coverage_min",
                value=float(point_rates.min()),
                mc_stderr=0.0,
                reps=cfg.reps,
                seed=cfg.seed,
            )
        )
        rows.append(_row("region_coverage", region_hits))
    return ExperimentReport(tuple(rows))


def run_rate_experiment(
    setting: SimSetting,
    ns: Sequence[int],
    reps: int,
    seed: int,
    lambda_grid=None,
    ise_grid_size: Optional[int] = None,
    kernel_order: int = 2,
    threads: int = 1,
):
    """Target-only MISE across sample sizes plus the log-log rate slope.

    Returns (report, slope); the slope is the least-squares fit of
    log(mise) on log(n).
    """
    from .diagnostics import rate_slope

    ns = [int(n) for n in ns]
    if len(ns) < 3:
        raise ConfigurationError("rate experiments need at least 3 sample sizes")
    grid = tuple(float(g) for g in (DEFAULT_LAMBDA_GRID if lambda_grid is None else lambda_grid))
    sigma2 = snr_sigma2(setting)
    cells = [
        _MiseCell(
            setting=setting,
            n0=n,
            n1=0,
            tau_source=0.0,
            sigma2=sigma2,
            lambda_grid=grid,
            kernel_order=kernel_order,
            gcv="target",
            ise_grid_size=ise_grid_size,
            seed=seed,
            ratio_idx=nidx,
            rep=rep,
        )
        for nidx, n in enumerate(ns)
        for rep in range(reps)
    ]
    values = _pool_map(_run_mise_cell, cells, threads)
    rows = []
    mise_by_n = []
    for nidx, n in enumerate(ns):
        ises = np.array(values[nidx * reps : (nidx + 1) * reps])
        mise = float(np.mean(ises))
        mise_by_n.append((n, mise))
        rows.append(
            ReportRow(
                setting=setting.name,
                tau=0.0,
                n0=n,
                ratio=0.0,
                statistic="mise",
                value=mise,
                mc_stderr=float(np.std(ises, ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0,
                reps=reps,
                seed=seed,
            )
        )
    return ExperimentReport(tuple(rows)), rate_slope(mise_by_n)
