"""End-to-end acceptance criteria.

One test per criterion, each printing a PASS/FAIL line (run with ``-s`` to
see them live).  Monte Carlo runtime budgets assume an 8-thread reference
host; on smaller machines they are scaled by 8 / available-threads.

Run:  pytest tests/test_acceptance.py -v -s
"""

import json
import math
import os
import time

import numpy as np
import pytest
from click.testing import CliRunner
from scipy import stats

from inpr.bootstrap import MultiplierDistribution, bootstrap_ensemble, sample_multipliers
from inpr.cli import main
from inpr.data import MultiSourceData
from inpr.diagnostics import balance_check
from inpr.kernels import PeriodicSobolev, gram_matrix, periodic_sobolev_1d
from inpr.ridge import fit_wkrr, select_lambda_gcv
from inpr.simlab import (
    ExperimentConfig,
    SimSetting,
    generate,
    run_mise_experiment,
    run_rate_experiment,
    snr_sigma2,
)

CPU = os.cpu_count() or 1
THREADS = min(8, CPU)


def scaled(seconds: float) -> float:
    return seconds * max(1.0, 8.0 / THREADS)


def report(num: int, name: str, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line, flush=True)
    assert ok, line


def fourier_kernel(s, t, order, terms=10**5):
    v = np.arange(1, terms + 1, dtype=float)
    return 1.0 + np.sum(2.0 * np.cos(2.0 * np.pi * v * (s - t)) / (2.0 * np.pi * v) ** (2 * order))


@pytest.mark.acceptance
def test_c01_multiplier_law():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240801)
    w = sample_multipliers(10**6, MultiplierDistribution.PIECEWISE, rng)
    mean, var, below = w.mean(), w.var(ddof=1), (w <= 1.0).mean()
    elapsed = time.perf_counter() - t0
    ok = (
        abs(mean - 1.0) < 0.005
        and abs(var - 1.0) < 0.01
        and abs(below - 0.75) < 0.002
        and elapsed < 5.0
    )
    report(1, "multiplier-law", ok,
           f"mean={mean:.4f} var={var:.4f} P(w<=1)={below:.4f} {elapsed:.1f}s")


@pytest.mark.acceptance
def test_c02_kernel_fourier_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        s, t = rng.random(2)
        for order in (1, 2):
            err = abs(periodic_sobolev_1d(s, t, order) - fourier_kernel(s, t, order))
            worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 10.0
    report(2, "kernel-oracle", ok, f"max_abs_err={worst:.2e} {elapsed:.1f}s")


@pytest.mark.acceptance
def test_c03_solver_exactness():
    spec = PeriodicSobolev(order=2, dim=1)
    # independent oracle: Fourier-series kernel entries, direct 2x2 solve
    k11 = fourier_kernel(0.0, 0.0, 2)
    k12 = fourier_kernel(0.0, 0.5, 2)
    expected = np.linalg.solve(
        np.array([[k11, k12], [k12, k11]]) + 0.2 * np.eye(2), [1.0, -1.0]
    )
    fit = fit_wkrr([[0.0], [0.5]], [1.0, -1.0], 0.1, spec)
    coef_err = float(np.max(np.abs(fit.coeffs - expected)))
    lit_err = float(np.max(np.abs(fit.coeffs - np.array([4.93573, -4.93573]))))

    rng = np.random.default_rng(404)
    worst_resid = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 201))
        xs = rng.random((n, 1))
        ys = rng.normal(size=n) * rng.uniform(0.5, 3.0)
        lam = 10 ** rng.uniform(-6, 0)
        w = None
        kind = rng.integers(0, 3)
        if kind == 1:
            w = rng.uniform(0.0, 4.0, size=n)
        elif kind == 2:
            w = rng.uniform(0.5, 2.0, size=n)
            w[rng.random(n) < 0.2] = 0.0
        f = fit_wkrr(xs, ys, lam, spec, weights=w)
        K = gram_matrix(xs, spec)
        W = np.ones(n) if w is None else w
        resid = (W[:, None] * K + n * lam * np.eye(n)) @ f.coeffs - W * ys
        worst_resid = max(worst_resid, float(np.max(np.abs(resid)) / (1.0 + np.max(np.abs(ys)))))

    ok = coef_err < 1e-5 and lit_err < 1e-5 and worst_resid < 1e-8
    report(3, "solver-exactness", ok,
           f"coef_err={coef_err:.2e} vs_literal={lit_err:.2e} worst_resid={worst_resid:.2e}")


@pytest.mark.acceptance
def test_c04_spectral_decay():
    t0 = time.perf_counter()
    n = 256
    pts = np.linspace(0.0, 1.0, n).reshape(-1, 1)
    K = gram_matrix(pts, PeriodicSobolev(order=2, dim=1))
    evals = np.sort(np.linalg.eigvalsh(K / n))[::-1]
    ranks = np.arange(3, 21)
    slope = float(np.polyfit(np.log(ranks), np.log(evals[ranks - 1]), 1)[0])
    elapsed = time.perf_counter() - t0
    ok = -4.6 <= slope <= -3.4 and elapsed < 5.0
    report(4, "spectral-decay", ok, f"slope={slope:.3f} {elapsed:.1f}s")


@pytest.mark.acceptance
def test_c05_convergence_rate():
    t0 = time.perf_counter()
    _, slope = run_rate_experiment(
        SimSetting(dim=1), ns=(100, 200, 400, 800, 1600), reps=200, seed=2024,
        threads=THREADS,
    )
    elapsed = time.perf_counter() - t0
    ok = -0.95 <= slope <= -0.65 and elapsed < scaled(600.0)
    report(5, "convergence-rate", ok,
           f"slope={slope:.3f} target=[-0.95,-0.65] {elapsed:.0f}s")


@pytest.mark.acceptance
def test_c06_mise_u_shape():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(
        setting=SimSetting(dim=1), n0=200, ratios=(0.0, 0.5, 8.0),
        tau_source=0.15, reps=500, seed=99,
    )
    rep = run_mise_experiment(cfg, threads=THREADS)
    m0, s0 = rep.value_of("mise", ratio=0.0)
    m5, s5 = rep.value_of("mise", ratio=0.5)
    m8, s8 = rep.value_of("mise", ratio=8.0)
    elapsed = time.perf_counter() - t0
    left_gap = (m0 - m5) / math.hypot(s0, s5)
    right_gap = (m8 - m5) / math.hypot(s8, s5)
    ok = left_gap >= 2.0 and right_gap >= 2.0 and elapsed < scaled(900.0)
    report(6, "mise-u-shape", ok,
           f"mise(0)={m0:.5f} mise(0.5)={m5:.5f} mise(8)={m8:.5f} "
           f"left={left_gap:.1f}se right={right_gap:.1f}se {elapsed:.0f}s")


@pytest.fixture(scope="module")
def coverage_artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("coverage_run")
    t0 = time.perf_counter()
    result = CliRunner().invoke(
        main,
        ["coverage", "--n0", "200", "--ratios", "0.25", "--tau", "0.05",
         "--reps", "300", "--B", "200", "--alpha", "0.05", "--seed", "314",
         "--threads", str(THREADS), "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    elapsed = time.perf_counter() - t0
    table = {}
    lines = (out / "report.csv").read_text().strip().split("\n")
    for line in lines[1:]:
        parts = line.split(",")
        table[parts[4]] = float(parts[5])
    return table, elapsed


@pytest.mark.acceptance
def test_c07_pointwise_coverage(coverage_artifacts):
    table, elapsed = coverage_artifacts
    avg = table["coverage_avg"]
    ok = 0.90 <= avg <= 0.98 and elapsed < scaled(1800.0)
    report(7, "pointwise-coverage", ok,
           f"coverage_avg={avg:.4f} target=[0.90,0.98] {elapsed:.0f}s")


@pytest.mark.acceptance
def test_c08_region_coverage(coverage_artifacts):
    table, _ = coverage_artifacts
    cov = table["region_coverage"]
    ok = 0.90 <= cov <= 0.99
    report(8, "region-coverage", ok, f"region_coverage={cov:.4f} target=[0.90,0.99]")


@pytest.mark.acceptance
def test_c09_local_bootstrap_clt():
    t0 = time.perf_counter()
    setting = SimSetting(dim=1)
    spec = PeriodicSobolev(order=2, dim=1)
    rng = np.random.default_rng((1000, 0))
    target = generate(setting, 0.0, 1000, snr_sigma2(setting), rng, 0)
    lam = select_lambda_gcv(target.xs, target.ys, spec)
    ens = bootstrap_ensemble(
        MultiSourceData((target,)), lam, spec, B=2000, mode="cs", seed=17,
        threads=THREADS,
    )
    x = np.array([[0.5]])
    deltas = ens.replicate_values(x)[0] - ens.base_values(x)[0]
    z = deltas / np.std(deltas, ddof=1)
    ks = float(stats.kstest(z, "norm").statistic)
    elapsed = time.perf_counter() - t0
    ok = ks < 0.1
    report(9, "bootstrap-clt", ok, f"ks={ks:.4f} B=2000 {elapsed:.0f}s")


@pytest.mark.acceptance
def test_c10_manifest_determinism(tmp_path):
    args = ["simulate", "--n0", "20", "--ratios", "0,0.5", "--tau", "0.1",
            "--reps", "2", "--seed", "11", "--ise-grid-size", "200",
            "--threads", "2"]
    runner = CliRunner()
    out1, out2 = tmp_path / "a", tmp_path / "b"
    r1 = runner.invoke(main, args + ["--out", str(out1)])
    assert r1.exit_code == 0, r1.output
    r2 = runner.invoke(
        main, ["simulate", "--config", str(out1 / "manifest.json"), "--out", str(out2)]
    )
    assert r2.exit_code == 0, r2.output
    same_report = (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()
    same_manifest = (
        (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()
    )
    ok = same_report and same_manifest
    report(10, "manifest-determinism", ok,
           f"report_identical={same_report} manifest_identical={same_manifest}")


@pytest.mark.acceptance
def test_c11_balance_advisory():
    adv = balance_check([200, 1600], beta=2.0, dim=1, slack=1.0)
    threshold_ok = adv.threshold == pytest.approx(1800.0**0.875, rel=1e-12)
    ok = (
        adv.exponent.value == pytest.approx(0.875)
        and adv.threshold > 200
        and threshold_ok
        and adv.flagged == (0,)
        and adv.passes[1]
    )
    report(11, "balance-advisory", ok,
           f"exponent={adv.exponent.value:.3f} threshold={adv.threshold:.1f} "
           f"flagged={adv.flagged}")
