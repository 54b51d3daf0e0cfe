"""Command-line front end.

One subcommand per procedure: ``fit`` (pooled or two-step fit, curve on a
grid), ``ci`` (pointwise bootstrap intervals), ``region`` (global
confidence region radius and optional membership test), ``simulate``
(MISE experiments), ``coverage`` (interval/region coverage experiments),
``rate-check`` (target-only convergence slope) and ``diagnose``
(effective dimension and sample-balance advisory).

Configuration comes from an optional JSON file plus flags; flags win.
Every output directory receives a ``manifest.json`` with the resolved
configuration so a run can be reproduced bit-exactly (a manifest is itself
accepted by ``--config``).
"""

from __future__ import annotations

import csv
import functools
import json
import math
from pathlib import Path

import click
import numpy as np

from . import __version__
from .bootstrap import bootstrap_ensemble, global_region, pointwise_ci_grid, region_contains
from .data import MultiSourceData, ingest_csv
from .diagnostics import balance_check, effective_dimension, ExponentialDecay, PolynomialDecay
from .errors import InprError, ParseError
from .kernels import Exponential, KernelSpec, PeriodicSobolev
from .ridge import DEFAULT_LAMBDA_GRID, select_lambda_gcv
from .shift import fit_covariate_shift, fit_distribution_shift
from .simlab import (
    ExperimentConfig,
    SimSetting,
    run_coverage_experiment,
    run_mise_experiment,
    run_rate_experiment,
)


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InprError as exc:
            raise click.ClickException(str(exc))

    return wrapper


def _parse_float_list(value, what: str) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    try:
        return tuple(float(tok) for tok in str(value).split(",") if tok.strip() != "")
    except ValueError:
        raise click.ClickException(f"cannot parse {what} list {value!r}")


def _parse_int_list(value, what: str) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    try:
        return tuple(int(tok) for tok in str(value).split(",") if tok.strip() != "")
    except ValueError:
        raise click.ClickException(f"cannot parse {what} list {value!r}")


def _parse_lambda_grid(text: str) -> tuple:
    """Grid syntax: 'LO:HI:COUNT' (log-spaced) or comma-separated values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise click.ClickException(f"grid must be LO:HI:COUNT, got {text!r}")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        return tuple(np.logspace(math.log10(lo), math.log10(hi), count))
    return _parse_float_list(text, "lambda grid")


def _load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if isinstance(cfg, dict) and "config" in cfg and "command" in cfg:
        cfg = cfg["config"]  # a manifest doubles as a config file
    if not isinstance(cfg, dict):
        raise ParseError(f"{path}: config must be a JSON object")
    return cfg


# Config keys whose click parameter carries a different name.
_PARAM_ALIASES = {"B": "n_boot", "lambda": "lam", "data": "data_path"}


def _resolve_config(ctx: click.Context, config_path, values: dict) -> dict:
    """File values fill in parameters the user left at their defaults."""
    file_cfg = _load_config(config_path) if config_path else {}
    unknown = set(file_cfg) - set(values)
    if unknown:
        raise click.ClickException(f"unknown config keys: {sorted(unknown)}")
    resolved = {}
    for name, value in values.items():
        source = ctx.get_parameter_source(_PARAM_ALIASES.get(name, name))
        use_file = (
            name in file_cfg
            and source is not None
            and source.name == "DEFAULT"
        )
        resolved[name] = file_cfg[name] if use_file else value
    if "data" in resolved and resolved["data"] is None:
        raise click.ClickException("an input CSV is required (--data or config 'data')")
    return resolved


def _write_manifest(out_dir: Path, command: str, config: dict, **extra) -> None:
    manifest = {
        "tool": "inpr",
        "version": __version__,
        "command": command,
        "config": config,
        **extra,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_curve(path: Path, pts: np.ndarray, columns: dict) -> None:
    names = [f"x{j + 1}" for j in range(pts.shape[1])] + list(columns)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        cols = list(columns.values())
        for i in range(pts.shape[0]):
            writer.writerow(
                [repr(float(v)) for v in pts[i]] + [repr(float(c[i])) for c in cols]
            )


def _build_spec(kernel: str, dim: int, exp_scale: float, exp_exponent: float) -> KernelSpec:
    if kernel == "sobolev2":
        return PeriodicSobolev(order=2, dim=dim)
    return Exponential(scale=exp_scale, exponent=exp_exponent, dim=dim)


def _eval_grid(data: MultiSourceData, spec: KernelSpec, grid_size: int) -> np.ndarray:
    """Evaluation grid: unit cube for the periodic kernel, data box otherwise."""
    if isinstance(spec, PeriodicSobolev):
        lo = np.zeros(data.dim)
        hi = np.ones(data.dim)
    else:
        xs, _ = data.flattened()
        lo, hi = xs.min(axis=0), xs.max(axis=0)
    axes = [np.linspace(lo[j], hi[j], grid_size) for j in range(data.dim)]
    if data.dim == 1:
        return axes[0].reshape(-1, 1)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _pick_lambda(data: MultiSourceData, spec: KernelSpec, lam, lambda_grid) -> float:
    if lam is not None:
        return float(lam)
    grid = DEFAULT_LAMBDA_GRID if lambda_grid is None else np.asarray(lambda_grid)
    xs, ys = data.flattened()
    return select_lambda_gcv(xs, ys, spec, grid)


# Options shared by the data-driven commands (fit / ci / region).
def _data_options(fn):
    decorators = [
        click.option("--data", "data_path", type=click.Path(dir_okay=False), default=None, help="Input CSV: source_id,x1[,...,xd],y (may also come from --config)."),
        click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory."),
        click.option("--mode", type=click.Choice(["cs", "ds"]), default="cs", show_default=True, help="Pooled covariate-shift fit or two-step distribution-shift fit."),
        click.option("--kernel", type=click.Choice(["sobolev2", "exp"]), default="sobolev2", show_default=True),
        click.option("--exp-scale", type=float, default=1.0, show_default=True, help="Scale of the exponential kernel."),
        click.option("--exp-exponent", type=float, default=1.0, show_default=True, help="Exponent of the exponential kernel."),
        click.option("--lambda", "lam", type=float, default=None, help="Fixed smoothing parameter (skips GCV)."),
        click.option("--lambda-grid", "lambda_grid", type=str, default=None, help="GCV grid: LO:HI:COUNT (log-spaced) or comma list."),
        click.option("--grid-size", type=int, default=201, show_default=True, help="Evaluation grid points per axis."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--shuffle", is_flag=True, default=False, help="Shuffle before splitting in ds mode."),
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON config (or a previous manifest); flags win."),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


@click.group()
@click.version_option(__version__, prog_name="inpr")
def main() -> None:
    """Data-integration regression, bootstrap inference and simulation lab."""


@main.command()
@_data_options
@click.pass_context
@_guard
def fit(ctx, data_path, out_dir, mode, kernel, exp_scale, exp_exponent, lam, lambda_grid, grid_size, seed, shuffle, config_path):
    """Fit the target mean function and write the curve on a grid."""
    cfg = _resolve_config(ctx, config_path, {
        "data": data_path, "mode": mode, "kernel": kernel,
        "exp_scale": exp_scale, "exp_exponent": exp_exponent, "lambda": lam,
        "lambda_grid": lambda_grid, "grid_size": grid_size, "seed": seed,
        "shuffle": shuffle,
    })
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = ingest_csv(cfg["data"])
    spec = _build_spec(cfg["kernel"], data.dim, cfg["exp_scale"], cfg["exp_exponent"])
    grid = None if cfg["lambda_grid"] is None else _parse_lambda_grid(cfg["lambda_grid"])
    lam_used = _pick_lambda(data, spec, cfg["lambda"], grid)
    if cfg["mode"] == "cs":
        model = fit_covariate_shift(data, lam_used, spec)
    else:
        model = fit_distribution_shift(data, lam_used, spec, seed=cfg["seed"], shuffle=cfg["shuffle"])
    pts = _eval_grid(data, spec, cfg["grid_size"])
    _write_curve(out / "curve.csv", pts, {"estimate": model.predict(pts)})
    _write_manifest(out, "fit", cfg, lambda_used=lam_used)
    click.echo(f"fit: lambda={lam_used:g}, curve written to {out / 'curve.csv'}")


def _ensemble_for(cfg, data, spec, lam_used, B, threads):
    return bootstrap_ensemble(
        data, lam_used, spec, B=B, mode=cfg["mode"], seed=cfg["seed"],
        shuffle=cfg["shuffle"], threads=threads,
    )


@main.command()
@_data_options
@click.option("--B", "n_boot", type=int, default=200, show_default=True, help="Bootstrap replicates.")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True, envvar="INPR_THREADS")
@click.pass_context
@_guard
def ci(ctx, data_path, out_dir, mode, kernel, exp_scale, exp_exponent, lam, lambda_grid, grid_size, seed, shuffle, config_path, n_boot, alpha, threads):
    """Pointwise bootstrap confidence intervals on a grid."""
    cfg = _resolve_config(ctx, config_path, {
        "data": data_path, "mode": mode, "kernel": kernel,
        "exp_scale": exp_scale, "exp_exponent": exp_exponent, "lambda": lam,
        "lambda_grid": lambda_grid, "grid_size": grid_size, "seed": seed,
        "shuffle": shuffle, "B": n_boot, "alpha": alpha, "threads": threads,
    })
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = ingest_csv(cfg["data"])
    spec = _build_spec(cfg["kernel"], data.dim, cfg["exp_scale"], cfg["exp_exponent"])
    grid = None if cfg["lambda_grid"] is None else _parse_lambda_grid(cfg["lambda_grid"])
    lam_used = _pick_lambda(data, spec, cfg["lambda"], grid)
    ens = _ensemble_for(cfg, data, spec, lam_used, cfg["B"], cfg["threads"])
    pts = _eval_grid(data, spec, cfg["grid_size"])
    base, lower, upper = pointwise_ci_grid(ens, pts, cfg["alpha"])
    _write_curve(out / "curve.csv", pts, {"estimate": base, "lower": lower, "upper": upper})
    _write_manifest(out, "ci", cfg, lambda_used=lam_used)
    click.echo(f"ci: lambda={lam_used:g}, intervals written to {out / 'curve.csv'}")


@main.command()
@_data_options
@click.option("--B", "n_boot", type=int, default=200, show_default=True, help="Bootstrap replicates.")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True, envvar="INPR_THREADS")
@click.option("--test-curve", "test_curve", type=click.Path(exists=True, dir_okay=False), default=None, help="CSV with a 'value' column aligned to design_values.csv rows; membership is reported in region.json.")
@click.pass_context
@_guard
def region(ctx, data_path, out_dir, mode, kernel, exp_scale, exp_exponent, lam, lambda_grid, grid_size, seed, shuffle, config_path, n_boot, alpha, threads, test_curve):
    """Global confidence region: radius and optional membership test."""
    cfg = _resolve_config(ctx, config_path, {
        "data": data_path, "mode": mode, "kernel": kernel,
        "exp_scale": exp_scale, "exp_exponent": exp_exponent, "lambda": lam,
        "lambda_grid": lambda_grid, "grid_size": grid_size, "seed": seed,
        "shuffle": shuffle, "B": n_boot, "alpha": alpha, "threads": threads,
        "test_curve": test_curve,
    })
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = ingest_csv(cfg["data"])
    spec = _build_spec(cfg["kernel"], data.dim, cfg["exp_scale"], cfg["exp_exponent"])
    grid = None if cfg["lambda_grid"] is None else _parse_lambda_grid(cfg["lambda_grid"])
    lam_used = _pick_lambda(data, spec, cfg["lambda"], grid)
    ens = _ensemble_for(cfg, data, spec, lam_used, cfg["B"], cfg["threads"])
    reg = global_region(ens, cfg["alpha"])
    base_vals = ens.design_base_values()
    _write_curve(out / "design_values.csv", ens.design, {"estimate": base_vals})
    result = {
        "radius": reg.radius,
        "alpha": cfg["alpha"],
        "B": cfg["B"],
        "mode": cfg["mode"],
        "lambda_used": lam_used,
        "n_design": int(ens.design.shape[0]),
    }
    if cfg["test_curve"] is not None:
        values = _read_value_column(cfg["test_curve"])
        result["contains_test_curve"] = region_contains(reg, values, base_vals)
    (out / "region.json").write_text(
        json.dumps(result, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_manifest(out, "region", cfg, lambda_used=lam_used)
    click.echo(f"region: radius={reg.radius:g} written to {out / 'region.json'}")


def _read_value_column(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or "value" not in header:
            raise ParseError(f"{path}: need a CSV with a 'value' column")
        idx = header.index("value")
        vals = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                vals.append(float(row[idx]))
            except (ValueError, IndexError):
                raise ParseError(f"{path}:{lineno}: bad value field") from None
    return np.asarray(vals)


def _experiment_options(fn):
    decorators = [
        click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False)),
        click.option("--setting", type=click.Choice(["1", "2"]), default="1", show_default=True, help="Synthetic family: univariate (1) or bivariate (2)."),
        click.option("--snr", type=float, default=10.0, show_default=True),
        click.option("--n0", type=int, default=200, show_default=True, help="Target sample size."),
        click.option("--ratios", type=str, default="0,0.25,0.5,1,2,4,8", show_default=True, help="Source/target size ratios."),
        click.option("--tau", type=float, default=0.05, show_default=True, help="Source similarity offset."),
        click.option("--reps", type=int, default=100, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--lambda-grid", "lambda_grid", type=str, default=None, help="GCV grid: LO:HI:COUNT or comma list."),
        click.option("--gcv", type=click.Choice(["pooled", "target"]), default="pooled", show_default=True, help="Data used for GCV selection."),
        click.option("--ise-grid-size", type=int, default=None, help="Midpoint grid for ISE (default 1000 for dim 1, 100 per axis for dim 2)."),
        click.option("--threads", type=int, default=1, show_default=True, envvar="INPR_THREADS"),
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON config (or a previous manifest); flags win."),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


def _experiment_config(cfg, B=None, alpha=None, eval_grid_size=None) -> ExperimentConfig:
    lam_grid = (
        tuple(DEFAULT_LAMBDA_GRID)
        if cfg["lambda_grid"] is None
        else _parse_lambda_grid(cfg["lambda_grid"])
    )
    kwargs = dict(
        setting=SimSetting(dim=int(cfg["setting"]), snr=cfg["snr"]),
        n0=cfg["n0"],
        ratios=_parse_float_list(str(cfg["ratios"]), "ratio"),
        tau_source=cfg["tau"],
        reps=cfg["reps"],
        seed=cfg["seed"],
        lambda_grid=lam_grid,
        ise_grid_size=cfg["ise_grid_size"],
        gcv=cfg["gcv"],
    )
    if B is not None:
        kwargs["B"] = B
    if alpha is not None:
        kwargs["alpha"] = alpha
    if eval_grid_size is not None:
        kwargs["eval_grid_size"] = eval_grid_size
    return ExperimentConfig(**kwargs)


@main.command()
@_experiment_options
@click.pass_context
@_guard
def simulate(ctx, out_dir, setting, snr, n0, ratios, tau, reps, seed, lambda_grid, gcv, ise_grid_size, threads, config_path):
    """Monte Carlo MISE experiment across source/target size ratios."""
    cfg = _resolve_config(ctx, config_path, {
        "setting": setting, "snr": snr, "n0": n0, "ratios": ratios, "tau": tau,
        "reps": reps, "seed": seed, "lambda_grid": lambda_grid, "gcv": gcv,
        "ise_grid_size": ise_grid_size, "threads": threads,
    })
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = run_mise_experiment(_experiment_config(cfg), threads=cfg["threads"])
    report.to_csv(out / "report.csv")
    _write_manifest(out, "simulate", cfg)
    click.echo(f"simulate: {len(report.rows)} rows written to {out / 'report.csv'}")


@main.command()
@_experiment_options
@click.option("--B", "n_boot", type=int, default=200, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--eval-grid-size", type=int, default=21, show_default=True, help="Evaluation points for pointwise coverage.")
@click.pass_context
@_guard
def coverage(ctx, out_dir, setting, snr, n0, ratios, tau, reps, seed, lambda_grid, gcv, ise_grid_size, threads, config_path, n_boot, alpha, eval_grid_size):
    """Coverage of bootstrap intervals and the global region vs the truth."""
    cfg = _resolve_config(ctx, config_path, {
        "setting": setting, "snr": snr, "n0": n0, "ratios": ratios, "tau": tau,
        "reps": reps, "seed": seed, "lambda_grid": lambda_grid, "gcv": gcv,
        "ise_grid_size": ise_grid_size, "threads": threads,
        "B": n_boot, "alpha": alpha, "eval_grid_size": eval_grid_size,
    })
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    exp_cfg = _experiment_config(cfg, B=cfg["B"], alpha=cfg["alpha"], eval_grid_size=cfg["eval_grid_size"])
    report = run_coverage_experiment(exp_cfg, threads=cfg["threads"])
    report.to_csv(out / "report.csv")
    _write_manifest(out, "coverage", cfg)
    click.echo(f"coverage: {len(report.rows)} rows written to {out / 'report.csv'}")


@main.command("rate-check")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--setting", type=click.Choice(["1", "2"]), default="1", show_default=True)
@click.option("--snr", type=float, default=10.0, show_default=True)
@click.option("--ns", type=str, default="100,200,400,800,1600", show_default=True, help="Target sample sizes.")
@click.option("--reps", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--lambda-grid", "lambda_grid", type=str, default=None)
@click.option("--ise-grid-size", type=int, default=None)
@click.option("--threads", type=int, default=1, show_default=True, envvar="INPR_THREADS")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
@_guard
def rate_check(ctx, out_dir, setting, snr, ns, reps, seed, lambda_grid, ise_grid_size, threads, config_path):
    """Target-only MISE convergence slope across sample sizes."""
    cfg = _resolve_config(ctx, config_path, {
        "setting": setting, "snr": snr, "ns": ns, "reps": reps, "seed": seed,
        "lambda_grid": lambda_grid, "ise_grid_size": ise_grid_size, "threads": threads,
    })
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = None if cfg["lambda_grid"] is None else _parse_lambda_grid(cfg["lambda_grid"])
    report, slope = run_rate_experiment(
        SimSetting(dim=int(cfg["setting"]), snr=cfg["snr"]),
        ns=_parse_int_list(str(cfg["ns"]), "n"),
        reps=cfg["reps"],
        seed=cfg["seed"],
        lambda_grid=grid,
        ise_grid_size=cfg["ise_grid_size"],
        threads=cfg["threads"],
    )
    report.to_csv(out / "report.csv")
    (out / "summary.json").write_text(
        json.dumps({"rate_slope": slope}, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_manifest(out, "rate-check", cfg)
    click.echo(f"rate-check: slope={slope:.4f}; report written to {out / 'report.csv'}")


@main.command()
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Optional output directory (JSON printed to stdout otherwise).")
@click.option("--beta", type=float, default=2.0, show_default=True, help="Kernel smoothness.")
@click.option("--dim", type=int, default=1, show_default=True)
@click.option("--law", type=click.Choice(["poly", "exp"]), default="poly", show_default=True, help="Eigenvalue decay law.")
@click.option("--lambda", "lam", type=float, default=1e-4, show_default=True)
@click.option("--sizes", type=str, default=None, help="Comma list n_0,n_1,... for the balance advisory.")
@click.option("--slack", type=float, default=1.0, show_default=True)
@click.pass_context
@_guard
def diagnose(ctx, out_dir, beta, dim, law, lam, sizes, slack):
    """Effective dimension and (polynomial law) sample-balance advisory."""
    if law == "poly":
        model = PolynomialDecay(beta=beta, dim=dim)
    else:
        model = ExponentialDecay(beta=beta)
    result = {
        "law": law,
        "beta": beta,
        "dim": dim,
        "lambda": lam,
        "effective_dimension": effective_dimension(lam, model),
    }
    if sizes is not None:
        if law != "poly":
            raise click.ClickException(
                "the balance advisory is calibrated for the polynomial law only"
            )
        advisory = balance_check(_parse_int_list(sizes, "size"), beta, dim, slack=slack)
        result["balance"] = {
            "exponent": advisory.exponent.value,
            "exponent_valid": advisory.exponent.valid,
            "total_n": advisory.total_n,
            "threshold": advisory.threshold,
            "slack": advisory.slack,
            "sizes": list(advisory.sizes),
            "passes": list(advisory.passes),
            "flagged": list(advisory.flagged),
        }
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "diagnose.json").write_text(text, encoding="utf-8")
        _write_manifest(out, "diagnose", {
            "beta": beta, "dim": dim, "law": law, "lambda": lam,
            "sizes": sizes, "slack": slack,
        })
        click.echo(f"diagnose: written to {out / 'diagnose.json'}")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
