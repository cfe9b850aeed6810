"""
Pipelines and command-line entry point for panelspec
"""

import json
import os
import sys
import traceback
from typing import Any, Callable, Dict, List, Optional, Tuple

import click
import numpy as np
import pandas as pd

from . import __version__
from .cli.config import get_all_config, load_run_file, merge_overrides, set_config_value
from .config import LOG_FILE_DIR, PSID_PATH
from .core.basis import BasisSpec, SeriesDesigner, build_null_and_test_designs, orthonormalize
from .core.bootstrap import (
    bootstrap_critical_value,
    bootstrap_pvalue,
    run_bootstrap,
    write_bootstrap_csv,
)
from .core.errors import ChecksumMismatch, ConfigError, PanelSpecError
from .core.lm_test import TestResult, run_lm_test
from .core.monte_carlo import DgpConfig, McTestSpec, run_mc, write_mc_csv
from .core.panel import PanelDataset, TransformedPanel, load_panel, load_panel_csv, transform_panel
from .core.projection import RestrictedFit, fit_restricted, fitted_component
from .core.selection import build_grid, select_rn
from .logger import get_logger, set_log_level
from .logger.logger import (
    configure_file_logging,
    get_failure_count,
    get_run_status,
    get_stage_timings,
    reset_run_tracking,
    set_run_status,
    timed_stage,
)
from .schemas import PRESETS, RunConfig
from .ui.banners import print_criterion_table, print_header, print_mc_table, print_test_summary
from .utils.fixtures import fetch_psid, prepare_psid_frame, verify_psid
from .utils.system import get_system_resources, get_worker_count

logger = get_logger("panelspec.runner")

REPORT_FILE = "report.json"
MC_FILE = "mc_results.csv"
BOOTSTRAP_FILE = "bootstrap_stats.csv"
EFFECT_POINTS = 50


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def dump_report(report: Dict[str, Any]) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_jsonable)


def write_report(report: Dict[str, Any], out_dir: Optional[str], name: str = REPORT_FILE) -> Optional[str]:
    if not out_dir:
        return None
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_report(report) + "\n")
    logger.info(f"Report written to {path}")
    return path


def load_data(cfg: RunConfig) -> PanelDataset:
    x_cols = list(cfg.x) + list(cfg.dummies)
    if cfg.preset:
        verified = verify_psid(cfg.data)
        if verified is False:
            raise ChecksumMismatch(f"{cfg.data} does not match its recorded .sha256 digest")
        if verified is None:
            logger.warning(f"No .sha256 record next to {cfg.data}; using it unverified")
        frame = prepare_psid_frame(cfg.data)
        return load_panel(frame, cfg.id_col, cfg.time_col, cfg.y_col, x_cols)
    return load_panel_csv(cfg.data, cfg.id_col, cfg.time_col, cfg.y_col, x_cols)


def _base_report(cfg: RunConfig) -> Dict[str, Any]:
    return {
        "panelspec_version": __version__,
        "subcommand": cfg.subcommand,
        "config": cfg.model_dump(),
        "seed": cfg.seed,
    }


def _design_section(tp: TransformedPanel, fit: RestrictedFit) -> Dict[str, Any]:
    ds = fit.design
    return {
        "transform": tp.transform_tag,
        "n": tp.n,
        "T": tp.T,
        "m_n": fit.m_n,
        "r_n": fit.r_n,
        "k_n": fit.k_n,
        "w_labels": list(ds.w_labels),
        "z_labels": list(ds.z_labels),
        "dropped": [{"label": label, "reason": reason} for label, reason in ds.dropped],
        "sigma_rank": fit.sigma_rank,
    }


def _decisions(result: TestResult, level: float) -> Dict[str, Any]:
    decisions = {
        "level": level,
        "xi_chi2": result.reject(level, "chi2"),
        "t_normal": result.reject(level, "normal"),
    }
    if result.bootstrap_p is not None:
        decisions["t_bootstrap"] = result.reject(level, "bootstrap")
    return decisions


def _bootstrap(cfg: RunConfig, fit: RestrictedFit, result: TestResult, kind: str) -> Dict[str, Any]:
    with timed_stage("bootstrap"):
        dist = run_bootstrap(fit, kind, cfg.boot_law, cfg.boot_reps, cfg.seed, cfg.workers or None)
    result.bootstrap_p = bootstrap_pvalue(result.t_rn, dist)
    result.bootstrap_crit_05 = bootstrap_critical_value(dist, 0.05)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        write_bootstrap_csv(dist, os.path.join(cfg.out, BOOTSTRAP_FILE))
    return {
        "law": dist.law.kind,
        "B": dist.B,
        "successful": dist.successful,
        "failures": dist.failures,
        "seed": dist.seed,
        "p_value": result.bootstrap_p,
        "crit_05": result.bootstrap_crit_05,
    }


def export_effects(fit: RestrictedFit, spec_null: BasisSpec, path: str) -> None:
    """Write the fitted nonparametric null components on an even grid, others at their medians"""
    panel = fit.panel.source
    variables = [v for v, role in spec_null.variable_roles.items() if role == "nonparametric"]
    medians = np.median(panel.X, axis=0)
    frames = []
    for var in variables:
        j = panel.x_names.index(var)
        values = np.linspace(panel.X[:, j].min(), panel.X[:, j].max(), EFFECT_POINTS)
        X_eval = np.tile(medians, (EFFECT_POINTS, 1))
        X_eval[:, j] = values
        frames.append(pd.DataFrame({
            "variable": var,
            "value": values,
            "effect": fitted_component(fit, [var], X_eval),
        }))
    if not frames:
        logger.warning("The null model has no nonparametric component; no effects written")
        return
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    pd.concat(frames, ignore_index=True).to_csv(path, index=False, float_format="%.10g")
    logger.info(f"Fitted components written to {path}")


def _prepare(cfg: RunConfig) -> Tuple[TransformedPanel, BasisSpec, BasisSpec, SeriesDesigner]:
    with timed_stage("load"):
        panel = load_data(cfg)
    with timed_stage("transform"):
        tp = transform_panel(panel, cfg.transform)
    spec_null, spec_alt = cfg.basis_specs()
    return tp, spec_null, spec_alt, SeriesDesigner(panel)


def run_test_pipeline(cfg: RunConfig, quiet: bool = False) -> Dict[str, Any]:
    """load -> transform -> designs -> orthonormalize -> fit -> Omega -> xi -> p-values"""
    kind = cfg.stat or "hc"
    tp, spec_null, spec_alt, designer = _prepare(cfg)

    with timed_stage("design"):
        ds = orthonormalize(build_null_and_test_designs(tp, spec_null, spec_alt, designer))
    with timed_stage("fit"):
        fit = fit_restricted(tp, ds)
    with timed_stage("test"):
        result = run_lm_test(fit, kind)

    report = _base_report(cfg)
    if cfg.inference in ("boot", "both"):
        report["bootstrap"] = _bootstrap(cfg, fit, result, kind)
    if cfg.effects_out:
        export_effects(fit, spec_null, cfg.effects_out)

    report.update({
        "design": _design_section(tp, fit),
        "result": result.to_dict(),
        "summary": result.summary(),
        "decisions": _decisions(result, cfg.level),
        "timings": get_stage_timings(),
    })
    if not quiet:
        print_test_summary(result, cfg.level, fit.design.dropped)
    return report


def run_select_pipeline(cfg: RunConfig, quiet: bool = False) -> Dict[str, Any]:
    """Data-driven a_n over [grid_min, grid_max], then the test at the chosen size"""
    kind = cfg.stat or "hc"
    tp, spec_null, spec_alt, designer = _prepare(cfg)

    with timed_stage("design"):
        grid = build_grid(tp, spec_null, cfg.grid_min, cfg.grid_max, spec_alt,
                          c=cfg.penalty_c, designer=designer)
    with timed_stage("fit"):
        fit = fit_restricted(tp, grid.candidates[0].design)
    with timed_stage("test"):
        selection = select_rn(fit, grid, kind)

    chosen_fit = fit_restricted(tp, selection.chosen.design)
    result = selection.result
    report = _base_report(cfg)
    if cfg.inference in ("boot", "both"):
        report["bootstrap"] = _bootstrap(cfg, chosen_fit, result, kind)
    if cfg.effects_out:
        export_effects(chosen_fit, spec_null, cfg.effects_out)

    report.update({
        "design": _design_section(tp, chosen_fit),
        "result": result.to_dict(),
        "summary": result.summary(),
        "decisions": _decisions(result, cfg.level),
        "selection": {
            "chosen_a_n": selection.chosen.a_n,
            "gamma_n": selection.gamma_n,
            "c": selection.c,
            "table": [row.to_dict() for row in selection.table],
        },
        "timings": get_stage_timings(),
    })
    if not quiet:
        print_criterion_table(selection.table, selection.gamma_n)
        print_test_summary(result, cfg.level, chosen_fit.design.dropped)
    return report


def run_mc_pipeline(cfg: RunConfig, quiet: bool = False) -> Dict[str, Any]:
    """Monte Carlo size/power run; writes mc_results.csv when --out is given"""
    if cfg.setup is not None:
        dgp_cfg = DgpConfig.from_setup(cfg.setup, dgp=cfg.dgp, errors=cfg.errors, seed=cfg.seed,
                                       transform=cfg.transform,
                                       orthogonal_amplitude=cfg.orthogonal_amplitude)
    else:
        dgp_cfg = DgpConfig(n=cfg.n, T=cfg.T, dgp=cfg.dgp, errors=cfg.errors, seed=cfg.seed,
                            transform=cfg.transform, orthogonal_amplitude=cfg.orthogonal_amplitude)
    spec = McTestSpec(
        family=cfg.basis,
        a_values=tuple(cfg.mc_an),
        variants=tuple(cfg.variants),
        grid_min=cfg.grid_min or 4,
        grid_max=cfg.grid_max or 9,
        kind=cfg.stat,
        level=cfg.level,
        boot_reps=cfg.boot_reps,
        c=cfg.penalty_c,
    )

    with timed_stage("monte_carlo"):
        result = run_mc(dgp_cfg, spec, cfg.reps, workers=cfg.workers or None, progress=not quiet)

    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        write_mc_csv(result, os.path.join(cfg.out, MC_FILE))

    report = _base_report(cfg)
    report.update({
        "dgp": {"n": dgp_cfg.n, "T": dgp_cfg.T, "dgp": dgp_cfg.dgp, "errors": dgp_cfg.errors},
        "M": result.M,
        "failures": result.failures,
        "cells": [cell.to_dict() for cell in result.cells],
        "timings": get_stage_timings(),
    })
    if not quiet:
        print_mc_table(result)
    return report


PIPELINES: Dict[str, Callable[[RunConfig, bool], Dict[str, Any]]] = {
    "test": run_test_pipeline,
    "select": run_select_pipeline,
    "mc": run_mc_pipeline,
}


def execute(subcommand: str, config_path: Optional[str], flags: Dict[str, Any], quiet: bool = False) -> int:
    """
    Resolve the configuration, run one pipeline and emit its report

    Returns:
        Process exit code: 0 on completion (whatever the test decides),
        2 for a PanelSpecError, 1 for anything unexpected
    """
    reset_run_tracking()
    set_run_status("running")
    try:
        values = merge_overrides(load_run_file(config_path), flags)
        values["subcommand"] = subcommand
        cfg = RunConfig.build(values)
        if not quiet:
            print_header(__version__, subcommand)
        report = PIPELINES[subcommand](cfg, quiet)
        set_run_status("completed")
        report["status"] = get_run_status()
        report["failures_logged"] = get_failure_count()
        write_report(report, cfg.out)
        click.echo(dump_report(report))
        return 0
    except PanelSpecError as e:
        set_run_status("error")
        logger.error(f"{type(e).__name__}: {e}")
        click.echo(json.dumps({"error": type(e).__name__, "message": str(e)}), err=True)
        return 2
    except Exception as e:
        set_run_status("error")
        logger.error(f"Unexpected error: {e}")
        logger.debug(traceback.format_exc())
        click.echo(json.dumps({"error": type(e).__name__, "message": str(e)}), err=True)
        return 1


def _split_names(ctx, param, value) -> Tuple[str, ...]:
    names: List[str] = []
    for item in value or ():
        names.extend(part.strip() for part in item.split(",") if part.strip())
    return tuple(names)


def common_options(func):
    """Options shared by every run subcommand"""
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON run configuration"),
        click.option("--transform", type=click.Choice(["within", "fd"]), help="Fixed-effect transformation"),
        click.option("--basis", type=click.Choice(["power", "spline"]), help="Series family"),
        click.option("--stat", type=click.Choice(["hom", "hc"]), help="Homoskedastic or heteroskedasticity-robust statistic"),
        click.option("--boot-reps", type=int, help="Bootstrap replicates"),
        click.option("--grid-min", type=int, help="Smallest a_n of the data-driven grid"),
        click.option("--grid-max", type=int, help="Largest a_n of the data-driven grid"),
        click.option("--seed", type=int, help="Master seed"),
        click.option("--out", type=click.Path(file_okay=False), help="Output directory"),
        click.option("--workers", type=int, help="Worker threads (0 = all physical cores)"),
        click.option("--level", type=float, help="Nominal level"),
        click.option("--quiet", is_flag=True, help="Only print the JSON report"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def data_options(func):
    """Options for runs on a dataset"""
    options = [
        click.option("--data", type=click.Path(dir_okay=False), help="Long-format CSV (or wage panel file with --preset)"),
        click.option("--id", "id_col", help="Individual identifier column"),
        click.option("--time", "time_col", help="Period column"),
        click.option("--y", "y_col", help="Outcome column"),
        click.option("--x", multiple=True, callback=_split_names, help="Continuous regressors (repeat or comma-separate)"),
        click.option("--dummies", multiple=True, callback=_split_names, help="Regressors entering linearly in every model"),
        click.option("--null-linear", multiple=True, callback=_split_names, help="Regressors linear under the null"),
        click.option("--null-an", type=int, help="Univariate terms for nonparametric null regressors"),
        click.option("--alt-an", type=int, help="Univariate terms in the alternative"),
        click.option("--interaction", type=int, help="Highest tensor-product order in the alternative"),
        click.option("--inference", type=click.Choice(["asym", "boot", "both"]), help="Asymptotic, bootstrap or both"),
        click.option("--boot-law", type=click.Choice(["mammen", "rademacher"]), help="Wild bootstrap multiplier law"),
        click.option("--effects-out", type=click.Path(dir_okay=False), help="CSV of fitted nonparametric null components"),
        click.option("--preset", type=click.Choice(PRESETS), help="Wage-panel specification"),
        click.option("--penalty-c", type=float, help="Penalty constant of the data-driven rule"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.version_option(__version__)
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"]), help="Logging level")
def panelspec_cli(log_level):
    """panelspec - series specification tests for fixed-effects panel models"""
    if log_level:
        set_log_level(log_level)
    if LOG_FILE_DIR:
        configure_file_logging(LOG_FILE_DIR)


@panelspec_cli.command()
@data_options
@common_options
def test(config_path, quiet, **flags):
    """Run the specification test on one dataset"""
    sys.exit(execute("test", config_path, flags, quiet))


@panelspec_cli.command()
@data_options
@common_options
def select(config_path, quiet, **flags):
    """Choose a_n by the penalized criterion, then test"""
    sys.exit(execute("select", config_path, flags, quiet))


@panelspec_cli.command()
@common_options
@click.option("--setup", type=click.IntRange(1, 4), help="Setup 1-4: (250,2), (250,4), (500,2), (500,4)")
@click.option("--n", type=int, help="Individuals (with --T, instead of --setup)")
@click.option("--T", "T", type=int, help="Periods")
@click.option("--dgp", type=click.Choice(["sp_null", "np_alt", "linear_null", "linear_smooth_alt", "linear_orthogonal_alt"]))
@click.option("--errors", type=click.Choice(["homoskedastic", "heteroskedastic"]))
@click.option("--reps", type=int, help="Monte Carlo replications M")
@click.option("--an", "mc_an", type=int, multiple=True, help="Fixed a_n values (repeatable)")
@click.option("--variants", multiple=True, callback=_split_names, help="Test variants (repeat or comma-separate)")
@click.option("--orthogonal-amplitude", type=float, help="Scale of the orthogonal alternative")
@click.option("--penalty-c", type=float, help="Penalty constant of the data-driven rule")
def mc(config_path, quiet, **flags):
    """Simulated size and power"""
    sys.exit(execute("mc", config_path, flags, quiet))


@panelspec_cli.command()
def info():
    """Show version, resources and resolved defaults"""
    from . import config as defaults

    click.echo(f"\n📦 panelspec {__version__}")
    resources = get_system_resources()
    click.echo("\n🖥️ System Information:")
    for key, value in resources.items():
        click.echo(f"  {key}: {value}")
    click.echo("\n⚙️ Defaults:")
    for name in ("DEFAULT_BOOT_REPS", "DEFAULT_BOOT_LAW", "DEFAULT_NOMINAL_LEVEL", "DEFAULT_SEED",
                 "DEFAULT_TRANSFORM", "DEFAULT_SPLINE_ORDER", "DEFAULT_PENALTY_C", "LOG_LEVEL"):
        click.echo(f"  {name}: {getattr(defaults, name)}")
    click.echo(f"  workers: {get_worker_count()}")
    user = get_all_config()
    if user:
        click.echo("\n📝 User settings:")
        for key, value in sorted(user.items()):
            click.echo(f"  {key}: {value}")


@panelspec_cli.command("config")
@click.option("--set", "assignments", multiple=True, metavar="KEY=VALUE", help="Store a default (repeatable)")
def config_command(assignments):
    """Show or change stored defaults in ~/.panelspec/config.json"""
    try:
        for item in assignments:
            key, sep, value = item.partition("=")
            if not sep or not key.strip():
                raise ConfigError(f"Expected KEY=VALUE, got '{item}'")
            set_config_value(key.strip().lower(), value.strip())
            click.echo(f"✅ {key.strip().lower()} = {value.strip()}")
    except PanelSpecError as e:
        click.echo(json.dumps({"error": type(e).__name__, "message": str(e)}), err=True)
        sys.exit(2)
    if not assignments:
        settings = get_all_config()
        if not settings:
            click.echo("No stored settings")
        for key, value in sorted(settings.items()):
            click.echo(f"  {key}: {value}")


@panelspec_cli.command("fetch-psid")
@click.option("--dest", default=PSID_PATH or "data/wage_panel.csv", show_default=True, type=click.Path(dir_okay=False))
@click.option("--url", default=None, help="Override the download URL")
@click.option("--sha256", default=None, help="Expected digest")
def fetch_psid_command(dest, url, sha256):
    """Download the wage panel used by the presets"""
    try:
        kwargs = {"sha256": sha256}
        if url:
            kwargs["url"] = url
        path = fetch_psid(dest, **kwargs)
    except PanelSpecError as e:
        click.echo(json.dumps({"error": type(e).__name__, "message": str(e)}), err=True)
        sys.exit(2)
    click.echo(f"✅ Wage panel saved to {path}")


def cli():
    """Console-script entry point"""
    panelspec_cli()


if __name__ == "__main__":
    cli()
