"""Command-line front end: one subcommand per experiment, plus check and serve.

The CLI holds no experiment logic.  It assembles a config from (defaults,
optional JSON config file, explicit flags), obtains a run record either
in-process or from a running service (``--server``), and renders the report
artifacts locally.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 acceptance-check failure.
"""

from __future__ import annotations

import json
import os
import sys

import click
from pydantic import ValidationError

from . import __version__
from .errors import CapacityError, VrjplabError
from .experiments import ExperimentConfig, RunRecord, default_config, emit_report, run_experiment

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_CHECK_FAILED = 4

OUTPUT_DIR_ENV = "VRJPLAB_OUT"


def _default_outdir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV, "runs")


_FIELD_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                 default=None, help="JSON config file (exact schema, unknown keys rejected)."),
    click.option("--rho", type=float, default=None, help="Weight decay base (> 1)."),
    click.option("--wbar", type=float, default=None, help="Weight scale (> 0)."),
    click.option("--n", type=int, default=None, help="Box scale: 2^n sites plus the boundary."),
    click.option("--s", type=float, default=None, help="Fractional exponent in (0, 1/2)."),
    click.option("--replicas", type=int, default=None, help="Number of sampled environments."),
    click.option("--seed", type=int, default=None, help="Run seed; 0 draws fresh entropy."),
    click.option("--method", type=click.Choice(["sequential", "gibbs"]), default=None),
    click.option("--q-exponent", "q_exponent", type=int, default=None,
                 help="Polynomial weight correction exponent (rho = 2 only)."),
    click.option("--workers", type=int, default=None, help="Parallel replica workers."),
    click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None,
                 help=f"Output directory (default ${OUTPUT_DIR_ENV} or ./runs)."),
    click.option("--formats", default="csv,svg,md", show_default=True,
                 help="Comma-separated subset of csv,svg,md."),
    click.option("--server", default=None, metavar="URL",
                 help="Run on a vrjplab service instead of in-process."),
]


def _with_field_options(fn):
    for opt in reversed(_FIELD_OPTIONS):
        fn = opt(fn)
    return fn


def _build_config(experiment: str, config_path, overrides: dict) -> ExperimentConfig:
    fields: dict = {}
    if config_path is not None:
        with open(config_path) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a single JSON object")
        file_experiment = loaded.pop("experiment", experiment)
        if file_experiment != experiment:
            raise ValueError(
                f"config file is for {file_experiment!r}, command is {experiment!r}"
            )
        fields.update(loaded)
    fields.update({k: v for k, v in overrides.items() if v is not None})
    if fields.get("output_dir") is None:
        fields["output_dir"] = _default_outdir()
    return default_config(experiment, **fields)


def _run_remote(server: str, config: ExperimentConfig) -> RunRecord:
    import httpx

    body = config.model_dump()
    body["output_dir"] = None  # artifacts are rendered locally
    resp = httpx.post(server.rstrip("/") + "/run", json=body, timeout=None)
    if resp.status_code in (400, 422):
        raise ValueError(f"service rejected config ({resp.status_code}): {resp.text[:300]}")
    if resp.status_code != 200:
        raise VrjplabError(f"service returned {resp.status_code}: {resp.text[:300]}")
    return RunRecord.model_validate(resp.json())


def _execute(experiment: str, config_path, formats: str, server, **overrides) -> None:
    try:
        config = _build_config(experiment, config_path, overrides)
        format_list = [f.strip() for f in formats.split(",") if f.strip()]
    except (ValidationError, ValueError, json.JSONDecodeError) as exc:
        click.echo(f"invalid configuration: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        record = _run_remote(server, config) if server else run_experiment(config)
    except (CapacityError, ValueError) as exc:
        click.echo(f"invalid configuration: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except VrjplabError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    try:
        paths = emit_report(record, format_list, outdir=config.output_dir)
    except ValueError as exc:
        click.echo(f"invalid configuration: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except OSError as exc:
        click.echo(f"report I/O failed for {config.output_dir}: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    if record.failures:
        click.echo(f"warning: {len(record.failures)} replicas failed and were excluded", err=True)
    click.echo(f"{experiment}: seed={record.resolved_seed} "
               f"rows={len(record.rows)} wall={record.wall_clock_s:.1f}s")
    for kind, path in paths.items():
        click.echo(f"  {kind}: {path}")


@click.group()
@click.version_option(version=__version__, prog_name="vrjplab")
def main() -> None:
    """Numerical experiments for reinforced walks on hierarchical graphs."""


def _register(name: str, experiment: str, help_text: str) -> None:
    @main.command(name=name, help=help_text)
    @_with_field_options
    def _cmd(config_path, formats, server, **overrides):
        _execute(experiment, config_path, formats, server, **overrides)

    _cmd.__name__ = experiment


_register("figure1", "figure1",
          "Quarter-moment of the pinned field vs scale for three decay bases.")
_register("gamma-law", "gamma_law",
          "Distribution test of the boundary pivot against Gamma(1/2, 1).")
_register("ward", "ward", "Unit-mean identity of e^u at randomly chosen sites.")
_register("coarse-check", "coarse_check",
          "Law preservation of block averages under graph merging.")
_register("decay-slope", "decay_slope",
          "Fit of the fractional-moment decay rate against its predicted value.")
_register("recurrence-scan", "recurrence_scan",
          "Escape-probability medians vs box scale (recurrent side).")
_register("transience-scan", "transience_scan",
          "Escape-probability medians vs box scale (transient side).")
_register("bounds-table", "bounds_table",
          "Closed-form constants and bounds table (no Monte Carlo).")
_register("sampler-crosscheck", "sampler_crosscheck",
          "Two-sample comparison of the exact and Gibbs samplers.")


@main.command()
@click.option("--criteria", default=None,
              help="Comma-separated criterion numbers (default: all).")
def check(criteria) -> None:
    """Run the acceptance suite and exit 4 if any criterion fails."""
    from .acceptance import run_acceptance

    numbers = None
    if criteria:
        try:
            numbers = [int(tok) for tok in criteria.split(",") if tok.strip()]
        except ValueError:
            click.echo(f"invalid criteria list: {criteria!r}", err=True)
            sys.exit(EXIT_VALIDATION)
    results = run_acceptance(numbers, echo=click.echo)
    if not all(r.passed for r in results):
        sys.exit(EXIT_CHECK_FAILED)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Start the HTTP service wrapping the experiment runner."""
    try:
        import uvicorn
    except ImportError:
        click.echo("uvicorn is required: pip install 'vrjplab[server]'", err=True)
        sys.exit(EXIT_VALIDATION)
    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
