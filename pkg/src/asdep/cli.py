"""Command-line client.

Thin wrapper over the service layer: each subcommand assembles a RunConfig
from an optional JSON config file plus flag overrides, executes it either
in-process or against a remote server (--server URL), writes returned CSV
artifacts and prints a summary.

Exit codes: 0 success, 2 invalid configuration, 3 numeric failure.
"""
from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import httpx
import pydantic

from . import __version__, experiments
from .errors import InvalidInputError, NumericError
from .schemas import RunConfig, RunResult

EXIT_INVALID = 2
EXIT_NUMERIC = 3


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(f"cannot read config file: {exc}", EXIT_INVALID)
    if not isinstance(data, dict):
        _fail("config file must contain a JSON object", EXIT_INVALID)
    return data


def _parse_params(pairs) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            _fail(f"--param expects key=value, got '{pair}'", EXIT_INVALID)
        key, value = pair.split("=", 1)
        try:
            out[key.strip()] = float(value)
        except ValueError:
            _fail(f"parameter '{key}' must be numeric, got '{value}'", EXIT_INVALID)
    return out


def _merge_config(config_path, **flags) -> RunConfig:
    data = _load_config_file(config_path)
    params = _parse_params(flags.pop("param", ()) or ())
    if params:
        data["params"] = {**data.get("params", {}), **params}
    beta = flags.pop("beta", ()) or ()
    if beta:
        data["stencil"] = {"beta": list(beta)}
    ells = flags.pop("ell", ()) or ()
    if ells:
        data["ell_sweep"] = list(ells)
    for key, value in flags.items():
        if value is not None:
            data[key] = value
    if "threads" not in data:
        env = os.environ.get("ASDEP_THREADS")
        if env is not None:
            try:
                data["threads"] = int(env)
            except ValueError:
                _fail(f"ASDEP_THREADS must be an integer, got '{env}'", EXIT_INVALID)
    try:
        return RunConfig.model_validate(data)
    except pydantic.ValidationError as exc:
        _fail(str(exc), EXIT_INVALID)


def _execute(kind: str, cfg: RunConfig, server: str | None) -> RunResult:
    if server is None:
        try:
            return experiments.run(kind, cfg)
        except InvalidInputError as exc:
            _fail(str(exc), EXIT_INVALID)
        except NumericError as exc:
            _fail(str(exc), EXIT_NUMERIC)
    try:
        resp = httpx.post(
            f"{server.rstrip('/')}/run/{kind}", json=cfg.resolved(), timeout=600.0
        )
    except httpx.HTTPError as exc:
        _fail(f"server request failed: {exc}", EXIT_NUMERIC)
    if resp.status_code == 422:
        _fail(str(resp.json().get("detail", resp.text)), EXIT_INVALID)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        _fail(str(detail), EXIT_NUMERIC)
    return RunResult.model_validate(resp.json())


def _emit(result: RunResult, out: str | None, json_out: str | None):
    if out:
        Path(out).write_text(result.csv)
        click.echo(f"wrote {out}")
        stem = Path(out)
        for name, text in result.extras.items():
            side = stem.with_name(f"{stem.stem}.{name}{stem.suffix or '.csv'}")
            side.write_text(text)
            click.echo(f"wrote {side}")
    if json_out:
        Path(json_out).write_text(result.model_dump_json(indent=2))
        click.echo(f"wrote {json_out}")
    skip = {"matrix"}
    click.echo(f"kind: {result.kind}")
    for key, value in result.summary.items():
        if key in skip:
            continue
        if isinstance(value, list):
            value = "[" + ", ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in value) + "]"
        click.echo(f"{key}: {value}")


def common_options(fn):
    decorators = [
        click.option("--config", "config_path", type=click.Path(), default=None,
                     help="JSON config file; flags override its keys."),
        click.option("--function", default=None, help="Catalog function name."),
        click.option("--param", multiple=True, help="Function parameter key=value."),
        click.option("--method", default=None, help="Estimation method."),
        click.option("--gradients", type=click.Choice(["analytic", "estimated"]),
                     default=None),
        click.option("--n", type=int, default=None, help="Sample count."),
        click.option("--n-inner", "n_inner", type=int, default=None),
        click.option("--seed", type=int, default=None, help="64-bit RNG seed."),
        click.option("--h", type=float, default=None),
        click.option("--sigma2", type=float, default=None),
        click.option("--tau", type=float, default=None),
        click.option("--k0", type=float, default=None),
        click.option("--m2", type=float, default=None),
        click.option("--beta", multiple=True, type=float, help="Stencil node (repeat)."),
        click.option("--ell", multiple=True, type=int, help="Subspace size (repeat)."),
        click.option("--ns", type=int, default=None, help="Inactive draws per point."),
        click.option("--order", type=click.Choice(["2", "3"]), default=None),
        click.option("--threads", type=int, default=None),
        click.option("--out", default=None, help="CSV output path."),
        click.option("--json-out", "json_out", default=None, help="Full-result JSON path."),
        click.option("--server", default=None, help="Remote service URL."),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


def _run_command(kind, config_path, server, json_out, order=None, figure=None, **flags):
    if order is not None:
        flags["order"] = int(order)
    if figure is not None:
        flags["figure"] = figure
    cfg = _merge_config(config_path, **flags)
    result = _execute(kind, cfg, server)
    _emit(result, cfg.out, json_out)


@click.group()
@click.version_option(version=__version__)
def main():
    """Active-subspace and sensitivity experiments."""


def _register(kind, help_text):
    @main.command(kind, help=help_text)
    @common_options
    def _cmd(config_path, server, json_out, order, **flags):
        _run_command(kind, config_path, server, json_out, order=order, **flags)

    return _cmd


_register("cprime", "Estimate the gradient second-moment matrix and its spectrum.")
_register("sens", "Estimate the total-sensitivity moment matrix and its spectrum.")
_register("shapley", "Gradient-based Shapley allocation of importance.")
_register("bounds", "Derivative-based upper bounds on total Sobol' indices.")


@main.command("reproduce", help="Regenerate the data behind the reference figures.")
@common_options
@click.option("--figure", type=click.Choice(["1", "2", "3"]), required=True)
def reproduce(config_path, server, json_out, order, figure, **flags):
    _run_command(
        "reproduce", config_path, server, json_out, order=order, figure=int(figure),
        **flags,
    )


@main.command("list-functions", help="List catalog functions with parameters as JSON.")
@click.option("--server", default=None, help="Remote service URL.")
def list_functions_cmd(server):
    if server is None:
        info = experiments.functions_info()
    else:
        try:
            resp = httpx.get(f"{server.rstrip('/')}/functions", timeout=60.0)
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            _fail(f"server request failed: {exc}", EXIT_NUMERIC)
        info = resp.json()
    click.echo(json.dumps(info, indent=2, sort_keys=True))


@main.command("serve", help="Run the HTTP service.")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    import uvicorn

    uvicorn.run("asdep.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
