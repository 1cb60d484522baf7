"""Command line client for the waveinvis service.

Subcommands post run configurations to the HTTP API.  By default an
in-process application instance serves the request, so no server is needed;
set WAVEINVIS_URL (or pass --url) to talk to a remote instance instead.

Exit codes: 0 success, 2 configuration error, 3 solver error, 4 divergence,
1 anything else.
"""

from __future__ import annotations

import json
import os
import sys

import click
import httpx

from .config import load_config
from .errors import ConfigError

EXIT_CODES = {
    "ConfigError": 2,
    "CutoffError": 2,
    "RequestValidationError": 2,
    "ResolutionError": 2,
    "DimensionError": 2,
    "ZeroAreaCellError": 2,
    "EvanescentSlabError": 2,
    "SolverError": 3,
    "SingularGramError": 3,
    "DivergenceError": 4,
    "DegenerateSeedError": 4,
}


def _client(url: str | None) -> httpx.Client:
    url = url or os.environ.get("WAVEINVIS_URL")
    if url:
        return httpx.Client(base_url=url, timeout=None)
    # no server configured: serve the request from an in-process application
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import app  # deferred import keeps --help fast
    return TestClient(app, raise_server_exceptions=False)


def _post(url: str | None, endpoint: str, payload: dict) -> dict:
    with _client(url) as client:
        response = client.post(endpoint, json=payload)
    body = response.json()
    if response.status_code != 200:
        error = body.get("error", "Error") if isinstance(body, dict) else "Error"
        click.echo(json.dumps(body, indent=2, sort_keys=True), err=True)
        sys.exit(EXIT_CODES.get(error, 1))
    return body


def _load(config_path: str) -> dict:
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        click.echo(json.dumps({"error": "ConfigError", "message": str(exc)}),
                   err=True)
        sys.exit(2)
    return config.model_dump(mode="json")


def _apply_outdir(config: dict, output_dir: str | None) -> dict:
    if output_dir:
        config["output_dir"] = output_dir
    return config


url_option = click.option("--url", default=None,
                          help="Service URL (default: in-process application)")
config_option = click.option("--config", "config_path", required=True,
                             type=click.Path(exists=False),
                             help="YAML run configuration")
outdir_option = click.option("--output-dir", default=None,
                             help="Artifact directory (overrides the config)")


@click.group()
def main():
    """Design non-reflecting and invisible obstacles in a 2D waveguide."""


@main.command()
@click.option("--k", required=True, help='Wavenumber, e.g. "4.0" or "0.8*pi"')
@click.option("--cutoff-margin", default=1e-3, show_default=True)
@click.option("--terms", default=10, show_default=True)
@url_option
def modes(k, cutoff_margin, terms, url):
    """Print the propagating mode count and axial wavenumbers."""
    body = _post(url, "/modes", {"k": k, "cutoff_margin": cutoff_margin,
                                 "terms": terms})
    click.echo(f"k = {body['k']:.6f}: {body['n_propagating']} propagating mode(s)")
    for row in body["beta"]:
        kind = "propagating" if row["propagating"] else "evanescent"
        click.echo(f"  beta_{row['n']} = {row['re']:+.6f}{row['im']:+.6f}i  ({kind})")


@main.command()
@config_option
@outdir_option
@url_option
def scatter(config_path, output_dir, url):
    """Solve the scattering problems and export S plus field files."""
    config = _apply_outdir(_load(config_path), output_dir)
    body = _post(url, "/scatter", {"config": config})
    s = body["s"]
    click.echo(f"n_modes = {body['n_modes']}, "
               f"unitarity residual = {s['unitarity_residual']:.3e}, "
               f"symmetry residual = {s['symmetry_residual']:.3e}")
    click.echo(f"extraction gap (volume vs trace) = "
               f"{body['structure']['extraction_gap']:.3e}")
    for path in body["artifacts"]:
        click.echo(f"wrote {path}")


@main.command()
@config_option
@click.option("--fd-step", default=1e-3, show_default=True,
              help="Central finite-difference step (0 disables the check)")
@outdir_option
@url_option
def differential(config_path, fd_step, output_dir, url):
    """Material differential of S in the direction of the config's mu."""
    config = _apply_outdir(_load(config_path), output_dir)
    body = _post(url, "/differential", {"config": config,
                                        "fd_step": fd_step or None})
    if body["fd_relative_error"] is not None:
        click.echo(f"finite-difference relative error at h={body['fd_step']:g}: "
                   f"{body['fd_relative_error']:.3e}")
    for path in body["artifacts"]:
        click.echo(f"wrote {path}")


@main.command()
@config_option
@outdir_option
@url_option
def cloak(config_path, output_dir, url):
    """Run the fixed-point continuation and export the design sequence."""
    config = _apply_outdir(_load(config_path), output_dir)
    body = _post(url, "/cloak", {"config": config})
    click.echo(f"functional = {body['functional']} (d = {body['dimension']})")
    for rec in body["steps"]:
        click.echo(f"step {rec['step']}: eps={rec['epsilon']:.3g} "
                   f"sweeps={rec['iterations']} residual={rec['residual']:.2e} "
                   f"sup|rho|={rec['material_sup']:.3f}")
    if body["final_check"]:
        fc = body["final_check"]
        click.echo(f"final check: |F - target| = {fc['functional_residual']:.2e}, "
                   f"max |R+| = {fc['max_reflection']:.2e}")
    for path in body["artifacts"]:
        click.echo(f"wrote {path}")
    if not body["completed"]:
        click.echo(f"continuation aborted: {body['message']}", err=True)
        sys.exit(4)


@main.command()
@config_option
@outdir_option
@url_option
def verify(config_path, output_dir, url):
    """Run the structure and oracle residual suite for a configuration."""
    config = _apply_outdir(_load(config_path), output_dir)
    body = _post(url, "/verify", {"config": config})
    for name, check in body["checks"].items():
        status = "ok  " if check["passed"] else "FAIL"
        click.echo(f"[{status}] {name:20s} {check['value']:.3e} "
                   f"(tolerance {check['tolerance']:.1e})")
    if not body["passed"]:
        sys.exit(1)
    click.echo("all checks passed")


@main.command()
@click.option("--k", required=True, help='Wavenumber, e.g. "0.8*pi"')
@click.option("--rho", required=True, type=float, help="Slab contrast")
@click.option("--a", default=-1.0, show_default=True)
@click.option("--b", default=1.0, show_default=True)
@url_option
def oracle(k, rho, a, b, url):
    """Reflection/transmission of a 1D constant slab (reference values)."""
    body = _post(url, "/oracle", {"k": k, "rho": rho, "a": a, "b": b})
    r, t = body["r"], body["t"]
    click.echo(f"R = {r['re']:+.10f}{r['im']:+.10f}i  (|R| = {r['abs']:.10f})")
    click.echo(f"T = {t['re']:+.10f}{t['im']:+.10f}i  (|T| = {t['abs']:.10f})")
    click.echo(f"flux defect = {body['flux_defect']:.3e}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("waveinvis.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
