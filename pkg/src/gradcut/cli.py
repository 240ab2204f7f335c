"""Command-line client.

Every subcommand is a thin HTTP client of the service. By default requests
run against the in-process app over ASGI (no socket, works offline);
--server points the same client at a remote instance. All errors leave via
one path: a single "error: ..." line on stderr and a nonzero exit code.
"""

import asyncio
import base64
import json
import os

import click
import httpx

from . import __version__
from .experiments import OUTPUT_DIR_ENV


def _client(server):
    if server:
        return httpx.AsyncClient(base_url=server, timeout=None)
    # ASGITransport is async-only, so the in-process and remote paths share
    # one async client driven by asyncio.run per command
    from .service import app
    return httpx.AsyncClient(transport=httpx.ASGITransport(app=app),
                             base_url="http://service.local", timeout=None)


async def _post_async(server, path, payload):
    async with _client(server) as client:
        return await client.post(path, json=payload)


def _post(server, path, payload):
    try:
        resp = asyncio.run(_post_async(server, path, payload))
    except httpx.HTTPError as exc:
        _fail("cannot reach server: %s" % exc)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail")
        except ValueError:
            detail = None
        _fail(detail if isinstance(detail, str) else resp.text)
    return resp.json()


def _fail(message):
    click.echo("error: %s" % message, err=True)
    raise SystemExit(1)


def _read_text(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        _fail(str(exc))


def _output_dir(spec_dir):
    out = os.environ.get(OUTPUT_DIR_ENV, spec_dir)
    os.makedirs(out, exist_ok=True)
    return out


def _write_bytes(path, data):
    with open(path, "wb") as fh:
        fh.write(data)
    click.echo("wrote %s" % path)


_server_option = click.option(
    "--server", default=None, metavar="URL",
    help="Remote service URL (default: run in-process).")


@click.group()
@click.version_option(version=__version__)
def main():
    """Gradient-sparse signal recovery on graphs."""


@main.command()
@click.argument("specfile")
@click.option("--method", default=None, type=click.Choice(["l0", "tv"]),
              help="Solver to run (default: first method in the spec).")
@_server_option
def recover(specfile, method, server):
    """Recover one dataset: writes the path table and the selected signal."""
    payload = {"spec_text": _read_text(specfile), "method": method}
    data = _post(server, "/v1/recover", payload)
    out = _output_dir(data["output_dir"])
    _write_bytes(os.path.join(out, "path.csv"), data["path_csv"].encode())
    _write_bytes(os.path.join(out, "signal.csv"), data["signal_csv"].encode())
    if data["image_pgm_base64"]:
        _write_bytes(os.path.join(out, "recovered.pgm"),
                     base64.b64decode(data["image_pgm_base64"]))
    click.echo("method=%s selected=%s rmse=%.6g best_rmse=%.6g support=%d"
               % (data["method"], data["selected"], data["rmse"],
                  data["best_rmse"], data["support"]))


@main.command()
@click.argument("specfile")
@_server_option
def simulate(specfile, server):
    """Run an experiment sweep: writes results.csv and metadata.json."""
    data = _post(server, "/v1/simulate", {"spec_text": _read_text(specfile)})
    out = _output_dir(data["output_dir"])
    _write_bytes(os.path.join(out, "results.csv"),
                 data["results_csv"].encode())
    meta_path = os.path.join(out, "metadata.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(data["metadata"], fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo("wrote %s" % meta_path)
    failures = data["metadata"].get("failures", [])
    click.echo("rows=%d failures=%d" % (len(data["rows"]), len(failures)))


@main.command(name="crip-check")
@click.argument("specfile")
@click.option("-o", "--output", default="crip_report.csv", metavar="PATH",
              help="Where to write the report CSV.")
@_server_option
def crip_check(specfile, output, server):
    """Probe a design's isometry on sampled gradient-sparse signals."""
    data = _post(server, "/v1/crip-check", {"spec_text": _read_text(specfile)})
    _write_bytes(output, data["report_csv"].encode())
    for rec in data["records"]:
        line = ("s=%d ratios=[%.6g, %.6g] rho_hat=%.6g fitted_c=%.6g"
                % (rec["s"], rec["min_ratio"], rec["max_ratio"],
                   rec["rho_hat"], rec["fitted_constant"]))
        if rec["falsified"] is not None:
            line += " falsified=%s" % ("yes" if rec["falsified"] else "no")
        click.echo(line)
    if data["total_failure"]:
        click.echo("total failure: some sampled signal is annihilated")


@main.command(name="phantom-gen")
@click.argument("name")
@click.option("-o", "--output", default=None, metavar="PATH",
              help="Output graymap path (default: NAME.pgm).")
@click.option("--rows", default=None, type=int)
@click.option("--cols", default=None, type=int)
@click.option("--maxval", default=255, type=int)
@_server_option
def phantom_gen(name, output, rows, cols, maxval, server):
    """Write a built-in phantom image as a binary P5 graymap."""
    payload = {"name": name, "rows": rows, "cols": cols, "maxval": maxval}
    data = _post(server, "/v1/phantom-gen", payload)
    path = output or "%s.pgm" % name
    _write_bytes(path, base64.b64decode(data["image_pgm_base64"]))
    click.echo("%s: %dx%d" % (data["name"], data["rows"], data["cols"]))


if __name__ == "__main__":
    main()
