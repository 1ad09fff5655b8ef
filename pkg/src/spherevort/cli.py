"""Command-line interface: generate / verify / algebra / transform / bench.

Each subcommand is a thin client over the handlers module; with --server it
posts the same parameters to a running HTTP service instead.  Exit codes:
0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import json
import sys

import click

from . import handlers
from .errors import SphereVortError

EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2


def _dispatch(ctx, path, handler, params):
    """Run locally or POST to the service; map library errors to exit 2."""
    server = ctx.obj.get("server")
    if server:
        import httpx

        resp = httpx.post(
            server.rstrip("/") + path, json=params, timeout=600.0
        )
        if resp.status_code == 422:
            raise click.UsageError(str(resp.json().get("detail")))
        resp.raise_for_status()
        return resp.json()
    try:
        return handler(params)
    except SphereVortError as exc:
        raise click.UsageError(str(exc)) from exc


def _emit(text, out):
    if out:
        with open(out, "w") as f:
            f.write(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _solution_options(fn):
    opts = [
        click.option("--family", required=True,
                     help="rh | rh-classic | solid-body | arctanh | "
                          "rotated-arctanh | disturbance-psi1 | "
                          "disturbance-psi2 | test-nonsolution"),
        click.option("--omega", type=float, default=0.0, show_default=True,
                     help="Frame angular velocity."),
        click.option("--n", type=int, default=None, help="Wave degree."),
        click.option("--m", type=int, default=None, help="Wave order."),
        click.option("--amplitude", type=float, default=None),
        click.option("--mode", "modes", multiple=True,
                     help="Repeated m:amplitude:delta wave modes (family rh)."),
        click.option("--a", default=None,
                     help="Wave parameter a (number or 'rh-classic')."),
        click.option("--g", default=None, help="Profile g(t)."),
        click.option("--f", default=None, help="Profile f(t)."),
        click.option("--h", default=None, help="Profile h(t)."),
        click.option("--w", default=None, help="Profile w(gamma)."),
        click.option("--big-w", "W", default=None, help="Profile W(s)."),
        click.option("--band-delta", "delta", type=float, default=None,
                     help="Pole-exclusion band width."),
        click.option("--c1", type=float, default=None),
        click.option("--c2", type=float, default=None),
        click.option("--nu", type=float, default=None),
        click.option("--r0", type=float, default=None),
        click.option("--big-h", "H", default=None, help="Profile H(theta)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _spec_params(kwargs):
    params = {k: v for k, v in kwargs.items() if v is not None}
    modes = params.pop("modes", ())
    if modes:
        params["modes"] = list(modes)
    return params


@click.group()
@click.option("--server", default=None, envvar="SPHEREVORT_SERVER",
              help="Base URL of a running service; omit to run in-process.")
@click.pass_context
def main(ctx, server):
    """Exact solutions, Lie symmetries and a benchmark solver for the
    barotropic vorticity equation on the rotating sphere."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@_solution_options
@click.option("--t", type=float, default=0.0, show_default=True)
@click.option("--nlat", type=int, default=None)
@click.option("--nlon", type=int, default=None)
@click.option("--out", default=None, help="Output CSV path (default stdout).")
@click.pass_context
def generate(ctx, out, **kwargs):
    """Sample a solution on a grid and write the field CSV."""
    params = _spec_params(kwargs)
    result = _dispatch(ctx, "/generate", handlers.handle_generate, params)
    _emit(result["csv"], out)


@main.command()
@_solution_options
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--residual-mode", "mode", default="analytic", show_default=True,
              type=click.Choice(["analytic", "finite_difference", "spectral"]))
@click.option("--n-points", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_context
def verify(ctx, **kwargs):
    """Certify a solution's residual; exit 1 if it exceeds the tolerance."""
    params = _spec_params(kwargs)
    result = _dispatch(ctx, "/verify", handlers.handle_verify, params)
    click.echo(json.dumps(result, indent=2, sort_keys=True))
    if not result["passed"]:
        sys.exit(EXIT_VERIFY_FAILED)


@main.group()
def algebra():
    """Structure constants, closure checks and the adjoint action."""


@algebra.command()
@click.option("--csv", "as_csv", is_flag=True, help="Emit the CSV schema.")
@click.option("--out", default=None)
@click.pass_context
def table(ctx, as_csv, out):
    """Structure-constant table of {D, dt, J1, J2, J3, Z(1), Z(t), Z(t^2)}."""
    server = ctx.obj.get("server")
    if server:
        import httpx

        resp = httpx.get(server.rstrip("/") + "/algebra/table", timeout=600.0)
        resp.raise_for_status()
        result = resp.json()
    else:
        try:
            result = handlers.handle_algebra_table({})
        except SphereVortError as exc:
            raise click.UsageError(str(exc)) from exc
    _emit(result["csv"] if as_csv else result["text"], out)
    if not result["closed"]:
        sys.exit(EXIT_VERIFY_FAILED)


@algebra.command()
@click.option("--class", "class_id", "--class-id", required=True,
              help="Catalog class id: 1..12, opt1d_1..4, opt2d_1..7.")
@click.option("--params", default="{}",
              help="JSON object of class parameters.")
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--csv", "as_csv", is_flag=True)
@click.option("--out", default=None)
@click.pass_context
def check(ctx, class_id, params, tol, as_csv, out):
    """Bracket-closure check of one catalog subalgebra; exit 1 on failure."""
    try:
        parsed = json.loads(params)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"--params must be JSON: {exc}") from exc
    body = {"class_id": class_id, "params": parsed, "tol": tol}
    result = _dispatch(ctx, "/algebra/check", handlers.handle_algebra_check, body)
    _emit(result["csv"] if as_csv else result["text"], out)
    if not result["passed"]:
        sys.exit(EXIT_VERIFY_FAILED)


@algebra.command()
@click.option("--x", required=True, help="Flow generator: D, dt, J1, J2, J3.")
@click.option("--eps", type=float, required=True)
@click.option("--y", required=True, help="Generator to push forward.")
@click.pass_context
def adjoint(ctx, x, eps, y):
    """Decompose Ad(exp(eps X)) Y in the standard basis."""
    body = {"x": x, "eps": eps, "y": y}
    result = _dispatch(ctx, "/algebra/adjoint", handlers.handle_algebra_adjoint, body)
    click.echo(json.dumps(result, indent=2, sort_keys=True))


@main.command()
@_solution_options
@click.option("--platzman", multiple=True,
              type=click.Choice(["to-rest", "to-rotating"]),
              help="Frame map; may be repeated and chains in order.")
@click.option("--rotate", multiple=True,
              help="Rotation flow 'J1:eps', 'J2:eps' or 'J3:eps'.")
@click.option("--discrete", multiple=True,
              type=click.Choice(["time-reversal", "mirror"]))
@click.option("--t", type=float, default=0.0, show_default=True)
@click.option("--nlat", type=int, default=None)
@click.option("--nlon", type=int, default=None)
@click.option("--out", default=None)
@click.pass_context
def transform(ctx, platzman, rotate, discrete, out, **kwargs):
    """Apply symmetry transformations to a solution and sample the image."""
    params = _spec_params(kwargs)
    if platzman:
        params["platzman"] = [p.replace("-", "_") for p in platzman]
    if rotate:
        params["rotate"] = list(rotate)
    if discrete:
        params["discrete"] = [d.replace("-", "_") for d in discrete]
    result = _dispatch(ctx, "/transform", handlers.handle_transform, params)
    _emit(result["csv"], out)


@main.command()
@_solution_options
@click.option("--truncation", "-T", "truncation", type=int, default=42,
              show_default=True)
@click.option("--dt", type=float, default=1e-3, show_default=True)
@click.option("--steps", type=int, default=0, show_default=True)
@click.option("--stride", type=int, default=1, show_default=True)
@click.option("--track", default=None, help="Tracked mode 'n:m'.")
@click.option("--nlat", type=int, default=None)
@click.option("--nlon", type=int, default=None)
@click.option("--out", default=None)
@click.pass_context
def bench(ctx, out, **kwargs):
    """Benchmark the pseudo-spectral solver against an exact solution."""
    params = _spec_params(kwargs)
    result = _dispatch(ctx, "/bench", handlers.handle_bench, params)
    _emit(result["csv"], out)
    click.echo(json.dumps(result["summary"], indent=2, sort_keys=True), err=True)


if __name__ == "__main__":
    main()
