"""Command handlers shared by the CLI and the HTTP service.

Each handler takes a flat JSON-serializable parameter mapping and returns a
JSON-serializable result with any file payloads as CSV text, so the same
code path serves local CLI invocations and service requests.
"""

from __future__ import annotations

import numpy as np

from . import solutions, solver, symmetry, verify
from .errors import SphereVortError, InvalidArgumentError
from .sphere import Frame, ScalarField, SphereGrid, field_csv_text
from .solutions import DisturbanceSolution, build_solution


def _solution_from_params(params):
    spec = {k: v for k, v in params.items() if v is not None}
    return build_solution(spec)


def _grid_from_params(params, truncation=None):
    nlat = int(params.get("nlat") or 0)
    nlon = int(params.get("nlon") or 0)
    if nlat <= 0 or nlon <= 0:
        from .sphere import min_grid_for

        g_nlat, g_nlon = min_grid_for(truncation if truncation is not None else 42)
        nlat = nlat or g_nlat
        nlon = nlon or g_nlon
    return SphereGrid.build(nlat, nlon)


def _sample_field(sol, grid, t):
    lam2, mu2 = grid.meshes()
    t2 = np.full_like(mu2, float(t))
    values = np.asarray(sol.psi(t2, lam2, mu2), dtype=float)
    # Band-limited-in-latitude solutions are conservative about their domain;
    # grid nodes never hit the poles, so replace any non-finite values with 0.
    values = np.nan_to_num(values, nan=0.0, posinf=0.0, neginf=0.0)
    zeta = None
    if sol.has_analytic_zeta:
        zeta = np.nan_to_num(
            np.asarray(sol.zeta(t2, lam2, mu2), dtype=float),
            nan=0.0, posinf=0.0, neginf=0.0,
        )
    frame = sol.frame if isinstance(sol.frame, Frame) else Frame.rest()
    return ScalarField(grid, values, time=float(t), frame=frame), zeta


def handle_generate(params):
    """Sample a solution's stream function on a grid; returns the field CSV."""
    sol = _solution_from_params(params)
    grid = _grid_from_params(params)
    fld, zeta = _sample_field(sol, grid, params.get("t", 0.0))
    return {
        "family": str(params.get("family")),
        "label": sol.label,
        "nlat": grid.nlat,
        "nlon": grid.nlon,
        "time": float(params.get("t", 0.0)),
        "csv": field_csv_text(fld, zeta=zeta),
    }


def handle_verify(params):
    """Residual certification of a solution spec against its equation."""
    sol = _solution_from_params(params)
    tol = float(params.get("tol", 1e-8))
    n_points = int(params.get("n_points", 200))
    seed = int(params.get("seed", 0))
    if isinstance(sol, DisturbanceSolution):
        report = verify.disturbance_residual(sol, n_points=n_points, seed=seed)
    else:
        mode = str(params.get("mode", "analytic"))
        report = verify.vorticity_residual(
            sol, mode=mode, n_points=n_points, seed=seed
        )
    return {
        "family": str(params.get("family")),
        "tol": tol,
        "passed": bool(report.relative_max <= tol),
        "report": report.to_dict(),
    }


def _standard_named_basis():
    gens = symmetry.standard_generators()
    return dict(zip(("D", "dt", "J1", "J2", "J3"), gens))


def _algebra_table_basis():
    named = _standard_named_basis()
    basis = list(named.values())
    for k in range(3):
        basis.append(symmetry.z_generator(symmetry.qp(1.0, k)))
    return basis


def handle_algebra_table(params=None):
    """Structure constants of {D, dt, J1, J2, J3, Z(1), Z(t), Z(t^2)}."""
    params = params or {}
    basis = _algebra_table_basis()
    table = symmetry.structure_constants(
        basis, tol=float(params.get("tol", 1e-8))
    )
    return {
        "labels": list(table.labels),
        "closed": bool(table.closed),
        "max_pair_residual": float(np.max(table.pair_residuals)),
        "jacobi_residual": float(table.jacobi_residual),
        "csv": table.csv_text(),
        "text": table.table_text(),
    }


def handle_algebra_check(params):
    """Closure check of one catalog subalgebra class."""
    class_id = params.get("class_id")
    if class_id is None:
        raise InvalidArgumentError("missing subalgebra class id")
    sub = symmetry.subalgebra_catalog(str(class_id), params.get("params") or {})
    report = symmetry.closure_check(sub, tol=float(params.get("tol", 1e-8)))
    return {
        "class_id": str(class_id),
        "passed": bool(report.passed),
        "max_residual": float(report.max_residual),
        "csv": report.csv_text(),
        "text": report.table_text(),
    }


def handle_algebra_adjoint(params):
    """Adjoint action Ad(exp(eps X)) Y decomposed in the standard basis."""
    named = _standard_named_basis()
    x_name = str(params.get("x", ""))
    y_name = str(params.get("y", ""))
    if x_name not in named or y_name not in named:
        raise InvalidArgumentError(
            f"generators must be among {sorted(named)}, got {x_name!r}, {y_name!r}"
        )
    eps = float(params.get("eps", 0.0))
    image = symmetry.adjoint(named[x_name], eps, named[y_name])
    coeffs, misfit = symmetry.decompose_in_span(image, list(named.values()))
    labels = list(named.keys())
    nonzero = {
        labels[i]: float(c) for i, c in enumerate(coeffs) if abs(c) > 1e-7
    }
    # one-term decompositions get a friendly name like "J3" or "-J1"
    display = None
    if len(nonzero) == 1:
        (name, c), = nonzero.items()
        if abs(c - 1.0) <= 1e-7:
            display = name
        elif abs(c + 1.0) <= 1e-7:
            display = f"-{name}"
    return {
        "x": x_name,
        "eps": eps,
        "y": y_name,
        "coefficients": {labels[i]: float(c) for i, c in enumerate(coeffs)},
        "misfit": float(misfit),
        "display": display,
    }


def _transform_chain(params):
    """Build the list of point transformations requested by the parameters."""
    steps = []
    for direction in params.get("platzman") or []:
        d = str(direction).replace("-", "_")
        steps.append(symmetry.platzman(d, float(params.get("omega", 0.0))))
    rot_names = {"J1": 1, "J2": 2, "J3": 3}
    for spec in params.get("rotate") or []:
        name, _, eps = str(spec).partition(":")
        if name not in rot_names:
            raise InvalidArgumentError(f"unknown rotation generator {name!r}")
        steps.append(
            symmetry.flow(symmetry.rotation_generator(rot_names[name]), float(eps))
        )
    for name in params.get("discrete") or []:
        steps.append(symmetry.discrete_symmetry(str(name).replace("-", "_")))
    return steps


def handle_transform(params):
    """Apply a chain of point transformations to a solution and sample it."""
    sol = _solution_from_params(params)
    for step in _transform_chain(params):
        sol = step.apply_to_solution(sol)
    grid = _grid_from_params(params)
    fld, zeta = _sample_field(sol, grid, params.get("t", 0.0))
    return {
        "family": str(params.get("family")),
        "label": sol.label,
        "nlat": grid.nlat,
        "nlon": grid.nlon,
        "time": float(params.get("t", 0.0)),
        "csv": field_csv_text(fld, zeta=zeta),
    }


def handle_bench(params):
    """Run the pseudo-spectral benchmark against an exact solution."""
    sol = _solution_from_params(params)
    truncation = int(params.get("truncation", 42))
    cfg = solver.SolverConfig(
        truncation=truncation,
        dt=float(params.get("dt", 1e-3)),
        nsteps=int(params.get("steps", 0)),
        omega=float(params.get("omega", 0.0)),
        hyper_nu=float(params.get("hyper_nu", 0.0)),
        hyper_order=int(params.get("hyper_order", 1)),
        nlat=int(params.get("nlat") or 0),
        nlon=int(params.get("nlon") or 0),
        output_stride=int(params.get("stride", 1)),
    )
    track = params.get("track")
    if track is not None:
        track = tuple(int(x) for x in str(track).split(":"))
    report = solver.run_benchmark(sol, cfg, track=track)
    last = report.rows[-1]
    summary = {
        "completed": bool(report.completed),
        "steps": int(last.step),
        "final_t": float(last.t),
        "final_l2_psi_err": float(last.l2_psi_err),
        "final_linf_psi_err": float(last.linf_psi_err),
        "final_energy": float(last.energy),
        "final_enstrophy": float(last.enstrophy),
    }
    try:
        m = report.track[1]
        summary["phase_speed"] = float(
            solver.measure_phase_speed(report.times, report.tracked_coeffs, m)
        )
    except SphereVortError:
        summary["phase_speed"] = None
    return {"csv": report.csv_text(), "summary": summary}
