"""Acceptance suite: one printed pass/fail line per criterion.

Criterion 4's convergence-order check is evaluated over t in [0, 2] with
steps 0.02 and 0.01, where truncation error dominates; at the benchmark step
of 1e-3 the error sits on a dt-independent rounding floor (~7e-11), far
below the 1e-5 gate, so halving dt there cannot show the order.
"""

import math

import numpy as np
import pytest

from spherevort.errors import InvalidStateError
from spherevort.profiles import parse_profile
from spherevort import symmetry as sy
from spherevort.solutions import (
    ArctanhParams,
    RHWaveParams,
    arctanh_family,
    classic_mean_flow_speed,
    disturbance_psi1,
    disturbance_psi2,
    linear_reduced_particular,
    rh_classic,
    rh_generalized,
    rotated_arctanh,
)
from spherevort.solutions import test_nonsolution as nonsolution
from spherevort.sphere import (
    SphereGrid,
    SpectralCoeffs,
    assoc_legendre,
    gauss_legendre_nodes,
    get_transform,
    laplacian_spectral,
)
from spherevort.solver import (
    SolverConfig,
    invert_laplacian,
    run_benchmark,
)
from spherevort.verify import (
    disturbance_residual,
    equivalence_check,
    linear_reduced_residual,
    vorticity_residual,
)

RNG = np.random.default_rng(20260823)


def _report(criterion, passed, detail=""):
    tag = "PASS" if passed else "FAIL"
    line = f"CRITERION {criterion}: {tag}" + (f" -- {detail}" if detail else "")
    print("\n" + line, flush=True)
    assert passed, line


def _profiles(g, f, h, w, **kw):
    return ArctanhParams(
        g=parse_profile(g), f=parse_profile(f), h=parse_profile(h),
        w=parse_profile(w), **kw,
    )


def test_criterion_1_exact_solution_certification():
    tol = 1e-8
    failures = []

    def check(label, report):
        if not (report.relative_max <= tol):
            failures.append(f"{label}: {report.relative_max:.3e}")

    fig1 = rh_generalized(RHWaveParams(
        n=20,
        modes=((3, 100.0, 0.0), (8, 150.0, 1.5), (13, 200.0, 3.4),
               (18, 250.0, 0.9)),
        a=classic_mean_flow_speed(20, 1.0),
        omega=1.0,
    ))
    check("rh-fig1", vorticity_residual(fig1, n_points=200))

    for n in range(2, 7):
        check(f"rh-classic-{n}",
              vorticity_residual(rh_classic(n, n, 1.0, 1.0), n_points=200))

    arctanh_sets = [
        _profiles("zero", "zero", "const:1", "zero"),
        _profiles("zero", "zero", "zero", "identity"),
        _profiles("const:1", "zero", "zero", "identity", allow_chart=True),
    ]
    for i, params in enumerate(arctanh_sets, 1):
        check(f"arctanh-{i}",
              vorticity_residual(arctanh_family(params), n_points=200))

    check("rotated-arctanh",
          vorticity_residual(rotated_arctanh("identity", "const:1", "power:3"),
                             n_points=200))

    pool = np.array([1.0, -1.0, 0.5])
    for i, builder in enumerate((disturbance_psi1, disturbance_psi2)):
        c1, c2, nu = RNG.choice(pool, 3)
        sol = builder(float(c1), float(c2), float(nu), 0.5, "power:2")
        check(f"disturbance-psi{i + 1}",
              disturbance_residual(sol, n_points=200))

    for a, b, c in ((1.0, 0.0, 1.0), (0.0, 2.0, 0.0), (3.0, 0.0, -2.0)):
        v = linear_reduced_particular(a, b, c)
        check(f"linear-reduced(c={c:g})",
              linear_reduced_residual(v, a, b, c, n_points=200))

    _report(1, not failures,
            "all constructors relative residual <= 1e-8"
            if not failures else "; ".join(failures))


def test_criterion_2_identity_checks():
    failures = []

    # (a) Ad(exp(-pi/2 J2)) J1 = J3
    j1, j2, j3 = (sy.rotation_generator(i) for i in (1, 2, 3))
    image = sy.adjoint(j2, -math.pi / 2.0, j1)
    coeffs, misfit = sy.decompose_in_span(image, [j1, j2, j3])
    if not (misfit <= 1e-9 and abs(coeffs[2] - 1.0) <= 1e-9
            and abs(coeffs[0]) <= 1e-9 and abs(coeffs[1]) <= 1e-9):
        failures.append(f"adjoint misfit {misfit:.3e} coeffs {coeffs}")

    # shared disturbance-family setup
    nu, r0, C1, C2 = 0.5, 0.5, 1.0, -0.7
    omega = 1.0 / (2.0 * r0)
    H = "power:2"
    rel = sy.disturbance_stream_relation(nu, H, r0=r0)
    to_rest = sy.platzman("to_rest", omega)

    # (b) second disturbance solution = quarter-turn image of the first
    rest1 = to_rest.apply_to_solution(
        rel.apply_to_solution(disturbance_psi1(C1, C2, nu, r0, H)))
    rest2 = to_rest.apply_to_solution(
        rel.apply_to_solution(disturbance_psi2(C1, -C2 / 2.0, nu, r0, H)))
    rot = sy.flow(sy.rotation_generator(2), math.pi / 2.0)
    rep = equivalence_check(rot.apply_to_solution(rest1), rest2,
                            n_points=20, seed=3, tol=1e-10)
    if not rep.passed:
        failures.append(f"rotated-psi1-vs-psi2 deviation {rep.max_deviation:.3e}")

    # (c) frame-map round trip is the identity
    pts = np.array([[2.0, 0.7, 0.3, 1.5], [0.5, 4.0, -0.6, -2.0]])
    back = sy.platzman("to_rotating", 1.0).forward(
        *sy.platzman("to_rest", 1.0).forward(*pts.T))
    dev = float(np.max(np.abs(np.stack([np.asarray(b, float) for b in back]).T
                              - pts)))
    if dev > 1e-12:
        failures.append(f"frame round trip deviation {dev:.3e}")

    # (d) the stream relation maps psi1 into the arctanh family with
    # f = C1/(nu t), h = -C2/(nu t), w = 0
    rest = to_rest.apply_to_solution(
        rel.apply_to_solution(
            disturbance_psi1(C1 / nu**2, C2 / nu**2, nu, r0, H)))
    target = arctanh_family(_profiles(
        "zero", f"cpower:{C1 / nu}:-1", f"cpower:{-C2 / nu}:-1", "zero"))
    rep = equivalence_check(rest, target, n_points=20, seed=4, tol=1e-10)
    if not rep.passed:
        failures.append(f"relation-image deviation {rep.max_deviation:.3e}")

    _report(2, not failures,
            "adjoint, rotation, frame round trip and relation identities hold"
            if not failures else "; ".join(failures))


CATALOG_SAMPLES = {
    "1": {"gbar": ["identity", "power:2"]},
    "2": {"f": "const:1.5", "gbar": ["identity"]},
    "3": {"gbar": ["const:1", "power:3"]},
    "4": {"sigma": 1.0, "lambdas": [0.0, 1.0], "ms": [1, 0],
          "mus": [0.5], "nus": [2.0], "mps": [0]},
    "5": {"kappa": 1.0, "lambdas": [0.0, 1.0], "ms": [1, 1]},
    "6": {"lambdas": [1.0], "ms": [1]},
    "7": {"sigma": -1.0, "lambdas": [0.5], "ms": [1],
          "mus": [1.0], "nus": [1.5], "mps": [0]},
    "8": {"kappa": 2.0, "lambdas": [-1.0, 2.0], "ms": [1, 0]},
    "9": {"lambdas": [0.0], "ms": [2]},
    "10": {"sigma": 1.0, "kappa": 1.0, "n": 2},
    "11": {"kappa": 0.0, "n": 2},
    "12": {"n": 2},
    "opt1d_1": {"a": 0.7},
    "opt1d_2": {"a": 1.0},
    "opt1d_3": {"g": "const:2"},
    "opt1d_4": {"g": "identity"},
    "opt2d_1": {"b": 1.3},
    "opt2d_2": {"a": 0.8},
    "opt2d_3": {"a": 0.5, "b": 1.7},
    "opt2d_4": {"c": -1.0},
    "opt2d_5": {"c": 0.0, "c_tilde": 1.0},
    "opt2d_6": {"g_check": "identity", "g_hat": "const:1"},
    "opt2d_7": {"gbar": ["const:1", "identity"]},
}


def test_criterion_3_algebra_suite():
    failures = []
    basis = sy.standard_generators() + [
        sy.z_generator(sy.qp(1.0, float(k))) for k in range(3)
    ]
    table = sy.structure_constants(basis, tol=1e-7)
    k = len(basis)
    expected = np.zeros((k, k, k))
    D, DT, J1, J2, J3, Z0, Z1, Z2 = range(8)
    expected[D, DT, DT] = -1.0
    for kk, z in enumerate((Z0, Z1, Z2)):
        expected[D, z, z] = kk + 1.0         # [D, Z(t^k)] = (k+1) Z(t^k)
    expected[DT, Z1, Z0] = 1.0               # [dt, Z(t^k)] = k Z(t^(k-1))
    expected[DT, Z2, Z1] = 2.0
    expected[J1, J2, J3] = 1.0
    expected[J2, J3, J1] = 1.0
    expected[J1, J3, J2] = -1.0
    for i in range(k):
        for j in range(i + 1, k):
            expected[j, i] = -expected[i, j]
    if not table.closed:
        failures.append("eight-generator table not closed")
    mismatch = float(np.max(np.abs(table.constants - expected)))
    if mismatch > 1e-7:
        failures.append(f"table mismatch {mismatch:.3e}")
    if float(np.max(table.pair_residuals)) > 1e-7:
        failures.append(
            f"pair residual {float(np.max(table.pair_residuals)):.3e}")

    assert set(CATALOG_SAMPLES) == set(sy.CATALOG_CLASS_IDS)
    for cid, params in CATALOG_SAMPLES.items():
        sub = sy.subalgebra_catalog(cid, params)
        rep = sy.closure_check(sub)
        if not rep.passed:
            failures.append(f"class {cid} residual {rep.max_residual:.3e}")

    _report(3, not failures,
            "structure table matches and all 23 catalog classes close"
            if not failures else "; ".join(failures))


def test_criterion_4_solver_benchmark():
    failures = []
    wave = rh_classic(4, 4, 1.0, 1.0)
    period = 2.0 * math.pi / 0.4  # one revolution of the m=4 phase at c=-0.1
    dt = 1e-3
    nsteps = int(round(period / dt))
    cfg = SolverConfig(truncation=42, dt=dt, nsteps=nsteps, omega=1.0,
                       output_stride=500)
    rep = run_benchmark(wave, cfg, track=(4, 4))
    linf = max(r.linf_psi_err for r in rep.rows)
    if linf > 1e-5:
        failures.append(f"linf psi error {linf:.3e}")
    phase = rep.final_row.phase_estimate
    if abs(phase - (-0.1)) > 0.005 * 0.1:
        failures.append(f"phase speed {phase:.6f}")
    e = np.array([r.energy for r in rep.rows])
    z = np.array([r.enstrophy for r in rep.rows])
    e_drift = float(np.max(np.abs(e - e[0])) / e[0])
    z_drift = float(np.max(np.abs(z - z[0])) / z[0])
    if e_drift > 1e-6 or z_drift > 1e-6:
        failures.append(f"drift energy {e_drift:.3e} enstrophy {z_drift:.3e}")

    # convergence order where truncation error dominates (see module docstring)
    errs = []
    for dt_c, n_c in ((0.02, 100), (0.01, 200)):
        cfg_c = SolverConfig(truncation=42, dt=dt_c, nsteps=n_c, omega=1.0,
                             output_stride=n_c)
        errs.append(run_benchmark(wave, cfg_c,
                                  track=(4, 4)).final_row.linf_psi_err)
    ratio = errs[0] / errs[1]
    if not (12.0 <= ratio <= 20.0):
        failures.append(f"dt-halving ratio {ratio:.2f}")

    _report(4, not failures,
            f"linf {linf:.2e}, phase {phase:.6f}, drift (E {e_drift:.1e}, "
            f"Z {z_drift:.1e}), dt ratio {ratio:.1f}"
            if not failures else "; ".join(failures))


def test_criterion_5_spectral_infrastructure():
    failures = []
    T = 42
    grid = SphereGrid.build(64, 128)
    tr = get_transform(grid, T)
    c = np.zeros((T + 1, T + 1), dtype=complex)
    for n in range(T + 1):
        c[n, : n + 1] = RNG.standard_normal(n + 1) + 1j * RNG.standard_normal(n + 1)
    c[:, 0] = c[:, 0].real
    rt = float(np.max(np.abs(tr.analyze(tr.synthesize(c)) - c)))
    if rt > 1e-11:
        failures.append(f"transform round trip {rt:.3e}")

    nodes, weights = gauss_legendre_nodes(64)
    worst = 0.0
    for k in range(2 * 64):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        worst = max(worst, abs(float(np.sum(weights * nodes**k)) - exact))
    if worst > 1e-12:
        failures.append(f"quadrature error {worst:.3e}")

    lam2, mu2 = grid.meshes()
    worst = 0.0
    for _ in range(20):
        n = int(RNG.integers(1, T + 1))
        m = int(RNG.integers(0, n + 1))
        p, _ = assoc_legendre(n, m, mu2)
        cc = tr.analyze(p * np.cos(m * lam2))
        lap = laplacian_spectral(SpectralCoeffs(T, cc)).coeffs
        scale = float(np.max(np.abs(cc)))
        worst = max(worst, float(
            np.max(np.abs(lap + n * (n + 1.0) * cc))) / (1.0 + scale))
    if worst > 1e-10:
        failures.append(f"Laplacian eigenrelation {worst:.3e}")

    _report(5, not failures,
            "round trip, quadrature and eigenrelation within gates"
            if not failures else "; ".join(failures))


def test_criterion_6_negative_controls():
    failures = []

    rep = vorticity_residual(nonsolution(1.0), n_points=100)
    if rep.relative_max <= 1e-8:
        failures.append("deliberate non-solution passed verification")

    j1, j2, j3 = (sy.rotation_generator(i) for i in (1, 2, 3))
    pair = sy.Subalgebra([j1, j2], "ad-hoc")
    closure = sy.closure_check(pair)
    if closure.passed:
        failures.append("{J1, J2} wrongly certified closed")
    bracket = sy.commutator(j1, j2)
    coeffs, r = sy.decompose_in_span(bracket, [j1, j2, j3])
    if not (r <= 1e-8 and abs(coeffs[2] - 1.0) <= 1e-7):
        failures.append("witness J3 not recovered from [J1, J2]")

    bad = np.zeros((5, 5), dtype=complex)
    bad[0, 0] = 1.0
    with pytest.raises(InvalidStateError):
        invert_laplacian(SpectralCoeffs(4, bad))

    _report(6, not failures,
            "non-solution rejected, open pair fails with witness J3, "
            "nonzero-mean state rejected"
            if not failures else "; ".join(failures))
