"""Solver tests.

Oracles: the analytic tendency of an exact traveling wave, classical RK4
convergence order, conservation of energy and absolute enstrophy, and the
known phase speed -2*omega/(n(n+1)).
"""

import math

import numpy as np
import pytest

from spherevort.errors import (
    BlowUpError,
    InvalidArgumentError,
    InvalidStateError,
    UndefinedPhaseError,
)
from spherevort.solutions import phase_speed, rh_classic
from spherevort.sphere import SpectralCoeffs, get_transform
from spherevort.solver import (
    BenchReport,
    SolverConfig,
    SpectralState,
    cfl_advisory,
    diagnostics,
    initial_state,
    invert_laplacian,
    measure_phase_speed,
    run_benchmark,
    step_rk4,
    tendency,
)

WAVE = rh_classic(4, 4, 1.0, 1.0)


def _cfg(**kw):
    base = dict(truncation=42, dt=1e-3, omega=1.0, frame="rotating")
    base.update(kw)
    return SolverConfig(**base)


class TestConfig:
    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            SolverConfig(dt=0.0)
        with pytest.raises(InvalidArgumentError):
            SolverConfig(nsteps=-1)
        with pytest.raises(InvalidArgumentError):
            SolverConfig(frame="corotating")
        with pytest.raises(InvalidArgumentError):
            SolverConfig(frame="rest", omega=1.0)
        with pytest.raises(InvalidArgumentError):
            SolverConfig(output_stride=0)

    def test_default_grid(self):
        grid = _cfg().grid()
        assert (grid.nlat, grid.nlon) == (64, 128)


class TestLaplacianInverse:
    def test_eigen_roundtrip(self):
        rng = np.random.default_rng(0)
        T = 20
        c = rng.standard_normal((T + 1, T + 1)) + 1j * rng.standard_normal(
            (T + 1, T + 1)
        )
        c = np.triu(c.T).T  # keep m <= n
        c[0, 0] = 0.0
        psi = invert_laplacian(SpectralCoeffs(T, c))
        n = np.arange(T + 1)
        back = psi.coeffs * (-(n * (n + 1.0)))[:, None]
        np.testing.assert_allclose(back, c, atol=1e-12)

    def test_nonzero_mean_rejected(self):
        c = np.zeros((5, 5), dtype=complex)
        c[0, 0] = 1.0
        with pytest.raises(InvalidStateError):
            invert_laplacian(SpectralCoeffs(4, c))
        with pytest.raises(InvalidStateError):
            SpectralState(SpectralCoeffs(4, c.copy()))


class TestTendency:
    def test_matches_analytic_time_derivative(self):
        cfg = _cfg()
        transform = get_transform(cfg.grid(), cfg.truncation)
        state = initial_state(WAVE, cfg, transform=transform)
        dz = tendency(state, cfg, transform=transform).coeffs
        lam2, mu2 = transform.grid.meshes()
        exact = transform.analyze(
            WAVE.zeta_partial("t", np.zeros_like(mu2), lam2, mu2)
        )
        scale = np.max(np.abs(exact))
        assert np.max(np.abs(dz - exact)) < 1e-9 * (1.0 + scale)

    def test_hyperviscosity_damps_energy(self):
        cfg_on = _cfg(nsteps=20, dt=0.01, hyper_nu=1e-4, hyper_order=2)
        cfg_off = _cfg(nsteps=20, dt=0.01)
        rep_on = run_benchmark(WAVE, cfg_on)
        rep_off = run_benchmark(WAVE, cfg_off)
        assert rep_on.final_row.energy < rep_off.final_row.energy


class TestStepping:
    def test_rk4_order_four(self):
        # march to t = 0.2 with dt and dt/2; linf error ratio ~ 2^4
        errs = []
        for dt, nsteps in ((0.02, 10), (0.01, 20)):
            rep = run_benchmark(WAVE, _cfg(dt=dt, nsteps=nsteps,
                                           output_stride=nsteps))
            errs.append(rep.final_row.linf_psi_err)
        ratio = errs[0] / errs[1]
        assert 10.0 < ratio < 24.0, ratio

    def test_blow_up_detected(self):
        import warnings

        cfg = _cfg(dt=50.0, nsteps=80)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            with pytest.raises(BlowUpError):
                run_benchmark(WAVE, cfg)

    def test_single_step_advances_time(self):
        cfg = _cfg()
        state = initial_state(WAVE, cfg)
        out = step_rk4(state, cfg)
        assert out.time == pytest.approx(cfg.dt)

    def test_cfl_advisory_positive(self):
        cfg = _cfg()
        state = initial_state(WAVE, cfg)
        adv = cfl_advisory(state, cfg)
        # polar min-spacing makes the advisory conservative; it only needs
        # to be a positive finite number on the scale of the grid and winds
        assert 0.0 < adv < 10.0


class TestConservation:
    def test_energy_enstrophy_drift_small(self):
        cfg = _cfg(nsteps=50, output_stride=50)
        rep = run_benchmark(WAVE, cfg)
        e0, z0 = rep.rows[0].energy, rep.rows[0].enstrophy
        e1, z1 = rep.final_row.energy, rep.final_row.enstrophy
        assert abs(e1 - e0) / e0 < 1e-9
        assert abs(z1 - z0) / z0 < 1e-9

    def test_diagnostics_match_report(self):
        cfg = _cfg()
        state = initial_state(WAVE, cfg)
        e, z = diagnostics(state, cfg)
        rep = run_benchmark(WAVE, _cfg(nsteps=0))
        assert abs(rep.rows[0].energy - e) < 1e-12 * e
        assert abs(rep.rows[0].enstrophy - z) < 1e-12 * z


class TestPhase:
    def test_synthetic_phase_recovery(self):
        times = np.linspace(0.0, 2.0, 21)
        c = -0.35
        m = 3
        coeffs = 0.5 * np.exp(-1j * m * c * times + 0.7j)
        assert measure_phase_speed(times, coeffs, m) == pytest.approx(c)

    def test_error_cases(self):
        with pytest.raises(UndefinedPhaseError):
            measure_phase_speed([0.0, 1.0], [1.0, 1.0], 0)
        with pytest.raises(UndefinedPhaseError):
            measure_phase_speed([0.0], [1.0], 1)
        with pytest.raises(UndefinedPhaseError):
            measure_phase_speed([0.0, 1.0], [1e-20, 1e-20], 1)

    def test_benchmark_measures_wave_speed(self):
        rep = run_benchmark(WAVE, _cfg(nsteps=40, output_stride=10))
        assert rep.track == (4, 4)  # auto-tracks the dominant nonzonal mode
        measured = rep.final_row.phase_estimate
        assert abs(measured - phase_speed(4, 1.0)) < 1e-6


class TestReport:
    def test_csv_schema(self):
        rep = run_benchmark(WAVE, _cfg(nsteps=4, output_stride=2))
        text = rep.csv_text()
        lines = text.strip().split("\n")
        assert lines[0].startswith("# truncation=42")
        assert "step,t,l2_psi_err,linf_psi_err,energy,enstrophy,phase_estimate" in lines
        data = [l for l in lines if not l.startswith("#")][1:]
        assert len(data) == 3  # steps 0, 2, 4
        assert rep.completed

    def test_stride_includes_final_step(self):
        rep = run_benchmark(WAVE, _cfg(nsteps=5, output_stride=3))
        assert [r.step for r in rep.rows] == [0, 3, 5]
