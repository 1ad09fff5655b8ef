"""End-to-end CLI tests (exit codes, schemas, determinism)."""

import io
import json

import numpy as np
from click.testing import CliRunner

from spherevort.cli import main
from spherevort.sphere import read_field_csv

RUNNER = CliRunner()


def run(*args):
    return RUNNER.invoke(main, list(args), catch_exceptions=False)


class TestGenerate:
    ARGS = [
        "generate", "--family", "rh-classic", "--n", "4", "--m", "4",
        "--amplitude", "1", "--omega", "1", "--nlat", "16", "--nlon", "32",
    ]

    def test_csv_roundtrip(self, tmp_path):
        out = tmp_path / "field.csv"
        res = run(*self.ARGS, "--out", str(out))
        assert res.exit_code == 0
        fld, zeta = read_field_csv(io.StringIO(out.read_text()))
        assert (fld.grid.nlat, fld.grid.nlon) == (16, 32)
        assert zeta is not None
        assert np.all(np.isfinite(fld.values))

    def test_stdout_matches_file(self, tmp_path):
        res = run(*self.ARGS)
        out = tmp_path / "field.csv"
        run(*self.ARGS, "--out", str(out))
        assert res.output == out.read_text()

    def test_deterministic(self):
        assert run(*self.ARGS).output == run(*self.ARGS).output

    def test_unknown_family_exits_2(self):
        res = run("generate", "--family", "bogus")
        assert res.exit_code == 2


class TestVerify:
    def test_pass_exits_0(self):
        res = run(
            "verify", "--family", "rh-classic", "--n", "4", "--m", "2",
            "--amplitude", "1", "--omega", "1",
        )
        assert res.exit_code == 0
        payload = json.loads(res.output)
        assert payload["passed"] is True
        assert payload["report"]["relative_max"] <= 1e-8

    def test_failure_exits_1(self):
        res = run("verify", "--family", "test-nonsolution", "--omega", "1")
        assert res.exit_code == 1
        payload = json.loads(res.output)
        assert payload["passed"] is False

    def test_disturbance_family(self):
        res = run(
            "verify", "--family", "disturbance-psi2", "--c1", "1",
            "--c2", "0.5", "--nu", "1", "--r0", "0.5", "--big-h", "power:2",
        )
        assert res.exit_code == 0

    def test_bad_mode_spec_exits_2(self):
        res = run(
            "verify", "--family", "rh", "--n", "4", "--mode", "4:1", "--a", "0",
        )
        assert res.exit_code == 2


class TestAlgebra:
    def test_table(self):
        res = run("algebra", "table")
        assert res.exit_code == 0
        assert "closed: True" in res.output

    def test_table_csv(self):
        res = run("algebra", "table", "--csv")
        assert res.exit_code == 0
        assert res.output.startswith("pair_i,pair_j,residual,pass")

    def test_check_pass(self):
        res = run(
            "algebra", "check", "--class", "6",
            "--params", '{"lambdas": [1.0], "ms": [1]}',
        )
        assert res.exit_code == 0
        assert "PASS" in res.output

    def test_check_fail_exits_1(self):
        res = run(
            "algebra", "check", "--class", "11",
            "--params", '{"kappa": 1.0, "n": 2}',
        )
        assert res.exit_code == 1
        assert "FAIL" in res.output

    def test_check_bad_params_exit_2(self):
        assert run("algebra", "check", "--class", "6",
                   "--params", "not-json").exit_code == 2
        assert run("algebra", "check", "--class", "99").exit_code == 2

    def test_adjoint_quarter_turn(self):
        res = run("algebra", "adjoint", "--x", "J2", "--eps",
                  str(-np.pi / 2.0), "--y", "J1")
        assert res.exit_code == 0
        payload = json.loads(res.output)
        assert payload["display"] == "J3"
        assert payload["misfit"] < 1e-6

    def test_adjoint_unknown_generator_exits_2(self):
        assert run("algebra", "adjoint", "--x", "Q", "--eps", "1",
                   "--y", "J1").exit_code == 2


class TestTransform:
    BASE = [
        "--family", "rh-classic", "--n", "3", "--m", "2", "--amplitude", "1",
        "--omega", "1", "--nlat", "16", "--nlon", "32", "--t", "0.5",
    ]

    def test_platzman_roundtrip_identity(self):
        plain = run("generate", *self.BASE)
        both = run("transform", *self.BASE, "--platzman", "to-rest",
                   "--platzman", "to-rotating")
        assert both.exit_code == 0
        f_a, _ = read_field_csv(io.StringIO(plain.output))
        f_b, _ = read_field_csv(io.StringIO(both.output))
        np.testing.assert_allclose(f_b.values, f_a.values, atol=1e-12)

    def test_rotation(self):
        res = run("transform", *self.BASE, "--rotate", "J2:0.5")
        assert res.exit_code == 0

    def test_bad_rotation_exits_2(self):
        assert run("transform", *self.BASE,
                   "--rotate", "J9:0.5").exit_code == 2


class TestBench:
    def test_short_run(self, tmp_path):
        out = tmp_path / "bench.csv"
        res = run(
            "bench", "--family", "rh-classic", "--n", "4", "--m", "4",
            "--amplitude", "1", "--omega", "1", "--dt", "0.001",
            "--steps", "10", "--stride", "5", "--track", "4:4",
            "--out", str(out),
        )
        assert res.exit_code == 0
        lines = out.read_text().strip().split("\n")
        header = [l for l in lines if not l.startswith("#")][0]
        assert header == (
            "step,t,l2_psi_err,linf_psi_err,energy,enstrophy,phase_estimate"
        )
        summary = json.loads(res.output)
        assert summary["completed"] is True
        assert summary["final_linf_psi_err"] < 1e-8
        assert abs(summary["phase_speed"] - (-0.1)) < 1e-4
