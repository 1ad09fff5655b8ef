"""Figure-script tests.

Fixture CSVs come from the spherevort command-line interface (the documented
producer of both schemas) or are written by hand against the schema text; the
scripts under test never import the physics package.
"""

import numpy as np
import pytest
from click.testing import CliRunner

from figures import plot_bench, plot_field
from figures.schemas import SchemaError, read_bench_csv, read_field_csv
from spherevort.cli import main as spherevort_cli

RUNNER = CliRunner()

FIG1_ARGS = [
    "generate", "--family", "rh", "--n", "20",
    "--mode", "3:100:0", "--mode", "8:150:1.5",
    "--mode", "13:200:3.4", "--mode", "18:250:0.9",
    "--a", "rh-classic", "--omega", "1",
    "--nlat", "64", "--nlon", "128",
]


def _cli_csv(path, *args):
    res = RUNNER.invoke(spherevort_cli, [*args, "--out", str(path)],
                        catch_exceptions=False)
    assert res.exit_code == 0
    return path


@pytest.fixture(scope="module")
def fig1_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("fig1") / "wave.csv"
    return _cli_csv(path, *FIG1_ARGS)


@pytest.fixture(scope="module")
def bench_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("bench") / "bench.csv"
    return _cli_csv(
        path, "bench", "--family", "rh-classic", "--n", "4", "--m", "4",
        "--amplitude", "1", "--omega", "1", "--dt", "0.01", "--steps", "20",
        "--stride", "5", "--track", "4:4",
    )


def _hand_field_csv(path, mu_nodes, lam_nodes, psi_fn, schema="1"):
    with open(path, "w") as f:
        f.write(f"# schema={schema}\n# frame=rest\n# omega=0\n# t=0\n")
        f.write(f"# nlat={len(mu_nodes)}\n# nlon={len(lam_nodes)}\n")
        for lam in lam_nodes:
            for mu in mu_nodes:
                f.write(f"{lam},{mu},{psi_fn(lam, mu)}\n")
    return path


class TestFieldPlot:
    def test_fig1_spectrum_gate_passes_and_renders(self, fig1_csv, tmp_path):
        out = tmp_path / "wave.png"
        code = plot_field.main([
            str(fig1_csv), str(out),
            "--expect-peaks", "3,8,13,18", "--at-mu", "0.5",
        ])
        assert code == 0
        assert out.stat().st_size > 0

    def test_spectrum_gate_rejects_wrong_mix(self, tmp_path):
        csv = _cli_csv(
            tmp_path / "rh44.csv", "generate", "--family", "rh-classic",
            "--n", "4", "--m", "4", "--amplitude", "1", "--omega", "1",
            "--nlat", "32", "--nlon", "64",
        )
        code = plot_field.main([
            str(csv), str(tmp_path / "rh44.png"),
            "--expect-peaks", "3,8,13,18",
        ])
        assert code == 1

    def test_peak_finder_directly(self, fig1_csv):
        _, _, mu, psi, _ = read_field_csv(str(fig1_csv))
        assert plot_field.zonal_power_peaks(psi, mu, 0.5, 4) == [3, 8, 13, 18]

    def test_zero_field_uniform_map(self, tmp_path):
        mu = np.linspace(-0.95, 0.95, 12)
        lam = np.linspace(0.0, 2 * np.pi, 24, endpoint=False)
        csv = _hand_field_csv(tmp_path / "zero.csv", mu, lam,
                              lambda l, m: 0.0)
        out = tmp_path / "zero.png"
        assert plot_field.main([str(csv), str(out)]) == 0
        assert out.stat().st_size > 0

    def test_solid_body_equirectangular(self, tmp_path):
        mu = np.linspace(-0.95, 0.95, 12)
        lam = np.linspace(0.0, 2 * np.pi, 24, endpoint=False)
        csv = _hand_field_csv(tmp_path / "sb.csv", mu, lam,
                              lambda l, m: 2.0 * m)
        out = tmp_path / "sb.svg"
        code = plot_field.main(
            [str(csv), str(out), "--projection", "equirectangular"])
        assert code == 0
        assert out.stat().st_size > 0

    def test_schema_mismatch_exits_2(self, tmp_path):
        mu = np.linspace(-0.5, 0.5, 4)
        lam = np.linspace(0.0, 6.0, 8)
        bad_tag = _hand_field_csv(tmp_path / "a.csv", mu, lam,
                                  lambda l, m: 0.0, schema="9")
        assert plot_field.main([str(bad_tag), str(tmp_path / "a.png")]) == 2
        truncated = tmp_path / "b.csv"
        truncated.write_text(
            (tmp_path / "a.csv").read_text().replace("schema=9", "schema=1")
            .rsplit("\n", 5)[0]
        )
        assert plot_field.main([str(truncated), str(tmp_path / "b.png")]) == 2
        assert plot_field.main(
            [str(tmp_path / "missing.csv"), str(tmp_path / "c.png")]) == 2

    def test_bad_peak_list_exits_2(self, tmp_path):
        mu = np.linspace(-0.5, 0.5, 4)
        lam = np.linspace(0.0, 6.0, 8)
        csv = _hand_field_csv(tmp_path / "f.csv", mu, lam, lambda l, m: m)
        assert plot_field.main([str(csv), str(tmp_path / "f.png"),
                                "--expect-peaks", "3,x"]) == 2


class TestBenchPlot:
    def test_renders_benchmark_output(self, bench_csv, tmp_path):
        out = tmp_path / "bench.png"
        assert plot_bench.main([str(bench_csv), str(out)]) == 0
        assert out.stat().st_size > 0

    def test_refinement_pair_ratio_visible_in_data(self, tmp_path):
        # two runs to t = 0.2 with dt halved: final linf errors ~16x apart
        errs = []
        for dt, steps in (("0.02", "10"), ("0.01", "20")):
            csv = _cli_csv(
                tmp_path / f"b{dt}.csv", "bench", "--family", "rh-classic",
                "--n", "4", "--m", "4", "--amplitude", "1", "--omega", "1",
                "--dt", dt, "--steps", steps, "--stride", steps,
            )
            _, cols = read_bench_csv(str(csv))
            errs.append(cols["linf_psi_err"][-1])
            assert plot_bench.main(
                [str(csv), str(tmp_path / f"b{dt}.png")]) == 0
        assert 10.0 < errs[0] / errs[1] < 24.0

    def test_single_row_report_no_crash(self, tmp_path):
        csv = _cli_csv(
            tmp_path / "b0.csv", "bench", "--family", "rh-classic",
            "--n", "4", "--m", "4", "--amplitude", "1", "--omega", "1",
            "--steps", "0",
        )
        out = tmp_path / "b0.png"
        assert plot_bench.main([str(csv), str(out)]) == 0
        assert out.stat().st_size > 0

    def test_missing_column_exits_2(self, bench_csv, tmp_path):
        text = bench_csv.read_text().replace(",enstrophy", "")
        broken = tmp_path / "broken.csv"
        broken.write_text(text)
        assert plot_bench.main([str(broken), str(tmp_path / "x.png")]) == 2

    def test_empty_file_exits_2(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("# truncation=42\n")
        assert plot_bench.main([str(empty), str(tmp_path / "y.png")]) == 2

    def test_reader_rejects_header_only(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("step,t,l2_psi_err,linf_psi_err,energy,enstrophy,"
                     "phase_estimate\n")
        with pytest.raises(SchemaError):
            read_bench_csv(str(p))
