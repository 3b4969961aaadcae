import pathlib

import pytest

from kepfair.cli import main
from kepfair.instance import parse_instance
from kepfair.metrics import read_reports_csv


class TestSolve:
    def test_rawls_single(self, fig1_path, tmp_path, capsys):
        code = main([
            "solve", "--instance", str(fig1_path),
            "--concept", "rawls", "--kind", "single",
            "--out", str(tmp_path),
        ])
        assert code == 0
        report = (tmp_path / "fig1.rawls.single.report.txt").read_text()
        assert "fairness value    0.500000" in report
        [row] = read_reports_csv((tmp_path / "reports.csv").read_text())
        assert row.concept == "rawls"
        assert row.converged

    def test_utilitarian_pof_zero(self, fig1_path, tmp_path):
        code = main([
            "solve", "--instance", str(fig1_path),
            "--concept", "utilitarian", "--kind", "single",
            "--out", str(tmp_path),
        ])
        assert code == 0
        [row] = read_reports_csv((tmp_path / "reports.csv").read_text())
        assert abs(row.pof) < 1e-8

    def test_oracle_check_flag(self, fig1_path, tmp_path, capsys):
        code = main([
            "solve", "--instance", str(fig1_path),
            "--concept", "nash", "--kind", "nswp",
            "--oracle-check", "--out", str(tmp_path),
        ])
        out = capsys.readouterr().out
        assert code == 0
        assert "oracle_gap=" in out

    def test_export_conic_writes_cbf(self, fig1_path, tmp_path):
        main([
            "solve", "--instance", str(fig1_path),
            "--concept", "rawls", "--kind", "single",
            "--export-conic", "--out", str(tmp_path),
        ])
        cbf = (tmp_path / "fig1.rawls.single.cbf").read_text()
        assert cbf.startswith("# CBF")or "VER" in cbf

    def test_missing_input_is_an_error(self, tmp_path, capsys):
        code = main(["solve", "--out", str(tmp_path)])
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestOracle:
    def test_fig1_thirteen_lines_exit_zero(self, fig1_path, capsys):
        code = main(["oracle", "--instance", str(fig1_path)])
        out = capsys.readouterr().out
        assert code == 0
        gap_lines = [ln for ln in out.splitlines() if " gap=" in ln]
        assert len(gap_lines) == 13  # 4 concepts x 3 kinds + utilitarian single


class TestGenerate:
    def test_deterministic_files(self, tmp_path):
        a, b = tmp_path / "a.kep", tmp_path / "b.kep"
        main(["generate", "-n", "16", "--ndd", "0.1", "--seed", "3", "--out", str(a)])
        main(["generate", "-n", "16", "--ndd", "0.1", "--seed", "3", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()
        inst = parse_instance(a.read_text())
        assert len(inst.pairs) == 16

    def test_stdout_output(self, capsys):
        main(["generate", "-n", "4", "--ndd", "0.0", "--seed", "1"])
        assert capsys.readouterr().out.startswith("kep 4 0 ")


class TestSample:
    def test_draws_from_support(self, fig1_path, tmp_path, capsys):
        main([
            "solve", "--instance", str(fig1_path),
            "--concept", "rawls", "--kind", "single",
            "--out", str(tmp_path),
        ])
        capsys.readouterr()
        lottery = tmp_path / "fig1.rawls.single.lottery.txt"
        code = main(["sample", "--report", str(lottery), "--seed", "1", "--draws", "5"])
        out = capsys.readouterr().out.strip().splitlines()
        assert code == 0
        assert len(out) == 5
        assert all(("cycle:" in ln) or ("chain:" in ln) or ln == "empty" for ln in out)

    def test_empirical_rawls_probability(self, fig1_path, tmp_path, capsys):
        main([
            "solve", "--instance", str(fig1_path),
            "--concept", "rawls", "--kind", "single",
            "--out", str(tmp_path),
        ])
        capsys.readouterr()
        lottery = tmp_path / "fig1.rawls.single.lottery.txt"
        main(["sample", "--report", str(lottery), "--seed", "0", "--draws", "20000"])
        lines = capsys.readouterr().out.strip().splitlines()
        freq = sum(1 for ln in lines if "v4" in ln) / len(lines)
        assert freq == pytest.approx(0.5, abs=0.01)
