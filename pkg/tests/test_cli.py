"""End-to-end tests of the command-line front end."""

import io
import json
import logging

import pandas as pd
import pytest

from eigsur_cli import EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, main


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    logger = logging.getLogger("eigsur")
    logger.handlers.clear()
    logger.setLevel(logging.NOTSET)


@pytest.fixture
def example1_build(tmp_path):
    out = tmp_path / "build"
    code = main(["build", "--fixture", "example1", "--n", "10", "--init-grid", "2,2", "--train-grid", "5,5",
                 "--out", str(out)])
    assert code == EXIT_OK
    return out


class TestBuild:
    def test_outputs(self, example1_build):
        report = json.loads((example1_build / "report.json").read_text())
        assert report["converged"]
        assert report["config"]["tol"] == pytest.approx(1e-5)
        assert (example1_build / "max_bound_trace.csv").exists()
        grid = pd.read_csv(example1_build / "surrogate_grid.csv")
        assert len(grid) == 25
        assert list(grid.columns) == ["w1", "w2", "lambda", "bound", "gap"]

    def test_not_converged(self, tmp_path):
        code = main(["build", "--fixture", "synthetic", "--n", "30", "--init-grid", "2,2", "--train-grid", "4,4",
                     "--nmax", "0", "--tol", "1e-12", "--out", str(tmp_path)])
        assert code == EXIT_NOT_CONVERGED
        assert not json.loads((tmp_path / "report.json").read_text())["converged"]

    def test_missing_pencil_file(self, tmp_path):
        missing = tmp_path / "missing.json"
        code = main(["build", "--pencil", str(missing), "--out", str(tmp_path / "out")])
        assert code == EXIT_ERROR

    def test_invalid_grid(self, tmp_path):
        code = main(["build", "--fixture", "example1", "--init-grid", "3,3", "--train-grid", "3,3",
                     "--out", str(tmp_path)])
        assert code == EXIT_ERROR

    def test_from_exported_pencil(self, tmp_path):
        pencil = tmp_path / "pencil.json"
        assert main(["fixture", "export", "example1", "--n", "6", "--out", str(pencil)]) == EXIT_OK
        assert pencil.exists()
        code = main(["build", "--pencil", str(pencil), "--init-grid", "2,2", "--train-grid", "3,3",
                     "--out", str(tmp_path / "out")])
        assert code == EXIT_OK


class TestEval:
    def test_points_to_stdout(self, example1_build, capsys):
        code = main(["--log-level", "WARNING", "eval", str(example1_build / "surrogate"),
                     "--point", "0.3,0.4", "--point", "-0.1,0.0"])
        assert code == EXIT_OK
        output = capsys.readouterr().out
        table = pd.read_csv(io.StringIO(output[output.index("w1,w2"):]))
        assert len(table) == 2
        assert table["lambda"].iloc[0] == pytest.approx(0.5, abs=1e-10)

    def test_grid_to_file(self, example1_build, tmp_path):
        out = tmp_path / "eval.csv"
        assert main(["eval", str(example1_build / "surrogate"), "--grid", "3,4", "--out", str(out)]) == EXIT_OK
        assert len(pd.read_csv(out)) == 12

    def test_corrupted_manifest(self, example1_build):
        (example1_build / "surrogate" / "manifest.json").write_text("[]")
        assert main(["eval", str(example1_build / "surrogate"), "--point", "0,0"]) == EXIT_ERROR


class TestAudit:
    def test_converged_surrogate_passes(self, example1_build, tmp_path):
        out = tmp_path / "audit"
        code = main(["audit", str(example1_build / "surrogate"), "--grid", "4,4", "--out", str(out)])
        assert code == EXIT_OK
        summary = json.loads((out / "audit_summary.json").read_text())
        assert summary["passed"]
        assert summary["points"] == 16
        assert len(pd.read_csv(out / "audit.csv")) == 16

    def test_truncated_basis_fails(self, tmp_path):
        build = tmp_path / "build"
        main(["build", "--fixture", "synthetic", "--n", "30", "--init-grid", "2,2", "--train-grid", "4,4",
              "--nmax", "0", "--tol", "1e-12", "--out", str(build)])
        code = main(["audit", str(build / "surrogate"), "--grid", "3,3", "--tol", "1e-10",
                     "--out", str(tmp_path / "audit")])
        assert code == EXIT_NOT_CONVERGED

    def test_mismatched_pencil(self, example1_build, tmp_path):
        code = main(["audit", str(example1_build / "surrogate"), "--fixture", "example1", "--n", "12",
                     "--grid", "2,2", "--out", str(tmp_path)])
        assert code == EXIT_ERROR


class TestCompare:
    def test_table(self, tmp_path):
        code = main(["compare", "--fixture", "example1", "--n", "8", "--init-grid", "2,2", "--train-grid", "3,3",
                     "--out", str(tmp_path)])
        assert code == EXIT_OK
        table = pd.read_csv(tmp_path / "compare.csv", index_col="metric")
        assert list(table.columns) == ["1 eigv", "2 eigv", "1 eigv + deriv", "2 eigv + deriv"]
        assert list(table.index) == ["dimension V", "nbr points", "total time",
                                     "time derivative (per vector)", "time eigenv (per vector)"]
        assert (tmp_path / "report_2_eigv_plus_deriv.json").exists()
