"""Experiment harness and command-line entry points."""

import csv
import io
import json

import numpy as np
import pytest

from triccati.cli import main
from triccati.reports import Status
from triccati.runner import (
    ProblemSpec,
    build_problem,
    emit_report,
    run_experiment,
)


class TestProblemSpec:
    def test_unknown_family(self):
        with pytest.raises(ValueError):
            ProblemSpec(family="Ex3Dense")

    def test_file_needs_path(self):
        with pytest.raises(ValueError):
            ProblemSpec(family="File")

    def test_to_dict_drops_unused_path(self):
        d = ProblemSpec(family="Ex2Dense", n=50).to_dict()
        assert "path" not in d
        assert d["family"] == "Ex2Dense" and d["n"] == 50


class TestBuildProblem:
    def test_each_family(self):
        prob, meta = build_problem(ProblemSpec(family="Ex1Dense", n=16))
        assert prob.n == 16 and meta["family"] == "Ex1Dense"
        prob, meta = build_problem(ProblemSpec(family="Ex1LowRank", n=16,
                                               p=1, q=2))
        assert prob.q == 2
        prob, meta = build_problem(ProblemSpec(family="Ex2Dense", n=20))
        assert "X_exact" in meta
        prob, meta = build_problem(ProblemSpec(family="Ex2LowRank", n=150))
        assert prob.n == 150

    def test_file_family(self, tmp_path):
        from triccati.generators import generate_admissible_dense
        from triccati.mmio import save_problem
        mpath = save_problem(tmp_path, generate_admissible_dense(8, seed=1))
        prob, meta = build_problem(ProblemSpec(family="File",
                                               path=str(mpath)))
        assert prob.n == 8 and meta["family"] == "File"


class TestRunExperiment:
    def test_dense_newton_report(self):
        spec = ProblemSpec(family="Ex2Dense", n=60, seed=0)
        run = run_experiment(spec, "newton", {"tol": 1e-12})
        assert run.status is Status.CONVERGED
        d = run.to_dict()
        json.dumps(d)  # fully serializable
        for key in ("spec", "solver", "config", "status", "trace",
                    "wall_time_s", "final_relative_residual", "rhs_norm",
                    "audit", "metadata"):
            assert key in d, key
        assert d["solver"] == "newton"
        assert d["metadata"]["err_rel"] <= 1e-8  # vs the manufactured solution
        assert d["audit"]["b_nonnegative"] is True
        assert d["trace"][0]["k"] >= 1

    def test_determinism_modulo_walltime(self):
        spec = ProblemSpec(family="Ex2Dense", n=40, seed=3)
        a = run_experiment(spec, "newton", {"tol": 1e-12}).to_dict()
        b = run_experiment(spec, "newton", {"tol": 1e-12}).to_dict()
        a.pop("wall_time_s"); b.pop("wall_time_s")
        assert a == b

    def test_audit_skipped_for_large(self):
        spec = ProblemSpec(family="Ex2LowRank", n=300, seed=0)
        run = run_experiment(spec, "inexact-newton", {"eps": 1e-6})
        assert run.audit is None

    def test_lowrank_run(self):
        spec = ProblemSpec(family="Ex2LowRank", n=150, seed=0)
        run = run_experiment(spec, "inexact-newton", {"eps": 1e-8})
        assert run.status is Status.CONVERGED
        rows = run.report.trace_rows()
        assert rows[-1]["rel_res"] <= 1e-8
        assert all("inner_residuals" in r for r in rows)

    def test_solver_failure_contained(self):
        # m_max = 0 forces an inner failure; run_experiment must not raise
        spec = ProblemSpec(family="Ex2LowRank", n=150, seed=1)
        run = run_experiment(spec, "inexact-newton",
                             {"eps": 1e-8, "m_max": 0})
        assert run.status is Status.INNER_SOLVE_FAILED

    def test_unknown_solver(self):
        spec = ProblemSpec(family="Ex2Dense", n=10)
        with pytest.raises(ValueError):
            run_experiment(spec, "gauss-seidel")


class TestEmitReport:
    def test_csv_rows_match_trace(self, tmp_path):
        spec = ProblemSpec(family="Ex2Dense", n=40, seed=1)
        run = run_experiment(spec, "newton", {"tol": 1e-12})
        text = emit_report(run, fmt="csv")
        rows = list(csv.DictReader(io.StringIO(text)))
        assert len(rows) == len(run.report.iterations)
        assert set(rows[0]) == {"k", "res", "rel_res", "lambda",
                                "inner_its", "rank"}
        float(rows[-1]["rel_res"])  # numeric cells

    def test_json_written_to_path(self, tmp_path):
        spec = ProblemSpec(family="Ex2Dense", n=30, seed=0)
        run = run_experiment(spec, "newton", {"tol": 1e-10})
        out = tmp_path / "sub" / "rep.json"
        text = emit_report(run, fmt="json", path=out)
        assert out.exists()
        assert json.loads(out.read_text()) == json.loads(text)

    def test_fixed_point_divergence_contained(self):
        # this family violates the sign hypotheses; the basic iteration
        # overflows and must come back quickly as Diverged, not spin
        spec = ProblemSpec(family="Ex2Dense", n=30, seed=0)
        run = run_experiment(spec, "fixed-point", {"tol": 1e-10})
        assert run.status is Status.DIVERGED
        assert len(run.report.iterations) < 100
        assert run.report.warnings

    def test_bad_format(self):
        spec = ProblemSpec(family="Ex2Dense", n=10)
        run = run_experiment(spec, "newton", {"tol": 1e-10})
        with pytest.raises(ValueError):
            emit_report(run, fmt="yaml")


class TestCLI:
    def test_solve_dense_exit_zero(self, tmp_path, capsys):
        rc = main(["solve-dense", "--family", "ex2-dense", "--n", "40",
                   "--out", str(tmp_path)])
        assert rc == 0
        printed = capsys.readouterr().out.strip()
        assert printed.endswith(".json")
        data = json.loads(open(printed).read())
        assert data["status"] == "Converged"

    def test_solve_dense_stdout_json(self, capsys):
        rc = main(["solve-dense", "--family", "ex2-dense", "--n", "30"])
        assert rc == 0
        data = json.loads(capsys.readouterr().out)
        assert data["spec"]["family"] == "Ex2Dense"

    def test_exit_code_two_on_failure(self, tmp_path, capsys):
        rc = main(["solve-lowrank", "--family", "ex2-lowrank", "--n", "150",
                   "--max-inner", "0", "--out", str(tmp_path)])
        assert rc == 2
        err = capsys.readouterr().err
        assert "solver error" in err or err == ""  # stagnation is a status

    def test_exit_code_one_on_usage(self, capsys):
        rc = main(["solve-dense"])  # neither --family nor --problem
        assert rc == 1

    def test_bad_flag_exits_one(self):
        with pytest.raises(SystemExit) as exc:
            main(["solve-dense", "--family", "nope"])
        assert exc.value.code == 1

    def test_generate_then_solve_file(self, tmp_path, capsys):
        rc = main(["generate", "--family", "ex2-dense", "--n", "25",
                   "--name", "cell", "--out", str(tmp_path)])
        assert rc == 0
        manifest = capsys.readouterr().out.strip()
        rc = main(["solve-dense", "--problem", manifest])
        assert rc == 0
        data = json.loads(capsys.readouterr().out)
        assert data["spec"]["family"] == "File"

    def test_csv_output(self, tmp_path, capsys):
        rc = main(["solve-dense", "--family", "ex2-dense", "--n", "30",
                   "--format", "csv", "--out", str(tmp_path)])
        assert rc == 0
        path = capsys.readouterr().out.strip()
        rows = list(csv.DictReader(open(path)))
        assert rows and "rel_res" in rows[0]

    def test_bench_smoke(self, tmp_path, capsys):
        rc = main(["bench", "--suite", "smoke", "--out", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert out.count("Converged") == 3
