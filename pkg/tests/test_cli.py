import json

import numpy as np
import pytest

from fraceig import FracParams, build_domain, p2_oracle, poincare_constant
from fraceig.cli import main
from fraceig.serialize import load_domain_spec, save_domain_spec

from conftest import interval_spec


@pytest.fixture()
def domain_file(tmp_path):
    path = tmp_path / "interval.json"
    save_domain_spec(interval_spec(1 / 16), path)
    return path


def run(args):
    return main([str(a) for a in args])


class TestEig:
    def test_prints_lambda_and_writes_json(self, domain_file, tmp_path, capsys):
        out = tmp_path / "pair.json"
        code = run(["eig", "--domain", domain_file, "--s", 0.5, "--p", 2, "--out", out])
        assert code == 0
        printed = float(capsys.readouterr().out.strip())
        dom = build_domain(load_domain_spec(domain_file), t=4.0)
        oracle = p2_oracle(dom, FracParams(s=0.5, p=2.0))
        assert printed == pytest.approx(oracle.lam, rel=1e-6)
        data = json.loads(out.read_text())
        assert data["lambda"] == printed

    def test_trace_file(self, domain_file, tmp_path):
        out = tmp_path / "pair.json"
        trace = tmp_path / "trace.csv"
        code = run(["eig", "--domain", domain_file, "--s", 0.5, "--p", 2,
                    "--out", out, "--trace", trace])
        assert code == 0
        assert trace.read_text().startswith("iter,lambda,residual")

    def test_missing_s_exits_2(self, domain_file):
        with pytest.raises(SystemExit) as exc:
            run(["eig", "--domain", domain_file, "--p", 2])
        assert exc.value.code == 2

    def test_s_out_of_range_exits_2(self, domain_file, tmp_path, capsys):
        code = run(["eig", "--domain", domain_file, "--s", 1.2, "--p", 2,
                    "--out", tmp_path / "x.json"])
        assert code == 2
        assert "s must lie in (0,1)" in capsys.readouterr().err

    def test_nonconvergence_exits_3_with_partial(self, domain_file, tmp_path, capsys):
        out = tmp_path / "pair.json"
        code = run(["eig", "--domain", domain_file, "--s", 0.5, "--p", 3,
                    "--tol", 1e-30, "--max-iter", 2, "--out", out])
        assert code == 3
        data = json.loads(out.read_text())
        assert data["converged"] is False


class TestSolve:
    def test_zero_problem_gives_zero_file(self, domain_file, tmp_path):
        prob = tmp_path / "prob.json"
        prob.write_text(json.dumps({"f": 0.0, "F": "none", "s": 0.5, "p": 2.0, "t": 4.0}))
        out = tmp_path / "sol.json"
        code = run(["solve", "--domain", domain_file, "--problem", prob, "--out", out])
        assert code == 0
        values = json.loads(out.read_text())["values"]
        assert all(v == 0.0 for v in values)

    def test_p2_matches_dense(self, domain_file, tmp_path):
        import scipy.linalg

        from fraceig.eigen import oracle_matrix

        dom = build_domain(load_domain_spec(domain_file), t=4.0)
        rng = np.random.default_rng(70)
        f = rng.standard_normal(dom.n_omega)
        prob = tmp_path / "prob.json"
        prob.write_text(json.dumps({"f": f.tolist(), "F": "none", "s": 0.5, "p": 2.0, "t": 4.0}))
        out = tmp_path / "sol.json"
        assert run(["solve", "--domain", domain_file, "--problem", prob, "--out", out]) == 0
        got = np.asarray(json.loads(out.read_text())["values"])[dom.omega_mask]
        dense = scipy.linalg.solve(oracle_matrix(dom, FracParams(s=0.5, p=2.0)), f, assume_a="pos")
        assert np.linalg.norm(got - dense) <= 1e-8 * np.linalg.norm(dense)

    def test_malformed_problem_exits_2(self, domain_file, tmp_path, capsys):
        prob = tmp_path / "prob.json"
        prob.write_text("{not json")
        code = run(["solve", "--domain", domain_file, "--problem", prob,
                    "--out", tmp_path / "x.json"])
        assert code == 2


class TestSweep:
    def test_three_point_csv(self, domain_file, tmp_path, capsys):
        out = tmp_path / "sweep"
        code = run(["sweep", "--domain", domain_file, "--p", 2,
                    "--s-list", "0.3,0.4,0.5", "--s-base", 0.3, "--out", out])
        assert code == 0
        lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
        assert len(lines) == 4  # header + 3 rows

    def test_s_range_seven_rows(self, domain_file, tmp_path):
        out = tmp_path / "sweep"
        code = run(["sweep", "--domain", domain_file, "--p", 2,
                    "--s-range", "0.3:0.6:0.05", "--s-base", 0.45, "--out", out])
        assert code == 0
        lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
        assert len(lines) == 8  # header + 7 rows

    def test_injected_corruption_exits_4(self, domain_file, tmp_path, capsys):
        out = tmp_path / "sweep"
        code = run(["sweep", "--domain", domain_file, "--p", 2,
                    "--s-list", "0.3,0.4,0.5", "--s-base", 0.3, "--out", out,
                    "--inject-lambda", "2:0.001"])
        assert code == 4
        assert "violated" in capsys.readouterr().err

    def test_needs_exactly_one_s_source(self, domain_file, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run(["sweep", "--domain", domain_file, "--p", 2, "--s-base", 0.3])
        assert exc.value.code == 2

    def test_base_not_in_list_exits_2(self, domain_file, tmp_path):
        code = run(["sweep", "--domain", domain_file, "--p", 2,
                    "--s-list", "0.3,0.4", "--s-base", 0.7, "--out", tmp_path / "s"])
        assert code == 2

    def test_nonconverged_rows_exit_3(self, domain_file, tmp_path):
        code = run(["sweep", "--domain", domain_file, "--p", 3,
                    "--s-list", "0.3,0.5", "--s-base", 0.3,
                    "--tol", 1e-30, "--max-iter", 1, "--max-iter-inner", 3,
                    "--inner-tol", 0.1, "--out", tmp_path / "sw"])
        assert code == 3
        assert (tmp_path / "sw.csv").exists()  # partial report still written


class TestPoincare:
    def test_prints_constant(self, domain_file, capsys):
        code = run(["poincare", "--domain", domain_file, "--s", 0.5, "--p", 2])
        assert code == 0
        printed = float(capsys.readouterr().out.strip())
        dom = build_domain(load_domain_spec(domain_file), t=4.0)
        assert printed == poincare_constant(dom, FracParams(s=0.5, p=2.0))


class TestVerify:
    def test_adjoint_suite_passes(self, domain_file, tmp_path, capsys):
        out = tmp_path / "verify.json"
        code = run(["verify", "--domain", domain_file, "--s", 0.5, "--p", 2,
                    "--suite", "adjoint", "--out", out])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["all_passed"] is True
        assert report["checks"][0]["margin"] <= 1e-12

    def test_poincare_suite_passes(self, domain_file, tmp_path):
        out = tmp_path / "verify.json"
        code = run(["verify", "--domain", domain_file, "--s", 0.5, "--p", 2,
                    "--suite", "poincare", "--out", out])
        assert code == 0

    def test_unknown_suite_exits_2(self, domain_file, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run(["verify", "--domain", domain_file, "--s", 0.5, "--p", 2,
                 "--suite", "bogus", "--out", tmp_path / "x.json"])
        assert exc.value.code == 2

    def test_holder_wrong_regime_exits_2(self, domain_file, tmp_path, capsys):
        code = run(["verify", "--domain", domain_file, "--s", 0.3, "--p", 2,
                    "--suite", "holder", "--out", tmp_path / "x.json"])
        assert code == 2


class TestOracle:
    def test_oracle_runs(self, domain_file, tmp_path, capsys):
        out = tmp_path / "oracle.json"
        code = run(["oracle", "--domain", domain_file, "--s", 0.5, "--p", 2, "--out", out])
        assert code == 0
        assert json.loads(out.read_text())["lambda"] > 0

    def test_oracle_rejects_p3(self, domain_file, tmp_path, capsys):
        code = run(["oracle", "--domain", domain_file, "--s", 0.5, "--p", 3,
                    "--out", tmp_path / "x.json"])
        assert code == 2


class TestDeterminism:
    def test_thread_count_does_not_change_output(self, domain_file, tmp_path):
        outputs = []
        for threads in (1, 2, 8):
            out = tmp_path / f"pair{threads}.json"
            code = run(["eig", "--domain", domain_file, "--s", 0.5, "--p", 2,
                        "--threads", threads, "--out", out])
            assert code == 0
            outputs.append(out.read_text())
        assert outputs[0] == outputs[1] == outputs[2]

    def test_env_threads_overrides_flag(self, monkeypatch):
        from fraceig import SolverConfig

        monkeypatch.setenv("FRACEIG_THREADS", "5")
        assert SolverConfig(threads=2).resolved_threads() == 5
        monkeypatch.delenv("FRACEIG_THREADS")
        assert SolverConfig(threads=2).resolved_threads() == 2
