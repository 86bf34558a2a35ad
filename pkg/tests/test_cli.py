"""Command line behavior: outputs, manifests, exit codes, reproducibility."""
import json
import os

import numpy as np
import pytest

from renyiconv import cli
from renyiconv.grid import read_csv


def run(argv):
    return cli.main(argv)


def load(path):
    with open(path) as fh:
        return json.load(fh)


class TestIterate:
    def test_exact_step_zero_echoes_indicator(self, tmp_path):
        out = str(tmp_path / "o")
        assert run(["iterate", "--mode", "exact", "--steps", "0", "--out", out]) == 0
        d = load(os.path.join(out, "f0.json"))
        assert d["coefficients"] == ["1/1"]
        assert d["support"] == ["-1/1", "1/1"]

    def test_exact_steps_write_json_and_csv(self, tmp_path):
        out = str(tmp_path / "o")
        assert run(["iterate", "--mode", "exact", "--steps", "2", "--out", out]) == 0
        f1 = load(os.path.join(out, "f1.json"))
        assert f1["coefficients"] == ["1/1", "0/1", "-1/1"]
        f2 = load(os.path.join(out, "f2.json"))
        assert f2["coefficients"][0] == "1/1"
        for j in range(3):
            g = read_csv(os.path.join(out, f"f{j}.csv"))
            assert len(g) == 2001
            assert g.x0 == -1.0
        man = load(os.path.join(out, "manifest.json"))
        assert man["command"] == "iterate"
        assert "steps.json" in man["outputs"]
        assert set(man["config"]) >= {"mode", "steps", "dx"}

    def test_grid_mode_step_decay_is_monotone(self, tmp_path):
        out = str(tmp_path / "o")
        assert run(["iterate", "--mode", "grid", "--steps", "6",
                    "--dx", "0.001", "--out", out]) == 0
        log = load(os.path.join(out, "steps.json"))
        sups = [float(e["sup_step"]) for e in log]
        assert len(sups) == 6
        assert all(a > b for a, b in zip(sups, sups[1:]))

    def test_negative_steps_exit_2(self, tmp_path):
        assert run(["iterate", "--steps", "-1", "--out", str(tmp_path / "o")]) == 2

    def test_invalid_mode_exit_2(self, tmp_path):
        with pytest.raises(SystemExit) as e:
            run(["iterate", "--mode", "spectral", "--out", str(tmp_path / "o")])
        assert e.value.code == 2

    def test_exact_rerun_is_byte_identical(self, tmp_path):
        o1, o2 = str(tmp_path / "a"), str(tmp_path / "b")
        run(["iterate", "--mode", "exact", "--steps", "2", "--out", o1])
        run(["iterate", "--mode", "exact", "--steps", "2", "--out", o2])
        for name in ("f0.json", "f1.json", "f2.json", "f1.csv", "steps.json"):
            with open(os.path.join(o1, name), "rb") as fh1, \
                    open(os.path.join(o2, name), "rb") as fh2:
                assert fh1.read() == fh2.read()


class TestSolve:
    def test_grid_solve_writes_solution(self, tmp_path):
        out = str(tmp_path / "o")
        assert run(["solve", "--mode", "grid", "--dx", "0.001", "--out", out]) == 0
        d = load(os.path.join(out, "solution.json"))
        assert d["converged"] is True
        assert float(d["final_step_sup"]) < 1e-10
        assert float(d["el_residual_sup"]) < 1e-6
        g = read_csv(os.path.join(out, "solution.csv"))
        assert len(g) == 2001
        hist = load(os.path.join(out, "history.json"))
        assert d["iterations"] == len(hist)

    def test_max_iter_exhaustion_exits_3_with_partial(self, tmp_path):
        out = str(tmp_path / "o")
        assert run(["solve", "--mode", "grid", "--dx", "0.001",
                    "--max-iter", "2", "--out", out]) == 3
        d = load(os.path.join(out, "solution.json"))
        assert d["converged"] is False
        assert d["iterations"] == 2


class TestElResidual:
    def test_scores_solver_output(self, tmp_path):
        out = str(tmp_path / "s")
        run(["solve", "--mode", "grid", "--dx", "0.001", "--out", out])
        out2 = str(tmp_path / "e")
        code = run(["el-residual", "--input", os.path.join(out, "solution.csv"),
                    "--n", "2", "--p", "2", "--M", "0.5", "--out", out2])
        assert code == 0
        d = load(os.path.join(out2, "el_residual.json"))
        assert float(d["sup_residual"]) < 1e-5
        assert float(d["fitted_scale"]) > 0

    def test_missing_input_exit_2(self, tmp_path):
        assert run(["el-residual", "--input", str(tmp_path / "none.csv"),
                    "--M", "0.5", "--out", str(tmp_path / "o")]) == 2


class TestCounterexample:
    def test_writes_verdict(self, tmp_path):
        out = str(tmp_path / "o")
        assert run(["counterexample", "--out", out]) == 0
        d = load(os.path.join(out, "counterexample.json"))
        assert d["verdict"] is True
        assert d["x6_coefficient"] == "-9/640"
        assert d["indicator_identity_holds"] is True

    def test_grid_check_field(self, tmp_path):
        out = str(tmp_path / "o")
        assert run(["counterexample", "--grid-check", "--out", out]) == 0
        d = load(os.path.join(out, "counterexample.json"))
        assert float(d["x6_grid_rel_error"]) < 1e-3


class TestGengauss:
    def test_alpha_for_unit_beta(self, tmp_path):
        out = str(tmp_path / "o")
        assert run(["gengauss", "--p", "2", "--beta", "1", "--out", out]) == 0
        d = load(os.path.join(out, "gengauss.json"))
        assert abs(float(d["alpha"]) - 0.75) < 1e-10
        g = read_csv(os.path.join(out, "gengauss.csv"))
        assert g.mass == pytest.approx(1.0, abs=1e-5)

    def test_m_flag(self, tmp_path):
        out = str(tmp_path / "o")
        assert run(["gengauss", "--p", "2", "--M", "0.5", "--out", out]) == 0
        d = load(os.path.join(out, "gengauss.json"))
        assert float(d["lp_mass"]) == pytest.approx(0.5, rel=1e-12)


class TestCompare:
    def test_ordering_holds(self, tmp_path):
        out = str(tmp_path / "o")
        assert run(["compare", "--p", "2", "--n", "2", "--M", "0.5",
                    "--out", out]) == 0
        d = load(os.path.join(out, "compare.json"))
        assert d["ordering_ok"] is True
        assert float(d["margin"]) > 1e-8
        assert float(d["I_fixed_point"]) > float(d["I_gengauss"])
        # smaller entropy of the sum is the equivalent statement
        assert float(d["hp_sum_fixed_point"]) < float(d["hp_sum_gengauss"])

    def test_default_m_uses_solution_norms(self, tmp_path):
        out = str(tmp_path / "o")
        assert run(["compare", "--out", out]) == 0
        d = load(os.path.join(out, "compare.json"))
        assert d["ordering_ok"] is True

    def test_regression_exits_4(self, tmp_path, monkeypatch):
        # force the ordering to fail to observe the regression signal
        import renyiconv.cli as cli_mod
        real = cli_mod.objective_I

        def flipped(f, n, p):
            return 1.0 / float(real(f, n, p))

        monkeypatch.setattr(cli_mod, "objective_I", flipped)
        out = str(tmp_path / "o")
        assert run(["compare", "--M", "0.5", "--out", out]) == 4
        d = load(os.path.join(out, "compare.json"))
        assert d["ordering_ok"] is False


class TestMisc:
    def test_seed_env_warning(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("RENYI_SEED", "7")
        run(["counterexample", "--out", str(tmp_path / "o")])
        assert "RENYI_SEED is ignored" in capsys.readouterr().err

    def test_no_subcommand_exit_2(self):
        with pytest.raises(SystemExit) as e:
            run([])
        assert e.value.code == 2

    def test_plot_csv_round_trips(self, tmp_path):
        out = str(tmp_path / "o")
        run(["iterate", "--mode", "grid", "--steps", "1",
             "--dx", "0.001", "--out", out])
        g = read_csv(os.path.join(out, "f1.csv"))
        h = read_csv(os.path.join(out, "f1.csv"))
        assert np.array_equal(g.values, h.values)
        assert g.x0 == -1.0 and g.x_end == 1.0
