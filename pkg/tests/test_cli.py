import numpy as np
import pytest

from minimax2 import cli, problems
from minimax2.cli import (
    AlgorithmSpec,
    ExperimentConfig,
    ProblemSpec,
    build_problem,
    emit_plot,
    parse_config,
    read_trace,
    run_experiment,
    write_trace,
)
from minimax2.drivers import IterationRecord
from minimax2.errors import ConfigError, ParseError


CONFIG_TEXT = """
[experiment]
epsilon = 0.01
repetitions = 2
output_dir = {out}
seed = 7
algorithms = grtr, gda

[problem]
kind = quadratic
seed = 1
n = 3
m = 2

[grtr]
l2 = 4.0
subproblem_mode = exact

[gda]
step_x = 0.05
step_y = 0.05
max_iters = 50
"""


def fake_clock():
    state = {"t": 0.0}

    def clock():
        state["t"] += 1.0
        return state["t"]

    return clock


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(CONFIG_TEXT.format(out=tmp_path / "out"))
    return path


class TestConfigParsing:
    def test_full_round(self, config_file, tmp_path):
        config = parse_config(config_file)
        assert config.epsilon == 0.01
        assert config.repetitions == 2
        assert config.seed == 7
        assert [a.name for a in config.algorithms] == ["grtr", "gda"]
        assert config.algorithms[0].options["l2"] == 4.0
        assert config.algorithms[1].options["max_iters"] == 50
        assert config.problem.kind == "quadratic"
        assert config.problem.options["seed"] == 1

    def test_missing_section(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[experiment]\nepsilon = 0.1\nalgorithms = grtr\n")
        with pytest.raises(ConfigError):
            parse_config(path)

    def test_unknown_algorithm(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text(
            "[experiment]\nepsilon = 0.1\nalgorithms = sgd\n"
            "[problem]\nkind = quadratic\nseed = 0\nn = 2\nm = 2\n"
        )
        with pytest.raises(ConfigError):
            parse_config(path)

    def test_bad_epsilon(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text(
            "[experiment]\nepsilon = -1\nalgorithms = grtr\n"
            "[problem]\nkind = quadratic\nseed = 0\nn = 2\nm = 2\n"
        )
        with pytest.raises(ConfigError):
            parse_config(path)

    def test_no_algorithms(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(
                problem=ProblemSpec("quadratic", {"seed": 0, "n": 2, "m": 2}),
                algorithms=[],
                epsilon=0.1,
            )

    def test_build_saddle_chain(self):
        prob, p_star, x0 = build_problem(
            ProblemSpec("saddle_chain", {"n": 4, "m": 2, "l": 1.0, "gamma": 1.0})
        )
        assert prob.dim_x == 4
        assert np.allclose(x0, 1e-3)
        params = problems.SaddleChainParams(n=4, m=2, L=1.0, gamma=1.0)
        assert p_star == pytest.approx(params.P_star)

    def test_build_rejects_unknown_field(self):
        with pytest.raises(ConfigError):
            build_problem(ProblemSpec("saddle_chain", {"n": 4, "m": 2, "bogus": 1}))


class TestTraceIO:
    def records(self):
        return [
            IterationRecord(
                t=1, x_norm=1.0, g_norm=0.5, lam=0.25, lambda_min_H=None,
                step_norm=0.1, step_kind="trust_region", P_estimate=-1.5,
                inner_iters=3, wall_time=0.125, backtracks=0,
            ),
            IterationRecord(
                t=2, x_norm=0.9, g_norm=0.25, lam=None, lambda_min_H=-2.0,
                step_norm=0.05, step_kind="negative_curvature", P_estimate=-1.75,
                inner_iters=1, wall_time=0.25, backtracks=2,
            ),
        ]

    def test_round_trip_exact(self, tmp_path):
        path = tmp_path / "trace.csv"
        recs = self.records()
        write_trace(path, recs, meta={"algorithm": "grtr", "p_star": repr(-2.0)})
        loaded, meta = read_trace(path)
        assert loaded == recs
        assert meta["algorithm"] == "grtr"
        assert float(meta["p_star"]) == -2.0

    def test_header_stability(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace(path, self.records())
        header = path.read_text().splitlines()[0]
        assert header == ",".join(cli.TRACE_COLUMNS)

    def test_malformed_raises(self, tmp_path):
        path = tmp_path / "broken.csv"
        path.write_text("not,a,trace\n1,2,3\n")
        with pytest.raises(ParseError):
            read_trace(path)

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(ParseError):
            read_trace(tmp_path / "nope.csv")


class TestRunExperiment:
    def test_gda_only_tiny_quadratic(self, tmp_path):
        config = ExperimentConfig(
            problem=ProblemSpec("quadratic", {"seed": 0, "n": 1, "m": 1}),
            algorithms=[AlgorithmSpec("gda", {"step_x": 0.2, "step_y": 0.2,
                                              "max_iters": 4000})],
            epsilon=1e-3,
            repetitions=1,
            output_dir=tmp_path / "out",
            seed=0,
        )
        summaries = run_experiment(config)
        assert len(summaries) == 1
        s = summaries[0]
        assert s.final_gap is not None and s.final_gap <= 1e-6
        assert (tmp_path / "out" / "gda_rep0.csv").exists()
        assert (tmp_path / "out" / "summary.txt").exists()

    def test_zero_repetitions(self, tmp_path):
        config = ExperimentConfig(
            problem=ProblemSpec("quadratic", {"seed": 0, "n": 2, "m": 1}),
            algorithms=[AlgorithmSpec("grtr")],
            epsilon=1e-2,
            repetitions=0,
            output_dir=tmp_path / "none",
        )
        summaries = run_experiment(config)
        assert summaries == []
        assert not (tmp_path / "none").exists()

    def test_determinism_byte_identical(self, config_file, tmp_path):
        config = parse_config(config_file)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        config.output_dir = out_a
        run_experiment(config, clock=fake_clock())
        config.output_dir = out_b
        run_experiment(config, clock=fake_clock())
        files_a = sorted(p.name for p in out_a.iterdir())
        files_b = sorted(p.name for p in out_b.iterdir())
        assert files_a == files_b
        for name in files_a:
            if name == "summary.txt":
                a = (out_a / name).read_text().replace(str(out_a), "OUT")
                b = (out_b / name).read_text().replace(str(out_b), "OUT")
            else:
                a = (out_a / name).read_bytes()
                b = (out_b / name).read_bytes()
            assert a == b, f"{name} differs between identical runs"

    def test_real_clock_iterates_identical(self, config_file, tmp_path):
        config = parse_config(config_file)
        config.repetitions = 1
        config.output_dir = tmp_path / "r1"
        s1 = run_experiment(config)
        config.output_dir = tmp_path / "r2"
        s2 = run_experiment(config)
        for a, b in zip(s1, s2):
            ra, _ = read_trace(a.trace_path)
            rb, _ = read_trace(b.trace_path)
            assert len(ra) == len(rb)
            for u, v in zip(ra, rb):
                assert u.g_norm == v.g_norm
                assert u.step_norm == v.step_norm
                assert u.P_estimate == v.P_estimate

    def test_parallel_jobs(self, tmp_path):
        config = ExperimentConfig(
            problem=ProblemSpec("quadratic", {"seed": 2, "n": 2, "m": 1}),
            algorithms=[AlgorithmSpec("gda", {"max_iters": 20})],
            epsilon=1e-2,
            repetitions=2,
            output_dir=tmp_path / "par",
        )
        summaries = run_experiment(config, jobs=2)
        assert len(summaries) == 2
        assert (tmp_path / "par" / "gda_rep1.csv").exists()


class TestPlots:
    def make_trace(self, tmp_path, name="t.csv"):
        rng = np.random.default_rng(0)
        records = [
            IterationRecord(
                t=k, x_norm=1.0, g_norm=float(np.exp(-k)), lam=None,
                lambda_min_H=None, step_norm=0.1, step_kind="gradient",
                P_estimate=float(np.exp(-k)), inner_iters=1,
                wall_time=0.1 * k, backtracks=0,
            )
            for k in range(1, 20)
        ]
        path = tmp_path / name
        write_trace(path, records, meta={"algorithm": "gda", "p_star": repr(0.0)})
        return path

    def test_single_trace_plot(self, tmp_path):
        trace = self.make_trace(tmp_path)
        out = tmp_path / "plot.svg"
        emit_plot([trace], "gap_vs_time", out)
        content = out.read_text()
        assert "<svg" in content

    def test_gnorm_mode(self, tmp_path):
        trace = self.make_trace(tmp_path)
        out = tmp_path / "plot2.svg"
        emit_plot([trace], "gnorm_vs_iter", out)
        assert out.exists()

    def test_empty_list_errors_no_file(self, tmp_path):
        out = tmp_path / "never.svg"
        with pytest.raises(ValueError):
            emit_plot([], "gap_vs_time", out)
        assert not out.exists()

    def test_malformed_trace_errors(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("junk\n")
        with pytest.raises(ParseError):
            emit_plot([bad], "gap_vs_time", tmp_path / "x.svg")


class TestCommandLine:
    def test_run_command(self, config_file, tmp_path, capsys):
        out = tmp_path / "cli_out"
        code = cli.main(["run", "--config", str(config_file), "--out", str(out)])
        assert code == 0
        assert (out / "summary.txt").exists()
        assert "grtr" in capsys.readouterr().out

    def test_run_missing_config_exit_2(self, tmp_path):
        code = cli.main(["run", "--config", str(tmp_path / "absent.ini")])
        assert code == 2

    def test_plot_bad_trace_exit_3(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("junk\n")
        code = cli.main(
            ["plot", "--mode", "gap_vs_time", "--out", str(tmp_path / "o.svg"), str(bad)]
        )
        assert code == 3

    def test_certify_and_validate_commands(self, tmp_path, capsys):
        params = problems.SaddleChainParams(n=4, m=2, L=1.0, gamma=1.0)
        prob = problems.saddle_chain_problem(params)
        inst = tmp_path / "inst.ini"
        problems.save_instance(inst, params, ell=prob.ell, rho=prob.rho)
        xfile = tmp_path / "x.txt"
        np.savetxt(xfile, params.optimum)
        code = cli.main(
            ["certify", "--problem", str(inst), "--x", str(xfile), "--epsilon", "0.01"]
        )
        assert code == 0
        assert "satisfied   true" in capsys.readouterr().out
        code = cli.main(["validate", "--problem", str(inst)])
        assert code == 0
        assert "passed" in capsys.readouterr().out
