import pytest

from fdlsim.cli import main
from fdlsim.engine import RunPlan, run
from fdlsim.experiments import (ConfigError, ExperimentSpec, merge_metrics,
                                parse_config, point_horizon, preset_spec,
                                run_experiment)
from fdlsim.metrics import loss_reduction
from fdlsim.model import SwitchConfig
from fdlsim.traffic import TrafficConfig


class TestParseConfig:
    def test_fig2b_preset_m_values(self):
        spec = parse_config("preset = fig2b\n")
        assert spec.m_values == (32, 64)
        assert spec.rho_values == tuple(round(0.1 * i, 1) for i in range(1, 10))

    def test_fig2a_covers_zero_loss_thresholds(self):
        spec = parse_config("preset = fig2a\n")
        assert {12, 40, 60} <= set(spec.m_values)
        assert spec.rho_values == (0.3, 0.6, 0.9)
        assert spec.min_offered == 10_000_000

    def test_fig3b_is_an_ablation_pair(self):
        spec = parse_config("preset = fig3b\n")
        assert spec.aux2_mode == "pair"
        assert spec.m_values == (32,)

    def test_explicit_keys_override_preset(self):
        spec = parse_config("preset = fig2b\nrho = 0.9\nseed = 5\n")
        assert spec.rho_values == (0.9,)
        assert spec.seeds == (5,)
        assert spec.m_values == (32, 64)  # untouched

    def test_rho_out_of_range_names_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("m = 8\nrho = 1.5\n")

    def test_unknown_key_names_line(self):
        with pytest.raises(ConfigError, match="line 3.*frobnicate"):
            parse_config("rho = 0.5\nm = 8\nfrobnicate = 1\n")

    def test_malformed_line(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("just some words\n")

    def test_bad_int(self):
        with pytest.raises(ConfigError, match="line 1.*horizon"):
            parse_config("horizon = soon\nrho = 0.5\nm = 8\n")

    def test_empty_config_lists_required_keys(self):
        with pytest.raises(ConfigError, match="preset.*rho.*m"):
            parse_config("# nothing but a comment\n")

    def test_defaults(self):
        spec = parse_config("rho = 0.5\nm = 8\n")
        assert spec.seeds == tuple(range(1, 11))
        assert spec.horizon == 1_000_000
        assert spec.warmup == 10_000

    def test_comments_and_blanks_ignored(self):
        spec = parse_config("\n# header\nrho = 0.5  # inline\nm = 8\n\n")
        assert spec.rho_values == (0.5,)

    def test_warmup_must_precede_horizon(self):
        with pytest.raises(ConfigError, match="warmup"):
            parse_config("rho = 0.5\nm = 8\nhorizon = 100\nwarmup = 100\n")


class TestPointHorizon:
    def test_escalates_to_reach_offered_target(self):
        spec = ExperimentSpec(rho_values=(0.3,), m_values=(12,),
                              horizon=1000, warmup=100, min_offered=10_000_000)
        # 10^7 / (32 * 0.3) slots of traffic past warm-up
        assert point_horizon(spec, 0.3) == 100 + 1_041_667

    def test_no_escalation_without_target(self):
        spec = ExperimentSpec(rho_values=(0.3,), m_values=(12,), horizon=1000,
                              warmup=100)
        assert point_horizon(spec, 0.3) == 1000

    def test_zero_rho_keeps_horizon(self):
        spec = ExperimentSpec(rho_values=(0.0,), m_values=(12,), horizon=1000,
                              warmup=10, min_offered=10_000_000)
        assert point_horizon(spec, 0.0) == 1000


def small_spec(**kwargs):
    defaults = dict(rho_values=(0.8,), m_values=(4,), seeds=(1, 2),
                    horizon=3000, warmup=100, n_ports=8)
    defaults.update(kwargs)
    return ExperimentSpec(**defaults)


class TestRunExperiment:
    def test_csv_shape_and_determinism(self):
        result1 = run_experiment(small_spec(), workers=1)
        result2 = run_experiment(small_spec(), workers=2)
        csv1, csv2 = result1.to_csv(), result2.to_csv()
        assert csv1 == csv2  # parallel merge is order independent
        header, *rows = csv1.strip().split("\n")
        assert header.startswith("rho,m,aux2_enabled,seeds,")
        assert len(rows) == 1
        assert rows[0].startswith("0.8,4,true,2,")

    def test_zero_load_point(self):
        result = run_experiment(small_spec(rho_values=(0.0,)), workers=1)
        (row,) = result.rows
        assert row.plr_mean == 0.0
        assert row.delay_mean == 0.0
        assert row.offered == 0

    def test_pair_mode_reduction_matches_loss_reduction(self):
        spec = small_spec(rho_values=(0.9,), m_values=(2,), seeds=(3,),
                          aux2_mode="pair")
        result = run_experiment(spec, workers=1)
        on_row = next(r for r in result.rows if r.aux2_enabled)
        off_row = next(r for r in result.rows if not r.aux2_enabled)
        assert on_row.reduction_pct == off_row.reduction_pct is not None

        def metrics(aux2):
            plan = RunPlan(total_slots=spec.horizon, warmup_slots=spec.warmup,
                           switch=SwitchConfig(n_ports=8, m_aux1=2,
                                               aux2_enabled=aux2),
                           traffic=TrafficConfig(rho=0.9, seed=3, n_ports=8))
            return run(plan).metrics

        expected = loss_reduction(metrics(True), metrics(False))
        assert on_row.reduction_pct == pytest.approx(expected)
        assert on_row.dropped <= off_row.dropped

    def test_single_mode_rows_have_no_reduction(self):
        result = run_experiment(small_spec(), workers=1)
        assert result.rows[0].reduction_pct is None

    def test_output_file_written(self, tmp_path):
        out = tmp_path / "rows.csv"
        spec = small_spec(output=str(out))
        run_experiment(spec, workers=1)
        assert out.read_text() == run_experiment(spec, workers=1).to_csv()

    def test_merge_metrics_pools_counters(self):
        spec = small_spec(seeds=(1, 2))
        result = run_experiment(spec, workers=1)
        assert result.rows[0].offered > 0
        m1 = merge_metrics([run(RunPlan(
            total_slots=3000, warmup_slots=100,
            switch=SwitchConfig(n_ports=8, m_aux1=4),
            traffic=TrafficConfig(rho=0.8, seed=s, n_ports=8))).metrics
            for s in (1, 2)])
        assert m1.offered == result.rows[0].offered
        assert m1.delivered == result.rows[0].delivered


class TestCli:
    def test_single_point_to_file(self, tmp_path, capsys):
        out = tmp_path / "point.csv"
        code = main(["--rho", "0.8", "--m", "4", "--seed", "1",
                     "--horizon", "2000", "--warmup", "100",
                     "--n-ports", "8", "--output", str(out)])
        assert code == 0
        text = out.read_text()
        assert text.startswith("rho,m,aux2_enabled,")
        assert "\n0.8,4,true,1," in text

    def test_stdout_when_no_output(self, capsys):
        code = main(["--rho", "0.0", "--m", "4", "--seed", "1",
                     "--horizon", "500", "--warmup", "0", "--n-ports", "4"])
        assert code == 0
        assert capsys.readouterr().out.startswith("rho,m,")

    def test_bad_rho_exits_2(self, capsys):
        assert main(["--rho", "1.5", "--m", "4"]) == 2
        assert "error" in capsys.readouterr().err

    def test_nothing_to_run_exits_2(self, capsys):
        assert main([]) == 2
        assert "nothing to run" in capsys.readouterr().err

    def test_missing_config_file_exits_2(self, capsys):
        assert main(["--config", "/nonexistent.cfg"]) == 2

    def test_no_aux2_flag(self, tmp_path):
        out = tmp_path / "off.csv"
        code = main(["--rho", "0.9", "--m", "4", "--seed", "1",
                     "--horizon", "2000", "--warmup", "0",
                     "--n-ports", "8", "--no-aux2", "--output", str(out)])
        assert code == 0
        assert ",false," in out.read_text()

    def test_config_file_run(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("rho = 0.5\nm = 4\nseed = 1\nhorizon = 1000\n"
                       "warmup = 0\nn_ports = 8\n")
        out = tmp_path / "exp.csv"
        assert main(["--config", str(cfg), "--output", str(out)]) == 0
        assert out.exists()

    def test_export_then_replay_reproduces_run(self, tmp_path, capsys):
        trace_path = tmp_path / "traffic.txt"
        args = ["--rho", "0.8", "--m", "4", "--seed", "1",
                "--horizon", "1500", "--warmup", "100", "--n-ports", "8"]
        assert main(args) == 0
        direct = capsys.readouterr().out

        assert main(args + ["--export-trace", str(trace_path)]) == 0
        exported = capsys.readouterr().out
        assert main(args + ["--replay-trace", str(trace_path)]) == 0
        replayed = capsys.readouterr().out

        def counts(csv_text):
            row = csv_text.strip().split("\n")[1].split(",")
            return row[4:7]  # offered, delivered, dropped

        assert counts(direct) == counts(exported) == counts(replayed)

    def test_trace_flags_need_single_point(self, capsys):
        assert main(["--preset", "fig2b", "--replay-trace", "x.txt"]) == 2
