import json
import math

import pytest

from falsify.experiments import (
    ALGORITHMS,
    BUILTIN_SPECS,
    ConfigError,
    ExperimentConfig,
    build_formula,
    build_model,
    builtin_spec,
    run_experiment,
    run_matrix,
)
from falsify.stl import parse


def make_config(data):
    return ExperimentConfig.from_dict(data)


def small_run(spec_name, out_dir, **run_over):
    run = {"n_trials": 2, "plot": False, "out_dir": str(out_dir)}
    run.update(run_over)
    return make_config({"spec": {"name": spec_name}, "run": run})


class TestBuiltinSpecs:
    def test_listing_is_stable(self):
        assert set(BUILTIN_SPECS) == {
            "S1",
            "S2",
            "S3_easy",
            "S3_hard",
            "S4_easy",
            "S4_mid",
            "S4_hard",
            "S_init",
            "S_stable",
            "powertrain_ceiling",
            "stateless_reach",
        }

    def test_text_lookup(self):
        assert builtin_spec("S1") == "G[0,30] (v < 120)"

    def test_unknown_name_lists_valid_ones(self):
        with pytest.raises(ValueError) as err:
            builtin_spec("S99")
        assert "S3_easy" in str(err.value)

    def test_every_spec_parses_against_its_model(self):
        for name, info in BUILTIN_SPECS.items():
            cfg = make_config({"spec": {"name": name}})
            phi = build_formula(cfg)
            assert phi is not None
            model = build_model(cfg)
            assert cfg.horizon > 0 and cfg.k >= 1
            assert model.name == info.model


class TestConfig:
    def test_spec_name_fills_defaults(self):
        cfg = make_config({"spec": {"name": "S3_hard"}})
        assert cfg.model_name == "auto_transmission"
        assert cfg.horizon == 30.0 and cfg.k == 5
        assert cfg.algorithm == "plain" and cfg.optimizer == "gnm"
        assert cfg.n_init == 20 and cfg.n_opt == 130 and cfg.n_stuck is None
        assert cfg.stages == 1 and cfg.n_trials == 20 and cfg.seed == 0

    def test_spec_text_requires_model_and_horizon(self):
        with pytest.raises(ConfigError, match="model.name"):
            make_config({"spec": {"text": "G (v < 120)"}})
        with pytest.raises(ConfigError, match="run.horizon"):
            make_config({"spec": {"text": "G (v < 120)"}, "model": {"name": "powertrain"}})
        cfg = make_config(
            {
                "spec": {"text": "G (v < 120)"},
                "model": {"name": "powertrain"},
                "run": {"horizon": 10.0},
            }
        )
        assert cfg.spec_name is None and cfg.spec_label == "G (v < 120)"

    def test_exactly_one_spec_source(self):
        with pytest.raises(ConfigError, match="exactly one"):
            make_config({"spec": {"name": "S1", "text": "G (v < 1)"}})
        with pytest.raises(ConfigError, match="exactly one"):
            make_config({"spec": {}})

    def test_staged_budget_defaults(self):
        cfg = make_config({"spec": {"name": "S1"}, "run": {"algorithm": "ts"}})
        assert cfg.n_init == 4 and cfg.n_opt == 26
        assert cfg.stages == cfg.k == 5
        assert cfg.n_stuck is None

    def test_ats_gets_stall_default(self):
        cfg = make_config({"spec": {"name": "S1"}, "run": {"algorithm": "ats"}})
        assert cfg.n_stuck == 15

    def test_unknown_section_and_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown section"):
            make_config({"spec": {"name": "S1"}, "extra": {}})
        with pytest.raises(ConfigError, match="run.freq"):
            make_config({"spec": {"name": "S1"}, "run": {"freq": 3}})

    def test_bad_values_name_their_key(self):
        with pytest.raises(ConfigError, match="run.algorithm"):
            make_config({"spec": {"name": "S1"}, "run": {"algorithm": "zigzag"}})
        with pytest.raises(ConfigError, match="run.optimizer"):
            make_config({"spec": {"name": "S1"}, "run": {"optimizer": "brent"}})
        with pytest.raises(ConfigError, match="run.n_trials"):
            make_config({"spec": {"name": "S1"}, "run": {"n_trials": 0}})
        with pytest.raises(ConfigError, match="spec.name"):
            make_config({"spec": {"name": "Z9"}})
        with pytest.raises(ConfigError, match="staging.stages"):
            make_config(
                {"spec": {"name": "S1"}, "run": {"algorithm": "ts"}, "staging": {"stages": 4}}
            )

    def test_stages_must_divide_k(self):
        cfg = make_config(
            {
                "spec": {"name": "S_init"},
                "run": {"algorithm": "ts"},
            }
        )
        assert cfg.k % cfg.stages == 0

    def test_roundtrip_through_dict(self):
        cfg = make_config({"spec": {"name": "S2"}, "run": {"seed": 5, "algorithm": "ats"}})
        again = ExperimentConfig.from_dict(cfg.as_dict())
        assert again == cfg

    def test_algorithms_tuple(self):
        assert ALGORITHMS == ("plain", "ts", "ats")


class TestRunExperiment:
    def test_artifacts_written(self, tmp_path):
        cfg = small_run("powertrain_ceiling", tmp_path / "a", plot=True, n_trials=3)
        summary, rows = run_experiment(cfg)
        assert summary.successes >= 1
        assert len(rows) == 3
        for name in ("records.json", "summary.csv", "timings.txt", "best_trajectory.svg"):
            assert (tmp_path / "a" / name).exists()

    def test_records_exclude_wall_times(self, tmp_path):
        cfg = small_run("powertrain_ceiling", tmp_path / "b")
        run_experiment(cfg)
        data = json.loads((tmp_path / "b" / "records.json").read_text())
        assert "wall" not in json.dumps(data)
        assert set(data) == {"config", "trials"}
        for trial in data["trials"]:
            assert "time" not in trial and "wall_time" not in trial

    def test_rerun_is_byte_identical(self, tmp_path):
        for d in ("r1", "r2"):
            run_experiment(small_run("powertrain_ceiling", tmp_path / d, seed=11))
        for name in ("records.json", "summary.csv"):
            a = (tmp_path / "r1" / name).read_bytes()
            b = (tmp_path / "r2" / name).read_bytes()
            assert a == b

    def test_seed_changes_records(self, tmp_path):
        run_experiment(small_run("powertrain_ceiling", tmp_path / "s1", seed=1, optimizer="sa"))
        run_experiment(small_run("powertrain_ceiling", tmp_path / "s2", seed=2, optimizer="sa"))
        a = (tmp_path / "s1" / "records.json").read_text()
        b = (tmp_path / "s2" / "records.json").read_text()
        assert a != b

    def test_unfalsifiable_spec_reports_zero_successes(self, tmp_path):
        cfg = make_config(
            {
                "spec": {"text": "G (v < 1000)"},
                "model": {"name": "powertrain"},
                "run": {
                    "horizon": 5.0,
                    "n_trials": 1,
                    "out_dir": str(tmp_path / "u"),
                    "plot": True,
                },
                "budget": {"n_init": 3, "n_opt": 3},
            }
        )
        summary, rows = run_experiment(cfg)
        assert summary.successes == 0
        assert rows[0]["robustness"] > 0
        assert summary.mean_sims_to_success == math.inf
        # no successful trajectory to draw
        assert not (tmp_path / "u" / "best_trajectory.svg").exists()

    def test_summary_csv_layout(self, tmp_path):
        cfg = small_run("powertrain_ceiling", tmp_path / "c", seed=4)
        summary, _ = run_experiment(cfg)
        lines = (tmp_path / "c" / "summary.csv").read_text().strip().splitlines()
        assert lines[0] == (
            "config_id,model,spec,algorithm,optimizer,successes,"
            "mean_sims,mean_robustness,mean_sims_to_success"
        )
        body = lines[1].split(",")
        assert body[1] == "powertrain" and body[3] == "plain" and body[4] == "gnm"
        assert body[5] == summary.success_str

    def test_staged_rows_carry_stage_sims(self, tmp_path):
        cfg = small_run("powertrain_ceiling", tmp_path / "d", algorithm="ts")
        _, rows = run_experiment(cfg)
        for row in rows:
            assert "stage_sims" in row and "early_exit_stage" in row
            assert sum(row["stage_sims"]) <= row["sims"]


class TestRunMatrix:
    def test_matrix_layout_and_order(self, tmp_path):
        configs = [
            small_run("powertrain_ceiling", tmp_path / "ignored1", seed=3),
            small_run("stateless_reach", tmp_path / "ignored2", seed=3),
        ]
        rows = run_matrix(configs, tmp_path / "m")
        assert len(rows) == 2
        text = (tmp_path / "m" / "matrix.csv").read_text().strip().splitlines()
        assert text[0] == "model,spec,algorithm,optimizer,time,successes"
        # the time column stays empty: wall clock is not reproducible
        first = text[1].split(",")
        assert first[0] == "powertrain" and first[4] == ""
        second = text[2].split(",")
        assert second[0] == "stateless_map"
        # per-config artifact directories, input order preserved
        assert (tmp_path / "m" / "00_powertrain__powertrain_ceiling__plain__gnm").is_dir()
        assert (tmp_path / "m" / "01_stateless_map__stateless_reach__plain__gnm").is_dir()
        assert (tmp_path / "m" / "summary.csv").exists()

    def test_empty_matrix_writes_header_only(self, tmp_path):
        rows = run_matrix([], tmp_path / "empty")
        assert rows == []
        text = (tmp_path / "empty" / "matrix.csv").read_text()
        assert text == "model,spec,algorithm,optimizer,time,successes\n"


class TestTrajectoryPlot:
    def test_svg_contains_threshold_lines(self, tmp_path):
        cfg = small_run("powertrain_ceiling", tmp_path / "p", plot=True, n_trials=3)
        run_experiment(cfg)
        svg = (tmp_path / "p" / "best_trajectory.svg").read_text()
        assert svg.startswith("<svg") or svg.startswith("<?xml")
        assert "polyline" in svg
        # the 120 ceiling from the formula shows up as a marker line
        assert "120" in svg
