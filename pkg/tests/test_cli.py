import csv
import json

import pytest

from promokit import cli, gbt
from promokit.cli import ConfigError, parse_kv_config, sub_seed


class TestConfigParsing:
    def test_key_value_with_comments(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("# a comment\nseed = 7\nout=results # trailing\n\nbudget = 24\n")
        assert parse_kv_config(p) == {"seed": "7", "out": "results", "budget": "24"}

    def test_missing_equals_rejected(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("seed 7\n")
        with pytest.raises(ConfigError):
            parse_kv_config(p)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_kv_config(tmp_path / "absent.cfg")

    def test_sub_seed_stable_and_stage_dependent(self):
        assert sub_seed(5, "synth") == sub_seed(5, "synth")
        assert sub_seed(5, "synth") != sub_seed(5, "hpo")
        assert sub_seed(5, "synth") != sub_seed(6, "synth")

    def test_bad_config_exit_code(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("training_years = 2018\ntest_year = 2017\n")
        assert cli.main(["synth", "--config", str(p), "--out", str(tmp_path)]) == 2

    def test_missing_data_exit_code(self, tmp_path):
        assert cli.main(["prepare", "--out", str(tmp_path)]) == 1


class TestPipelineArtifacts:
    def test_reports_have_18_rows(self, pipeline_dir):
        for name in ("report_default.csv", "report_optimized.csv", "report_rmse_diff.csv"):
            with open(pipeline_dir / name, newline="") as fh:
                rows = list(csv.DictReader(fh))
            assert len(rows) == 18, name
            assert len({(r["category"], r["indicator"]) for r in rows}) == 18

    def test_report_columns(self, pipeline_dir):
        with open(pipeline_dir / "report_default.csv", newline="") as fh:
            header = next(csv.reader(fh))
        assert header == ["category", "indicator", "mae", "rmse", "mape", "wmape"]
        with open(pipeline_dir / "report_rmse_diff.csv", newline="") as fh:
            header = next(csv.reader(fh))
        assert header == ["category", "indicator", "rmse_default",
                          "rmse_optimized", "rmse_diff"]

    def test_diff_report_never_negative(self, pipeline_dir):
        with open(pipeline_dir / "report_rmse_diff.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert all(float(r["rmse_diff"]) >= 0.0 for r in rows)

    def test_models_and_standardizers_saved(self, pipeline_dir):
        for variant in ("default", "optimized"):
            models = sorted((pipeline_dir / "models" / variant).glob("*.model"))
            assert len(models) == 18
            stds = sorted((pipeline_dir / "models" / variant).glob("*.standardizer.csv"))
            assert len(stds) == 6  # two standardized indicators x three groups

    def test_model_metadata(self, pipeline_dir):
        model = gbt.load_model(pipeline_dir / "models" / "default" / "dairy__avg_basket.model")
        assert model.metadata["group"] == "dairy"
        assert model.metadata["indicator"] == "avg_basket"
        assert model.metadata["training_years"] == "2016"
        assert model.metadata["test_year"] == "2017"

    def test_hpo_reports_written(self, pipeline_dir):
        txts = sorted((pipeline_dir / "hpo").glob("*.txt"))
        assert len(txts) == 18
        text = txts[0].read_text()
        assert "winning_permutation" in text
        assert "best_params" in text
        logs = sorted((pipeline_dir / "hpo").glob("*.log.csv"))
        assert len(logs) == 18

    def test_datasets_written(self, pipeline_dir):
        files = sorted((pipeline_dir / "datasets").glob("*__train.csv"))
        assert len(files) == 18


class TestForecastCommand:
    def test_forecast_from_json(self, pipeline_dir, tmp_path, capsys):
        model_path = pipeline_dir / "models" / "default" / "dairy__avg_basket.model"
        model = gbt.load_model(model_path)
        features = {name: 1.0 for name in model.feature_names}
        payload = tmp_path / "row.json"
        payload.write_text(json.dumps(features))
        code = cli.main(["forecast", "--model", str(model_path),
                         "--features", str(payload)])
        assert code == 0
        printed = float(capsys.readouterr().out.strip())
        assert printed == gbt.predict_row(model, features)

    def test_forecast_feature_mismatch_exit_code(self, pipeline_dir, tmp_path):
        model_path = pipeline_dir / "models" / "default" / "dairy__avg_basket.model"
        payload = tmp_path / "row.json"
        payload.write_text(json.dumps({"bogus": 1.0}))
        assert cli.main(["forecast", "--model", str(model_path),
                         "--features", str(payload)]) == 1

    def test_importance_command(self, pipeline_dir, capsys):
        model_path = pipeline_dir / "models" / "optimized" / "dairy__avg_amount.model"
        assert cli.main(["importance", "--model", str(model_path), "--top-k", "3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert 1 <= len(lines) <= 3
        name, value = lines[0].split(",")
        assert float(value) == 1.0
