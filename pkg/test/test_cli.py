"""
Command-line entry point: exit codes, stdout payloads and reproducible outputs.
"""

from __future__ import annotations

import io

import pandas as pd
import pytest

from src.cli import run
from src.dataset import save_measurements
from src.evaluation.predictor import PredictorMetadata, TrainedPredictor, save_predictor
from src.features.extract import FEATURE_TABLE_COLUMNS, graph_features
from src.graph.model_graph import save_model
from src.models import OlsModel

COMMANDS = ["features", "synth", "split", "tune", "train", "evaluate", "predict", "bench", "importance", "stepwise"]


@pytest.fixture
def data_csv(tmp_path, small_dataset):
    return save_measurements(small_dataset, tmp_path / "agx.csv")


@pytest.fixture
def graph_file(tmp_path, tiny_graph):
    return save_model(tiny_graph, tmp_path / "tiny.cnn.yaml")


@pytest.mark.parametrize("command", COMMANDS)
def test_help_exits_zero(command, capsys):
    assert run([command, "--help"]) == 0
    assert "Usage" in capsys.readouterr().out


def test_unknown_flag_and_command():
    assert run(["predict", "--bogus"]) == 1
    assert run(["frobnicate"]) == 1


def test_predict_prints_latency(tmp_path, graph_file, tiny_graph, capsys):
    predictor = TrainedPredictor("ols", OlsModel([2.0], 1.0, ["total_flops"], [0]), PredictorMetadata())
    path = save_predictor(predictor, tmp_path / "ols.lp")
    assert run(["predict", "-m", str(path), "-g", str(graph_file), "-s", "16"]) == 0
    fv, _ = graph_features(tiny_graph, 16)
    assert capsys.readouterr().out.strip() == repr(1.0 + 2.0 * fv.total_flops)


def test_features_writes_csv_to_stdout(graph_file, capsys):
    assert run(["features", str(graph_file), "-s", "16", "-s", "32"]) == 0
    frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert list(frame.columns) == FEATURE_TABLE_COLUMNS
    assert frame["input_size"].tolist() == [16, 32]


def test_user_errors_exit_one(tmp_path, data_csv, graph_file):
    assert run(["tune", "-m", "ols", "-d", str(data_csv), "-o", str(tmp_path / "p.lp"), "--k", "1"]) == 1
    assert run(["train", "-m", "knn", "-d", str(data_csv), "-o", str(tmp_path / "p.lp")]) == 1
    assert run(["predict", "-m", str(tmp_path / "absent.lp"), "-g", str(graph_file), "-s", "16"]) == 1
    assert run(["train", "-m", "gbt", "-d", str(data_csv), "-o", str(tmp_path / "p.lp"), "-p", "n_rounds"]) == 1


def test_internal_errors_exit_two(monkeypatch, tmp_path, graph_file):
    def boom(path):
        raise RuntimeError("unexpected")

    monkeypatch.setattr("src.cli.load_predictor", boom)
    assert run(["predict", "-m", str(tmp_path / "p.lp"), "-g", str(graph_file), "-s", "16"]) == 2


def test_seeded_runs_are_byte_identical(tmp_path, data_csv, pinned_epoch):
    outputs = []
    for attempt in range(2):
        split = tmp_path / f"split{attempt}.json"
        model = tmp_path / f"gbt{attempt}.lp"
        assert run(["split", "-d", str(data_csv), "-o", str(split), "--seed", "5"]) == 0
        args = ["-m", "gbt", "-d", str(data_csv), "-o", str(model), "--split", str(split), "--seed", "5"]
        assert run(["train", *args, "-p", "n_rounds=20", "-p", "max_depth=2"]) == 0
        outputs.append((split.read_bytes(), model.read_bytes()))
    assert outputs[0] == outputs[1]


def test_pipeline(tmp_path, data_csv, capsys):
    split = tmp_path / "split.json"
    model = tmp_path / "gbt.lp"
    report = tmp_path / "eval.csv"
    scatter = tmp_path / "scatter.csv"
    assert run(["split", "-d", str(data_csv), "-o", str(split), "--seed", "3"]) == 0
    assert run(["train", "-m", "gbt", "-d", str(data_csv), "-o", str(model), "--split", str(split)]) == 0
    args = ["-m", str(model), "-d", str(data_csv), "--split", str(split), "-o", str(report), "--scatter", str(scatter)]
    assert run(["evaluate", *args]) == 0
    frame = pd.read_csv(report)
    assert frame["space"].tolist() == ["NIS", "NCV", "NCA"]
    assert (frame["mape_percent"] >= 0).all()
    assert scatter.exists()

    capsys.readouterr()
    assert run(["importance", "-m", str(model)]) == 0
    scores = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert len(scores) == 11
    assert scores["f_score"].is_monotonic_decreasing

    assert run(["stepwise", "-m", str(model), "-d", str(data_csv), "--split", str(split)]) == 0
    steps = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert steps["step"].tolist() == list(range(1, 12))
    assert "kept" in steps["status"].tolist()


def test_importance_rejects_linear_models(tmp_path):
    path = save_predictor(TrainedPredictor("ols", OlsModel([], 1.0, [], []), PredictorMetadata()), tmp_path / "o.lp")
    assert run(["importance", "-m", str(path)]) == 1
