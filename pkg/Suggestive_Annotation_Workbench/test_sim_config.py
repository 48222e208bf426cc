"""Simulation config files."""

import json

import pytest

from errors import ConfigError
from segmenter import TrainConfig
from sim_config import load_simulation_configs, parse_simulation_configs, parse_train_config


def test_defaults_from_empty_object():
    (cfg,) = parse_simulation_configs({})
    assert cfg.strategy == "bvsb"
    assert cfg.budget is None and cfg.target_mean_dice is None
    assert cfg.train_cfg == TrainConfig()


def test_full_document(tmp_path):
    document = {
        "strategy": "random",
        "seed": 7,
        "initial_labeled_ids": ["case_000"],
        "budget": 10,
        "target_mean_dice": 0.85,
        "train_cfg": {"learning_rate": 1.0, "max_epochs": 50, "patience": 5},
        "effort_tol": 1,
    }
    path = tmp_path / "sim.json"
    path.write_text(json.dumps(document))
    (cfg,) = load_simulation_configs(path)
    assert cfg.seed == 7 and cfg.budget == 10 and cfg.effort_tol == 1
    assert cfg.initial_labeled_ids == ("case_000",)
    assert cfg.train_cfg == TrainConfig(learning_rate=1.0, max_epochs=50, patience=5)


def test_compare_mode_yields_two_configs():
    configs = parse_simulation_configs({"strategy": ["random", "bvsb"], "budget": 3})
    assert [c.strategy for c in configs] == ["random", "bvsb"]
    assert configs[0].budget == configs[1].budget == 3


@pytest.mark.parametrize(
    "document",
    [
        [],
        {"stratgy": "bvsb"},
        {"strategy": "greedy"},
        {"strategy": ["bvsb", "bvsb"]},
        {"strategy": ["bvsb", "random", "bvsb"]},
        {"seed": "7"},
        {"budget": 2.5},
        {"budget": -1},
        {"target_mean_dice": "high"},
        {"target_mean_dice": 1.5},
        {"initial_labeled_ids": "case_000"},
        {"effort_tol": True},
        {"train_cfg": {"learning_rate": 0}},
        {"train_cfg": {"epochs": 10}},
        {"train_cfg": {"max_epochs": 10.0}},
    ],
)
def test_rejected_documents(document):
    with pytest.raises(ConfigError):
        parse_simulation_configs(document)


def test_train_config_must_be_an_object():
    with pytest.raises(ConfigError):
        parse_train_config([1, 2])


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"strategy\": ")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_simulation_configs(path)


def test_config_that_is_not_utf8(tmp_path):
    path = tmp_path / "latin1.json"
    path.write_bytes('{"strategy": "bvsb", "note": "café"}'.encode("latin-1"))
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_simulation_configs(path)
