"""
Simulation config files.

JSON keys mirror the SimulationConfig field names; `train_cfg` is a nested
object mirroring TrainConfig. `strategy` is either one name or a list of two
distinct names, which asks for a side-by-side comparison.

    {
      "strategy": ["bvsb", "random"],
      "seed": 7,
      "initial_labeled_ids": null,
      "budget": 10,
      "target_mean_dice": 0.85,
      "train_cfg": {"learning_rate": 1.0, "max_epochs": 200, "patience": 30},
      "effort_tol": 0
    }
"""

import json
import logging
from dataclasses import fields
from pathlib import Path
from typing import Union

from active_loop import STRATEGIES, SimulationConfig
from errors import ConfigError, InvariantError
from segmenter import TrainConfig

logger = logging.getLogger(__name__)

_SIM_KEYS = {f.name for f in fields(SimulationConfig)}
_TRAIN_KEYS = {f.name for f in fields(TrainConfig)}


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def parse_train_config(document) -> TrainConfig:
    _require(isinstance(document, dict), "train_cfg must be an object")
    unknown = set(document) - _TRAIN_KEYS
    _require(not unknown, f"unknown train_cfg keys: {sorted(unknown)}")
    for key in ("max_epochs", "patience", "seed"):
        if key in document:
            _require(_is_int(document[key]), f"train_cfg.{key} must be an integer")
    if "learning_rate" in document:
        _require(_is_number(document["learning_rate"]), "train_cfg.learning_rate must be a number")
    try:
        return TrainConfig(**document)
    except InvariantError as exc:
        raise ConfigError(f"train_cfg: {exc}") from exc


def parse_simulation_configs(document) -> list[SimulationConfig]:
    """One config, or two identical apart from strategy in compare mode."""
    _require(isinstance(document, dict), "simulation config must be a JSON object")
    unknown = set(document) - _SIM_KEYS
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")

    options = dict(document)
    strategy = options.pop("strategy", "bvsb")
    if isinstance(strategy, str):
        strategies = [strategy]
    else:
        _require(
            isinstance(strategy, list) and len(strategy) == 2 and len(set(strategy)) == 2,
            "strategy must be a name or a list of two distinct names",
        )
        strategies = strategy
    for name in strategies:
        _require(name in STRATEGIES, f"strategy must be one of {STRATEGIES}, got {name!r}")

    for key in ("seed", "effort_tol"):
        if key in options:
            _require(_is_int(options[key]), f"{key} must be an integer")
    if options.get("budget") is not None:
        _require(_is_int(options["budget"]), "budget must be an integer or null")
    if options.get("target_mean_dice") is not None:
        _require(_is_number(options["target_mean_dice"]), "target_mean_dice must be a number or null")
    ids = options.get("initial_labeled_ids")
    if ids is not None:
        _require(
            isinstance(ids, list) and all(isinstance(i, str) for i in ids),
            "initial_labeled_ids must be a list of case ids or null",
        )
        options["initial_labeled_ids"] = tuple(ids)
    if "train_cfg" in options:
        options["train_cfg"] = parse_train_config(options["train_cfg"])

    return [SimulationConfig(strategy=name, **options) for name in strategies]


def load_simulation_configs(path: Union[str, Path]) -> list[SimulationConfig]:
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    configs = parse_simulation_configs(document)
    logger.info("config %s: strategies %s", path, [c.strategy for c in configs])
    return configs
