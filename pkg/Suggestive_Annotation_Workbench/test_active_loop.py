"""Suggestive annotation loop: selection, stopping, pool bookkeeping, logs and comparisons."""

from dataclasses import replace

import numpy as np
import pytest

from active_loop import (
    COMPARISON_COLUMNS,
    MODEL_FILE_NAME,
    SimulationConfig,
    SimulationLog,
    compare_strategies,
    dice_curve_area,
    full_pool_baseline,
    load_cases,
    queries_to_reach,
    run_simulation,
    score_pool,
    select_candidate,
    stable_json,
)
from conftest import FAST_TRAIN
from errors import ConfigError, InvariantError, PoolError, PredictionError
from phantom import PhantomSpec, generate_benchmark
from prng import SplitMix64
from segmenter import ModelParams, TrainingRun, load_model
from tensor_io import NUM_CLASSES, ProbMap


class NearestMeanSegmenter:
    """Labels each pixel with the closest phantom class mean; training is a no-op."""

    means = np.asarray(PhantomSpec().class_intensity_means)

    def fresh(self, seed):
        return ModelParams.fresh(seed)

    def fit(self, init, labeled, cfg):
        params = ModelParams(init.weights, init.trained_epochs + 1, init.rng_seed)
        return TrainingRun(params, (0.0,), 0, "max_epochs")

    def predict(self, model, slice2d):
        labels = np.argmin(np.abs(slice2d.data[..., None] - self.means), axis=-1)
        probs = np.full(labels.shape + (NUM_CLASSES,), 0.01)
        np.put_along_axis(probs, labels[..., None], 0.97, axis=-1)
        return ProbMap(probs)


class BrokenSegmenter(NearestMeanSegmenter):
    def predict(self, model, slice2d):
        raise InvariantError("weights went missing")


@pytest.fixture(scope="module")
def noiseless_benchmark(tmp_path_factory):
    out = tmp_path_factory.mktemp("noiseless")
    return generate_benchmark(PhantomSpec(size=(12, 12), seed=4, noise_sigma=0.0), 1, 3, 2, out)


def _cfg(**kwargs):
    return SimulationConfig(train_cfg=FAST_TRAIN, **kwargs)


# ── Selection ──

def test_bvsb_picks_lowest_score_with_id_tie_break():
    rng = SplitMix64.seeded(0)
    assert select_candidate({"x": 0.1, "a": 0.3}, "bvsb", rng) == ("x", rng)
    assert select_candidate({"c": 0.5, "b": 0.2, "a": 0.2}, "bvsb", rng)[0] == "a"


def test_random_selection_ignores_scores():
    rng = SplitMix64.seeded(77)
    first, after = select_candidate({"a": 0.9, "b": 0.1, "c": 0.5}, "random", rng)
    second, _ = select_candidate({"c": 0.0, "a": 0.0, "b": 0.0}, "random", rng)
    index, expected_after = rng.uniform_int(3)
    assert first == second == ["a", "b", "c"][index]
    assert after == expected_after


def test_selection_from_empty_pool():
    with pytest.raises(PoolError):
        select_candidate({}, "bvsb", SplitMix64.seeded(0))


# ── Scoring ──

def test_score_pool_is_sorted_and_bounded(small_benchmark):
    pool_ids = [c.id for c in small_benchmark.pool("unlabeled")]
    cases = load_cases(small_benchmark, pool_ids)
    scores = score_pool(ModelParams.fresh(0), list(reversed(cases.values())))
    assert list(scores) == sorted(pool_ids)
    # zero weights predict uniform probabilities
    assert all(score == 0.0 for score in scores.values())


def test_score_pool_of_confident_model(noiseless_benchmark):
    cases = load_cases(noiseless_benchmark, [c.id for c in noiseless_benchmark.pool("unlabeled")])
    scores = score_pool(ModelParams.fresh(0), list(cases.values()), NearestMeanSegmenter())
    assert all(score == pytest.approx(0.96) for score in scores.values())


def test_score_pool_errors(noiseless_benchmark):
    with pytest.raises(PoolError):
        score_pool(ModelParams.fresh(0), [])
    cases = load_cases(noiseless_benchmark, ["case_001"])
    with pytest.raises(PredictionError) as info:
        score_pool(ModelParams.fresh(0), list(cases.values()), BrokenSegmenter())
    assert info.value.case_id == "case_001"


# ── Stopping ──

def test_budget_zero_trains_and_evaluates_only(noiseless_benchmark, tmp_path):
    log = run_simulation(noiseless_benchmark, _cfg(budget=0), tmp_path, NearestMeanSegmenter())
    assert log.records == ()
    assert log.stop_reason == "budget"
    assert log.initial_test_dice.mean_foreground == 1.0
    assert log.final_model_path == str(tmp_path / MODEL_FILE_NAME)
    assert load_model(log.final_model_path).trained_epochs == 1


def test_target_is_checked_before_budget(noiseless_benchmark):
    log = run_simulation(noiseless_benchmark, _cfg(budget=0, target_mean_dice=1.0), None, NearestMeanSegmenter())
    assert log.stop_reason == "target_reached"
    assert log.final_model_path is None


def test_pool_exhaustion_queries_every_case(noiseless_benchmark):
    log = run_simulation(noiseless_benchmark, _cfg(), None, NearestMeanSegmenter())
    assert log.stop_reason == "pool_exhausted"
    assert [r.selected_id for r in log.records] == ["case_001", "case_002", "case_003"]
    assert [r.labeled_count for r in log.records] == [2, 3, 4]
    assert all(r.effort.pct(c) == 100.0 for r in log.records for c in (1, 2, 3))


def test_budget_caps_queries(small_benchmark):
    log = run_simulation(small_benchmark, _cfg(budget=2))
    assert len(log.records) == 2
    assert log.stop_reason == "budget"


# ── Pool bookkeeping ──

def test_pool_shrinks_by_the_queried_case(small_benchmark):
    log = run_simulation(small_benchmark, _cfg(strategy="bvsb"))
    pool = sorted(c.id for c in small_benchmark.pool("unlabeled"))
    for record in log.records:
        assert sorted(record.candidate_scores) == pool
        assert record.selected_score == min(record.candidate_scores.values())
        assert all(0.0 <= s <= 1.0 for s in record.candidate_scores.values())
        pool.remove(record.selected_id)
    assert pool == []
    selected = [r.selected_id for r in log.records]
    assert len(set(selected)) == len(selected)
    assert not set(selected) & set(log.initial_labeled_ids)


def test_unused_labeled_cases_join_the_pool(small_benchmark):
    log = run_simulation(small_benchmark, _cfg(initial_labeled_ids=("case_000",), budget=1))
    assert log.initial_labeled_ids == ("case_000",)
    assert "case_001" in log.records[0].candidate_scores
    assert log.records[0].labeled_count == 2


@pytest.mark.parametrize(
    "ids", [("case_000", "case_000"), ("case_005",), ()], ids=["duplicate", "not-labeled", "empty"]
)
def test_bad_initial_sets(small_benchmark, ids):
    with pytest.raises(PoolError):
        run_simulation(small_benchmark, _cfg(initial_labeled_ids=ids))


def test_empty_pool_is_rejected(tmp_path):
    manifest = generate_benchmark(PhantomSpec(size=(12, 12)), 1, 0, 1, tmp_path)
    with pytest.raises(PoolError):
        run_simulation(manifest, _cfg())


# ── Determinism and logs ──

def test_random_strategy_is_reproducible(small_benchmark):
    first = run_simulation(small_benchmark, _cfg(strategy="random", seed=5))
    second = run_simulation(small_benchmark, _cfg(strategy="random", seed=5))
    assert first.to_json() == second.to_json()


def test_log_json_round_trip(small_benchmark):
    log = run_simulation(small_benchmark, _cfg(budget=2, effort_tol=1))
    text = log.to_json()
    again = SimulationLog.from_json(text)
    assert again == log
    assert again.to_json() == text
    assert len(log.mean_dice_curve()) == 3


def test_log_rejects_out_of_sequence_records(small_benchmark):
    log = run_simulation(small_benchmark, _cfg(budget=2))
    with pytest.raises(InvariantError):
        replace(log, records=log.records[1:])
    with pytest.raises(InvariantError):
        replace(log, stop_reason="tired")


def test_stable_json_formatting():
    text = stable_json({"b": 0.1, "a": [1, None, True], "c": {}})
    assert text == '{\n  "b": 0.10000000000000001,\n  "a": [\n    1,\n    null,\n    true\n  ],\n  "c": {}\n}\n'
    with pytest.raises(ValueError):
        stable_json({"x": float("nan")})


@pytest.mark.parametrize(
    "kwargs",
    [dict(strategy="greedy"), dict(budget=-1), dict(target_mean_dice=0.0), dict(effort_tol=-1)],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SimulationConfig(**kwargs)


# ── Comparison and derived quantities ──

def test_same_strategy_twice_gives_identical_columns(small_benchmark):
    cfg = _cfg(budget=2)
    comparison = compare_strategies(small_benchmark, [cfg, cfg])
    table = comparison.table
    assert list(table.columns) == COMPARISON_COLUMNS
    assert table["bvsb_mean_dice"].tolist() == table["random_mean_dice"].tolist()
    assert table["iteration"].tolist() == [0, 1, 2]


def test_comparison_orders_bvsb_first(small_benchmark, tmp_path):
    pair = [_cfg(strategy="random", budget=1), _cfg(strategy="bvsb", budget=1)]
    comparison = compare_strategies(small_benchmark, pair, [tmp_path / "bvsb", tmp_path / "random"])
    assert [log.config.strategy for log in comparison.logs] == ["bvsb", "random"]
    assert comparison.logs[1].final_model_path == str(tmp_path / "random" / MODEL_FILE_NAME)
    assert comparison.to_csv().splitlines()[0] == ",".join(COMPARISON_COLUMNS)


def test_comparison_of_a_perfect_model(noiseless_benchmark):
    pair = [_cfg(strategy="bvsb", budget=1), _cfg(strategy="random", budget=1)]
    comparison = compare_strategies(noiseless_benchmark, pair, segmenter=NearestMeanSegmenter())
    assert len(comparison.table) == 2
    assert comparison.table["random_mean_dice"].tolist() == [1.0, 1.0]


def test_comparison_rejects_mismatched_configs(small_benchmark):
    with pytest.raises(ConfigError):
        compare_strategies(small_benchmark, [_cfg(seed=1), _cfg(strategy="random", seed=2)])
    with pytest.raises(ConfigError):
        compare_strategies(small_benchmark, [_cfg()])


def test_full_pool_baseline_and_derived_quantities(noiseless_benchmark):
    baseline = full_pool_baseline(noiseless_benchmark, _cfg(), NearestMeanSegmenter())
    assert baseline.mean_foreground == 1.0
    log = run_simulation(noiseless_benchmark, _cfg(budget=2), None, NearestMeanSegmenter())
    assert queries_to_reach(log, 1.0) == 0
    assert queries_to_reach(log, 1.5) is None
    assert dice_curve_area(log.mean_dice_curve()) == 2.0


def test_dice_curve_area():
    assert dice_curve_area([0.5, 0.7, 0.9]) == pytest.approx(1.4)
    assert dice_curve_area([0.8]) == 0.0
