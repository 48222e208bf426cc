"""Paired-seed BvSB vs random experiments."""

import pytest

from benchmark import BENCHMARK_SPEC, BenchmarkSummary, SeedOutcome, run_paired_benchmark
from conftest import FAST_TRAIN
from phantom import PhantomSpec


def _outcome(seed, bvsb, rand, to_full=4, initial=0.5):
    return SeedOutcome(seed, 8, bvsb, rand, initial, 5.0 + seed, 4.0, 0.9, to_full)


def test_wins_count_unreached_targets_as_misses():
    assert _outcome(0, 3, 5).bvsb_wins
    assert _outcome(1, 5, 5).bvsb_wins
    assert not _outcome(2, 6, 2).bvsb_wins
    assert _outcome(3, 8, None).bvsb_wins
    assert not _outcome(4, None, 8).bvsb_wins


def test_summary_statistics():
    summary = BenchmarkSummary((_outcome(0, 3, 5, 2), _outcome(1, 6, 2, 4), _outcome(2, None, None, 8)), 0.85)
    assert summary.wins == 2
    assert summary.mean_bvsb_area == pytest.approx(6.0)
    assert summary.median_full_pool_fraction == 0.5
    frame = summary.to_frame()
    assert frame["bvsb_wins"].tolist() == [True, False, True]
    assert frame["seed"].tolist() == [0, 1, 2]
    assert frame["full_pool_fraction"].tolist() == [0.25, 0.5, 1.0]


def test_seeds_starting_at_the_target_are_saturated():
    summary = BenchmarkSummary((_outcome(0, 0, 0, initial=0.96), _outcome(1, 2, 3, initial=0.6)), 0.85)
    assert summary.saturated_seeds == [0]
    assert summary.to_frame()["saturated"].tolist() == [True, False]


@pytest.mark.parametrize("seeds, split", [([], (1, 2, 1)), ([0], (1, 0, 1))])
def test_rejects_empty_inputs(tmp_path, seeds, split):
    with pytest.raises(ValueError):
        run_paired_benchmark(seeds, tmp_path, split=split)


@pytest.mark.slow
def test_small_paired_benchmark(tmp_path):
    summary = run_paired_benchmark(
        [0, 1], tmp_path, PhantomSpec(size=(16, 16)), split=(1, 4, 2), target=0.5, train_cfg=FAST_TRAIN,
    )
    assert [o.seed for o in summary.outcomes] == [0, 1]
    for outcome in summary.outcomes:
        assert outcome.pool_size == 4
        assert 0 <= outcome.bvsb_queries_to_full <= 4
        assert 0.0 <= outcome.initial_dice <= 1.0
        # both curves span the same number of points
        assert 0.0 <= outcome.bvsb_area <= 4.0 and 0.0 <= outcome.random_area <= 4.0
    assert (tmp_path / "seed_001" / "manifest.json").is_file()


@pytest.mark.slow
def test_bvsb_beats_random_on_the_default_benchmark(tmp_path):
    summary = run_paired_benchmark(range(10), tmp_path)
    # every pair must start below the target, or its win is a 0-vs-0 tie
    assert summary.saturated_seeds == []
    assert all(o.bvsb_queries != 0 and o.random_queries != 0 for o in summary.outcomes)
    assert summary.wins >= 7
    assert summary.mean_bvsb_area >= summary.mean_random_area
    assert summary.median_full_pool_fraction <= 0.6 + 2 / 18
    print(f"median full-pool fraction {summary.median_full_pool_fraction:.3f}")


@pytest.mark.slow
def test_unshifted_benchmark_saturates_from_the_seed_cases(tmp_path):
    summary = run_paired_benchmark(range(2), tmp_path, PhantomSpec())
    assert summary.saturated_seeds == [0, 1]
    assert BENCHMARK_SPEC.intensity_shift > 0.0
