"""splitmix64 stream: reference values, block draws, integer and normal draws."""

import numpy as np
import pytest

from prng import MASK64, SplitMix64, derive_seed


# ── Reference sequences ──

def test_known_sequence_seed_1234567():
    expected = [
        6457827717110365317,
        3203168211198807973,
        9817491932198370423,
        4593380528125082431,
        16408922859458223821,
    ]
    rng = SplitMix64.seeded(1234567)
    values = []
    for _ in expected:
        value, rng = rng.next_u64()
        values.append(value)
    assert values == expected


def test_first_value_seed_zero():
    value, _ = SplitMix64.seeded(0).next_u64()
    assert value == 0xE220A8397B1DCDAF


def test_generator_is_a_value():
    rng = SplitMix64.seeded(42)
    first, _ = rng.next_u64()
    again, _ = rng.next_u64()
    assert first == again


# ── Blocks ──

def test_u64_block_matches_sequential_draws():
    rng = SplitMix64.seeded(99)
    block, after_block = rng.u64_block(17)
    sequential = []
    for _ in range(17):
        value, rng = rng.next_u64()
        sequential.append(value)
    assert [int(v) for v in block] == sequential
    assert after_block == rng


def test_f64_block_matches_next_f64():
    rng = SplitMix64.seeded(5)
    block, _ = rng.f64_block(8)
    for expected in block:
        value, rng = rng.next_f64()
        assert value == expected
        assert 0.0 <= value < 1.0


def test_normal_block_moments():
    values, _ = SplitMix64.seeded(3).normal_block(20000)
    assert values.dtype == np.float64
    assert abs(values.mean()) < 0.05
    assert abs(values.std() - 1.0) < 0.05
    assert np.all(np.isfinite(values))


# ── Integers ──

def test_uniform_int_uses_high_bits_with_rejection():
    rng = SplitMix64.seeded(2024)
    index, after = rng.uniform_int(3)
    # brute-force the documented rule
    walker = rng
    while True:
        value, walker = walker.next_u64()
        candidate = value >> 62
        if candidate < 3:
            break
    assert index == candidate
    assert after == walker


def test_uniform_int_single_choice_consumes_one_draw():
    rng = SplitMix64.seeded(8)
    index, after = rng.uniform_int(1)
    assert index == 0
    assert after == rng.next_u64()[1]


def test_uniform_int_covers_range():
    rng = SplitMix64.seeded(1)
    seen = set()
    for _ in range(500):
        index, rng = rng.uniform_int(7)
        assert 0 <= index < 7
        seen.add(index)
    assert seen == set(range(7))


def test_uniform_int_rejects_empty_range():
    with pytest.raises(ValueError):
        SplitMix64.seeded(0).uniform_int(0)


def test_derived_seeds_are_distinct_and_stable():
    seeds = [derive_seed(7, i) for i in range(100)]
    assert len(set(seeds)) == 100
    assert all(0 <= s <= MASK64 for s in seeds)
    assert derive_seed(7, 3) == derive_seed(7, 3)
