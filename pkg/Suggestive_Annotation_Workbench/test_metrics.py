"""Hard Dice, soft-Dice loss and gradient, Average BvSB: hand examples and brute-force oracles."""

import numpy as np
import pytest

from errors import DimensionMismatchError, InvariantError
from metrics import (
    SOFT_DICE_EPS,
    DiceReport,
    average_bvsb,
    dice_report,
    hard_dice,
    mean_dice_report,
    one_hot,
    soft_dice_terms,
    soft_dice_grad,
    soft_dice_loss,
    softmax,
)
from tensor_io import LabelMap, ProbMap


def _set_dice(pred: np.ndarray, gt: np.ndarray, c: int) -> float:
    a = {idx for idx, v in np.ndenumerate(pred) if v == c}
    b = {idx for idx, v in np.ndenumerate(gt) if v == c}
    if not a and not b:
        return 1.0
    return 2 * len(a & b) / (len(a) + len(b))


# ── Hard Dice ──

def test_hard_dice_hand_example():
    pred = LabelMap(np.array([[1, 1, 0, 0]]))
    gt = LabelMap(np.array([[0, 1, 1, 0]]))
    assert hard_dice(pred, gt, 1) == 0.5


def test_hard_dice_identity_and_empty(make_labels):
    labels = make_labels((6, 6), classes=3)
    assert hard_dice(labels, labels, 2) == 1.0
    assert hard_dice(labels, labels, 3) == 1.0  # absent from both


def test_hard_dice_matches_set_oracle(make_labels):
    for _ in range(200):
        pred, gt = make_labels((16, 16)), make_labels((16, 16))
        for c in range(4):
            assert hard_dice(pred, gt, c) == _set_dice(pred.data, gt.data, c)
            assert hard_dice(pred, gt, c) == hard_dice(gt, pred, c)


def test_hard_dice_dimension_mismatch(make_labels):
    with pytest.raises(DimensionMismatchError):
        hard_dice(make_labels((4, 4)), make_labels((4, 5)), 1)


def test_dice_report_and_mean(make_labels):
    labels = make_labels((8, 8))
    report = dice_report(labels, labels)
    assert report.per_class == (1.0, 1.0, 1.0, 1.0)
    assert report.to_csv_row() == "1.0,1.0,1.0,1.0,1.0"

    half = DiceReport.from_ratios([1.0, 0.5, 0.5, 0.5])
    mean = mean_dice_report([report, half])
    assert mean.per_class == (1.0, 0.75, 0.75, 0.75)
    assert mean.mean_foreground == pytest.approx(0.75)


def test_dice_report_invariants():
    with pytest.raises(InvariantError):
        DiceReport((1.0, 1.0, 1.0, 1.0), 0.5)
    with pytest.raises(InvariantError):
        DiceReport.from_ratios([1.2, 0.0, 0.0, 0.0])


# ── Soft Dice loss ──

def test_soft_dice_perfect_prediction():
    labels = np.array([[0, 1], [2, 3]])
    loss = soft_dice_loss(ProbMap(np.eye(4)[labels]), LabelMap(labels))
    assert loss.value == 0.0
    assert loss.per_class_soft_dsc == (1.0, 1.0, 1.0, 1.0)


def test_soft_dice_single_pixel_closed_form():
    eps = SOFT_DICE_EPS
    loss = soft_dice_loss(ProbMap(np.full((1, 1, 4), 0.25)), LabelMap(np.array([[1]])))
    expected = [
        eps / (0.25 + eps),
        (0.5 + eps) / (1.25 + eps),
        eps / (0.25 + eps),
        eps / (0.25 + eps),
    ]
    assert loss.per_class_soft_dsc == pytest.approx(expected, rel=1e-12)
    assert loss.value == pytest.approx(4 - sum(expected), abs=1e-9)


def test_soft_dice_loss_range(make_probmap, make_labels):
    for _ in range(20):
        loss = soft_dice_loss(make_probmap((8, 8)), make_labels((8, 8)))
        assert 0.0 <= loss.value <= 4.0
        assert loss.value == pytest.approx(4 - sum(loss.per_class_soft_dsc), abs=1e-9)


# ── Gradient ──

def _loss_from_logits(logits: np.ndarray, gt: LabelMap) -> float:
    # float64 throughout, no float32 ProbMap in between
    probs = softmax(logits.reshape(-1, 4))
    return soft_dice_terms(probs, one_hot(gt.data.reshape(-1)))[0]


def test_soft_dice_grad_matches_finite_differences():
    h = 1e-3
    for seed in range(100):
        rng = np.random.default_rng(seed)
        logits = rng.standard_normal((8, 8, 4))
        gt = LabelMap(rng.integers(0, 4, size=(8, 8)))
        grad = soft_dice_grad(logits, gt)
        numeric = np.zeros_like(logits)
        for idx in np.ndindex(logits.shape):
            bumped = logits.copy()
            bumped[idx] += h
            up = _loss_from_logits(bumped, gt)
            bumped[idx] -= 2 * h
            down = _loss_from_logits(bumped, gt)
            numeric[idx] = (up - down) / (2 * h)
        err = np.max(np.abs(grad - numeric)) / max(np.max(np.abs(grad)), 1e-12)
        assert err <= 1e-4, f"seed {seed}: relative error {err}"


def test_soft_dice_grad_sums_to_zero_per_pixel(rng):
    logits = rng.standard_normal((5, 5, 4)) * 3
    grad = soft_dice_grad(logits, LabelMap(rng.integers(0, 4, size=(5, 5))))
    assert np.max(np.abs(grad.sum(axis=-1))) < 1e-9


def test_saturated_prediction_has_smaller_gradient(make_labels):
    gt = make_labels((8, 8))
    saturated = np.eye(4)[gt.data] * 30.0
    uniform = np.zeros((8, 8, 4))
    assert np.abs(soft_dice_grad(saturated, gt)).sum() < np.abs(soft_dice_grad(uniform, gt)).sum()


def test_soft_dice_grad_rejects_bad_input(make_labels):
    gt = make_labels((3, 3))
    with pytest.raises(DimensionMismatchError):
        soft_dice_grad(np.zeros((3, 4, 4)), gt)
    bad = np.zeros((3, 3, 4))
    bad[0, 0, 0] = np.inf
    with pytest.raises(InvariantError):
        soft_dice_grad(bad, gt)


# ── Average BvSB ──

def test_bvsb_extremes_and_hand_example(make_labels):
    certain = ProbMap(np.eye(4)[make_labels((5, 5)).data])
    assert average_bvsb(certain) == 1.0
    assert average_bvsb(ProbMap(np.full((5, 5, 4), 0.25))) == 0.0
    two = ProbMap(np.array([[[0.5, 0.3, 0.1, 0.1], [0.4, 0.4, 0.1, 0.1]]]))
    assert average_bvsb(two) == pytest.approx(0.1, abs=1e-7)


def test_bvsb_matches_sort_oracle(make_probmap):
    for _ in range(50):
        pm = make_probmap((16, 16))
        margins = []
        for pixel in pm.data.reshape(-1, 4).astype(np.float64):
            ordered = sorted(pixel, reverse=True)
            margins.append(ordered[0] - ordered[1])
        assert average_bvsb(pm) == pytest.approx(sum(margins) / len(margins), abs=1e-12)


def test_bvsb_channel_permutation_invariance(make_probmap, rng):
    pm = make_probmap((6, 6))
    permuted = ProbMap(pm.data[..., rng.permutation(4)])
    assert average_bvsb(permuted) == pytest.approx(average_bvsb(pm), abs=1e-12)
