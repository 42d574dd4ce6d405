import math

import numpy as np
import pytest

from cadseg.errors import InvalidInputError, NotADistributionError, ShapeError
from cadseg.grid import softmax
from cadseg.losses import (
    LossReport,
    argmax_labels,
    cad_loss,
    ce_loss,
    cps_loss,
    dice_loss,
    kl_divergence,
    loss_gradients,
    mt_loss,
    one_hot,
    total_loss,
)


def _random_instance(rng, k=2, h=4, w=4):
    logits = rng.normal(size=(k, h, w))
    target = one_hot(rng.integers(0, k, size=(h, w)), k)
    return logits, target


def test_dice_perfect_prediction_near_zero():
    t = one_hot(np.array([[0, 1], [1, 0]]), 2)
    assert dice_loss(t, t) < 1e-5


def test_dice_disjoint_near_one():
    t = one_hot(np.zeros((2, 2), dtype=int), 2)
    p = one_hot(np.ones((2, 2), dtype=int), 2)
    assert dice_loss(p, t) > 1.0 - 1e-4


def test_dice_single_pixel_half():
    t = one_hot(np.zeros((1, 1), dtype=int), 2)
    p = np.array([[[0.5]], [[0.5]]])
    eps = 1e-5
    assert abs(dice_loss(p, t) - (1.0 - (2 * 0.5 + eps) / (2.0 + eps))) < 1e-15


def test_dice_shape_mismatch():
    with pytest.raises(ShapeError):
        dice_loss(np.zeros((2, 2, 2)), np.zeros((2, 2, 3)))


def test_ce_uniform_is_log_k():
    for k in (2, 3, 5):
        t = one_hot(np.zeros((3, 3), dtype=int), k)
        p = np.full((k, 3, 3), 1.0 / k)
        assert abs(ce_loss(p, t) - math.log(k)) < 1e-9


def test_ce_single_pixel_quarter():
    t = one_hot(np.zeros((1, 1), dtype=int), 2)
    p = np.array([[[0.25]], [[0.75]]])
    assert abs(ce_loss(p, t) - (-math.log(0.25 + 1e-12))) < 1e-12


def test_ce_confident_prediction_near_zero():
    t = one_hot(np.array([[1, 0]]), 2)
    assert ce_loss(t, t) < 1e-9


def test_mt_is_dice_plus_ce():
    rng = np.random.default_rng(17)
    logits, target = _random_instance(rng)
    probs = softmax(logits)
    assert mt_loss(logits, target) == dice_loss(probs, target) + ce_loss(probs, target)


def test_mt_uniform_two_class_value():
    t = one_hot(np.zeros((4, 4), dtype=int), 2)
    logits = np.zeros((2, 4, 4))
    # dice of a 0.5 map vs one-hot is ~0.5; ce is ln 2
    assert abs(mt_loss(logits, t) - (0.5 + math.log(2.0))) < 1e-4


def test_cps_single_pixel_half():
    a = np.zeros((2, 1, 1))
    b = np.array([[[2.0]], [[-2.0]]])  # argmax class 0
    assert abs(cps_loss(a, b) - 0.5) < 1e-4


def test_cps_self_agreement_is_small():
    rng = np.random.default_rng(23)
    a = rng.normal(scale=5.0, size=(2, 4, 4))
    probs = softmax(a)
    own = one_hot(argmax_labels(a), 2)
    assert cps_loss(a, a) == dice_loss(probs, own)


def test_cps_disjoint_argmax_near_one():
    a = np.stack([np.full((2, 2), 6.0), np.full((2, 2), -6.0)])
    b = np.stack([np.full((2, 2), -6.0), np.full((2, 2), 6.0)])
    assert cps_loss(a, b) > 0.99


def test_cad_equals_cps_on_same_tensors():
    rng = np.random.default_rng(31)
    a = rng.normal(size=(3, 4, 4))
    b = rng.normal(size=(3, 4, 4))
    assert cad_loss(a, b) == cps_loss(a, b)


def test_argmax_ties_take_lowest_class():
    z = np.zeros((3, 2, 2))
    assert np.array_equal(argmax_labels(z), np.zeros((2, 2), dtype=int))


def test_kl_identical_is_zero():
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0


def test_kl_documented_value():
    got = kl_divergence([0.5, 0.5], [0.25, 0.75])
    want = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
    assert abs(got - want) < 1e-12
    assert abs(got - 0.143841) < 1e-6


def test_kl_degenerate_p():
    assert abs(kl_divergence([1.0, 0.0], [0.5, 0.5]) - math.log(2.0)) < 1e-12


def test_kl_zero_term_convention():
    # p has a zero entry: that term contributes nothing even when q is 0 there
    assert kl_divergence([0.0, 1.0], [0.0, 1.0]) == 0.0


def test_kl_rejects_bad_distributions():
    with pytest.raises(NotADistributionError):
        kl_divergence([0.5, 0.6], [0.5, 0.5])
    with pytest.raises(NotADistributionError):
        kl_divergence([-0.2, 1.2], [0.5, 0.5])
    with pytest.raises(ShapeError):
        kl_divergence([0.5, 0.5], [0.2, 0.3, 0.5])


def test_kl_zero_iff_equal_on_grid():
    rng = np.random.default_rng(7)
    for _ in range(50):
        p = rng.dirichlet(np.ones(4))
        q = rng.dirichlet(np.ones(4))
        assert kl_divergence(p, p) < 1e-15
        if not np.allclose(p, q, atol=1e-9):
            assert kl_divergence(p, q) > 0.0


def _finite_difference(fn, logits, step=1e-4):
    grad = np.zeros_like(logits)
    it = np.nditer(logits, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        up = logits.copy()
        up[idx] += step
        down = logits.copy()
        down[idx] -= step
        grad[idx] = (fn(up) - fn(down)) / (2.0 * step)
    return grad


@pytest.mark.parametrize("kind", ["dice", "ce", "mt"])
def test_gradients_match_finite_differences(kind):
    rng = np.random.default_rng(101)
    fns = {
        "dice": lambda z, t: dice_loss(softmax(z), t),
        "ce": lambda z, t: ce_loss(softmax(z), t),
        "mt": mt_loss,
    }
    for _ in range(20):
        logits, target = _random_instance(rng, k=2, h=3, w=3)
        analytic = loss_gradients(kind, logits, target)
        numeric = _finite_difference(lambda z: fns[kind](z, target), logits)
        scale = max(np.abs(numeric).max(), 1e-12)
        assert np.abs(analytic - numeric).max() / scale < 1e-4


def test_gradient_mt_is_sum_of_parts():
    rng = np.random.default_rng(5)
    logits, target = _random_instance(rng)
    combined = loss_gradients("mt", logits, target)
    parts = loss_gradients("dice", logits, target) + loss_gradients("ce", logits, target)
    assert np.allclose(combined, parts, atol=1e-15)


def test_gradient_ce_saturated_is_tiny():
    target = one_hot(np.zeros((2, 2), dtype=int), 2)
    logits = np.stack([np.full((2, 2), 30.0), np.full((2, 2), -30.0)])
    grad = loss_gradients("ce", logits, target)
    assert np.abs(grad).max() < 1e-9


def test_gradient_rejects_unknown_selector():
    with pytest.raises(InvalidInputError):
        loss_gradients("hinge", np.zeros((2, 2, 2)), np.zeros((2, 2, 2)))


def test_spatial_permutation_invariance():
    rng = np.random.default_rng(13)
    logits, target = _random_instance(rng, h=4, w=4)
    perm = rng.permutation(16)
    z_flat = logits.reshape(2, 16)[:, perm].reshape(2, 4, 4)
    t_flat = target.reshape(2, 16)[:, perm].reshape(2, 4, 4)
    probs, probs_p = softmax(logits), softmax(z_flat)
    assert abs(dice_loss(probs, target) - dice_loss(probs_p, t_flat)) < 1e-12
    assert abs(ce_loss(probs, target) - ce_loss(probs_p, t_flat)) < 1e-12
    assert abs(cps_loss(logits, logits) - cps_loss(z_flat, z_flat)) < 1e-12


def test_total_loss_arithmetic():
    report = total_loss(1.0, 2.0, 3.0, 4.0, 5.0, 6.0)
    assert report.l_1 == 9.0
    assert report.l_2 == 12.0
    assert report.l_total == 21.0


def test_total_loss_all_zero():
    report = total_loss(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    assert report.l_total == 0.0


def test_loss_report_rejects_negative_component():
    with pytest.raises(InvalidInputError):
        total_loss(1.0, -0.5, 0.0, 0.0, 0.0, 0.0)


def test_loss_report_rejects_broken_aggregates():
    with pytest.raises(InvalidInputError):
        LossReport(l_mt1=1.0, l_mt2=1.0, l_cps1=0.0, l_cps2=0.0,
                   l_cad1=0.0, l_cad2=0.0, l_1=5.0, l_2=1.0, l_total=6.0)


def test_one_hot_basics():
    out = one_hot(np.array([[0, 1], [2, 0]]), 3)
    assert out.shape == (3, 2, 2)
    assert np.array_equal(out.sum(axis=0), np.ones((2, 2)))
    assert out[1, 0, 1] == 1.0
    with pytest.raises(InvalidInputError):
        one_hot(np.array([[0, 3]]), 3)
    with pytest.raises(ShapeError):
        one_hot(np.zeros((2, 2, 2), dtype=int), 2)
