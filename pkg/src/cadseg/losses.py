"""Consistency-training losses and their analytic logit gradients.

Dice and cross-entropy over (K, H, W) probability tensors, the combined
mean-teacher loss, cross-supervision losses on argmax pseudo-labels, KL
divergence, and a per-iteration loss report.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NotADistributionError, ShapeError
from .grid import PROB_SUM_TOL, softmax

# Smoothing added to the Dice numerator and denominator (otherwise 0/0 on
# empty classes) and the floor inside logarithms.
DICE_EPS = 1e-5
LOG_EPS = 1e-12


@dataclass(frozen=True)
class LossReport:
    """All loss components of one iteration, with their aggregates."""

    l_mt1: float
    l_mt2: float
    l_cps1: float
    l_cps2: float
    l_cad1: float
    l_cad2: float
    l_1: float
    l_2: float
    l_total: float

    def __post_init__(self):
        parts = (self.l_mt1, self.l_mt2, self.l_cps1, self.l_cps2,
                 self.l_cad1, self.l_cad2)
        if any(not np.isfinite(v) or v < 0 for v in parts):
            raise InvalidInputError(f"loss components must be finite and >= 0: {parts}")
        checks = (
            (self.l_1, self.l_mt1 + self.l_cps1 + self.l_cad1),
            (self.l_2, self.l_mt2 + self.l_cps2 + self.l_cad2),
            (self.l_total, self.l_1 + self.l_2),
        )
        for got, want in checks:
            if abs(got - want) > 1e-9 * max(1.0, abs(want)):
                raise InvalidInputError(f"inconsistent aggregate: {got} != {want}")


def total_loss(l_mt1: float, l_mt2: float, l_cps1: float, l_cps2: float,
               l_cad1: float, l_cad2: float) -> LossReport:
    """Assemble a LossReport; per-model totals are the plain unweighted sums."""
    l_1 = l_mt1 + l_cps1 + l_cad1
    l_2 = l_mt2 + l_cps2 + l_cad2
    return LossReport(l_mt1=l_mt1, l_mt2=l_mt2, l_cps1=l_cps1, l_cps2=l_cps2,
                      l_cad1=l_cad1, l_cad2=l_cad2, l_1=l_1, l_2=l_2,
                      l_total=l_1 + l_2)


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """(H, W) integer labels -> (K, H, W) one-hot float tensor."""
    lab = np.asarray(labels)
    if lab.ndim != 2:
        raise ShapeError(f"expected (H, W) labels, got shape {lab.shape}")
    if lab.min() < 0 or lab.max() >= num_classes:
        raise InvalidInputError(f"labels outside [0, {num_classes})")
    out = np.zeros((num_classes,) + lab.shape, dtype=np.float64)
    np.put_along_axis(out, lab[None].astype(np.int64), 1.0, axis=0)
    return out


def argmax_labels(logits: np.ndarray) -> np.ndarray:
    """Per-pixel argmax class map; ties resolve to the lowest class index."""
    z = np.asarray(logits)
    if z.ndim != 3:
        raise ShapeError(f"expected (K, H, W) logits, got shape {z.shape}")
    return np.argmax(z, axis=0)


def _check_pair(pred: np.ndarray, target: np.ndarray):
    if pred.shape != target.shape:
        raise ShapeError(f"prediction shape {pred.shape} != target shape {target.shape}")


def dice_loss(pred_probs: np.ndarray, target: np.ndarray) -> float:
    """Soft Dice loss, one scalar over classes and pixels jointly."""
    p = np.asarray(pred_probs, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    _check_pair(p, t)
    inter = float((t * p).sum())
    denom = float(t.sum() + p.sum())
    return 1.0 - (2.0 * inter + DICE_EPS) / (denom + DICE_EPS)


def ce_loss(pred_probs: np.ndarray, target: np.ndarray) -> float:
    """Cross entropy against one-hot targets, averaged over pixels.

    The log argument is clamped to 1 so a fully confident correct
    prediction scores exactly 0 instead of -log(1 + epsilon).
    """
    p = np.asarray(pred_probs, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    _check_pair(p, t)
    per_pixel = -(t * np.log(np.minimum(p + LOG_EPS, 1.0))).sum(axis=0)
    return float(per_pixel.mean())


def mt_loss(pred_logits: np.ndarray, target: np.ndarray) -> float:
    """Dice + cross entropy of softmax(logits) against the target labels."""
    probs = softmax(pred_logits)
    _check_pair(probs, np.asarray(target))
    return dice_loss(probs, target) + ce_loss(probs, target)


def cps_loss(pred_logits_a: np.ndarray, pred_logits_b: np.ndarray) -> float:
    """Dice of softmax(a) against the argmax pseudo-labels of b.

    The pseudo-labels are a constant target: gradients flow through a only.
    """
    a = np.asarray(pred_logits_a)
    b = np.asarray(pred_logits_b)
    _check_pair(a, b)
    pseudo = one_hot(argmax_labels(b), b.shape[0])
    return dice_loss(softmax(a), pseudo)


def cad_loss(pred_logits_a: np.ndarray, pred_logits_b: np.ndarray) -> float:
    """Cross-supervision Dice on post-replacement logits.

    Functionally identical to cps_loss; the inputs are expected to come
    from the displacement-modified images.
    """
    return cps_loss(pred_logits_a, pred_logits_b)


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p || q) for distribution vectors, with q floored at 1e-12."""
    pv = np.asarray(p, dtype=np.float64).ravel()
    qv = np.asarray(q, dtype=np.float64).ravel()
    if pv.shape != qv.shape:
        raise ShapeError(f"distribution sizes differ: {pv.shape} vs {qv.shape}")
    for name, v in (("p", pv), ("q", qv)):
        if not np.isfinite(v).all() or (v < 0).any():
            raise NotADistributionError(f"{name} has negative or non-finite entries")
        if abs(v.sum() - 1.0) > PROB_SUM_TOL:
            raise NotADistributionError(f"{name} sums to {v.sum():.6g}, not 1")
    mask = pv > 0
    return float((pv[mask] * np.log(pv[mask] / np.maximum(qv[mask], LOG_EPS))).sum())


def _softmax_jacobian_apply(probs: np.ndarray, grad_probs: np.ndarray) -> np.ndarray:
    # dL/dz = s * (g - sum_c g_c s_c) per pixel, for s = softmax(z), g = dL/ds
    dot = (grad_probs * probs).sum(axis=0, keepdims=True)
    return probs * (grad_probs - dot)


def _dice_grad_probs(probs: np.ndarray, target: np.ndarray) -> np.ndarray:
    inter = (target * probs).sum()
    denom = target.sum() + probs.sum()
    num = 2.0 * inter + DICE_EPS
    den = denom + DICE_EPS
    return (num - 2.0 * target * den) / (den * den)


def _ce_grad_probs(probs: np.ndarray, target: np.ndarray) -> np.ndarray:
    n_pixels = probs.shape[1] * probs.shape[2]
    return -target / (probs + LOG_EPS) / n_pixels


def loss_gradients(loss: str, pred_logits: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Analytic d(loss)/d(logits) for loss in {"dice", "ce", "mt"}.

    Matches central finite differences to < 1e-4 relative error; the
    targets are treated as constants.
    """
    if loss not in ("dice", "ce", "mt"):
        raise InvalidInputError(f"unsupported loss selector {loss!r}")
    probs = softmax(pred_logits)
    t = np.asarray(target, dtype=np.float64)
    _check_pair(probs, t)
    if loss == "dice":
        g = _dice_grad_probs(probs, t)
    elif loss == "ce":
        g = _ce_grad_probs(probs, t)
    else:
        g = _dice_grad_probs(probs, t) + _ce_grad_probs(probs, t)
    return _softmax_jacobian_apply(probs, g)
