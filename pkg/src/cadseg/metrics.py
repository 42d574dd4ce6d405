"""Overlap and boundary-distance metrics for discrete label maps.

All metrics compare the binary masks of one class id extracted from two
(H, W) label maps. Distances are Euclidean in pixel units, computed brute
force between boundary pixels, where a boundary pixel is a mask pixel
with at least one 4-neighbor outside the mask (the image border counts
as outside).
"""

import numpy as np

from . import _kernels as kernels
from .errors import InvalidInputError, ShapeError, UndefinedMetricError


def _class_masks(pred, truth, class_id):
    p = np.asarray(pred)
    t = np.asarray(truth)
    if p.ndim != 2 or t.ndim != 2:
        raise ShapeError("label maps must be 2-dimensional")
    if p.shape != t.shape:
        raise ShapeError(f"shape mismatch: {p.shape} vs {t.shape}")
    if int(class_id) != class_id or class_id < 0:
        raise InvalidInputError(f"class id must be a non-negative integer, got {class_id!r}")
    return p == class_id, t == class_id


def dsc(pred, truth, class_id=1) -> float:
    """Dice similarity coefficient of one class; 1.0 when both masks are empty."""
    a, b = _class_masks(pred, truth, class_id)
    na, nb = int(a.sum()), int(b.sum())
    if na + nb == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / (na + nb)


def jaccard(pred, truth, class_id=1) -> float:
    """Intersection over union of one class; 1.0 when both masks are empty."""
    a, b = _class_masks(pred, truth, class_id)
    union = int((a | b).sum())
    if union == 0:
        return 1.0
    return int((a & b).sum()) / union


def boundary_pixels(mask: np.ndarray) -> tuple:
    """(rows, cols) of mask pixels with a 4-neighbor outside the mask."""
    m = np.asarray(mask, dtype=bool)
    padded = np.pad(m, 1, constant_values=False)
    interior = (padded[:-2, 1:-1] & padded[2:, 1:-1]
                & padded[1:-1, :-2] & padded[1:-1, 2:])
    rows, cols = np.nonzero(m & ~interior)
    return np.ascontiguousarray(rows), np.ascontiguousarray(cols)


def _pooled_boundary_distances(pred, truth, class_id) -> np.ndarray:
    a, b = _class_masks(pred, truth, class_id)
    if not a.any() or not b.any():
        raise UndefinedMetricError(
            f"boundary distances are undefined: class {class_id} mask is empty"
        )
    ar, ac = boundary_pixels(a)
    br, bc = boundary_pixels(b)
    fwd = kernels.directed_min_distances(ar, ac, br, bc)
    rev = kernels.directed_min_distances(br, bc, ar, ac)
    return np.asarray(list(fwd) + list(rev), dtype=np.float64)


def hd95(pred, truth, class_id=1) -> float:
    """95th percentile (linear interpolation) of the pooled directed
    boundary distances between the two class masks."""
    return float(np.percentile(_pooled_boundary_distances(pred, truth, class_id), 95.0))


def asd(pred, truth, class_id=1) -> float:
    """Mean of the pooled directed boundary distances."""
    return float(_pooled_boundary_distances(pred, truth, class_id).mean())


def evaluate(pred, truth, class_id=1) -> dict:
    """All four metrics as a dict; hd95/asd are None when a mask is empty."""
    out = {
        "dsc": dsc(pred, truth, class_id),
        "jaccard": jaccard(pred, truth, class_id),
    }
    try:
        dists = _pooled_boundary_distances(pred, truth, class_id)
    except UndefinedMetricError:
        out["hd95"] = None
        out["asd"] = None
    else:
        out["hd95"] = float(np.percentile(dists, 95.0))
        out["asd"] = float(dists.mean())
    return out
