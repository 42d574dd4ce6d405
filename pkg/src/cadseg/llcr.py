"""Largest low-confidence region search and patch replacement.

Grows the lowest-confidence 4-connected patch region on one confidence
grid, finds the best-fitting same-shape high-confidence placement on the
counterpart grid (optionally refined by KL divergence between logit
distributions), and swaps the patch contents.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels
from .errors import (
    BoundsError,
    EmptyRegionError,
    InvalidInputError,
    NoPlacementError,
    ShapeError,
    ThresholdError,
)
from .grid import GridSpec, PatchGrid, softmax

LOG_EPS = 1e-12


class Direction(enum.Enum):
    """Which branch supplies the replacement content."""

    WEAK_TO_STRONG = "weak_to_strong"
    STRONG_TO_WEAK = "strong_to_weak"


@dataclass(frozen=True)
class Region:
    """A 4-connected set of low-confidence patch coordinates.

    offsets are the member coordinates relative to bbox_origin, so the
    smallest row offset and the smallest column offset are both zero.
    """

    members: frozenset
    seed: tuple | None
    bbox_origin: tuple | None
    offsets: frozenset

    def __post_init__(self):
        if not self.members:
            if self.seed is not None or self.bbox_origin is not None or self.offsets:
                raise InvalidInputError("empty region must have no seed, origin, or offsets")
            return
        if self.seed not in self.members:
            raise InvalidInputError(f"seed {self.seed} is not a member")
        if len(self.offsets) != len(self.members):
            raise InvalidInputError("offsets and members disagree in size")

    @classmethod
    def from_members(cls, members, seed=None):
        ms = frozenset((int(r), int(c)) for r, c in members)
        if not ms:
            return cls(members=frozenset(), seed=None, bbox_origin=None,
                       offsets=frozenset())
        if seed is None:
            seed = min(ms)
        r0 = min(r for r, _ in ms)
        c0 = min(c for _, c in ms)
        offs = frozenset((r - r0, c - c0) for r, c in ms)
        return cls(members=ms, seed=(int(seed[0]), int(seed[1])),
                   bbox_origin=(r0, c0), offsets=offs)

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class Placement:
    """A candidate anchor for the region's shape on the counterpart grid."""

    anchor: tuple
    offsets: frozenset
    mean_confidence: float

    def patches(self):
        """Member patch coordinates, sorted row-major."""
        r0, c0 = self.anchor
        return sorted((r0 + dr, c0 + dc) for dr, dc in self.offsets)


@dataclass(frozen=True)
class DisplacementRecord:
    """Audit trail of one replacement: what moved where, and under what thresholds.

    member_confidences lists the normalized confidence of every region
    member (sorted row-major) so threshold compliance can be checked from
    the record alone.
    """

    direction: Direction
    region: Region
    placement: Placement
    thresholds_used: tuple
    iteration: int
    member_confidences: tuple = field(default=())

    def __post_init__(self):
        c_thr, r_thr = self.thresholds_used
        if self.region.size > r_thr:
            raise InvalidInputError(
                f"region size {self.region.size} exceeds the size threshold {r_thr}"
            )
        if self.iteration < 0:
            raise InvalidInputError("iteration must be >= 0")


def _require_normalized(grid: PatchGrid) -> np.ndarray:
    if grid.normalized is None:
        raise InvalidInputError("grid has no normalized confidences; run normalize() first")
    return grid.normalized


def find_largest_low_confidence_region(grid: PatchGrid, c_threshold: float,
                                       r_threshold: int) -> Region:
    """Best-first growth of the low-confidence region around the global minimum.

    Seeds at the argmin of the normalized confidences (ties resolve to the
    smallest row-major index) and repeatedly admits the lowest-confidence
    frontier patch with value <= c_threshold, stopping at r_threshold
    members. Min-max normalized grids put the seed at exactly 0, so it
    always qualifies; on grids whose minimum exceeds the threshold the
    result is the empty region.
    """
    norm = _require_normalized(grid)
    if r_threshold < 1:
        raise ThresholdError(f"r_threshold must be >= 1, got {r_threshold}")
    if not 0.0 <= c_threshold <= 1.0:
        raise ThresholdError(f"c_threshold must lie in [0, 1], got {c_threshold}")
    spec = grid.spec
    admitted = kernels.grow_region(norm.ravel(), spec.grid_rows, spec.grid_cols,
                                   float(c_threshold), int(r_threshold))
    coords = [divmod(p, spec.grid_cols) for p in admitted]
    if not coords:
        return Region.from_members(())
    return Region.from_members(coords, seed=coords[0])


def shape_offsets(region: Region) -> frozenset:
    """Member coordinates relative to the region's bounding-box origin."""
    if not region.members:
        raise EmptyRegionError("cannot take shape offsets of an empty region")
    return region.offsets


def _sorted_offsets(offsets):
    offs = sorted((int(dr), int(dc)) for dr, dc in offsets)
    if not offs:
        raise EmptyRegionError("offset set is empty")
    if min(dr for dr, _ in offs) != 0 or min(dc for _, dc in offs) != 0:
        raise InvalidInputError("offsets must be bbox-relative (min row and col offsets 0)")
    return offs


def enumerate_placements(offsets, grid_dims) -> list:
    """All anchors where the offset shape fits inside grid_dims, row-major."""
    offs = _sorted_offsets(offsets)
    g_r, g_c = grid_dims
    max_dr = max(dr for dr, _ in offs)
    max_dc = max(dc for _, dc in offs)
    return [(r, c) for r in range(g_r - max_dr) for c in range(g_c - max_dc)]


def _anchor_means(other_grid: PatchGrid, offsets):
    norm = _require_normalized(other_grid)
    offs = _sorted_offsets(offsets)
    spec = other_grid.spec
    offs_r = np.asarray([dr for dr, _ in offs], dtype=np.int64)
    offs_c = np.asarray([dc for _, dc in offs], dtype=np.int64)
    return kernels.anchor_means(norm.ravel(), spec.grid_rows, spec.grid_cols,
                                offs_r, offs_c)


def best_placement(other_grid: PatchGrid, offsets) -> Placement | None:
    """Anchor with the highest mean confidence; ties go to the smallest
    row-major anchor. None when the shape does not fit anywhere."""
    means, anchor_rows, anchor_cols = _anchor_means(other_grid, offsets)
    if not means:
        return None
    best = 0
    for i in range(1, len(means)):
        if means[i] > means[best]:
            best = i
    return Placement(anchor=(anchor_rows[best], anchor_cols[best]),
                     offsets=frozenset((int(dr), int(dc)) for dr, dc in offsets),
                     mean_confidence=means[best])


def top_placements(other_grid: PatchGrid, offsets, k: int) -> list:
    """The k highest-mean-confidence placements, descending; ties go to the
    smaller row-major anchor."""
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    means, anchor_rows, anchor_cols = _anchor_means(other_grid, offsets)
    order = sorted(range(len(means)), key=lambda i: (-means[i], i))
    offs = frozenset((int(dr), int(dc)) for dr, dc in offsets)
    return [Placement(anchor=(anchor_rows[i], anchor_cols[i]), offsets=offs,
                      mean_confidence=means[i])
            for i in order[:k]]


def region_logit_blocks(logits: np.ndarray, region: Region, spec: GridSpec) -> dict:
    """Logit block of every region member, keyed by its bbox-relative offset."""
    if not region.members:
        raise EmptyRegionError("region has no members")
    z = np.asarray(logits)
    _check_spatial(z, spec)
    r0, c0 = region.bbox_origin
    blocks = {}
    for dr, dc in sorted(region.offsets):
        rs, cs = spec.patch_slices(r0 + dr, c0 + dc)
        blocks[(dr, dc)] = z[..., rs, cs]
    return blocks


def kl_select_placement(low_logits_by_offset: dict, other_logits: np.ndarray,
                        candidates, spec: GridSpec) -> Placement:
    """Among confidence-ranked candidates, pick the one whose logits are
    closest in distribution to the low region's.

    Computes, per candidate, the mean over offset-matched pixels of
    KL(softmax(low) || softmax(candidate)); the minimum wins and ties keep
    the earlier (higher-confidence) candidate.
    """
    candidates = list(candidates)
    if not candidates:
        raise NoPlacementError("no candidate placements to select from")
    z_other = np.asarray(other_logits, dtype=np.float64)
    if z_other.ndim != 3:
        raise ShapeError(f"expected (C, H, W) logits, got shape {z_other.shape}")
    _check_spatial(z_other, spec)
    offsets = sorted(low_logits_by_offset)
    low_p = {}
    for off in offsets:
        block = np.asarray(low_logits_by_offset[off], dtype=np.float64)
        if block.shape != (z_other.shape[0], spec.patch_px_h, spec.patch_px_w):
            raise ShapeError(f"low-region block for offset {off} has shape {block.shape}")
        low_p[off] = softmax(block)
    best_i = 0
    best_kl = None
    for i, cand in enumerate(candidates):
        r0, c0 = cand.anchor
        total = 0.0
        count = 0
        for dr, dc in offsets:
            rs, cs = spec.patch_slices(r0 + dr, c0 + dc)
            q = softmax(z_other[:, rs, cs])
            p = low_p[(dr, dc)]
            kl = (p * (np.log(p) - np.log(np.maximum(q, LOG_EPS)))).sum(axis=0)
            total += float(kl.sum())
            count += kl.size
        mean_kl = total / count
        if best_kl is None or mean_kl < best_kl:
            best_kl = mean_kl
            best_i = i
    return candidates[best_i]


def _check_spatial(tensor: np.ndarray, spec: GridSpec):
    if tensor.ndim not in (2, 3):
        raise ShapeError(f"expected (H, W) or (C, H, W), got shape {tensor.shape}")
    if tensor.shape[-2:] != (spec.image_h, spec.image_w):
        raise ShapeError(
            f"spatial dims {tensor.shape[-2:]} do not match spec "
            f"({spec.image_h}, {spec.image_w})"
        )


def _check_patch_bounds(patches, spec: GridSpec, what: str):
    for r, c in patches:
        if not (0 <= r < spec.grid_rows and 0 <= c < spec.grid_cols):
            raise BoundsError(f"{what} patch ({r}, {c}) is outside the grid")


def apply_replacement(target: np.ndarray, source: np.ndarray, region: Region,
                      placement: Placement, spec: GridSpec) -> np.ndarray:
    """Copy the placement's patch blocks from source onto the region's
    footprint in target.

    Works on (H, W) images and label maps and on (C, H, W) logits alike;
    pixels outside the region's footprint pass through untouched. The
    inputs are never modified.
    """
    t = np.asarray(target)
    s = np.asarray(source)
    if t.shape != s.shape:
        raise ShapeError(f"target shape {t.shape} != source shape {s.shape}")
    _check_spatial(t, spec)
    out = t.copy()
    if not region.members:
        return out
    if region.offsets != placement.offsets:
        raise InvalidInputError("region and placement have different shapes")
    r0, c0 = region.bbox_origin
    a_r, a_c = placement.anchor
    offs = sorted(region.offsets)
    _check_patch_bounds(((r0 + dr, c0 + dc) for dr, dc in offs), spec, "region")
    _check_patch_bounds(((a_r + dr, a_c + dc) for dr, dc in offs), spec, "placement")
    for dr, dc in offs:
        t_rs, t_cs = spec.patch_slices(r0 + dr, c0 + dc)
        s_rs, s_cs = spec.patch_slices(a_r + dr, a_c + dc)
        out[..., t_rs, t_cs] = s[..., s_rs, s_cs]
    return out


def record_as_dict(rec: DisplacementRecord) -> dict:
    """JSON-ready view of a displacement record (members sorted row-major)."""
    return {
        "direction": rec.direction.value,
        "seed": list(rec.region.seed),
        "members": [list(m) for m in sorted(rec.region.members)],
        "anchor": list(rec.placement.anchor),
        "mean_confidence": rec.placement.mean_confidence,
        "member_confidences": list(rec.member_confidences),
        "c_threshold": rec.thresholds_used[0],
        "r_threshold": rec.thresholds_used[1],
        "iteration": rec.iteration,
    }


def footprint_mask(region: Region, spec: GridSpec) -> np.ndarray:
    """Boolean (H, W) mask of the pixels covered by the region's patches."""
    mask = np.zeros((spec.image_h, spec.image_w), dtype=bool)
    for r, c in region.members:
        rs, cs = spec.patch_slices(r, c)
        mask[rs, cs] = True
    return mask
