"""Per-pixel confidence extraction and patch-grid aggregation.

Logits (C, H, W) go through a stable softmax, per-pixel confidence is the
max class probability, patch confidence is the mean over each grid cell,
and min-max normalization rescales the grid to [0, 1].
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    ClassCountError,
    GridMismatchError,
    InvalidInputError,
    NotADistributionError,
)

# Tolerance on per-pixel channel sums when validating probability tensors;
# loose enough for float32 inputs round-tripped through files.
PROB_SUM_TOL = 1e-4


@dataclass(frozen=True)
class GridSpec:
    """Partition of an image_h x image_w image into grid_rows x grid_cols patches."""

    grid_rows: int
    grid_cols: int
    image_h: int
    image_w: int

    def __post_init__(self):
        for name in ("grid_rows", "grid_cols", "image_h", "image_w"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v <= 0:
                raise GridMismatchError(f"{name} must be a positive integer, got {v!r}")
        if self.image_h % self.grid_rows != 0 or self.image_w % self.grid_cols != 0:
            raise GridMismatchError(
                f"image {self.image_h}x{self.image_w} not divisible by "
                f"grid {self.grid_rows}x{self.grid_cols}"
            )

    @property
    def patch_px_h(self) -> int:
        return self.image_h // self.grid_rows

    @property
    def patch_px_w(self) -> int:
        return self.image_w // self.grid_cols

    @property
    def num_patches(self) -> int:
        return self.grid_rows * self.grid_cols

    def patch_slices(self, row: int, col: int) -> tuple[slice, slice]:
        """Pixel slices covering patch (row, col)."""
        ph, pw = self.patch_px_h, self.patch_px_w
        return slice(row * ph, (row + 1) * ph), slice(col * pw, (col + 1) * pw)


@dataclass(frozen=True)
class PatchGrid:
    """Per-patch confidences: raw means, plus min-max normalized values once filled."""

    spec: GridSpec
    raw: np.ndarray
    normalized: np.ndarray | None = None

    def __post_init__(self):
        shape = (self.spec.grid_rows, self.spec.grid_cols)
        if self.raw.shape != shape:
            raise GridMismatchError(f"raw grid shape {self.raw.shape} != {shape}")
        if not np.isfinite(self.raw).all():
            raise InvalidInputError("raw patch confidences contain non-finite values")
        if self.normalized is not None:
            if self.normalized.shape != shape:
                raise GridMismatchError(
                    f"normalized grid shape {self.normalized.shape} != {shape}"
                )
            if not np.isfinite(self.normalized).all():
                raise InvalidInputError("normalized confidences contain non-finite values")
            if self.normalized.min() < 0.0 or self.normalized.max() > 1.0:
                raise InvalidInputError("normalized confidences outside [0, 1]")


def softmax(logits: np.ndarray) -> np.ndarray:
    """Channel softmax of a (C, H, W) logits tensor, max-subtracted for stability."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 3:
        raise InvalidInputError(f"expected (C, H, W) logits, got shape {z.shape}")
    if z.shape[0] < 2:
        raise ClassCountError(f"need at least 2 class channels, got {z.shape[0]}")
    if not np.isfinite(z).all():
        raise InvalidInputError("logits contain non-finite values")
    z = z - z.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def pixel_confidence(probs: np.ndarray) -> np.ndarray:
    """Max class probability per pixel of a channel-normalized (C, H, W) tensor."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 3:
        raise InvalidInputError(f"expected (C, H, W) probabilities, got shape {p.shape}")
    if not np.isfinite(p).all():
        raise InvalidInputError("probabilities contain non-finite values")
    sums = p.sum(axis=0)
    if np.abs(sums - 1.0).max() > PROB_SUM_TOL:
        raise NotADistributionError(
            f"channel sums deviate from 1 by up to {np.abs(sums - 1.0).max():.3g}"
        )
    return p.max(axis=0)


def patch_confidence(conf: np.ndarray, spec: GridSpec) -> PatchGrid:
    """Average the (H, W) confidence map over each patch of the grid."""
    c = np.asarray(conf, dtype=np.float64)
    if c.shape != (spec.image_h, spec.image_w):
        raise GridMismatchError(
            f"confidence map shape {c.shape} != ({spec.image_h}, {spec.image_w})"
        )
    if not np.isfinite(c).all():
        raise InvalidInputError("confidence map contains non-finite values")
    raw = c.reshape(
        spec.grid_rows, spec.patch_px_h, spec.grid_cols, spec.patch_px_w
    ).mean(axis=(1, 3))
    return PatchGrid(spec=spec, raw=raw)


def normalize(grid: PatchGrid) -> PatchGrid:
    """Min-max normalize the raw confidences to [0, 1].

    A constant grid maps to all zeros, so the seed patch of the region
    search always qualifies regardless of the confidence threshold.
    """
    lo = grid.raw.min()
    hi = grid.raw.max()
    if hi == lo:
        norm = np.zeros_like(grid.raw)
    else:
        norm = (grid.raw - lo) / (hi - lo)
    return PatchGrid(spec=grid.spec, raw=grid.raw, normalized=norm)


def confidence_grid(logits: np.ndarray, spec: GridSpec) -> PatchGrid:
    """Full pipeline: logits -> softmax -> pixel confidence -> normalized patch grid."""
    return normalize(patch_confidence(pixel_confidence(softmax(logits)), spec))
