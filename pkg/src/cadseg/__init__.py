"""Confidence-aware adaptive patch displacement for semi-supervised segmentation.

The pieces, in pipeline order: confidence grids over logits (grid),
threshold escalation (dte), low-confidence region search and patch
replacement (llcr), consistency losses with analytic gradients (losses),
label-map metrics (metrics), a desk-scale training harness (harness),
and the tensor container plus CLI (tensorfile, cli).
"""

from . import errors
from ._kernels import BACKEND as KERNEL_BACKEND
from .dte import (
    DEFAULT_C_MAX,
    DEFAULT_C_MIN,
    DEFAULT_R_MAX,
    DEFAULT_R_MIN,
    ThresholdSchedule,
    ramp,
    thresholds_at,
)
from .grid import (
    GridSpec,
    PatchGrid,
    confidence_grid,
    normalize,
    patch_confidence,
    pixel_confidence,
    softmax,
)
from .harness import (
    Dataset,
    IterationConfig,
    ToyPredictor,
    TrainingLog,
    cad_step,
    ema_update,
    run_demo,
    synth_dataset,
    train_demo,
)
from .llcr import (
    Direction,
    DisplacementRecord,
    Placement,
    Region,
    apply_replacement,
    best_placement,
    enumerate_placements,
    find_largest_low_confidence_region,
    kl_select_placement,
    shape_offsets,
    top_placements,
)
from .losses import (
    LossReport,
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
from .metrics import asd, dsc, evaluate, hd95, jaccard
from .tensorfile import read_tensor, write_tensor

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "errors",
    "GridSpec", "PatchGrid", "softmax", "pixel_confidence", "patch_confidence",
    "normalize", "confidence_grid",
    "ThresholdSchedule", "ramp", "thresholds_at",
    "DEFAULT_C_MIN", "DEFAULT_C_MAX", "DEFAULT_R_MIN", "DEFAULT_R_MAX",
    "Region", "Placement", "Direction", "DisplacementRecord",
    "find_largest_low_confidence_region", "shape_offsets",
    "enumerate_placements", "best_placement", "top_placements",
    "kl_select_placement", "apply_replacement",
    "LossReport", "dice_loss", "ce_loss", "mt_loss", "cps_loss", "cad_loss",
    "kl_divergence", "loss_gradients", "total_loss", "one_hot",
    "dsc", "jaccard", "hd95", "asd", "evaluate",
    "ToyPredictor", "IterationConfig", "Dataset", "TrainingLog",
    "cad_step", "ema_update", "synth_dataset", "train_demo", "run_demo",
    "read_tensor", "write_tensor",
    "__version__",
]
