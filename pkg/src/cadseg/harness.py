"""Desk-scale training harness.

Two toy linear students plus an EMA teacher train on synthetic disk
images. Each iteration one labeled sample contributes supervised losses
and one unlabeled sample goes through the full confidence-aware
displacement step: confidence grids for both views, lowest-confidence
region search, high-confidence counterpart placement, patch exchange,
and the consistency losses on the modified inputs.

Everything is driven by named RNG streams derived from the config seed,
so a run is reproducible bit for bit.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import llcr, losses, metrics
from .dte import ThresholdSchedule, thresholds_at
from .errors import ConfigError, DivergenceError, ShapeError
from .grid import GridSpec, confidence_grid
from .llcr import Direction, DisplacementRecord

FOREGROUND = 1

# RNG stream tags (children of the config seed)
_STREAM_STUDENT1 = 1
_STREAM_STUDENT2 = 2
_STREAM_AUG = 3
_STREAM_HELDOUT = 4


def pixel_features(image: np.ndarray) -> np.ndarray:
    """Per-pixel feature stack: intensity, normalized x, normalized y, bias.

    Coordinates are pixel centers, so the maps are symmetric about the
    image midlines.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ShapeError(f"expected a 2-d image, got shape {img.shape}")
    h, w = img.shape
    x = np.broadcast_to((np.arange(w) + 0.5) / w, (h, w))
    y = np.broadcast_to(((np.arange(h) + 0.5) / h)[:, None], (h, w))
    return np.stack([img, x, y, np.ones((h, w))])


class ToyPredictor:
    """Linear per-class scorer over the fixed pixel features."""

    NUM_FEATURES = 4

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[1] != self.NUM_FEATURES or w.shape[0] < 2:
            raise ShapeError(f"weights must be (K >= 2, 4), got shape {w.shape}")
        self.weights = w

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    def logits(self, image: np.ndarray) -> np.ndarray:
        return np.einsum("kf,fhw->khw", self.weights, pixel_features(image))

    @classmethod
    def random(cls, rng, num_classes: int):
        return cls(rng.normal(0.0, 0.1, size=(num_classes, cls.NUM_FEATURES)))


def ema_update(teacher_weights, student_weights, decay: float) -> np.ndarray:
    """Blend the teacher toward the elementwise mean of the student weights."""
    if not 0.0 <= decay <= 1.0:
        raise ConfigError(f"EMA decay must lie in [0, 1], got {decay}")
    t = np.asarray(teacher_weights, dtype=np.float64)
    if isinstance(student_weights, np.ndarray):
        student_weights = [student_weights]
    students = [np.asarray(w, dtype=np.float64) for w in student_weights]
    if not students:
        raise ConfigError("no student weights supplied")
    for w in students:
        if w.shape != t.shape:
            raise ShapeError(f"student weights shape {w.shape} != teacher {t.shape}")
    return decay * t + (1.0 - decay) * np.mean(np.stack(students), axis=0)


@dataclass(frozen=True)
class IterationConfig:
    """Everything one training run depends on besides the data itself."""

    grid_spec: GridSpec
    schedule: ThresholdSchedule
    ema_decay: float = 0.9
    kl_mode: bool = False
    k_top: int = 5
    seed: int = 0
    learning_rate: float = 1.5
    num_classes: int = 2
    heldout_count: int = 4
    aug_noise: float = 0.05
    aug_scale: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.ema_decay <= 1.0:
            raise ConfigError(f"ema_decay must lie in [0, 1], got {self.ema_decay}")
        if self.k_top < 1:
            raise ConfigError(f"k_top must be >= 1, got {self.k_top}")
        if self.learning_rate < 0.0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.heldout_count < 1:
            raise ConfigError(f"heldout_count must be >= 1, got {self.heldout_count}")
        if self.aug_noise < 0.0 or self.aug_scale < 0.0:
            raise ConfigError("augmentation magnitudes must be >= 0")


@dataclass(frozen=True)
class Dataset:
    """Labeled (image, label map) pairs plus unlabeled images."""

    labeled: tuple
    unlabeled: tuple

    def __post_init__(self):
        for img, lab in self.labeled:
            if np.asarray(img).shape != np.asarray(lab).shape:
                raise ShapeError("labeled image and label map shapes differ")

    @property
    def n_labeled(self) -> int:
        return len(self.labeled)

    @property
    def m_unlabeled(self) -> int:
        return len(self.unlabeled)


def synth_dataset(seed, count: int, dims, num_classes: int = 2,
                  labeled_count=None) -> Dataset:
    """Deterministic disk-on-noise images with their binary masks.

    Each image is gaussian background noise around 0.2 with one bright
    disk around 0.8 at a random position and radius, clipped to [0, 1].
    The first labeled_count samples keep their masks (all of them when
    labeled_count is None); the rest become unlabeled images.
    """
    if num_classes != 2:
        raise ConfigError("synthetic disks are binary; num_classes must be 2")
    if count < 0:
        raise ConfigError(f"count must be >= 0, got {count}")
    if isinstance(dims, int):
        dims = (dims, dims)
    h, w = dims
    if labeled_count is None:
        labeled_count = count
    if not 0 <= labeled_count <= count:
        raise ConfigError(f"labeled_count {labeled_count} out of range for count {count}")
    rng = np.random.default_rng(seed)
    yy = (np.arange(h) + 0.5)[:, None]
    xx = (np.arange(w) + 0.5)[None, :]
    samples = []
    for _ in range(count):
        radius = rng.uniform(min(h, w) / 8.0, min(h, w) / 4.0)
        cy = rng.uniform(radius, h - radius)
        cx = rng.uniform(radius, w - radius)
        background = rng.normal(0.2, 0.05, size=(h, w))
        foreground = rng.normal(0.8, 0.05, size=(h, w))
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2
        image = np.clip(np.where(mask, foreground, background), 0.0, 1.0)
        samples.append((image, mask.astype(np.int64)))
    return Dataset(labeled=tuple(samples[:labeled_count]),
                   unlabeled=tuple(img for img, _ in samples[labeled_count:]))


def strong_augment(image: np.ndarray, rng, noise_std: float, scale_jitter: float) -> np.ndarray:
    """Intensity scaling plus additive gaussian noise, clipped back to [0, 1]."""
    scale = 1.0 + rng.uniform(-scale_jitter, scale_jitter)
    noise = rng.normal(0.0, noise_std, size=image.shape)
    return np.clip(image * scale + noise, 0.0, 1.0)


def _displace(content_target, content_source, low_grid, high_grid,
              low_logits, high_logits, direction, cfg, c_thr, r_thr, t):
    spec = cfg.grid_spec
    region = llcr.find_largest_low_confidence_region(low_grid, c_thr, r_thr)
    offsets = llcr.shape_offsets(region)
    if cfg.kl_mode:
        candidates = llcr.top_placements(high_grid, offsets, cfg.k_top)
        blocks = llcr.region_logit_blocks(low_logits, region, spec)
        placement = llcr.kl_select_placement(blocks, high_logits, candidates, spec)
    else:
        placement = llcr.best_placement(high_grid, offsets)
    modified = llcr.apply_replacement(content_target, content_source, region,
                                      placement, spec)
    confs = tuple(float(low_grid.normalized[r, c]) for r, c in sorted(region.members))
    record = DisplacementRecord(direction=direction, region=region,
                                placement=placement, thresholds_used=(c_thr, r_thr),
                                iteration=t, member_confidences=confs)
    return modified, record


def cad_step(x_w, x_s, f1: ToyPredictor, f2: ToyPredictor, teacher: ToyPredictor,
             cfg: IterationConfig, t: int):
    """One displacement iteration on an unlabeled sample.

    The weak view goes to f1 and the strong view to f2. The low-confidence
    region found on the strong branch is filled from the weak image at the
    best placement on the weak branch's confidence grid (weak -> strong),
    and vice versa. Returns (x_w_prime, x_s_prime, records, report) where
    records pairs the weak->strong and strong->weak displacements and the
    report covers this sample's consistency losses.
    """
    x_w = np.asarray(x_w, dtype=np.float64)
    x_s = np.asarray(x_s, dtype=np.float64)
    if x_w.shape != x_s.shape:
        raise ShapeError(f"view shapes differ: {x_w.shape} vs {x_s.shape}")
    spec = cfg.grid_spec
    k = f1.num_classes
    c_thr, r_thr = thresholds_at(cfg.schedule, t)

    z1_w = f1.logits(x_w)
    z2_s = f2.logits(x_s)
    grid_w = confidence_grid(z1_w, spec)
    grid_s = confidence_grid(z2_s, spec)

    x_s_prime, rec_ws = _displace(x_s, x_w, grid_s, grid_w, z2_s, z1_w,
                                  Direction.WEAK_TO_STRONG, cfg, c_thr, r_thr, t)
    x_w_prime, rec_sw = _displace(x_w, x_s, grid_w, grid_s, z1_w, z2_s,
                                  Direction.STRONG_TO_WEAK, cfg, c_thr, r_thr, t)

    z1_prime = f1.logits(x_w_prime)
    z2_prime = f2.logits(x_s_prime)
    target_w = losses.one_hot(losses.argmax_labels(teacher.logits(x_w)), k)
    target_s = losses.one_hot(losses.argmax_labels(teacher.logits(x_s)), k)

    report = losses.total_loss(
        l_mt1=losses.mt_loss(z1_w, target_w),
        l_mt2=losses.mt_loss(z2_s, target_s),
        l_cps1=losses.cps_loss(z1_w, z2_s),
        l_cps2=losses.cps_loss(z2_s, z1_w),
        l_cad1=losses.cad_loss(z1_prime, z2_prime),
        l_cad2=losses.cad_loss(z2_prime, z1_prime),
    )
    return x_w_prime, x_s_prime, (rec_ws, rec_sw), report


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    c_threshold: float
    r_threshold: int
    report: losses.LossReport
    displacements: tuple
    heldout_dsc: float


@dataclass(frozen=True)
class TrainingLog:
    """Per-iteration records plus the final held-out summary and weights."""

    records: tuple
    final_metrics: dict
    weights: dict = field(repr=False)

    def to_lines(self) -> list:
        """One canonical JSON record per iteration."""
        lines = []
        for rec in self.records:
            row = {
                "t": rec.iteration,
                "c_threshold": rec.c_threshold,
                "r_threshold": rec.r_threshold,
                "heldout_dsc": rec.heldout_dsc,
                "losses": {k: getattr(rec.report, k) for k in
                           ("l_mt1", "l_mt2", "l_cps1", "l_cps2", "l_cad1",
                            "l_cad2", "l_1", "l_2", "l_total")},
                "displacements": [llcr.record_as_dict(d) for d in rec.displacements],
            }
            lines.append(json.dumps(row, sort_keys=True, separators=(",", ":")))
        return lines

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for line in self.to_lines():
                f.write(line + "\n")


def _grad_to_weights(grad_logits: np.ndarray, feats: np.ndarray) -> np.ndarray:
    return np.einsum("khw,fhw->kf", grad_logits, feats)


def heldout_dsc(pred: ToyPredictor, samples, class_id: int = FOREGROUND) -> float:
    """Mean foreground DSC of a predictor's argmax maps over samples."""
    scores = [metrics.dsc(losses.argmax_labels(pred.logits(img)), lab, class_id)
              for img, lab in samples]
    return float(np.mean(scores))


def heldout_summary(pred: ToyPredictor, samples, class_id: int = FOREGROUND) -> dict:
    """Mean of each metric over samples; distance metrics skip undefined cases."""
    per_key = {"dsc": [], "jaccard": [], "hd95": [], "asd": []}
    for img, lab in samples:
        result = metrics.evaluate(losses.argmax_labels(pred.logits(img)), lab, class_id)
        for key, value in result.items():
            if value is not None:
                per_key[key].append(value)
    return {key: (float(np.mean(vals)) if vals else None)
            for key, vals in per_key.items()}


def train_demo(dataset: Dataset, cfg: IterationConfig, iterations: int) -> TrainingLog:
    """Gradient-descent training of both students with the displacement step.

    Each iteration takes one labeled sample (round robin) for supervised
    Dice + cross-entropy on both students, one unlabeled sample for the
    full displacement step, updates the students from the analytic
    gradients, and blends the teacher by EMA. The log records losses,
    thresholds, displacements, and the teacher's held-out DSC.
    """
    if dataset.n_labeled < 1:
        raise ConfigError("training needs at least one labeled sample")
    if dataset.m_unlabeled < 1:
        raise ConfigError("training needs at least one unlabeled sample")
    if iterations < 1:
        raise ConfigError(f"iterations must be >= 1, got {iterations}")
    spec = cfg.grid_spec
    dims = (spec.image_h, spec.image_w)
    for img, _ in dataset.labeled:
        if np.asarray(img).shape != dims:
            raise ShapeError(f"labeled image shape {np.asarray(img).shape} != {dims}")
    for img in dataset.unlabeled:
        if np.asarray(img).shape != dims:
            raise ShapeError(f"unlabeled image shape {np.asarray(img).shape} != {dims}")

    k = cfg.num_classes
    f1 = ToyPredictor.random(np.random.default_rng([cfg.seed, _STREAM_STUDENT1]), k)
    f2 = ToyPredictor.random(np.random.default_rng([cfg.seed, _STREAM_STUDENT2]), k)
    teacher = ToyPredictor((f1.weights + f2.weights) / 2.0)
    aug_rng = np.random.default_rng([cfg.seed, _STREAM_AUG])
    heldout = synth_dataset((cfg.seed, _STREAM_HELDOUT), cfg.heldout_count, dims,
                            num_classes=k).labeled

    records = []
    for t in range(iterations):
        x_l, y_l = dataset.labeled[t % dataset.n_labeled]
        x_u = dataset.unlabeled[t % dataset.m_unlabeled]
        x_l = np.asarray(x_l, dtype=np.float64)
        x_ls = strong_augment(x_l, aug_rng, cfg.aug_noise, cfg.aug_scale)
        x_w = np.asarray(x_u, dtype=np.float64)
        x_s = strong_augment(x_w, aug_rng, cfg.aug_noise, cfg.aug_scale)

        y_hot = losses.one_hot(np.asarray(y_l), k)
        z1_l = f1.logits(x_l)
        z2_l = f2.logits(x_ls)
        sup1 = losses.mt_loss(z1_l, y_hot)
        sup2 = losses.mt_loss(z2_l, y_hot)

        x_w_prime, x_s_prime, displacements, unsup = cad_step(
            x_w, x_s, f1, f2, teacher, cfg, t)

        z1_w = f1.logits(x_w)
        z2_s = f2.logits(x_s)
        z1_prime = f1.logits(x_w_prime)
        z2_prime = f2.logits(x_s_prime)
        target_w = losses.one_hot(losses.argmax_labels(teacher.logits(x_w)), k)
        target_s = losses.one_hot(losses.argmax_labels(teacher.logits(x_s)), k)
        pseudo_1w = losses.one_hot(losses.argmax_labels(z1_w), k)
        pseudo_2s = losses.one_hot(losses.argmax_labels(z2_s), k)
        pseudo_1p = losses.one_hot(losses.argmax_labels(z1_prime), k)
        pseudo_2p = losses.one_hot(losses.argmax_labels(z2_prime), k)

        grad1 = (_grad_to_weights(losses.loss_gradients("mt", z1_l, y_hot),
                                  pixel_features(x_l))
                 + _grad_to_weights(losses.loss_gradients("mt", z1_w, target_w),
                                    pixel_features(x_w))
                 + _grad_to_weights(losses.loss_gradients("dice", z1_w, pseudo_2s),
                                    pixel_features(x_w))
                 + _grad_to_weights(losses.loss_gradients("dice", z1_prime, pseudo_2p),
                                    pixel_features(x_w_prime)))
        grad2 = (_grad_to_weights(losses.loss_gradients("mt", z2_l, y_hot),
                                  pixel_features(x_ls))
                 + _grad_to_weights(losses.loss_gradients("mt", z2_s, target_s),
                                    pixel_features(x_s))
                 + _grad_to_weights(losses.loss_gradients("dice", z2_s, pseudo_1w),
                                    pixel_features(x_s))
                 + _grad_to_weights(losses.loss_gradients("dice", z2_prime, pseudo_1p),
                                    pixel_features(x_s_prime)))

        parts = (sup1 + unsup.l_mt1, sup2 + unsup.l_mt2, unsup.l_cps1,
                 unsup.l_cps2, unsup.l_cad1, unsup.l_cad2)
        if not all(np.isfinite(parts)):
            raise DivergenceError(f"non-finite loss at iteration {t}: {parts}")
        report = losses.total_loss(*parts)

        f1 = ToyPredictor(f1.weights - cfg.learning_rate * grad1)
        f2 = ToyPredictor(f2.weights - cfg.learning_rate * grad2)
        teacher = ToyPredictor(ema_update(teacher.weights,
                                          [f1.weights, f2.weights], cfg.ema_decay))

        c_thr, r_thr = displacements[0].thresholds_used
        records.append(IterationRecord(
            iteration=t, c_threshold=c_thr, r_threshold=r_thr, report=report,
            displacements=displacements, heldout_dsc=heldout_dsc(teacher, heldout)))

    return TrainingLog(
        records=tuple(records),
        final_metrics=heldout_summary(teacher, heldout),
        weights={"student1": f1.weights, "student2": f2.weights,
                 "teacher": teacher.weights},
    )


def demo_config(seed: int = 42, iterations: int = 300, dim: int = 64,
                grid_cells: int = 16, kl_mode: bool = False) -> IterationConfig:
    """The stock desk-scale configuration used by the demo command."""
    return IterationConfig(
        grid_spec=GridSpec(grid_rows=grid_cells, grid_cols=grid_cells,
                           image_h=dim, image_w=dim),
        schedule=ThresholdSchedule(beta=iterations / 5.0),
        kl_mode=kl_mode,
        seed=seed,
    )


def run_demo(seed: int = 42, iterations: int = 300, dim: int = 64,
             labeled: int = 2, unlabeled: int = 16,
             kl_mode: bool = False) -> TrainingLog:
    """Synthesize the stock dataset and train with the demo configuration."""
    dataset = synth_dataset(seed, labeled + unlabeled, dim, labeled_count=labeled)
    cfg = demo_config(seed=seed, iterations=iterations, dim=dim, kl_mode=kl_mode)
    return train_demo(dataset, cfg, iterations)
