"""Command-line front end.

Subcommands: displace (run one replacement step on logit tensors),
schedule (print the threshold ramp), demo (train the synthetic demo),
metrics (compare two label maps), losses (loss report for two logit
tensors and a target). Exit codes: 0 on success, 2 on bad input, 3 on
shape or grid mismatch. Diagnostics go to stderr; the verbosity is
controlled by the CAD_LOG_LEVEL environment variable (error, info,
debug).
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import harness, llcr, losses, metrics
from .dte import ThresholdSchedule, ramp, thresholds_at
from .errors import (
    BoundsError,
    CadError,
    ClassCountError,
    GridMismatchError,
    ShapeError,
)
from .grid import GridSpec, confidence_grid

log = logging.getLogger("cadseg")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SHAPE = 3

_SHAPE_ERRORS = (ShapeError, GridMismatchError, ClassCountError, BoundsError)


def _configure_logging():
    raw = os.environ.get("CAD_LOG_LEVEL", "error").lower()
    level = _LOG_LEVELS.get(raw)
    if level is None:
        print(f"unknown CAD_LOG_LEVEL {raw!r}, using error", file=sys.stderr)
        level = logging.ERROR
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    log.setLevel(level)


def write_pgm(path, mask) -> None:
    """8-bit binary PGM; true pixels become 255."""
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ShapeError(f"mask must be 2-d, got shape {m.shape}")
    h, w = m.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write((m.astype(np.uint8) * 255).tobytes())


def _load_logits(path, grid_cells):
    from .tensorfile import read_tensor

    z = read_tensor(path).astype(np.float64)
    if z.ndim != 3:
        raise ShapeError(f"{path}: expected (K, H, W) logits, got shape {z.shape}")
    spec = GridSpec(grid_rows=grid_cells, grid_cols=grid_cells,
                    image_h=z.shape[1], image_w=z.shape[2])
    return z, spec


def cmd_displace(args) -> int:
    z_weak, spec = _load_logits(args.weak, args.grid)
    z_strong, spec_s = _load_logits(args.strong, args.grid)
    if z_strong.shape != z_weak.shape:
        raise ShapeError(
            f"weak shape {z_weak.shape} != strong shape {z_strong.shape}")
    del spec_s
    grid_w = confidence_grid(z_weak, spec)
    grid_s = confidence_grid(z_strong, spec)

    def displace_one(low_grid, high_grid, low_logits, high_logits, direction):
        region = llcr.find_largest_low_confidence_region(low_grid, args.c_thr,
                                                         args.r_thr)
        offsets = llcr.shape_offsets(region)
        if args.kl:
            candidates = llcr.top_placements(high_grid, offsets, args.k_top)
            blocks = llcr.region_logit_blocks(low_logits, region, spec)
            placement = llcr.kl_select_placement(blocks, high_logits, candidates,
                                                 spec)
        else:
            placement = llcr.best_placement(high_grid, offsets)
        modified = llcr.apply_replacement(low_logits, high_logits, region,
                                          placement, spec)
        confs = tuple(float(low_grid.normalized[r, c])
                      for r, c in sorted(region.members))
        record = llcr.DisplacementRecord(
            direction=direction, region=region, placement=placement,
            thresholds_used=(args.c_thr, args.r_thr), iteration=0,
            member_confidences=confs)
        return modified, region, record

    strong_prime, region_s, rec_ws = displace_one(
        grid_s, grid_w, z_strong, z_weak, llcr.Direction.WEAK_TO_STRONG)
    weak_prime, region_w, rec_sw = displace_one(
        grid_w, grid_s, z_weak, z_strong, llcr.Direction.STRONG_TO_WEAK)

    from .tensorfile import write_tensor

    os.makedirs(args.out_dir, exist_ok=True)
    write_tensor(os.path.join(args.out_dir, "strong_prime.cadt"), strong_prime)
    write_tensor(os.path.join(args.out_dir, "weak_prime.cadt"), weak_prime)
    write_pgm(os.path.join(args.out_dir, "strong_mask.pgm"),
              llcr.footprint_mask(region_s, spec))
    write_pgm(os.path.join(args.out_dir, "weak_mask.pgm"),
              llcr.footprint_mask(region_w, spec))
    record_path = os.path.join(args.out_dir, "displacement.json")
    with open(record_path, "w", encoding="utf-8") as f:
        json.dump({"weak_to_strong": llcr.record_as_dict(rec_ws),
                   "strong_to_weak": llcr.record_as_dict(rec_sw)},
                  f, sort_keys=True, indent=2)
        f.write("\n")
    log.info("wrote displaced tensors, masks, and record to %s", args.out_dir)
    return EXIT_OK


def cmd_schedule(args) -> int:
    sched = ThresholdSchedule(c_min=args.c_min, c_max=args.c_max,
                              r_min=args.r_min, r_max=args.r_max, beta=args.beta)
    print("t\tpsi\tc_threshold\tr_threshold")
    for t in range(args.iters):
        c_thr, r_thr = thresholds_at(sched, t)
        print(f"{t}\t{ramp(sched, t):.6f}\t{c_thr:.6f}\t{r_thr}")
    return EXIT_OK


def cmd_demo(args) -> int:
    log.info("training demo: seed=%d iterations=%d", args.seed, args.iters)
    result = harness.run_demo(seed=args.seed, iterations=args.iters, dim=args.dim,
                              labeled=args.labeled, unlabeled=args.unlabeled,
                              kl_mode=args.kl)
    if args.out:
        result.write_jsonl(args.out)
        log.info("wrote %d iteration records to %s", len(result.records), args.out)
    summary = {
        "iterations": len(result.records),
        "first_heldout_dsc": result.records[0].heldout_dsc,
        "final_heldout_dsc": result.records[-1].heldout_dsc,
        "final_metrics": result.final_metrics,
        "final_l_total": result.records[-1].report.l_total,
    }
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_metrics(args) -> int:
    from .tensorfile import read_tensor

    pred = read_tensor(args.pred)
    truth = read_tensor(args.truth)
    print(json.dumps(metrics.evaluate(pred, truth, args.class_id), sort_keys=True))
    return EXIT_OK


def cmd_losses(args) -> int:
    from .tensorfile import read_tensor

    z_a = read_tensor(args.a).astype(np.float64)
    z_b = read_tensor(args.b).astype(np.float64)
    target = read_tensor(args.target)
    if z_a.ndim != 3 or z_b.ndim != 3:
        raise ShapeError("logit inputs must be (K, H, W)")
    y_hot = losses.one_hot(target, z_a.shape[0])
    # No modified inputs here, so the displacement-consistency terms are
    # the cross-supervision values on the same tensors.
    cps1 = losses.cps_loss(z_a, z_b)
    cps2 = losses.cps_loss(z_b, z_a)
    report = losses.total_loss(
        l_mt1=losses.mt_loss(z_a, y_hot), l_mt2=losses.mt_loss(z_b, y_hot),
        l_cps1=cps1, l_cps2=cps2, l_cad1=cps1, l_cad2=cps2)
    payload = {k: getattr(report, k) for k in
               ("l_mt1", "l_mt2", "l_cps1", "l_cps2", "l_cad1", "l_cad2",
                "l_1", "l_2", "l_total")}
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cadseg",
        description="Confidence-aware patch displacement for segmentation "
                    "consistency training.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("displace", help="one replacement step on logit tensors")
    p.add_argument("--weak", required=True, help="weak-view logits (CADT)")
    p.add_argument("--strong", required=True, help="strong-view logits (CADT)")
    p.add_argument("--grid", type=int, default=16,
                   help="patch grid cells per side (default 16)")
    p.add_argument("--c-thr", type=float, required=True,
                   help="confidence threshold in [0, 1]")
    p.add_argument("--r-thr", type=int, required=True,
                   help="region size cap in patches")
    p.add_argument("--kl", action="store_true",
                   help="refine placement by KL divergence")
    p.add_argument("--k-top", type=int, default=5,
                   help="candidates considered in KL mode (default 5)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_displace)

    p = sub.add_parser("schedule", help="print the threshold escalation table")
    p.add_argument("--c-min", type=float, default=0.01)
    p.add_argument("--c-max", type=float, default=0.75)
    p.add_argument("--r-min", type=int, default=1)
    p.add_argument("--r-max", type=int, default=16)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--iters", type=int, required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("demo", help="train the synthetic demo")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--iters", type=int, default=300)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--labeled", type=int, default=2)
    p.add_argument("--unlabeled", type=int, default=16)
    p.add_argument("--kl", action="store_true")
    p.add_argument("--out", help="write per-iteration records here (JSONL)")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("metrics", help="compare two label-map tensors")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--class-id", type=int, default=1)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("losses", help="loss report for two logit tensors")
    p.add_argument("--a", required=True, help="first model logits (CADT)")
    p.add_argument("--b", required=True, help="second model logits (CADT)")
    p.add_argument("--target", required=True, help="label map (CADT, i32)")
    p.set_defaults(func=cmd_losses)

    return parser


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _SHAPE_ERRORS as exc:
        log.error("%s", exc)
        return EXIT_SHAPE
    except (CadError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
