"""Command-line interface binding the library into reproducible runs.

Reports go to stdout as single-line JSON; volumes and CSVs go to files.
Outputs are pure functions of the input files and flags: no timestamps,
and all randomness flows through --seed. Exit codes: 0 ok, 1 I/O error,
2 validation error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from .lengths import instance_lengths, write_lengths_csv
from .losses import PRESETS, REGION_MODES, LossWeights, combined_loss, find_regions
from .metrics import evaluate_pair
from .morphology import SE_KINDS
from .skeleton import soft_skeleton
from .synth import generate_scene
from .volume import (
    ContainerFormatError,
    Spacing,
    downscale_xy,
    padded_xy_dims,
    read_volume,
    require_binary,
    require_same_shape,
    upscale_xy_nearest,
    write_volume,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_INTERNAL = 3


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, separators=(",", ":")) + "\n")


def _parse_spacing(text: str) -> Spacing:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"--spacing wants sz,sy,sx; got {text!r}")
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise ValueError(f"--spacing wants three numbers; got {text!r}") from exc
    return Spacing(*values)


def _parse_dims(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"--dims wants z,y,x; got {text!r}")
    dims = tuple(int(p) for p in parts)
    if any(d < 1 for d in dims):
        raise ValueError(f"--dims must be positive; got {text!r}")
    return dims


def _check_threads(args) -> None:
    if getattr(args, "threads", 1) < 1:
        raise ValueError("--threads must be a positive integer")


def _check_threshold(threshold: float) -> float:
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"--threshold must lie strictly inside (0, 1), got {threshold}")
    return threshold


def _load_pair(args) -> tuple[np.ndarray, Spacing, np.ndarray, Spacing]:
    pred, pred_spacing = read_volume(args.pred)
    label, label_spacing = read_volume(args.label)
    require_same_shape(pred, label, "prediction and label")
    return pred, pred_spacing, label, label_spacing


def _resolve_spacing(args, *spacings: Spacing) -> Spacing:
    if args.spacing is not None:
        return _parse_spacing(args.spacing)
    unique = {s.as_tuple() for s in spacings}
    if len(unique) != 1:
        raise ValueError(
            "input files disagree on spacing; pass --spacing sz,sy,sx explicitly"
        )
    return spacings[0]


def _resolve_weights(args) -> LossWeights:
    explicit = [args.w_bce, args.w_dice, args.w_eval, args.eval_kind]
    if args.preset is not None:
        if any(v is not None for v in explicit):
            raise ValueError("--preset and explicit weight flags are mutually exclusive")
        return PRESETS[args.preset]
    if all(v is None for v in explicit):
        return PRESETS["baseline"]
    return LossWeights(
        args.w_bce if args.w_bce is not None else 1.0,
        args.w_dice if args.w_dice is not None else 1.0,
        args.w_eval if args.w_eval is not None else 0.0,
        args.eval_kind if args.eval_kind is not None else "none",
    )


def cmd_loss(args) -> int:
    _check_threads(args)
    pred, pred_spacing, label, _ = _load_pair(args)
    require_binary(label, "label")
    weights = _resolve_weights(args)
    report = combined_loss(pred, label, weights, region_mode=args.mode)
    if args.grad_out is not None:
        if report.gradient is None:
            raise ValueError("this loss configuration provides no gradient volume")
        write_volume(report.gradient.astype(np.float32), pred_spacing, args.grad_out)
    if args.mask_out is not None:
        if report.region_mask is None:
            raise ValueError("only the simplified topology loss produces a region mask")
        write_volume(report.region_mask.astype(np.uint8), pred_spacing, args.mask_out)
    _emit(report.to_json_dict())
    return EXIT_OK


def _binarize_prediction(pred: np.ndarray, threshold: float) -> np.ndarray:
    if pred.dtype == np.uint8 or pred.dtype == bool:
        return (pred != 0).astype(np.uint8)
    return (pred > threshold).astype(np.uint8)


def cmd_eval(args) -> int:
    _check_threads(args)
    _check_threshold(args.threshold)
    pred, pred_spacing, label, label_spacing = _load_pair(args)
    require_binary(label, "label")
    spacing = _resolve_spacing(args, pred_spacing, label_spacing)
    report = evaluate_pair(pred, label, spacing, args.threshold, args.connectivity)
    if args.pred_lengths is not None:
        rows = instance_lengths(
            _binarize_prediction(pred, args.threshold), spacing, args.connectivity
        )
        write_lengths_csv(rows, args.pred_lengths)
    if args.label_lengths is not None:
        rows = instance_lengths((label != 0).astype(np.uint8), spacing, args.connectivity)
        write_lengths_csv(rows, args.label_lengths)
    _emit(report.to_json_dict())
    return EXIT_OK


def cmd_gen(args) -> int:
    _check_threads(args)
    spacing = _parse_spacing(args.spacing)
    dims = _parse_dims(args.dims)
    label, pred, specs = generate_scene(
        args.seed,
        args.n_tubes,
        dims,
        radius_range=(args.radius_min, args.radius_max),
        steps_range=(args.steps_min, args.steps_max),
        gaps_per_tube=args.gaps_per_tube,
        gap_len_range=(args.gap_len_min, args.gap_len_max),
        p_in=args.p_in,
        p_out=args.p_out,
        noise=args.noise,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    label_path = out_dir / "label.cvol"
    pred_path = out_dir / "pred.cvol"
    truth_path = out_dir / "truth.json"
    write_volume(label, spacing, label_path)
    write_volume(pred, spacing, pred_path)
    truth = {
        "seed": args.seed,
        "dims": list(dims),
        "spacing": list(spacing.as_tuple()),
        "tubes": [
            {
                "centerline": [list(v) for v in spec.centerline],
                "radius": spec.radius,
                "gaps": [list(g) for g in spec.gaps],
                "p_in": spec.p_in,
                "p_out": spec.p_out,
            }
            for spec in specs
        ],
    }
    truth_path.write_text(json.dumps(truth, separators=(",", ":")) + "\n", encoding="utf-8")
    _emit(
        {
            "label": str(label_path),
            "pred": str(pred_path),
            "truth": str(truth_path),
            "n_tubes": len(specs),
            "seed": args.seed,
        }
    )
    return EXIT_OK


def cmd_skeleton(args) -> int:
    _check_threads(args)
    volume, spacing = read_volume(args.input)
    skel, iterations = soft_skeleton(
        volume,
        max_iter=args.max_iter,
        erode_se=args.se,
        dilate_se=args.se_dilate,
        return_iterations=True,
    )
    write_volume(skel.astype(np.float32), spacing, args.out)
    _emit({"iterations": iterations, "sum": float(skel.sum()), "out": str(args.out)})
    return EXIT_OK


def cmd_regions(args) -> int:
    _check_threads(args)
    pred, pred_spacing, label, _ = _load_pair(args)
    mask = find_regions(pred, label, args.mode)
    write_volume(mask, pred_spacing, args.out)
    _emit(
        {
            "mode": args.mode,
            "critical_voxels": int(mask.sum()),
            "out": str(args.out),
        }
    )
    return EXIT_OK


def cmd_lengths(args) -> int:
    _check_threads(args)
    mask, file_spacing = read_volume(args.input)
    require_binary(mask, "instance mask")
    spacing = _resolve_spacing(args, file_spacing)
    rows = instance_lengths(mask, spacing, args.connectivity)
    write_lengths_csv(rows, args.out)
    _emit(
        {
            "n_instances": len(rows),
            "n_border": sum(1 for r in rows if r.touches_border),
            "csv": str(args.out),
        }
    )
    return EXIT_OK


def cmd_resample(args) -> int:
    _check_threads(args)
    volume, spacing = read_volume(args.input)
    in_dims = list(volume.shape)
    if args.direction == "down":
        agg = args.agg if args.agg is not None else "mean"
        out = downscale_xy(volume, args.factor, agg)
        padded = list(padded_xy_dims(volume.shape, args.factor))
        out_spacing = Spacing(spacing.sz, spacing.sy * args.factor, spacing.sx * args.factor)
    else:
        if args.agg is not None:
            raise ValueError("--agg applies to downscaling only")
        agg = None
        out = upscale_xy_nearest(volume, args.factor)
        padded = None
        out_spacing = Spacing(spacing.sz, spacing.sy / args.factor, spacing.sx / args.factor)
    write_volume(out, out_spacing, args.out)
    _emit(
        {
            "direction": args.direction,
            "factor": args.factor,
            "agg": agg,
            "in_dims": in_dims,
            "padded_dims": padded,
            "out_dims": list(out.shape),
            "out": str(args.out),
        }
    )
    return EXIT_OK


def _add_threads(sub) -> None:
    sub.add_argument(
        "--threads",
        type=int,
        default=1,
        help="internal data-parallelism hint; outputs never depend on it",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contiseg",
        description="Continuity-preserving losses and instance metrics over CVOL volumes.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_loss = subs.add_parser("loss", help="evaluate the combined loss on a volume pair")
    p_loss.add_argument("--pred", required=True)
    p_loss.add_argument("--label", required=True)
    p_loss.add_argument("--preset", choices=sorted(PRESETS))
    p_loss.add_argument("--w-bce", type=float, dest="w_bce")
    p_loss.add_argument("--w-dice", type=float, dest="w_dice")
    p_loss.add_argument("--w-eval", type=float, dest="w_eval")
    p_loss.add_argument(
        "--eval-kind",
        dest="eval_kind",
        choices=["none", "cl_dice", "negative_centerline", "simplified_topology"],
    )
    p_loss.add_argument("--mode", choices=list(REGION_MODES), default="label-overlap")
    p_loss.add_argument("--grad-out", dest="grad_out")
    p_loss.add_argument("--mask-out", dest="mask_out")
    _add_threads(p_loss)
    p_loss.set_defaults(func=cmd_loss)

    p_eval = subs.add_parser("eval", help="compute the metric report for a volume pair")
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--label", required=True)
    p_eval.add_argument("--threshold", type=float, default=0.5)
    p_eval.add_argument("--connectivity", choices=["face", "full"], default="face")
    p_eval.add_argument("--spacing", help="override file spacing, sz,sy,sx")
    p_eval.add_argument("--pred-lengths", dest="pred_lengths", help="CSV path for prediction instance lengths")
    p_eval.add_argument("--label-lengths", dest="label_lengths", help="CSV path for label instance lengths")
    _add_threads(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_gen = subs.add_parser("gen", help="generate a seeded synthetic tube scene")
    p_gen.add_argument("--out-dir", dest="out_dir", required=True)
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--n-tubes", dest="n_tubes", type=int, default=3)
    p_gen.add_argument("--dims", default="64,64,64")
    p_gen.add_argument("--spacing", required=True, help="physical voxel size, sz,sy,sx")
    p_gen.add_argument("--radius-min", dest="radius_min", type=int, default=1)
    p_gen.add_argument("--radius-max", dest="radius_max", type=int, default=2)
    p_gen.add_argument("--steps-min", dest="steps_min", type=int, default=36)
    p_gen.add_argument("--steps-max", dest="steps_max", type=int, default=56)
    p_gen.add_argument("--gaps-per-tube", dest="gaps_per_tube", type=int, default=0)
    p_gen.add_argument("--gap-len-min", dest="gap_len_min", type=float, default=0.25)
    p_gen.add_argument("--gap-len-max", dest="gap_len_max", type=float, default=0.35)
    p_gen.add_argument("--p-in", dest="p_in", type=float, default=1.0)
    p_gen.add_argument("--p-out", dest="p_out", type=float, default=0.0)
    p_gen.add_argument("--noise", type=float, default=0.0)
    _add_threads(p_gen)
    p_gen.set_defaults(func=cmd_gen)

    p_skel = subs.add_parser("skeleton", help="soft-skeletonize a volume")
    p_skel.add_argument("input")
    p_skel.add_argument("--out", required=True)
    p_skel.add_argument("--se", choices=list(SE_KINDS), default="cross", help="erosion neighbourhood")
    p_skel.add_argument("--se-dilate", dest="se_dilate", choices=list(SE_KINDS), default="cube")
    p_skel.add_argument("--max-iter", dest="max_iter", type=int)
    _add_threads(p_skel)
    p_skel.set_defaults(func=cmd_skeleton)

    p_reg = subs.add_parser("regions", help="critical-region mask for a volume pair")
    p_reg.add_argument("--pred", required=True)
    p_reg.add_argument("--label", required=True)
    p_reg.add_argument("--mode", choices=list(REGION_MODES), default="label-overlap")
    p_reg.add_argument("--out", required=True)
    _add_threads(p_reg)
    p_reg.set_defaults(func=cmd_regions)

    p_len = subs.add_parser("lengths", help="per-instance skeleton lengths of a binary mask")
    p_len.add_argument("input")
    p_len.add_argument("--out", required=True, help="CSV output path")
    p_len.add_argument("--connectivity", choices=["face", "full"], default="face")
    p_len.add_argument("--spacing", help="override file spacing, sz,sy,sx")
    _add_threads(p_len)
    p_len.set_defaults(func=cmd_lengths)

    p_res = subs.add_parser("resample", help="downscale or upscale the y/x axes")
    p_res.add_argument("input")
    p_res.add_argument("--out", required=True)
    p_res.add_argument("--factor", type=int, required=True)
    p_res.add_argument("--direction", choices=["down", "up"], required=True)
    p_res.add_argument("--agg", choices=["mean", "max"], help="downscale aggregation")
    _add_threads(p_res)
    p_res.set_defaults(func=cmd_resample)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ContainerFormatError as exc:
        print(f"contiseg: input file error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"contiseg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"contiseg: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
