"""Command line entry point: ``wavefill <command> ...``.

Exit status is 0 on success, 2 for usage errors (bad flags or configuration)
and 1 for data errors; data errors are reported on stderr as a single JSON object.
"""
from __future__ import annotations

import argparse
import json
import sys
from contextlib import nullcontext
from dataclasses import replace
from pathlib import Path

import numpy as np

from wavefill.errors import WaveFillError
from wavefill.generator import inpaint
from wavefill.pipeline.config import ConfigError, dump_config, load_config
from wavefill.pipeline.evaluate import compare_to_zero_fill, eval_set
from wavefill.pipeline.imageio import read_image, read_mask, write_image
from wavefill.pipeline.masks import coverage_bucket, coverage_ratio, gen_mask
from wavefill.pipeline.metrics import evaluate_pair
from wavefill.pipeline.train import Trainer, load_generator
from wavefill.wavelet import decompose, reconstruct, save_pyramid


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _run_config(args):
    config = load_config(args.config, args.set)
    if args.seed is not None:
        config.generator.seed = args.seed
        config.train = replace(config.train, seed=args.seed)
        config.mask.seed = args.seed
    return config


def cmd_decompose(args) -> int:
    image = read_image(args.image)
    pyramid = decompose(image, args.levels)
    save_pyramid(args.output, pyramid)
    error = float(np.max(np.abs(reconstruct(pyramid) - image)))
    _emit({"output": str(args.output), "levels": args.levels, "planes": len(list(pyramid.planes())),
           "ll_shape": list(pyramid.ll.shape), "max_roundtrip_error": error})
    return 0


def cmd_mask(args) -> int:
    spec = _run_config(args).mask
    if args.kind:
        spec.kind = args.kind
    if args.size:
        spec.size = args.size
    mask = gen_mask(spec)
    write_image(args.output, mask)
    ratio = coverage_ratio(mask)
    _emit({"output": str(args.output), "kind": spec.kind, "coverage": ratio, "bucket": coverage_bucket(ratio)})
    return 0


def cmd_train(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.resume:
        trainer = Trainer.from_checkpoint(args.resume)
    else:
        config = _run_config(args)
        dump_config(config, out / "config.yaml")
        trainer = Trainer(config.generator, config.train, config.discriminator)
    steps = args.steps if args.steps is not None else trainer.config.steps
    log_target = sys.stdout if args.log == "-" else None
    log_path = out / "log.jsonl" if args.log is None else None if args.log == "-" else Path(args.log)
    with (open(log_path, "a") if log_path else nullcontext(log_target)) as log:
        trainer.run(steps, log_file=log, checkpoint_dir=out)
    final = out / "final.wfck"
    trainer.save(final)
    if log_target is None:
        _emit({"checkpoint": str(final), "step": trainer.step, "log": str(log_path)})
    return 0


def cmd_inpaint(args) -> int:
    generator = load_generator(args.checkpoint)
    image = read_image(args.image)
    mask = read_mask(args.mask)
    result = inpaint(image, mask, generator)
    write_image(args.output, result)
    _emit({"output": str(args.output), "coverage": coverage_ratio(mask)})
    return 0


def cmd_eval(args) -> int:
    pred, gt = read_image(args.pred), read_image(args.gt)
    mask = read_mask(args.mask) if args.mask else None
    report = evaluate_pair(pred, gt, mask, bins=args.bins).as_dict()
    if args.baseline:
        zero = gt * (1.0 - mask) if mask is not None else np.zeros_like(gt)
        report["zero_fill"] = evaluate_pair(zero, gt, mask, bins=args.bins).as_dict()
    _emit(report)
    return 0


def cmd_freq_diag(args) -> int:
    generator = load_generator(args.checkpoint)
    size = args.size or generator.config.image_size
    seed = 0 if args.seed is None else args.seed
    images, holes = eval_set(seed, args.count, size)
    _emit(compare_to_zero_fill(generator, images, holes, bins=args.bins))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for every random choice")
    common.add_argument("--config", type=Path, default=None, help="YAML run configuration")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config entry (repeatable)")

    parser = argparse.ArgumentParser(prog="wavefill", description="Wavelet-domain image inpainting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="write the Haar pyramid of an image")
    p.add_argument("image", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--levels", type=int, default=2)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("mask", parents=[common], help="generate a hole mask image")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--kind", choices=["central_square", "freeform"])
    p.add_argument("--size", type=int)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("train", parents=[common], help="train on the procedural toy set")
    p.add_argument("--out", type=Path, required=True, help="directory for log, config and checkpoints")
    p.add_argument("--steps", type=int)
    p.add_argument("--resume", type=Path, help="continue from a checkpoint")
    p.add_argument("--log", help="log file (default OUT/log.jsonl, '-' for stdout)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("inpaint", parents=[common], help="fill the holes of an image")
    p.add_argument("image", type=Path)
    p.add_argument("mask", type=Path)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("eval", parents=[common], help="l1 / PSNR / SSIM / band EMD of an image pair")
    p.add_argument("pred", type=Path)
    p.add_argument("gt", type=Path)
    p.add_argument("--mask", type=Path, help="restrict pixel metrics to the holes")
    p.add_argument("--baseline", action="store_true", help="also score the zero-fill baseline")
    p.add_argument("--bins", type=int, default=64)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("freq-diag", parents=[common], help="band histogram EMD: model vs zero-fill")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--size", type=int)
    p.add_argument("--bins", type=int, default=64)
    p.set_defaults(func=cmd_freq_diag)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        parser.error(str(exc))
    except (WaveFillError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "command": args.command}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
