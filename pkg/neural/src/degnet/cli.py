"""Command surface: train-upnet, train-texturenet, generate.

Mirrors the dataset toolkit's conventions: deterministic given --seed,
manifest in, manifest out.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .generate import generate_cnn_degraded, generate_gan_degraded
from .losses import LossWeights
from .train import TrainConfig, train_texturenet, train_upnet

log = logging.getLogger("degnet")


def _train_cfg(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        steps_per_epoch=args.steps_per_epoch,
        batch_size=args.batch_size,
        lr_patch=args.patch,
        scale=args.scale,
        learning_rate=args.lr,
        seed=args.seed,
        feature_channels=args.channels,
        extractor_width=getattr(args, "extractor_width", 1.0),
    )


def cmd_train_upnet(args) -> int:
    result = train_upnet(args.pairs, args.out, _train_cfg(args), total_steps=args.steps)
    print(f"checkpoint: {result['checkpoint']}")
    print(f"final mse: {result['losses'][-1]:.6f}")
    return 0


def cmd_train_texturenet(args) -> int:
    weights = LossWeights(args.w_adv, args.w_fadv, args.w_per, args.w_sty)
    result = train_texturenet(
        args.pairs,
        args.out,
        level=args.level,
        weights=weights,
        cfg=_train_cfg(args),
        total_steps=args.steps,
        upnet_ckpt=args.upnet,
        input_source=args.input_source,
    )
    print(f"checkpoint: {result['checkpoint']}")
    print(f"final g/d: {result['history']['g'][-1]:.4f} / {result['history']['d'][-1]:.4f}")
    return 0


def cmd_generate(args) -> int:
    out = Path(args.out)
    if args.mode == "cnn":
        manifest = generate_cnn_degraded(args.manifest, args.checkpoint, out)
    else:
        manifest = generate_gan_degraded(args.manifest, args.checkpoint, out, args.level)
    manifest.write(out / "manifest.json")
    print(f"wrote {len(manifest.entries)} {args.mode} pairs to {out}")
    return 0


def _add_train_args(p: argparse.ArgumentParser):
    p.add_argument("--pairs", required=True, help="pair manifest to train on")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--steps-per-epoch", type=int, default=100)
    p.add_argument("--steps", type=int, default=None, help="override total step count")
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--patch", type=int, default=24, help="LR patch size")
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--channels", type=int, default=64)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="degnet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-upnet", help="MSE-train the x4 upsampler")
    _add_train_args(p)
    p.set_defaults(func=cmd_train_upnet)

    p = sub.add_parser("train-texturenet", help="adversarially train the texture generator")
    _add_train_args(p)
    p.add_argument("--level", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--upnet", default=None, help="upsampler checkpoint (input_source=upnet)")
    p.add_argument("--input-source", choices=["upnet", "bicubic"], default="upnet")
    p.add_argument("--extractor-width", type=float, default=1.0)
    p.add_argument("--w-adv", type=float, default=1e-3)
    p.add_argument("--w-fadv", type=float, default=1.0)
    p.add_argument("--w-per", type=float, default=1e-3)
    p.add_argument("--w-sty", type=float, default=1.0)
    p.set_defaults(func=cmd_train_texturenet)

    p = sub.add_parser("generate", help="emit degraded pairs from a checkpoint")
    p.add_argument("--mode", choices=["cnn", "gan"], required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--level", type=int, choices=[1, 2, 3], default=None)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
