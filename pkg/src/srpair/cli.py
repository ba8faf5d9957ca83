"""Command-line surface: register, degrade, augment, evaluate.

Every command echoes its effective configuration into the output directory
so a run can be reproduced, and is byte-deterministic for fixed inputs and
seed. Exit codes: 0 ok, 1 evaluation incomplete, 2 feature/matching
failure, 3 ransac failure, 4 I/O or argument error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .degrade import (
    AugmentPolicy,
    DegradationSpec,
    StillSceneParams,
    augment_pairs,
    build_interpolation_pairs,
    build_video_pairs,
    extract_still_pairs,
)
from .errors import AlignmentError, SrpairError
from .image import read_png, write_png
from .manifest import PairManifest
from .matching import MlcConfig
from .metrics import evaluate_manifest
from .register import CropRect, RansacConfig, RegistrationConfig, crop, register_pair

EXIT_OK = 0
EXIT_INCOMPLETE = 1
EXIT_FEATURES = 2
EXIT_RANSAC = 3
EXIT_IO = 4

log = logging.getLogger("srpair")


def _echo_config(directory: Path, args: argparse.Namespace, command: str) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    skip = {"config", "func"}
    lines = [f"command = {command}"]
    for key in sorted(vars(args)):
        if key in skip:
            continue
        lines.append(f"{key} = {getattr(args, key)}")
    (directory / "run_config.txt").write_text("\n".join(lines) + "\n")


def _coerce(value: str):
    if value.lower() in ("true", "false"):
        return value.lower() == "true"
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


def _load_config_defaults(path: str | None) -> dict:
    """Simple ``key = value`` config file; CLI flags override these."""
    if not path:
        return {}
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = _coerce(val.strip())
    return values


def _dump_diagnostics(out_dir: Path, diag: dict) -> None:
    from .matching import dump_matches_csv

    dump_matches_csv(
        out_dir / "matches.csv",
        diag["matches"],
        diag["kps_a"],
        diag["kps_b"],
        diag["kept_gms"],
        diag["kept_mlc"],
    )


def _parse_exclude(specs: list[str]) -> tuple[CropRect, ...]:
    rects = []
    for spec in specs:
        parts = [int(v) for v in spec.split(",")]
        if len(parts) != 4:
            raise ValueError(f"--exclude expects x,y,w,h, got {spec!r}")
        rects.append(CropRect(*parts))
    return tuple(rects)


def cmd_register(args) -> int:
    out_dir = Path(args.out)
    try:
        raw_lr = read_png(args.lr)
        raw_hr = read_png(args.hr)
    except (OSError, ValueError) as exc:
        log.error("cannot read inputs: %s", exc)
        return EXIT_IO
    _echo_config(out_dir, args, "register")
    cfg = RegistrationConfig(
        mlc=MlcConfig(alpha=args.alpha),
        ransac=RansacConfig(inlier_threshold=args.ransac_thresh, seed=args.seed),
        min_inliers=args.min_inliers,
        mlc_before_gms=args.mlc_first,
        exclude=_parse_exclude(args.exclude),
    )
    report_path = out_dir / "report.json"
    diagnostics: dict | None = {} if args.dump_matches else None
    try:
        lr_aligned, hr_aligned, result = register_pair(raw_lr, raw_hr, cfg, diagnostics)
    except AlignmentError as exc:
        if diagnostics:
            _dump_diagnostics(out_dir, diagnostics)
        report = {
            "lr": str(args.lr),
            "hr": str(args.hr),
            "status": "failed",
            "stage": exc.stage,
            "message": str(exc),
        }
        report_path.write_text(json.dumps(report, indent=2) + "\n")
        log.error("%s", exc)
        return EXIT_RANSAC if exc.stage == "ransac" else EXIT_FEATURES

    if diagnostics:
        _dump_diagnostics(out_dir, diagnostics)
    write_png(lr_aligned, out_dir / "lr_aligned.png")
    write_png(hr_aligned, out_dir / "hr_aligned.png")
    write_png(crop(raw_lr, result.crop_lr), out_dir / "lr_crop.png")
    t = result.transform
    report = {
        "lr": str(args.lr),
        "hr": str(args.hr),
        "status": "ok",
        "inliers": len(result.inliers),
        "mean_residual": result.mean_residual,
        "transform": [[t.a, t.b, t.tx], [t.c, t.d, t.ty]],
        "crop_hr": vars(result.crop_hr),
        "crop_lr": vars(result.crop_lr),
    }
    report_path.write_text(json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def cmd_degrade_classic(args) -> int:
    hr_dir = Path(args.hr_dir)
    if not hr_dir.is_dir():
        log.error("not a directory: %s", hr_dir)
        return EXIT_IO
    out_dir = Path(args.out)
    _echo_config(out_dir, args, "degrade classic")
    spec = DegradationSpec(
        scale=args.scale,
        kernel=args.kernel,
        kernel_sigma=args.kernel_sigma,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    try:
        manifest = build_interpolation_pairs(hr_dir, spec, out_dir)
    except SrpairError as exc:
        log.error("%s", exc)
        return EXIT_IO
    manifest.write(out_dir / "manifest.json")
    print(f"wrote {len(manifest.entries)} pairs to {out_dir}")
    return EXIT_OK


def cmd_degrade_video(args) -> int:
    out_dir = Path(args.out)
    if not Path(args.hr_frames).is_dir() or not Path(args.lr_frames).is_dir():
        log.error("frame directories not found")
        return EXIT_IO
    _echo_config(out_dir, args, "degrade video")
    params = StillSceneParams(diff_threshold=args.diff_threshold, window=args.window)
    try:
        selected = extract_still_pairs(args.hr_frames, args.lr_frames, params)
    except SrpairError as exc:
        log.error("%s", exc)
        return EXIT_IO
    cfg = RegistrationConfig(
        ransac=RansacConfig(seed=args.seed), min_inliers=args.min_inliers
    )
    manifest = build_video_pairs(args.hr_frames, args.lr_frames, selected, cfg, out_dir)
    manifest.write(out_dir / "manifest.json")
    print(f"{len(selected)} still windows, {len(manifest.entries)} aligned pairs")
    return EXIT_OK


def cmd_augment(args) -> int:
    manifest_path = Path(args.manifest)
    if not manifest_path.is_file():
        log.error("manifest not found: %s", manifest_path)
        return EXIT_IO
    out_dir = Path(args.out)
    _echo_config(out_dir, args, "augment")
    manifest = PairManifest.read(manifest_path)
    base_dir = manifest_path.parent
    rotations = tuple(int(r) for r in args.rotations.split(",") if r) if args.rotations else ()
    policy = AugmentPolicy(rotations=rotations, hflip=args.hflip)

    # Re-root original entries so every path resolves from the new manifest.
    rebased = PairManifest(skipped=list(manifest.skipped))
    for e in manifest.entries:
        rebased.entries.append(
            type(e)(
                hr=os.path.relpath(base_dir / e.hr, out_dir),
                lr=os.path.relpath(base_dir / e.lr, out_dir),
                cls=e.cls,
                scale=e.scale,
                level=e.level,
                provenance=e.provenance,
            )
        )
    out = augment_pairs(rebased, policy, out_dir, out_dir, seed=args.seed)
    out.write(out_dir / "manifest.json")
    print(f"{len(manifest.entries)} pairs -> {len(out.entries)} entries")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    manifest_path = Path(args.manifest)
    sr_dir = Path(args.sr)
    if not manifest_path.is_file() or not sr_dir.is_dir():
        log.error("manifest or SR directory not found")
        return EXIT_IO
    manifest = PairManifest.read(manifest_path)
    report_path = Path(args.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    _echo_config(report_path.parent, args, "evaluate")
    report = evaluate_manifest(
        manifest,
        sr_dir,
        manifest_path.parent,
        crop_border=args.crop_border,
        jobs=args.jobs,
    )
    report.write_csv(report_path)
    report.write_aggregates_json(report_path.with_suffix(".aggregates.json"))
    for agg in report.aggregates():
        print(
            f"class={agg['class']} scale={agg['scale']} n={agg['count']} "
            f"psnr={agg['mean_psnr_db']:.4f} ssim={agg['mean_ssim']:.6f}"
        )
    if not report.complete:
        bad = [r.id for r in report.rows if r.status != "ok"]
        log.error("%d entries not evaluated: %s", len(bad), bad[:5])
        return EXIT_INCOMPLETE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srpair", description=__doc__)
    parser.add_argument("--config", help="key = value config file with defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("register", help="align a raw LR/HR pair")
    p.add_argument("--lr", required=True)
    p.add_argument("--hr", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--ransac-thresh", type=float, default=3.0)
    p.add_argument("--min-inliers", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mlc-first", action="store_true")
    p.add_argument("--exclude", action="append", default=[], metavar="X,Y,W,H")
    p.add_argument("--dump-matches", action="store_true",
                   help="write per-match filter verdicts to matches.csv")
    p.set_defaults(func=cmd_register)

    deg = sub.add_parser("degrade", help="synthesize degraded pairs")
    dsub = deg.add_subparsers(dest="mode", required=True)

    p = dsub.add_parser("classic", help="blur/downsample/noise pairs")
    p.add_argument("--hr-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--kernel", choices=["delta", "gaussian"], default="delta")
    p.add_argument("--kernel-sigma", type=float, default=1.6)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_degrade_classic)

    p = dsub.add_parser("video", help="align dual-quality frame sequences")
    p.add_argument("--hr-frames", required=True)
    p.add_argument("--lr-frames", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--diff-threshold", type=float, default=0.004)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--min-inliers", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_degrade_video)

    p = sub.add_parser("augment", help="materialize rotated/flipped pair copies")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rotations", default="", help="comma list from 90,180,270")
    p.add_argument("--hflip", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("evaluate", help="score SR outputs against a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--sr", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--crop-border", type=int, default=None)
    p.add_argument(
        "--jobs",
        type=int,
        default=int(os.environ.get("SRPAIR_JOBS", "1")),
        help="parallel metric workers (env SRPAIR_JOBS)",
    )
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # First pass only to find --config; its values become parser defaults,
    # so explicit flags still win.
    probe, _ = parser.parse_known_args(argv)
    try:
        defaults = _load_config_defaults(probe.config)
    except (OSError, ValueError) as exc:
        log.error("bad config file: %s", exc)
        return EXIT_IO
    if defaults:
        parser.set_defaults(**defaults)
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except SrpairError as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
