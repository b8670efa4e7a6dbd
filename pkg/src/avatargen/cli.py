"""Command-line entry point: ``avatargen <subcommand> ...``.

Exit codes: 0 success, 1 pipeline error, 2 usage error, 3 missing file.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AvatarGenError

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_MISSING = 0, 1, 2, 3
log = logging.getLogger("avatargen")


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _alphas(text):
    try:
        values = [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha list '{text}'") from None
    if not values or any(a <= 0 for a in values):
        raise argparse.ArgumentTypeError("alphas must be positive")
    return sorted(values)


def _write_text(text, out):
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# --------------------------------------------------------------------------- subcommands

def cmd_inspect_mesh(args):
    from .mesh_io import diagnose, load_mesh

    report = diagnose(load_mesh(args.mesh))
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.format())
    return EXIT_OK


def _skeleton(path):
    from .rig import default_skeleton, load_rig_spec

    return load_rig_spec(Path(path).read_text()) if path else default_skeleton()


def cmd_bind(args):
    from .mesh_io import load_mesh
    from .skinning import auto_bind, save_binding

    binding = auto_bind(load_mesh(args.mesh), _skeleton(args.rig), mode=args.mode)
    save_binding(binding, args.out)
    counts = np.bincount(binding.labels(), minlength=len(binding.bone_names))
    print(f"bound {len(binding.bones)} vertices ({args.mode}) -> {args.out}")
    for name, n in zip(binding.bone_names, counts):
        print(f"  {name:<4} {n}")
    return EXIT_OK


def cmd_sample_poses(args):
    from . import poses

    skel = _skeleton(args.rig)
    text = Path(args.constraints).read_text() if args.constraints else poses.default_constraints_text()
    cons = poses.load_constraints(text, skel, args.profile)
    if args.bvh:
        rtext = Path(args.retarget).read_text() if args.retarget else poses.default_retarget_text()
        out = poses.retarget(poses.load_bvh(args.bvh), poses.load_retarget_map(rtext), cons, args.stride)
    elif args.grid:
        out = poses.sample_grid(cons, args.grid.split(","), args.steps)
    else:
        rng = np.random.default_rng(args.seed)
        out = [poses.sample_uniform(cons, rng) for _ in range(args.count)]
    _write_text(poses.format_pose_table(out, cons.dof_names), args.out)
    if args.out not in (None, "-"):
        print(f"wrote {len(out)} poses -> {args.out}")
    return EXIT_OK


def cmd_generate(args):
    from .dataset import MANIFEST_NAME, generate, load_config

    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.images_per_scan is not None:
        config.images_per_scan = args.images_per_scan
    out = Path(args.out) if args.out else (config.resolve(config.output) if config.output else Path("out"))
    manifest = generate(config, out, jobs=args.jobs)
    size = (out / MANIFEST_NAME).stat().st_size
    print(f"generated {len(manifest.records)} samples in {out} (manifest {size} bytes)")
    return EXIT_OK


def cmd_replay(args):
    from .dataset import replay

    paths = replay(args.manifest, args.out, assets_dir=args.assets, jobs=args.jobs)
    print(f"replayed {len(paths)} samples into {args.out}")
    return EXIT_OK


def cmd_adapt(args):
    from .adapt import add_white_noise, gaussian_blur
    from .dataset import IMAGE_EXTS, sample_seed
    from .render import load_background, save_png

    src = Path(args.input)
    if src.is_dir():
        files = sorted(p for p in src.rglob("*") if p.suffix.lower() in IMAGE_EXTS)
        root = src
    elif src.is_file():
        files, root = [src], src.parent
    else:
        raise FileNotFoundError(f"input not found: {src}")
    out = Path(args.out)
    for f in files:
        rel = f.relative_to(root)
        image = load_background(f)
        if args.kind == "gauss":
            image = gaussian_blur(image, args.sigma)
        else:
            # seeded by file name so results do not depend on directory order
            rng = np.random.default_rng([sample_seed(args.seed, rel.as_posix(), 0), 1])
            image = add_white_noise(image, args.std, rng)
        dst = (out / rel).with_suffix(".png")
        dst.parent.mkdir(parents=True, exist_ok=True)
        save_png(image, dst)
    print(f"adapted {len(files)} images ({args.kind}) -> {out}")
    return EXIT_OK


def cmd_eval_pck(args):
    from .evaluation import format_table, load_pairs, pck_curve

    preds, gts = load_pairs(args.pred, args.gt)
    results = pck_curve(preds, gts, args.alpha, args.ref, include_occluded=not args.exclude_occluded)
    _write_text(format_table(results, args.format), args.out)
    return EXIT_OK


def cmd_demo_assets(args):
    from .demo import write_demo_assets

    cfg = write_demo_assets(args.out, images_per_scan=args.images_per_scan, size=args.size, seed=args.seed)
    print(f"demo assets written; run: avatargen generate --config {cfg} --out <dir>")
    return EXIT_OK


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="avatargen",
                                description="Generate labeled synthetic human pose images from rigged scans.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    s = sub.add_parser("inspect-mesh", help="print mesh diagnostics")
    s.add_argument("mesh", help="OBJ or PLY file")
    s.add_argument("--json", action="store_true", help="machine-readable output")
    s.set_defaults(func=cmd_inspect_mesh)

    s = sub.add_parser("bind", help="bind mesh vertices to rig bones")
    s.add_argument("mesh")
    s.add_argument("--rig", help="rig spec (default: bundled human rig)")
    s.add_argument("--mode", choices=("rigid", "blend"), default="rigid")
    s.add_argument("--out", required=True, help="binding file to write")
    s.set_defaults(func=cmd_bind)

    s = sub.add_parser("sample-poses", help="write constrained poses as a pose table")
    s.add_argument("--rig")
    s.add_argument("--constraints", help="constraint file (default: bundled)")
    s.add_argument("--profile", help="root orientation profile")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--count", type=_positive, default=100, help="uniform samples (default 100)")
    g.add_argument("--grid", metavar="DOF[,DOF...]", help="grid over these DOFs")
    g.add_argument("--bvh", help="retarget a BVH clip instead of sampling")
    s.add_argument("--steps", type=_positive, default=3, help="grid steps per DOF")
    s.add_argument("--retarget", help="retarget map (default: bundled CMU map)")
    s.add_argument("--stride", type=_positive, default=1, help="BVH frame stride")
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--out", help="output file (default stdout)")
    s.set_defaults(func=cmd_sample_poses)

    s = sub.add_parser("generate", help="render a dataset from a generation config")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=_seed, help="override the config's master seed")
    s.add_argument("--jobs", type=_positive, help="parallel workers (default: all cores)")
    s.add_argument("--out", help="output directory")
    s.add_argument("--images-per-scan", type=_positive)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("replay", help="re-render a dataset from its manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--assets", help="directory the config paths are relative to (default: as recorded)")
    s.add_argument("--jobs", type=_positive)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_replay)

    s = sub.add_parser("adapt", help="blur or add noise to images")
    s.add_argument("input", help="image file or directory")
    s.add_argument("--kind", choices=("gauss", "white_noise"), default="gauss")
    s.add_argument("--sigma", type=float, default=1.5)
    s.add_argument("--std", type=float, default=10.0, help="noise std in 8-bit levels")
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_adapt)

    s = sub.add_parser("eval-pck", help="score predicted keypoints with PCK")
    s.add_argument("--pred", required=True, help="directory of prediction files")
    s.add_argument("--gt", required=True, help="directory of ground-truth annotations")
    s.add_argument("--alpha", type=_alphas, default=[0.2, 0.5], help="comma-separated thresholds")
    s.add_argument("--ref", choices=("torso", "bbox"), default="torso")
    s.add_argument("--exclude-occluded", action="store_true")
    s.add_argument("--format", choices=("text", "csv"), default="text")
    s.add_argument("--out", help="output file (default stdout)")
    s.set_defaults(func=cmd_eval_pck)

    s = sub.add_parser("demo-assets", help="write the bundled capsule-person assets and a config")
    s.add_argument("--out", required=True)
    s.add_argument("--images-per-scan", type=_positive, default=50)
    s.add_argument("--size", type=_positive, default=256)
    s.add_argument("--seed", type=_seed, default=2024)
    s.set_defaults(func=cmd_demo_assets)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"avatargen: error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (AvatarGenError, ValueError, OSError) as exc:
        print(f"avatargen: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
