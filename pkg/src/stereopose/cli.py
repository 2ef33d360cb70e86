"""Command suite: gen, spawn, train, eval, ablate, stats.

Exit codes are a stable scripting contract: 0 success, 1 usage error,
2 data error (missing or inconsistent inputs), 3 internal error. Every
subcommand that writes an output directory drops a provenance record
(config hash, seed, library versions) next to its artifacts. Reports
are deterministic: rerunning on unchanged inputs reproduces identical
files.
"""

import argparse
from dataclasses import replace
import json
import os
from pathlib import Path
import platform
import sys
import traceback

import numpy as np
import torch
import yaml

from . import __version__
from .checkpoint import CheckpointMismatch, load_checkpoint
from .data import StereoFrameDataset
from .datagen import (
    SPLITS,
    GenConfig,
    build_dataset,
    compute_keypoint_stats,
)
from .evaluation import evaluate_models, oracle_frame_evals
from .metrics import aggregate
from .motion import CATEGORIES
from .pose2d import VARIANTS, build_pose2d
from .pose3d import build_pose3d
from .reporting import (
    format_ablation_table,
    format_eval_report,
    format_stats_table,
    loss_figures,
    write_ablation_report,
    write_delimited,
    write_eval_report,
    write_stats_report,
)
from .spawner import SpawnConfig, load_scene, place_characters
from .training import (
    STRATEGIES,
    TrainConfig,
    ablation_suite,
    cell_config,
    default_ablation_grid,
    train_runs,
)

ENV_DATA_ROOT = "STEREOPOSE_DATA_ROOT"


class UsageError(Exception):
    """Bad flags or invalid configuration values (exit code 1)."""


class DataError(Exception):
    """Missing or inconsistent inputs on disk (exit code 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); keep our contract
        raise UsageError(message)


def _validated(fn, *args, **kwargs):
    """Config constructors signal bad values with ValueError; map to usage."""
    try:
        return fn(*args, **kwargs)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def _data_root(args) -> Path:
    root = getattr(args, "data", None) or os.environ.get(ENV_DATA_ROOT)
    if not root:
        raise UsageError(
            f"no data root given: pass --data or set {ENV_DATA_ROOT}"
        )
    root = Path(root)
    if not root.exists():
        raise DataError(f"data root does not exist: {root}")
    return root


def write_provenance(out_dir, command: str, config_hash: str, seed) -> Path:
    record = {
        "command": command,
        "config_hash": config_hash,
        "seed": seed,
        "versions": {
            "package": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "torch": torch.__version__,
        },
    }
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "provenance.json"
    path.write_text(json.dumps(record, sort_keys=True, indent=1))
    return path


# ------------------------------------------------------------------ gen


def cmd_gen(args) -> int:
    config = (
        _validated(GenConfig.load, args.config) if args.config else GenConfig()
    )
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.motions is not None:
        overrides["n_motions"] = args.motions
    if args.categories:
        overrides["categories"] = tuple(args.categories.split(","))
    if overrides:
        config = _validated(replace, config, **overrides)
    out = Path(args.out)
    manifests = build_dataset(out, config)
    total = 0
    print(f"dataset written to {out}")
    print("split  motions  frames")
    for split in SPLITS:
        manifest = manifests[split]
        total += manifest.frame_count
        print(f"{split:<6} {len(manifest.motions):>7}  {manifest.frame_count:>6}")
    cats = sorted({m.category for man in manifests.values() for m in man.motions})
    print(f"total frames: {total}")
    print(f"categories ({len(cats)}): {', '.join(cats)}")
    print(f"config hash: {config.config_hash()}")
    write_provenance(out, "gen", config.config_hash(), config.seed)
    return 0


# ---------------------------------------------------------------- spawn


def cmd_spawn(args) -> int:
    try:
        regions = load_scene(args.scene)
    except ValueError as exc:  # bad scene content is a data problem, not a crash
        raise DataError(str(exc)) from exc
    config = _validated(
        SpawnConfig,
        neighbor_radius_cm=args.neighbor_radius,
        min_separation_cm=args.min_separation,
        group_size_mean=args.group_size_mean,
        seed=args.seed if args.seed is not None else 0,
    )
    lowest = [float(x) for x in args.lowest_z.split(",")]
    rng = np.random.default_rng(config.seed)
    result = place_characters(regions, config, lowest, rng)
    print(f"picked region {result.region_index}, "
          f"{len(result.neighbor_indices)} neighbor(s)")
    header = ["index", "x_cm", "y_cm", "z_cm", "z_offset_cm"]
    rows = [
        [k, f"{p.position[0]:.2f}", f"{p.position[1]:.2f}",
         f"{p.position[2]:.2f}", f"{p.z_offset:.2f}"]
        for k, p in enumerate(result.placements)
    ]
    for row in [header, *rows]:
        print("  ".join(str(c) for c in row))
    if result.saturated:
        print("warning: rejection budget exhausted, group is partial",
              file=sys.stderr)
    if args.out:
        out = Path(args.out)
        write_delimited(out / "placements.csv", header, rows)
        write_provenance(out, "spawn", "", config.seed)
        print(f"wrote {out / 'placements.csv'}")
    return 0


# ---------------------------------------------------------------- train


def _train_config_from_flags(args) -> TrainConfig:
    base = (
        _validated(TrainConfig.load, args.config) if args.config else TrainConfig()
    )
    cell = {}
    if getattr(args, "variant", None):
        cell["variant"] = args.variant
    if getattr(args, "backbone", None):
        cell["backbone_depth"] = args.backbone
    if getattr(args, "weight_sharing", None) is not None:
        cell["weight_sharing"] = args.weight_sharing
    if getattr(args, "strategy", None):
        cell["strategy"] = args.strategy
    config = _validated(cell_config, base, cell) if cell else base
    runs = args.runs if args.runs is not None else config.runs
    if args.seed is not None:
        seeds = tuple(args.seed + k for k in range(runs))
    elif runs != config.runs:
        seeds = tuple(config.seeds[0] + k for k in range(runs))
    else:
        seeds = config.seeds
    return _validated(replace, config, runs=runs, seeds=seeds)


def cmd_train(args) -> int:
    data_root = _data_root(args)
    config = _train_config_from_flags(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config.save(out / "train_config.yaml")
    reports = train_runs(data_root, config, out)
    for report in reports:
        run_dir = out / f"run_{report.seed}"
        loss_figures(report, run_dir)
        final = {k: v[-1] for k, v in report.train_losses.items()}
        line = ", ".join(f"{k} {v:.5f}" for k, v in final.items())
        print(f"run seed={report.seed}: final train loss {line}")
        if report.eval:
            o = report.eval["overall"]
            print(
                f"  test MPJPE {o['mpjpe_mm_mean']:.2f} mm, "
                f"PA-MPJPE {o['pa_mpjpe_mm_mean']:.2f} mm"
            )
        for name, fname in report.checkpoints.items():
            print(f"  checkpoint {name}: {run_dir / fname}")
    print(f"config hash: {config.config_hash()}")
    write_provenance(out, "train", config.config_hash(), config.seeds[0])
    return 0


# ----------------------------------------------------------------- eval


def _load_models(run_dir: Path, config: TrainConfig):
    model2d = build_pose2d(config.pose2d, seed=0)
    model3d = build_pose3d(config.pose3d, seed=0)
    try:
        if config.strategy == "separate":
            load_checkpoint(
                run_dir / "pose2d.ckpt", model2d, config.pose2d.config_hash()
            )
            load_checkpoint(
                run_dir / "pose3d.ckpt", model3d, config.pose3d.config_hash()
            )
        else:
            combined = torch.nn.ModuleDict(
                {"pose2d": model2d, "pose3d": model3d}
            )
            load_checkpoint(
                run_dir / "combined.ckpt", combined, config.config_hash()
            )
    except CheckpointMismatch as exc:
        raise DataError(str(exc)) from exc
    model2d.eval()
    model3d.eval()
    return model2d, model3d


def _nonempty(dataset, split: str):
    if len(dataset) == 0:
        raise DataError(f"split {split!r} holds no frames")
    return dataset


def cmd_eval(args) -> int:
    if args.oracle:
        if not args.out:
            raise UsageError("--out is required with --oracle")
        dataset = _nonempty(
            StereoFrameDataset(_data_root(args), args.split), args.split
        )
        rows = oracle_frame_evals(dataset)
        report = aggregate(rows)
        config_hash = "oracle"
        out = Path(args.out)
    else:
        if not args.run:
            raise UsageError("pass --run (training output directory) or --oracle")
        run_root = Path(args.run)
        cfg_path = run_root / "train_config.yaml"
        if not cfg_path.exists():
            raise DataError(f"no train_config.yaml under {run_root}")
        config = _validated(TrainConfig.load, cfg_path)
        dataset = _nonempty(
            StereoFrameDataset(
                _data_root(args), args.split, rig_config=config.rig
            ),
            args.split,
        )
        run_dirs = sorted(p for p in run_root.glob("run_*") if p.is_dir())
        if not run_dirs:
            raise DataError(f"no run_* directories under {run_root}")
        rows = []
        for k, run_dir in enumerate(run_dirs):
            model2d, model3d = _load_models(run_dir, config)
            rows.extend(
                evaluate_models(
                    model2d, model3d, dataset,
                    batch_size=config.batch_size, run=k,
                )
            )
        report = aggregate(rows)
        config_hash = config.config_hash()
        out = Path(args.out) if args.out else run_root / "eval"
    paths = write_eval_report(report, out, by_category=args.by_category)
    print(format_eval_report(report, by_category=args.by_category))
    for key in ("table", "text", "json"):
        print(f"wrote {paths[key]}")
    for fig in paths["figures"]:
        print(f"wrote {fig}")
    write_provenance(out, "eval", config_hash, None)
    return 0


# --------------------------------------------------------------- ablate


def cmd_ablate(args) -> int:
    data_root = _data_root(args)
    config = _train_config_from_flags(args)
    out = Path(args.out)
    rows = ablation_suite(data_root, default_ablation_grid(), config, out)
    paths = write_ablation_report(rows, out)
    print(format_ablation_table(rows))
    print(f"wrote {paths['table']}")
    for fig in paths["figures"]:
        print(f"wrote {fig}")
    write_provenance(out, "ablate", config.config_hash(), config.seeds[0])
    failures = [r for r in rows if "error" in r]
    for row in failures:
        print(f"cell {row['name']} failed: {row['error']}", file=sys.stderr)
    return 0 if len(failures) < len(rows) else 3


# ---------------------------------------------------------------- stats


def cmd_stats(args) -> int:
    data_root = _data_root(args)
    try:
        stats = compute_keypoint_stats(data_root)
    except ValueError as exc:  # empty manifests
        raise DataError(str(exc)) from exc
    out = Path(args.out) if args.out else data_root / "stats"
    paths = write_stats_report(stats, out)
    print(format_stats_table(stats))
    print(f"wrote {paths['table']}")
    for fig in paths["figures"]:
        print(f"wrote {fig}")
    write_provenance(out, "stats", "", None)
    return 0


# --------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="stereopose",
        description=(
            "Stereo egocentric pose pipeline: dataset generation, training, "
            "evaluation, ablation, and dataset statistics."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic stereo dataset")
    gen.add_argument("--out", required=True, help="dataset output root")
    gen.add_argument("--config", help="generation config file (YAML)")
    gen.add_argument("--seed", type=int, help="generation seed")
    gen.add_argument("--motions", type=int, help="number of motion clips")
    gen.add_argument(
        "--categories",
        help=f"comma-separated subset of: {', '.join(CATEGORIES)}",
    )
    gen.set_defaults(func=cmd_gen)

    spawn = sub.add_parser(
        "spawn", help="place a character group inside a scene of rectangles"
    )
    spawn.add_argument("--scene", required=True, help="scene file (YAML)")
    spawn.add_argument("--seed", type=int, help="placement seed")
    spawn.add_argument("--neighbor-radius", type=float, default=1000.0,
                       help="neighbor radius in cm")
    spawn.add_argument("--min-separation", type=float, default=100.0,
                       help="minimum pairwise separation in cm")
    spawn.add_argument("--group-size-mean", type=float, default=5.0,
                       help="mean characters per group")
    spawn.add_argument("--lowest-z", default="0",
                       help="comma-separated character lowest-vertex heights (cm)")
    spawn.add_argument("--out", help="directory for the placement table")
    spawn.set_defaults(func=cmd_spawn)

    def add_train_flags(p):
        p.add_argument("--data", help=f"dataset root (default ${ENV_DATA_ROOT})")
        p.add_argument("--config", help="training config file (YAML)")
        p.add_argument("--seed", type=int, help="base seed; run k uses seed+k")
        p.add_argument("--runs", type=int, help="number of seeded runs")
        p.add_argument("--strategy", choices=STRATEGIES)
        p.add_argument("--variant", choices=VARIANTS)
        p.add_argument("--backbone", type=int, choices=(18, 34, 50, 101),
                       help="encoder depth")
        p.add_argument("--weight-sharing", action=argparse.BooleanOptionalAction,
                       default=None, help="share the stereo encoder weights")

    train = sub.add_parser("train", help="train the 2D and 3D modules")
    add_train_flags(train)
    train.add_argument("--out", required=True, help="run output directory")
    train.set_defaults(func=cmd_train)

    evalp = sub.add_parser("eval", help="evaluate checkpoints on a split")
    evalp.add_argument("--data", help=f"dataset root (default ${ENV_DATA_ROOT})")
    evalp.add_argument("--run", help="training output directory to evaluate")
    evalp.add_argument("--out", help="report directory (default <run>/eval)")
    evalp.add_argument("--split", choices=SPLITS, default="test")
    evalp.add_argument("--by-category", action="store_true",
                       help="emit one row per motion category")
    evalp.add_argument("--oracle", action="store_true",
                       help="score ground truth against itself (all zeros)")
    evalp.set_defaults(func=cmd_eval)

    ablate = sub.add_parser(
        "ablate", help="run the variant/weight-sharing/strategy comparison"
    )
    add_train_flags(ablate)
    ablate.add_argument("--out", required=True, help="suite output directory")
    ablate.set_defaults(func=cmd_ablate)

    stats = sub.add_parser(
        "stats", help="dataset keypoint distribution tables and plots"
    )
    stats.add_argument("--data", help=f"dataset root (default ${ENV_DATA_ROOT})")
    stats.add_argument("--out", help="report directory (default <data>/stats)")
    stats.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FileNotFoundError, CheckpointMismatch) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except yaml.YAMLError as exc:
        print(f"usage error: malformed config: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
