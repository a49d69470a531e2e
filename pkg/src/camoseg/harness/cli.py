"""Command-line entry points.

Subcommands:

* ``run``    - segment a dataset (or a synthetic suite) and report metrics
* ``synth``  - generate a synthetic verification suite on disk
* ``eval``   - score a directory of predicted masks against ground truth
* ``ablate`` - run the ablation matrix (or a repetition sweep)

Any flag can also come from a JSON config file (``--config``); explicit
flags win over file values. ``run``/``ablate`` exit nonzero when more than
10% of the images fail.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from ..backends.base import BackendConfig, DEFAULT_MLLM_MODEL, DEFAULT_VFM_MODEL, DEFAULT_VLM_MODEL
from ..metrics import evaluate_pairs
from ..point_prompts import PointPromptConfig
from .dataset import DatasetSpec, load_dataset, load_mask, load_soft_map
from .runner import (
    RunConfig,
    RunFlags,
    items_from_dataset,
    items_from_scenes,
    run_ablation_matrix,
    run_benchmark,
)
from .synth import SuiteEntry, load_synthetic_suite, make_synthetic_suite, scene_to_entry

logger = logging.getLogger(__name__)


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--images", help="image directory")
    parser.add_argument("--gt", help="ground-truth mask directory")
    parser.add_argument("--out", default="runs/out", help="output directory")
    parser.add_argument("--repeats", type=int, default=3, help="parallel repetitions per image")
    parser.add_argument("--threshold", type=float, default=0.9, help="point confidence threshold")
    parser.add_argument("--cap", type=int, default=3, help="max points per stream (0 = unlimited)")
    parser.add_argument("--spacing", type=int, default=5, help="min Chebyshev distance between points")
    parser.add_argument("--prompts", help="comma-separated task-generic prompt synonyms")
    parser.add_argument("--backend-mllm", help="chat model endpoint URL")
    parser.add_argument("--backend-vlm", help="heatmap model endpoint URL")
    parser.add_argument("--backend-vfm", help="segmenter endpoint URL")
    parser.add_argument("--synthetic", action="store_true", help="use synthetic backends")
    parser.add_argument("--count", type=int, default=20, help="scenes for in-memory synthetic runs")
    parser.add_argument("--sigma", default="0.0", help="comma-separated synthetic noise levels")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1, help="image-level worker threads")
    parser.add_argument("--box-margin", type=int, default=0, help="padding around the refined box")
    parser.add_argument("--overlays", action="store_true", help="emit point/box overlay images")
    parser.add_argument("--wo-msdcot", action="store_true", help="skip the stepwise decomposition (direct caption-to-word queries)")
    parser.add_argument("--wo-rdvp", action="store_true", help="single difference heatmap over the whole frame")
    parser.add_argument("--consensus-baseline", action="store_true", help="difference-map point selection")
    parser.add_argument("--global-region", action="store_true", help="select points over the whole frame")
    parser.add_argument("--wo-tmg1", action="store_true", help="skip the coarse stage (word prompts at the initial box)")
    parser.add_argument("--wo-tmg2", action="store_true", help="skip the fine stage (coarse mask is final)")


def _parse_sigmas(text: str) -> List[float]:
    values = [float(v) for v in str(text).split(",") if str(v).strip()]
    if not values:
        raise ValueError("at least one sigma value is required")
    return values


def _build_config(args: argparse.Namespace) -> RunConfig:
    cap = None if args.cap == 0 else args.cap
    points = PointPromptConfig(threshold=args.threshold, cap=cap, spacing=args.spacing)
    flags = RunFlags(
        wo_msdcot=args.wo_msdcot,
        wo_rdvp=args.wo_rdvp,
        consensus_baseline=args.consensus_baseline,
        global_region=args.global_region,
        wo_tmg1=args.wo_tmg1,
        wo_tmg2=args.wo_tmg2,
    )
    prompts = None
    if args.prompts:
        prompts = [p.strip() for p in args.prompts.split(",") if p.strip()]
    kind = "synthetic" if args.synthetic else "remote"
    return RunConfig(
        out_dir=Path(args.out),
        mllm=BackendConfig(kind=kind, endpoint=args.backend_mllm, model=DEFAULT_MLLM_MODEL),
        vlm=BackendConfig(kind=kind, endpoint=args.backend_vlm, model=DEFAULT_VLM_MODEL),
        vfm=BackendConfig(kind=kind, endpoint=args.backend_vfm, model=DEFAULT_VFM_MODEL),
        prompts=prompts,
        repeats=args.repeats,
        points=points,
        flags=flags,
        workers=args.workers,
        seed=args.seed,
        overlays=args.overlays,
        box_margin=args.box_margin,
    )


def _collect_items(args: argparse.Namespace, config: RunConfig):
    if args.synthetic:
        if args.images:
            suite_dir = Path(args.images).parent
            entries = load_synthetic_suite(suite_dir)
        else:
            scenes, _ = make_synthetic_suite(
                count=args.count, noise_levels=_parse_sigmas(args.sigma), seed=args.seed
            )
            entries = [SuiteEntry(metadata=scene_to_entry(s), gt=s.region) for s in scenes]
        return items_from_scenes(entries)
    if not args.images or not args.gt:
        raise SystemExit("--images and --gt are required unless --synthetic is set")
    spec = DatasetSpec(images_dir=Path(args.images), gt_dir=Path(args.gt))
    pairs, problems = load_dataset(spec)
    for problem in problems:
        logger.warning("dataset: %s", problem)
    return items_from_dataset(pairs, config)


def _cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(args)
    items = _collect_items(args, config)
    if not items:
        print("nothing to process", file=sys.stderr)
        return 1
    result = run_benchmark(items, config)
    summary = (result.out_dir / "summary.txt").read_text()
    print(summary, end="")
    return 1 if result.over_failure_budget else 0


def _cmd_synth(args: argparse.Namespace) -> int:
    scenes, spec = make_synthetic_suite(
        count=args.count,
        noise_levels=_parse_sigmas(args.sigma),
        seed=args.seed,
        out_dir=Path(args.out),
    )
    print(f"wrote {len(scenes)} scenes to {args.out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    preds, gts = [], []
    skipped = []
    gt_paths = {p.stem: p for p in sorted(gt_dir.iterdir()) if p.suffix.lower() == ".png"}
    for path in sorted(pred_dir.iterdir()):
        if path.suffix.lower() != ".png":
            continue
        gt_path = gt_paths.get(path.stem)
        if gt_path is None:
            skipped.append(f"{path.stem}: no ground truth")
            continue
        pred = load_soft_map(path)
        gt = load_mask(gt_path)
        if pred.shape != gt.shape:
            skipped.append(f"{path.stem}: dimension mismatch")
            continue
        preds.append((path.stem, pred))
        gts.append((path.stem, gt))
    for message in skipped:
        logger.warning("eval: %s", message)
    if not preds:
        print("no evaluable pairs", file=sys.stderr)
        return 1
    report = evaluate_pairs(preds, gts)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_csv(out_dir / "report.csv")
    (out_dir / "report.md").write_text(report.to_markdown())
    means = report.means
    print(
        f"evaluated {len(report.rows)} pairs: "
        f"s_alpha={means.s_alpha:.3f} f_beta={means.f_beta:.3f} "
        f"mae={means.mae:.3f} e_m={means.e_m:.3f}"
    )
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    config = _build_config(args)
    sweep = None
    if args.sweep_repeats:
        sweep = [int(v) for v in args.sweep_repeats.split(",") if v.strip()]
    rows = run_ablation_matrix(
        items_factory=lambda: _collect_items(args, config),
        config=config,
        repeat_sweep=sweep,
    )
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    columns = ["variant", "images", "failed", "s_alpha", "f_beta", "mae", "e_m", "mean_iou"]
    with open(out_dir / "ablation.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})
    for row in rows:
        print(row)
    failed_budget = any(
        row["images"] > 0 and row["failed"] > 0.10 * row["images"] for row in rows
    )
    return 1 if failed_budget else 0


def _apply_config_file(
    argv: List[str], parser: argparse.ArgumentParser, subparsers: dict
) -> None:
    """Use JSON config values as defaults; explicit flags still win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return
    values = json.loads(Path(known.config).read_text())
    if not isinstance(values, dict):
        raise SystemExit("config file must hold a JSON object")
    renamed = {key.replace("-", "_"): value for key, value in values.items()}
    # subparser defaults clobber the parent namespace, so set both
    parser.set_defaults(**renamed)
    for sub in subparsers.values():
        sub.set_defaults(**renamed)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="camoseg",
        description="Camouflaged-object segmentation from a single task-generic prompt",
    )
    parser.add_argument("--config", help="JSON file with default flag values")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="run the segmentation benchmark")
    _add_run_arguments(run_parser)
    run_parser.set_defaults(func=_cmd_run)

    synth_parser = sub.add_parser("synth", help="generate a synthetic suite")
    synth_parser.add_argument("--out", required=True)
    synth_parser.add_argument("--count", type=int, default=50)
    synth_parser.add_argument("--sigma", default="0.0")
    synth_parser.add_argument("--seed", type=int, default=0)
    synth_parser.set_defaults(func=_cmd_synth)

    eval_parser = sub.add_parser("eval", help="score predicted masks against ground truth")
    eval_parser.add_argument("--pred", required=True, help="predicted mask directory")
    eval_parser.add_argument("--gt", required=True, help="ground-truth directory")
    eval_parser.add_argument("--out", default="runs/eval")
    eval_parser.set_defaults(func=_cmd_eval)

    ablate_parser = sub.add_parser("ablate", help="run the ablation matrix")
    _add_run_arguments(ablate_parser)
    ablate_parser.add_argument("--sweep-repeats", help="comma-separated repetition counts")
    ablate_parser.set_defaults(func=_cmd_ablate)
    subparsers = {
        "run": run_parser,
        "synth": synth_parser,
        "eval": eval_parser,
        "ablate": ablate_parser,
    }
    return parser, subparsers


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    _apply_config_file(argv, parser, subparsers)
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
