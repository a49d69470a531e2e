"""Benchmark execution: per-image pipeline runs, artifact emission, reports.

Per-image failures are recorded and the run continues; callers decide what
to do with the failure rate (the CLI exits nonzero above a 10% budget so a
flaky remote backend does not hide systematic breakage).

Artifacts per run: ``masks/<id>.png`` (8-bit 0/255), ``report.csv`` and
``report.md`` (per-image metrics plus a dataset-summary row),
``summary.txt`` (deterministic totals), ``diagnostics.jsonl`` (one record
per image, including timings), and ``overlays/<id>.png`` in diagnostic
mode: foreground points red, background points blue, boxes outlined.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image, ImageDraw

from ..backends.base import BackendConfig
from ..backends.remote import RemoteMllm, RemoteVfm, RemoteVlm
from ..backends.synthetic import SyntheticMllm, SyntheticVfm, SyntheticVlm, render_scene_image
from ..geometry import ImageRef, mask_iou
from ..metrics import MetricReport, evaluate_pair
from ..point_prompts import MODE_CONSENSUS_BASELINE, REGION_GLOBAL, PointPromptConfig
from ..prompt_chain import TaskPrompt
from ..voting import PipelineConfig, PipelineDiagnostics, run_pipeline
from .dataset import save_mask
from .synth import SuiteEntry

logger = logging.getLogger(__name__)

FAILURE_BUDGET = 0.10


@dataclass
class RunFlags:
    wo_msdcot: bool = False
    wo_rdvp: bool = False
    consensus_baseline: bool = False
    global_region: bool = False
    wo_tmg1: bool = False
    wo_tmg2: bool = False


@dataclass
class RunConfig:
    out_dir: Path
    mllm: BackendConfig = field(default_factory=BackendConfig)
    vlm: BackendConfig = field(default_factory=BackendConfig)
    vfm: BackendConfig = field(default_factory=BackendConfig)
    prompts: Optional[List[str]] = None
    repeats: int = 3
    points: PointPromptConfig = field(default_factory=PointPromptConfig)
    flags: RunFlags = field(default_factory=RunFlags)
    workers: int = 1
    seed: int = 0
    overlays: bool = False
    box_margin: int = 0

    def pipeline_config(self) -> PipelineConfig:
        mode = (
            MODE_CONSENSUS_BASELINE
            if (self.flags.consensus_baseline or self.flags.wo_rdvp)
            else self.points.mode
        )
        region = (
            REGION_GLOBAL
            if (self.flags.global_region or self.flags.wo_rdvp)
            else self.points.region
        )
        points = replace(self.points, mode=mode, region=region)
        prompt = TaskPrompt(self.prompts) if self.prompts else TaskPrompt()
        return PipelineConfig(
            prompt=prompt,
            repeats=self.repeats,
            points=points,
            skip_decomposition=self.flags.wo_msdcot,
            skip_coarse_stage=self.flags.wo_tmg1,
            skip_fine_stage=self.flags.wo_tmg2,
            box_margin=self.box_margin,
        )


@dataclass
class WorkItem:
    """One image to process; `build` defers anything that can fail."""

    identifier: str
    build: Callable[[], Tuple[ImageRef, Tuple]]  # -> (image, (mllm, vlm, vfm))
    gt: Optional[np.ndarray] = None


@dataclass
class RunResult:
    out_dir: Path
    total: int
    failures: List[Tuple[str, str]]
    report: Optional[MetricReport]
    ious: Dict[str, float]

    @property
    def over_failure_budget(self) -> bool:
        return self.total > 0 and len(self.failures) > FAILURE_BUDGET * self.total

    @property
    def mean_iou(self) -> Optional[float]:
        if not self.ious:
            return None
        return float(np.mean(sorted(self.ious.values())))


def items_from_scenes(entries: Sequence[SuiteEntry]) -> List[WorkItem]:
    items = []
    for entry in entries:

        def build(entry=entry):
            scene = entry.build_scene()
            image = render_scene_image(scene)
            return image, (SyntheticMllm(scene), SyntheticVlm(scene), SyntheticVfm(scene))

        gt = entry.gt if entry.gt.size > 1 else None
        items.append(WorkItem(identifier=entry.identifier, build=build, gt=gt))
    return items


def items_from_dataset(
    pairs: Sequence[Tuple[ImageRef, np.ndarray]], config: RunConfig
) -> List[WorkItem]:
    mllm = RemoteMllm(config.mllm)
    vlm = RemoteVlm(config.vlm)
    vfm = RemoteVfm(config.vfm)
    items = []
    for image, gt in pairs:

        def build(image=image):
            return image, (mllm, vlm, vfm)

        items.append(WorkItem(identifier=image.identifier, build=build, gt=gt))
    return items


def _draw_overlay(image: ImageRef, diagnostics: PipelineDiagnostics, path: Path) -> None:
    canvas = Image.fromarray(image.pixels).convert("RGB")
    draw = ImageDraw.Draw(canvas)
    selected = next(
        (o for o in diagnostics.outcomes if o.index == diagnostics.selected_index), None
    )
    if selected is None or selected.fine is None:
        canvas.save(path)
        return
    if selected.coarse_box is not None:
        x0, y0, x1, y1 = selected.coarse_box.as_tuple()
        draw.rectangle([x0, y0, x1 - 1, y1 - 1], outline=(255, 200, 0))
    x0, y0, x1, y1 = selected.fine.box_used.as_tuple()
    draw.rectangle([x0, y0, x1 - 1, y1 - 1], outline=(0, 255, 0))
    for x, y in selected.fine.prompt.fg_points:
        draw.ellipse([x - 2, y - 2, x + 2, y + 2], fill=(255, 0, 0))
    for x, y in selected.fine.prompt.bg_points:
        draw.ellipse([x - 2, y - 2, x + 2, y + 2], fill=(0, 0, 255))
    canvas.save(path)


def _process_item(
    item: WorkItem, config: RunConfig, pipeline_cfg: PipelineConfig
) -> Tuple[str, Optional[np.ndarray], Optional[Dict], Optional[str], Optional[ImageRef], Optional[PipelineDiagnostics]]:
    try:
        image, (mllm, vlm, vfm) = item.build()
        mask, diagnostics = run_pipeline(image, pipeline_cfg, mllm, vlm, vfm)
        record = {"id": item.identifier, "status": "ok", **diagnostics.to_record()}
        return item.identifier, mask, record, None, image, diagnostics
    except Exception as exc:  # noqa: BLE001 - the failure budget handles these
        error = f"{type(exc).__name__}: {exc}"
        record = {"id": item.identifier, "status": "failed", "error": error}
        return item.identifier, None, record, error, None, None


def run_benchmark(items: Sequence[WorkItem], config: RunConfig) -> RunResult:
    out_dir = Path(config.out_dir)
    masks_dir = out_dir / "masks"
    masks_dir.mkdir(parents=True, exist_ok=True)
    overlays_dir = out_dir / "overlays"
    if config.overlays:
        overlays_dir.mkdir(parents=True, exist_ok=True)

    pipeline_cfg = config.pipeline_config()
    pipeline_cfg.workers = 1  # repetition-level parallelism stays inside workers
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(
                pool.map(lambda it: _process_item(it, config, pipeline_cfg), items)
            )
    else:
        results = [_process_item(it, config, pipeline_cfg) for it in items]

    failures: List[Tuple[str, str]] = []
    rows = []
    ious: Dict[str, float] = {}
    records = []
    gt_by_id = {item.identifier: item.gt for item in items}
    for identifier, mask, record, error, image, diagnostics in results:
        records.append(record)
        if error is not None:
            failures.append((identifier, error))
            logger.warning("image %s failed: %s", identifier, error)
            continue
        save_mask(masks_dir / f"{identifier}.png", mask)
        if config.overlays and image is not None and diagnostics is not None:
            _draw_overlay(image, diagnostics, overlays_dir / f"{identifier}.png")
        gt = gt_by_id.get(identifier)
        if gt is not None:
            rows.append(evaluate_pair(mask.astype(np.float64), gt, identifier=identifier))
            ious[identifier] = mask_iou(mask, gt)

    report = MetricReport(rows=sorted(rows, key=lambda r: r.identifier)) if rows else None
    result = RunResult(
        out_dir=out_dir,
        total=len(items),
        failures=sorted(failures),
        report=report,
        ious=ious,
    )
    _write_artifacts(result, records, config)
    return result


def _write_artifacts(result: RunResult, records: List[Dict], config: RunConfig) -> None:
    out_dir = result.out_dir
    with open(out_dir / "diagnostics.jsonl", "w") as fh:
        for record in sorted(records, key=lambda r: r.get("id", "")):
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    if result.report is not None:
        result.report.write_csv(out_dir / "report.csv")
        (out_dir / "report.md").write_text(result.report.to_markdown())
    lines = [
        f"images: {result.total}",
        f"succeeded: {result.total - len(result.failures)}",
        f"failed: {len(result.failures)}",
    ]
    if result.report is not None:
        means = result.report.means
        lines.append(
            "means: "
            f"s_alpha={means.s_alpha:.3f} f_beta={means.f_beta:.3f} "
            f"mae={means.mae:.3f} e_m={means.e_m:.3f}"
        )
    if result.ious:
        lines.append(f"mean_iou: {result.mean_iou:.3f}")
    for identifier, error in result.failures:
        lines.append(f"failure: {identifier}: {error}")
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n")


ABLATION_VARIANTS: List[Tuple[str, RunFlags]] = [
    ("wo-msdcot-rdvp", RunFlags(wo_msdcot=True, wo_rdvp=True)),
    ("wo-msdcot", RunFlags(wo_msdcot=True)),
    ("wo-rdvp", RunFlags(wo_rdvp=True)),
    ("wo-tmg1", RunFlags(wo_tmg1=True)),
    ("wo-tmg2", RunFlags(wo_tmg2=True)),
    ("full", RunFlags()),
]


def run_ablation_matrix(
    items_factory: Callable[[], Sequence[WorkItem]],
    config: RunConfig,
    variants: Sequence[Tuple[str, RunFlags]] = tuple(ABLATION_VARIANTS),
    repeat_sweep: Optional[Sequence[int]] = None,
) -> List[Dict]:
    """One benchmark row per ablation variant (or per repetition count)."""
    rows = []
    runs: List[Tuple[str, RunFlags, int]]
    if repeat_sweep:
        runs = [(f"repeats-{i}", config.flags, i) for i in repeat_sweep]
    else:
        runs = [(name, flags, config.repeats) for name, flags in variants]
    for name, flags, repeats in runs:
        sub = replace(
            config,
            flags=flags,
            repeats=repeats,
            out_dir=Path(config.out_dir) / name,
        )
        result = run_benchmark(items_factory(), sub)
        row: Dict = {
            "variant": name,
            "images": result.total,
            "failed": len(result.failures),
        }
        if result.report is not None:
            means = result.report.means
            row.update(
                s_alpha=round(means.s_alpha, 6),
                f_beta=round(means.f_beta, 6),
                mae=round(means.mae, 6),
                e_m=round(means.e_m, 6),
            )
        if result.mean_iou is not None:
            row["mean_iou"] = round(result.mean_iou, 6)
        rows.append(row)
    return rows
