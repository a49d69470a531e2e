"""Deterministic synthetic scene suites for offline verification.

Scene geometry is constructed so that the noise-free pipeline recovers the
planted region exactly:

* components are ellipses or corner-clipped squares, never full
  rectangles, so every governing box contains background pixels for the
  background stream to latch onto;
* multi-component scenes use small, closely spaced components, keeping
  one selected foreground point per component under the default cap and
  spacing, and keeping the union box the best-IoU candidate so the fine
  stage sees every component.

The generator asserts both properties instead of trusting the math.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..backends.synthetic import SyntheticScene, render_scene_image, stable_hash
from ..geometry import connected_components, max_iou_box, tight_box
from .dataset import DatasetSpec, save_mask

SUITE_SCHEMA = "camoseg-synthetic-suite-v1"

# (object word, object phrase, environment word, environment phrase);
# the word always occurs inside its phrase so heatmap matching stays exact
VOCABULARY = [
    ("frog", "a leaf-camouflaged frog", "ground", "a leaf-covered ground"),
    ("snake", "a sand-colored snake", "sand", "a dry sandy riverbed"),
    ("moth", "a bark-patterned moth", "bark", "a rough pine bark"),
    ("owl", "a speckled gray owl", "trunk", "a lichen-covered trunk"),
    ("crab", "a pebble-like crab", "shore", "a pebble-strewn shore"),
    ("spider", "a dust-brown spider", "leaves", "a drift of dry leaves"),
]

_MARGIN = 3


def _ellipse(height: int, width: int, cy: int, cx: int, ay: int, ax: int) -> np.ndarray:
    yy, xx = np.ogrid[:height, :width]
    return ((yy - cy) / ay) ** 2 + ((xx - cx) / ax) ** 2 <= 1.0


def _clipped_square(height: int, width: int, y0: int, x0: int, k: int) -> np.ndarray:
    """k x k square minus its four corner pixels."""
    region = np.zeros((height, width), dtype=bool)
    region[y0 : y0 + k, x0 : x0 + k] = True
    for dy in (0, k - 1):
        for dx in (0, k - 1):
            region[y0 + dy, x0 + dx] = False
    return region


def _single_component_region(rng: np.random.Generator) -> np.ndarray:
    for _ in range(100):
        frame = int(rng.integers(48, 113))
        if rng.random() < 0.7:
            semi_hi = min(int(0.31 * frame), (frame - 2 * _MARGIN - 1) // 2)
            ax = int(rng.integers(4, max(5, semi_hi) + 1))
            ay = int(rng.integers(4, max(5, semi_hi) + 1))
            cx = int(rng.integers(_MARGIN + ax, frame - _MARGIN - ax))
            cy = int(rng.integers(_MARGIN + ay, frame - _MARGIN - ay))
            region = _ellipse(frame, frame, cy, cx, ay, ax)
        else:
            k = int(rng.integers(7, max(8, int(frame * 0.45)) + 1))
            y0 = int(rng.integers(_MARGIN, frame - _MARGIN - k))
            x0 = int(rng.integers(_MARGIN, frame - _MARGIN - k))
            region = _clipped_square(frame, frame, y0, x0, k)
        fraction = region.sum() / region.size
        if 0.02 <= fraction <= 0.30:
            return region
    raise RuntimeError("could not place a single-component region")


def _multi_component_region(rng: np.random.Generator) -> np.ndarray:
    count = int(rng.integers(2, 4))
    k = 5
    gap = int(rng.integers(7, 9))
    strip = count * k + (count - 1) * gap
    frame_hi = 45 if count == 2 else 56
    frame_lo = strip + 2 * _MARGIN
    frame = int(rng.integers(frame_lo, frame_hi + 1))
    horizontal = bool(rng.integers(0, 2))
    if horizontal:
        y0 = int(rng.integers(_MARGIN, frame - _MARGIN - k + 1))
        x0 = int(rng.integers(_MARGIN, frame - _MARGIN - strip + 1))
        offsets = [(y0, x0 + i * (k + gap)) for i in range(count)]
    else:
        y0 = int(rng.integers(_MARGIN, frame - _MARGIN - strip + 1))
        x0 = int(rng.integers(_MARGIN, frame - _MARGIN - k + 1))
        offsets = [(y0 + i * (k + gap), x0) for i in range(count)]
    region = np.zeros((frame, frame), dtype=bool)
    for oy, ox in offsets:
        region |= _clipped_square(frame, frame, oy, ox, k)
    return region


def _check_recoverable(region: np.ndarray) -> None:
    _, count = connected_components(region)
    assert 1 <= count <= 3, f"unexpected component count {count}"
    union_box = tight_box(region)
    best = max_iou_box(region)
    assert best.as_tuple() == union_box.as_tuple(), (
        "refined box would truncate the region: "
        f"{best.as_tuple()} vs {union_box.as_tuple()}"
    )


def generate_scene(identifier: str, sigma: float, seed: int) -> SyntheticScene:
    rng = np.random.default_rng(stable_hash(seed, identifier, "geometry"))
    region = (
        _single_component_region(rng) if rng.random() < 0.6 else _multi_component_region(rng)
    )
    _check_recoverable(region)
    obj_word, obj_phrase, env_word, env_phrase = VOCABULARY[
        int(rng.integers(0, len(VOCABULARY)))
    ]
    return SyntheticScene(
        identifier=identifier,
        region=region,
        object_word=obj_word,
        object_phrase=obj_phrase,
        environment_word=env_word,
        environment_phrase=env_phrase,
        sigma=sigma,
        seed=stable_hash(seed, identifier, "scene") % (2**31),
    )


def make_synthetic_suite(
    count: int,
    noise_levels: Sequence[float] = (0.0,),
    seed: int = 0,
    out_dir: Optional[Path] = None,
) -> Tuple[List[SyntheticScene], Optional[DatasetSpec]]:
    """Generate `count` scenes, cycling the noise levels; optionally persist.

    On disk the suite is ``images/<id>.png``, ``gt/<id>.png`` and a
    ``scenes.json`` sidecar carrying the text metadata each scene's
    synthetic backends need. Output is byte-deterministic given the seed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if not noise_levels:
        raise ValueError("at least one noise level is required")
    scenes = []
    for i in range(count):
        sigma = float(noise_levels[i % len(noise_levels)])
        scenes.append(generate_scene(f"scene_{i:04d}", sigma, seed))
    spec = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        images_dir = out_dir / "images"
        gt_dir = out_dir / "gt"
        images_dir.mkdir(parents=True, exist_ok=True)
        gt_dir.mkdir(parents=True, exist_ok=True)
        entries = []
        for scene in scenes:
            image = render_scene_image(scene)
            from PIL import Image

            Image.fromarray(image.pixels).save(images_dir / f"{scene.identifier}.png")
            save_mask(gt_dir / f"{scene.identifier}.png", scene.region)
            entries.append(scene_to_entry(scene))
        manifest = {"schema": SUITE_SCHEMA, "seed": seed, "scenes": entries}
        (out_dir / "scenes.json").write_text(json.dumps(manifest, indent=2) + "\n")
        spec = DatasetSpec(images_dir=images_dir, gt_dir=gt_dir, name=out_dir.name)
    return scenes, spec


def scene_to_entry(scene: SyntheticScene) -> dict:
    return {
        "id": scene.identifier,
        "width": scene.width,
        "height": scene.height,
        "sigma": scene.sigma,
        "seed": scene.seed,
        "object_word": scene.object_word,
        "object_phrase": scene.object_phrase,
        "environment_word": scene.environment_word,
        "environment_phrase": scene.environment_phrase,
    }


@dataclass
class SuiteEntry:
    """One stored scene: metadata plus its ground-truth mask."""

    metadata: dict
    gt: np.ndarray

    @property
    def identifier(self) -> str:
        return str(self.metadata.get("id", ""))

    def build_scene(self) -> SyntheticScene:
        meta = self.metadata
        return SyntheticScene(
            identifier=str(meta["id"]),
            region=self.gt,
            object_word=str(meta["object_word"]),
            object_phrase=str(meta["object_phrase"]),
            environment_word=str(meta["environment_word"]),
            environment_phrase=str(meta["environment_phrase"]),
            sigma=float(meta["sigma"]),
            seed=int(meta["seed"]),
        )


def load_synthetic_suite(suite_dir: Path) -> List[SuiteEntry]:
    """Read a stored suite back; scene validity is checked lazily per image."""
    from .dataset import load_mask

    suite_dir = Path(suite_dir)
    manifest_path = suite_dir / "scenes.json"
    if not manifest_path.is_file():
        raise FileNotFoundError(f"missing scene manifest: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("schema") != SUITE_SCHEMA:
        raise ValueError(f"unknown suite schema {manifest.get('schema')!r}")
    entries = []
    for meta in manifest.get("scenes", []):
        gt_path = suite_dir / "gt" / f"{meta.get('id')}.png"
        gt = load_mask(gt_path) if gt_path.is_file() else np.zeros((1, 1), bool)
        entries.append(SuiteEntry(metadata=meta, gt=gt))
    return entries
