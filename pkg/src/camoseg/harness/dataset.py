"""Dataset ingestion for the COD10K/CAMO/CHAMELEON image + mask layout.

Images and ground-truth masks pair by filename stem; 8-bit masks binarize
at 128. Problems (unpaired files, dimension mismatches) are reported and
skipped instead of aborting the run.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from PIL import Image

from ..geometry import ImageRef

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")
GT_THRESHOLD = 128


@dataclass
class DatasetSpec:
    images_dir: Path
    gt_dir: Path
    name: str = ""
    expected_count: Optional[int] = None


def load_image(path: Path, identifier: Optional[str] = None) -> ImageRef:
    with Image.open(path) as img:
        pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return ImageRef(identifier=identifier or path.stem, pixels=pixels)


def load_mask(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        gray = np.asarray(img.convert("L"))
    return gray >= GT_THRESHOLD


def load_soft_map(path: Path) -> np.ndarray:
    """8-bit grayscale as a [0, 1] soft map (for evaluating prediction dirs)."""
    with Image.open(path) as img:
        gray = np.asarray(img.convert("L"), dtype=np.float64)
    return gray / 255.0


def save_mask(path: Path, mask: np.ndarray) -> None:
    data = (np.asarray(mask, dtype=bool).astype(np.uint8)) * 255
    Image.fromarray(data, mode="L").save(path)


def _index_by_stem(directory: Path) -> dict:
    index = {}
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() in IMAGE_EXTENSIONS:
            index.setdefault(path.stem, path)
    return index


def load_dataset(spec: DatasetSpec) -> Tuple[List[Tuple[ImageRef, np.ndarray]], List[str]]:
    """Identifier-sorted (image, gt) pairs plus a list of problem strings."""
    images_dir, gt_dir = Path(spec.images_dir), Path(spec.gt_dir)
    if not images_dir.is_dir():
        raise FileNotFoundError(f"images directory missing: {images_dir}")
    if not gt_dir.is_dir():
        raise FileNotFoundError(f"ground-truth directory missing: {gt_dir}")
    images = _index_by_stem(images_dir)
    gts = _index_by_stem(gt_dir)
    problems = []
    pairs = []
    for stem in sorted(set(images) | set(gts)):
        if stem not in images:
            problems.append(f"{stem}: ground truth without an image")
            continue
        if stem not in gts:
            problems.append(f"{stem}: image without ground truth")
            continue
        image = load_image(images[stem], identifier=stem)
        gt = load_mask(gts[stem])
        if gt.shape != (image.height, image.width):
            problems.append(
                f"{stem}: dimension mismatch image {image.width}x{image.height} "
                f"vs gt {gt.shape[1]}x{gt.shape[0]}"
            )
            continue
        pairs.append((image, gt))
    if spec.expected_count is not None and len(pairs) != spec.expected_count:
        problems.append(f"expected {spec.expected_count} pairs, loaded {len(pairs)}")
    return pairs, problems
