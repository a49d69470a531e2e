"""Segmentation quality measures: MAE, structure measure, adaptive F, E-measure.

Degenerate ground-truth conventions follow the original evaluator releases
so scores stay comparable with published benchmark numbers:

* empty GT: S = 1 - mean(pred); full GT: S = mean(pred);
* E-measure with empty GT scores the complement of the prediction, with
  full GT the prediction itself;
* the adaptive F threshold is min(2 * mean(pred), 1), zero-mean predictions
  binarize to empty.

Predictions are soft maps in [0, 1] (a bool mask also works); ground truth
is strictly binary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

_EPS = float(np.finfo(np.float64).eps)


def _as_pred(pred: np.ndarray) -> np.ndarray:
    p = np.asarray(pred, dtype=np.float64)
    if p.ndim != 2:
        raise ValueError("prediction must be 2-D")
    if not np.isfinite(p).all():
        raise ValueError("prediction contains non-finite values")
    if p.min() < 0.0 or p.max() > 1.0:
        raise ValueError("prediction values must lie in [0, 1]")
    return p


def _as_gt(gt: np.ndarray) -> np.ndarray:
    g = np.asarray(gt)
    if g.dtype != bool:
        vals = np.unique(g)
        if not np.isin(vals, (0, 1)).all():
            raise ValueError("ground truth must be binary")
        g = g.astype(bool)
    if g.ndim != 2:
        raise ValueError("ground truth must be 2-D")
    return g


def _check_pair(pred: np.ndarray, gt: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    p, g = _as_pred(pred), _as_gt(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {g.shape}")
    return p, g


def mae(pred: np.ndarray, gt: np.ndarray) -> float:
    p, g = _check_pair(pred, gt)
    return float(np.abs(p - g).mean())


# -- structure measure --------------------------------------------------------


def _object_score(values: np.ndarray) -> float:
    # similarity of the (masked) prediction values inside one region
    x = float(values.mean())
    sigma_x = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return 2.0 * x / (x * x + 1.0 + sigma_x + _EPS)


def _s_object(pred: np.ndarray, gt: np.ndarray) -> float:
    u = float(gt.mean())
    fg = _object_score(pred[gt])
    bg = _object_score((1.0 - pred)[~gt])
    return u * fg + (1.0 - u) * bg


def _round_half_up(v: float) -> int:
    return int(np.floor(v + 0.5))


def _centroid_split(gt: np.ndarray) -> Tuple[int, int]:
    """Column/row split counts at the (1-indexed, rounded) GT centroid."""
    h, w = gt.shape
    total = int(gt.sum())
    if total == 0:
        return _round_half_up(w / 2.0), _round_half_up(h / 2.0)
    cols = gt.sum(axis=0).astype(np.float64)
    rows = gt.sum(axis=1).astype(np.float64)
    x_split = _round_half_up(float((cols * np.arange(1, w + 1)).sum()) / total)
    y_split = _round_half_up(float((rows * np.arange(1, h + 1)).sum()) / total)
    return x_split, y_split


def _region_ssim(pred: np.ndarray, gt: np.ndarray) -> float:
    n = pred.size
    x = float(pred.mean())
    y = float(gt.mean())
    if n > 1:
        sx = float(((pred - x) ** 2).sum()) / (n - 1)
        sy = float(((gt - y) ** 2).sum()) / (n - 1)
        sxy = float(((pred - x) * (gt - y)).sum()) / (n - 1)
    else:
        sx = sy = sxy = 0.0
    a = 4.0 * x * y * sxy
    b = (x * x + y * y) * (sx + sy)
    if a != 0.0:
        return a / (b + _EPS)
    if b == 0.0:
        return 1.0
    return 0.0


def _s_region(pred: np.ndarray, gt: np.ndarray) -> float:
    h, w = gt.shape
    x_split, y_split = _centroid_split(gt)
    area = float(h * w)
    g = gt.astype(np.float64)
    quads = (
        (slice(0, y_split), slice(0, x_split)),
        (slice(0, y_split), slice(x_split, w)),
        (slice(y_split, h), slice(0, x_split)),
        (slice(y_split, h), slice(x_split, w)),
    )
    score = 0.0
    for rows, cols in quads:
        gq = g[rows, cols]
        if gq.size == 0:
            continue
        score += (gq.size / area) * _region_ssim(pred[rows, cols], gq)
    return score


def s_measure(pred: np.ndarray, gt: np.ndarray, alpha: float = 0.5) -> float:
    """Structure measure: alpha * object similarity + (1-alpha) * region similarity."""
    p, g = _check_pair(pred, gt)
    u = float(g.mean())
    if u == 0.0:
        return 1.0 - float(p.mean())
    if u == 1.0:
        return float(p.mean())
    s = alpha * _s_object(p, g) + (1.0 - alpha) * _s_region(p, g)
    return max(s, 0.0)


# -- adaptive F-measure --------------------------------------------------------


def adaptive_f_measure(pred: np.ndarray, gt: np.ndarray, beta_sq: float = 0.3) -> float:
    """F-measure at the adaptive threshold min(2 * mean(pred), 1)."""
    p, g = _check_pair(pred, gt)
    t = min(2.0 * float(p.mean()), 1.0)
    binary = (p >= t) if t > 0.0 else (p > 0.0)
    tp = float((binary & g).sum())
    if tp == 0.0:
        return 0.0
    precision = tp / float(binary.sum())
    recall = tp / float(g.sum())
    return (1.0 + beta_sq) * precision * recall / (beta_sq * precision + recall)


# -- E-measure -----------------------------------------------------------------


def e_measure(pred: np.ndarray, gt: np.ndarray, eps: float = 1e-8) -> float:
    """Enhanced-alignment measure for a binary prediction."""
    p, g = _check_pair(pred, gt)
    if not np.isin(np.unique(p), (0.0, 1.0)).all():
        raise ValueError("e_measure expects a binary prediction (see e_measure_soft)")
    dg = g.astype(np.float64)
    if g.sum() == 0:
        enhanced = 1.0 - p
    elif (~g).sum() == 0:
        enhanced = p
    else:
        phi_p = p - p.mean()
        phi_g = dg - dg.mean()
        xi = 2.0 * phi_g * phi_p / (phi_g**2 + phi_p**2 + eps)
        enhanced = (xi + 1.0) ** 2 / 4.0
    return float(enhanced.mean())


def e_measure_soft(pred: np.ndarray, gt: np.ndarray, steps: int = 255) -> float:
    """Mean E-measure of a soft prediction over a uniform threshold sweep."""
    p, g = _check_pair(pred, gt)
    scores = []
    for t in np.linspace(0.0, 1.0, steps + 1)[1:]:
        scores.append(e_measure((p >= t).astype(np.float64), g))
    return float(np.mean(scores))


# -- dataset-level reporting ---------------------------------------------------


@dataclass
class MetricRow:
    identifier: str
    s_alpha: float
    f_beta: float
    mae: float
    e_m: float


@dataclass
class MetricReport:
    rows: List[MetricRow]

    @property
    def means(self) -> MetricRow:
        if not self.rows:
            raise ValueError("empty report")
        return MetricRow(
            identifier="mean",
            s_alpha=float(np.mean([r.s_alpha for r in self.rows])),
            f_beta=float(np.mean([r.f_beta for r in self.rows])),
            mae=float(np.mean([r.mae for r in self.rows])),
            e_m=float(np.mean([r.e_m for r in self.rows])),
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "s_alpha", "f_beta", "mae", "e_m"])
            for row in self.rows + [self.means]:
                writer.writerow(
                    [row.identifier]
                    + [f"{v:.6f}" for v in (row.s_alpha, row.f_beta, row.mae, row.e_m)]
                )

    def to_markdown(self) -> str:
        """Aligned table with the 3-decimal leading-dot benchmark style."""

        def fmt(v: float) -> str:
            text = f"{v:.3f}"
            return text[1:] if text.startswith("0.") else text

        lines = [
            "| id | s_alpha | f_beta | mae | e_m |",
            "| --- | --- | --- | --- | --- |",
        ]
        for row in self.rows + [self.means]:
            lines.append(
                f"| {row.identifier} | {fmt(row.s_alpha)} | {fmt(row.f_beta)} "
                f"| {fmt(row.mae)} | {fmt(row.e_m)} |"
            )
        return "\n".join(lines) + "\n"


def evaluate_pair(pred: np.ndarray, gt: np.ndarray, identifier: str = "") -> MetricRow:
    return MetricRow(
        identifier=identifier,
        s_alpha=s_measure(pred, gt),
        f_beta=adaptive_f_measure(pred, gt),
        mae=mae(pred, gt),
        e_m=e_measure(np.asarray(pred, dtype=np.float64).round(), gt)
        if _is_binary(pred)
        else e_measure_soft(pred, gt),
    )


def _is_binary(pred: np.ndarray) -> bool:
    vals = np.unique(np.asarray(pred, dtype=np.float64))
    return bool(np.isin(vals, (0.0, 1.0)).all())


def evaluate_pairs(
    preds: Sequence[Tuple[str, np.ndarray]],
    gts: Sequence[Tuple[str, np.ndarray]],
) -> MetricReport:
    """Per-image metrics for identifier-aligned prediction/GT lists."""
    if len(preds) != len(gts):
        raise ValueError(f"{len(preds)} predictions vs {len(gts)} ground truths")
    rows = []
    for (pid, pred), (gid, gt) in zip(
        sorted(preds, key=lambda kv: kv[0]), sorted(gts, key=lambda kv: kv[0])
    ):
        if pid != gid:
            raise ValueError(f"identifier mismatch: {pid!r} vs {gid!r}")
        rows.append(evaluate_pair(pred, gt, identifier=pid))
    return MetricReport(rows=rows)
