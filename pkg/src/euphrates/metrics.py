"""Accuracy metrics: IoU, average precision, success curves, op counts.

Average precision here is the plain ratio TP / (TP + FP) over all detections
at a fixed IoU threshold, with one-to-one greedy matching by descending IoU.
This is deliberately not the ranked PR-curve AP used by COCO-style tooling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .roi import Roi

DEFAULT_THRESHOLDS = tuple(i / 20 for i in range(21))  # 0.00, 0.05, ..., 1.00


@dataclass(frozen=True)
class EvalConfig:
    """IoU thresholds (sorted, within [0, 1]); matching is greedy one-to-one."""

    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS

    def __post_init__(self):
        ts = self.thresholds
        if any(not 0.0 <= t <= 1.0 for t in ts):
            raise ValueError("thresholds must lie within [0, 1]")
        if list(ts) != sorted(ts):
            raise ValueError("thresholds must be sorted ascending")


def iou(a: Roi, b: Roi) -> float:
    """Intersection over union of two boxes; 0 when disjoint.

    Areas are derived from the same corner coordinates as the intersection,
    which keeps iou(x, x) == 1.0 and the [0, 1] bounds exact under floating
    point.
    """
    ax2, ay2, bx2, by2 = a.x2, a.y2, b.x2, b.y2
    x1 = max(a.x, b.x)
    y1 = max(a.y, b.y)
    x2 = min(ax2, bx2)
    y2 = min(ay2, by2)
    if x2 <= x1 or y2 <= y1:
        return 0.0
    inter = (x2 - x1) * (y2 - y1)
    area_a = (ax2 - a.x) * (ay2 - a.y)
    area_b = (bx2 - b.x) * (by2 - b.y)
    union = area_a + area_b - inter
    return inter / union


def greedy_match(
    a_boxes: list[Roi], b_boxes: list[Roi]
) -> tuple[list[tuple[int, int, float]], list[int], list[int]]:
    """One-to-one matching by descending IoU; only pairs with IoU > 0 pair up.

    Returns (pairs, unmatched_a, unmatched_b) where pairs are
    (index_a, index_b, iou). Equal-IoU ties resolve by lowest indices, which
    keeps the result deterministic and independent of input ordering quirks.
    """
    candidates = []
    for i, a in enumerate(a_boxes):
        for j, b in enumerate(b_boxes):
            s = iou(a, b)
            if s > 0.0:
                candidates.append((-s, i, j))
    candidates.sort()
    used_a: set[int] = set()
    used_b: set[int] = set()
    pairs: list[tuple[int, int, float]] = []
    for neg_s, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((i, j, -neg_s))
    unmatched_a = [i for i in range(len(a_boxes)) if i not in used_a]
    unmatched_b = [j for j in range(len(b_boxes)) if j not in used_b]
    return pairs, unmatched_a, unmatched_b


def average_precision(
    detections: list[list[Roi]], ground_truth: list[list[Roi]], threshold: float
) -> float:
    """TP / (TP + FP) over all frames at one IoU threshold.

    A detection is a true positive when its one-to-one matched ground-truth
    IoU is strictly above `threshold`; everything else (including unmatched
    detections) is a false positive. Returns 0.0 when nothing was detected.
    """
    if len(detections) != len(ground_truth):
        raise ValueError(
            f"frame count mismatch: {len(detections)} detection frames vs "
            f"{len(ground_truth)} ground-truth frames"
        )
    tp = 0
    total = 0
    for dets, gts in zip(detections, ground_truth):
        total += len(dets)
        pairs, _, _ = greedy_match(dets, gts)
        tp += sum(1 for _, _, s in pairs if s > threshold)
    if total == 0:
        return 0.0
    return tp / total


def ap_curve(
    detections: list[list[Roi]],
    ground_truth: list[list[Roi]],
    config: EvalConfig | None = None,
) -> list[tuple[float, float]]:
    cfg = config or EvalConfig()
    return [(t, average_precision(detections, ground_truth, t)) for t in cfg.thresholds]


def success_curve(
    predictions: list[Roi | None],
    ground_truth: list[Roi],
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS,
) -> list[tuple[float, float]]:
    """Single-object tracking protocol: fraction of frames with IoU > t.

    `predictions` may contain None for frames where the tracker lost the
    object; those count as IoU 0.
    """
    if len(predictions) != len(ground_truth):
        raise ValueError(
            f"frame count mismatch: {len(predictions)} predictions vs "
            f"{len(ground_truth)} ground-truth frames"
        )
    scores = [iou(p, g) if p is not None else 0.0 for p, g in zip(predictions, ground_truth)]
    n = len(scores)
    curve = []
    for t in thresholds:
        rate = sum(1 for s in scores if s > t) / n if n else 0.0
        curve.append((t, rate))
    return curve


def ops_count(algorithm: str, mb_size: int, search_range: int) -> int:
    """Arithmetic operations per macroblock of the given block-matching search.

    Exhaustive search evaluates the full window: L^2 * (2d+1)^2. Three-step
    search evaluates the center once plus 8 candidates per halving round:
    L^2 * (1 + 8 * ceil(log2(d+1))), which is L^2 * (1 + 8 * log2(d+1)) for
    the usual d = 2^k - 1.
    """
    if mb_size < 1:
        raise ValueError(f"mb_size must be positive, got {mb_size}")
    if search_range < 0:
        raise ValueError(f"search_range must be non-negative, got {search_range}")
    L2 = mb_size * mb_size
    if algorithm == "es":
        return L2 * (2 * search_range + 1) ** 2
    if algorithm == "tss":
        rounds = math.ceil(math.log2(search_range + 1)) if search_range > 0 else 0
        return L2 * (1 + 8 * rounds)
    raise ValueError(f"unknown algorithm {algorithm!r}")
