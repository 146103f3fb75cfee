"""ROI motion extrapolation.

An ROI's displacement for the next frame is estimated in three steps:

1. average the macroblock motion vectors covered by the ROI, weighting each
   MB by its overlap area (pixels inherit their MB's vector, so this equals
   the per-pixel mean);
2. average the covered MBs' confidences the same way to get a single ROI
   confidence alpha;
3. blend the averaged vector with the previous frame's filtered vector:
   mv = beta * mu + (1 - beta) * prev, where beta = alpha when alpha exceeds
   the filter threshold and 0.5 otherwise. The filter is recursive: `prev`
   is the previous *filtered* output.

Non-rigid deformation is handled by splitting an ROI into a grid of sub-ROIs
that are each filtered and moved independently; the reported ROI is the
minimal bounding box of the moved sub-ROIs, clamped to the frame.

Everything here is pure; a TrackState is never mutated in place, so tracks
may be processed concurrently as long as each state is owned by one update.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyRoiError
from .motion import MotionField
from .roi import Roi, bounding_box

DEFAULT_SUB_ROI_GRID = (2, 2)
DEFAULT_FILTER_THRESHOLD = 0.7


@dataclass(frozen=True)
class SubTrack:
    """One sub-ROI and its previous filtered motion vector (pixels/frame)."""

    roi: Roi
    prev_mv: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class TrackState:
    """Extrapolation state of one tracked object across an EW."""

    track_id: int
    sub_tracks: tuple[SubTrack, ...]
    filter_threshold: float = DEFAULT_FILTER_THRESHOLD
    last_roi: Roi | None = None
    lost: bool = False


def split_sub_rois(roi: Roi, grid: tuple[int, int] = DEFAULT_SUB_ROI_GRID) -> list[Roi]:
    """Tile `roi` into a rows x cols grid of disjoint, exactly covering boxes.

    Edges are real-valued fractions of the ROI, so no area is lost to
    rounding; adjacent tiles start at bit-identical shared edge values.
    """
    rows, cols = grid
    if rows < 1 or cols < 1:
        raise ValueError(f"sub-roi grid must be at least 1x1, got {grid}")
    xs = [roi.x + roi.w * i / cols for i in range(cols + 1)]
    ys = [roi.y + roi.h * j / rows for j in range(rows + 1)]
    tiles = []
    for j in range(rows):
        for i in range(cols):
            tiles.append(Roi(xs[i], ys[j], xs[i + 1] - xs[i], ys[j + 1] - ys[j]))
    return tiles


def _overlap_weights(field: MotionField, roi: Roi) -> np.ndarray:
    """Overlap area between `roi` and each grid cell, shape (rows, cols)."""
    L = field.params.mb_size
    edges_x = np.arange(field.cols + 1) * L
    edges_y = np.arange(field.rows + 1) * L
    ov_x = np.clip(np.minimum(roi.x2, edges_x[1:]) - np.maximum(roi.x, edges_x[:-1]), 0.0, None)
    ov_y = np.clip(np.minimum(roi.y2, edges_y[1:]) - np.maximum(roi.y, edges_y[:-1]), 0.0, None)
    return ov_y[:, None] * ov_x[None, :]


def _roi_motion_stats(field: MotionField, roi: Roi) -> tuple[float, float, float]:
    weights = _overlap_weights(field, roi)
    total = weights.sum()
    if total <= 0.0:
        raise EmptyRoiError(f"roi {roi} does not overlap the {field.cols}x{field.rows} MB grid")
    # Anchor the weighted means on one covered cell: a constant field then
    # averages to its value bit-exactly (rigid translations stay rigid).
    r0, c0 = np.unravel_index(int(np.argmax(weights)), weights.shape)
    u0 = float(field.vectors[r0, c0, 0])
    v0 = float(field.vectors[r0, c0, 1])
    confidences = field.confidences
    a0 = float(confidences[r0, c0])
    mu_u = u0 + float((weights * (field.vectors[..., 0] - u0)).sum() / total)
    mu_v = v0 + float((weights * (field.vectors[..., 1] - v0)).sum() / total)
    alpha = a0 + float((weights * (confidences - a0)).sum() / total)
    return mu_u, mu_v, min(1.0, max(0.0, alpha))


def roi_average_mv(field: MotionField, roi: Roi) -> tuple[float, float]:
    """Area-weighted mean motion vector of the MBs covered by `roi`."""
    mu_u, mu_v, _ = _roi_motion_stats(field, roi)
    return mu_u, mu_v


def roi_confidence(field: MotionField, roi: Roi) -> float:
    """Area-weighted mean confidence of the MBs covered by `roi`."""
    return _roi_motion_stats(field, roi)[2]


def filtered_mv(
    mu: tuple[float, float],
    alpha: float,
    prev_mv: tuple[float, float],
    filter_threshold: float = DEFAULT_FILTER_THRESHOLD,
) -> tuple[tuple[float, float], float]:
    """Confidence-weighted recursive filter blending mu with the previous MV.

    Returns ((u, v), beta). beta = alpha when alpha > threshold, else 0.5,
    so a noisy current estimate falls back to an even blend with history.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be within [0, 1], got {alpha}")
    beta = alpha if alpha > filter_threshold else 0.5
    u = beta * mu[0] + (1.0 - beta) * prev_mv[0]
    v = beta * mu[1] + (1.0 - beta) * prev_mv[1]
    return (u, v), beta


def init_track(
    track_id: int,
    roi: Roi,
    grid: tuple[int, int] = DEFAULT_SUB_ROI_GRID,
    filter_threshold: float = DEFAULT_FILTER_THRESHOLD,
) -> TrackState:
    """Seed a track from an inference result; all filter state starts at zero."""
    subs = tuple(SubTrack(r) for r in split_sub_rois(roi, grid))
    return TrackState(track_id, subs, filter_threshold, last_roi=roi)


def extrapolate_track(
    state: TrackState, field: MotionField, frame_size: tuple[int, int]
) -> tuple[TrackState, Roi | None]:
    """Advance a track by one frame using `field`.

    Each sub-ROI is moved by its own filtered vector; the composed ROI is the
    minimal bounding box of the moved sub-ROIs intersected with the frame
    rectangle (label and score carried over). When the composed box leaves
    the frame entirely, or a sub-ROI drifts off the MB grid, the returned
    state is flagged lost and the ROI is None; the caller decides what to do
    (typically: drop the track until the next inference re-seeds it).
    """
    width, height = frame_size
    moved: list[Roi] = []
    new_subs: list[SubTrack] = []
    for sub in state.sub_tracks:
        try:
            mu_u, mu_v, alpha = _roi_motion_stats(field, sub.roi)
        except EmptyRoiError:
            return replace(state, lost=True), None
        mv, _beta = filtered_mv((mu_u, mu_v), alpha, sub.prev_mv, state.filter_threshold)
        roi = sub.roi.translated(*mv)
        new_subs.append(SubTrack(roi, mv))
        moved.append(roi)

    template = state.last_roi if state.last_roi is not None else moved[0]
    composed = replace(bounding_box(moved), label=template.label, score=template.score)
    clamped = composed.intersect(Roi(0.0, 0.0, float(width), float(height)))
    if clamped is None:
        return replace(state, sub_tracks=tuple(new_subs), lost=True), None
    new_state = TrackState(
        state.track_id, tuple(new_subs), state.filter_threshold, last_roi=clamped, lost=False
    )
    return new_state, clamped


def touched_macroblocks(roi: Roi, mb_size: int) -> int:
    """Number of grid cells a box overlaps; extrapolation cost scales with it."""
    c0 = int(np.floor(roi.x / mb_size))
    c1 = int(np.ceil(roi.x2 / mb_size))
    r0 = int(np.floor(roi.y / mb_size))
    r1 = int(np.ceil(roi.y2 / mb_size))
    return max(0, c1 - c0) * max(0, r1 - r0)
