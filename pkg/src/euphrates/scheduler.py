"""Per-frame pipeline sequencing: inference frames vs extrapolation frames.

Frame 0 always runs inference (I-frame) and seeds one track per detection.
E-frames advance every live track through that frame's motion field. At each
subsequent I-frame the tracks are re-seeded from fresh inference results; in
adaptive mode the extrapolated predictions are first carried through the
I-frame's own motion field and compared against the inference output, and
the extrapolation window (EW) shrinks or grows based on the disagreement.

Motion fields always pair a frame with its immediate predecessor, regardless
of frame kind. The per-frame loop is inherently sequential (state-carrying);
field computation for upcoming frames could be pipelined ahead without
changing the trace.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, MissingDataError
from .extrapolate import (
    DEFAULT_FILTER_THRESHOLD,
    DEFAULT_SUB_ROI_GRID,
    TrackState,
    extrapolate_track,
    init_track,
)
from .metrics import greedy_match
from .motion import MotionField, MotionParams, estimate_motion_field
from .pixels import Frame
from .roi import Roi

I_FRAME = "I"
E_FRAME = "E"

DEFAULT_EW_MIN = 1
DEFAULT_EW_MAX = 32
DEFAULT_TAU_DIFF = 0.2
DEFAULT_K_UP = 3


# ---------------------------------------------------------------------------
# Inference provider


class TraceProvider:
    """Detections replayed from a frame-indexed trace.

    Stands in for the CNN engine: ground-truth traces give a perfect
    provider, and `noise_sigma` adds seeded Gaussian jitter to box corners
    to emulate an imperfect one. Each frame's jitter is derived from
    (seed, frame index), so results do not depend on query order.
    """

    def __init__(
        self,
        records: dict[int, list[Roi]],
        noise_sigma: float = 0.0,
        seed: int = 0,
        ops_per_inference_gop: float | None = None,
    ):
        self._records = records
        self.noise_sigma = float(noise_sigma)
        self.seed = int(seed)
        self.ops_per_inference_gop = ops_per_inference_gop

    @classmethod
    def from_file(cls, path: str | Path, **kwargs) -> "TraceProvider":
        return cls(read_detection_trace(path), **kwargs)

    def detections(self, frame_index: int) -> list[Roi]:
        if frame_index not in self._records:
            raise MissingDataError(f"no detection record for frame {frame_index}")
        boxes = self._records[frame_index]
        if self.noise_sigma <= 0.0:
            return list(boxes)
        rng = np.random.default_rng((self.seed, frame_index))
        noisy = []
        for b in boxes:
            dx, dy, dw, dh = rng.normal(0.0, self.noise_sigma, size=4)
            noisy.append(
                replace(b, x=b.x + dx, y=b.y + dy, w=max(1.0, b.w + dw), h=max(1.0, b.h + dh))
            )
        return noisy


def read_detection_trace(path: str | Path) -> dict[int, list[Roi]]:
    """Parse a JSONL detection trace: {"frame": i, "boxes": [{x,y,w,h,...}]}.

    Lines without a "frame" key (e.g. a config echo) are skipped, so result
    traces written by this package can be read back as detection traces.
    """
    records: dict[int, list[Roi]] = {}
    p = Path(path)
    if not p.is_file():
        raise MissingDataError(f"detection trace not found: {p}")
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{p}:{lineno}: invalid JSON: {e}") from None
        if "frame" not in obj:
            continue
        records[int(obj["frame"])] = [Roi.from_dict(b) for b in obj.get("boxes", [])]
    return records


def write_detection_trace(path: str | Path, records: dict[int, list[Roi]]) -> None:
    lines = []
    for frame_index in sorted(records):
        boxes = [b.to_dict() for b in records[frame_index]]
        lines.append(json.dumps({"frame": frame_index, "boxes": boxes}, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Extrapolation-window control


@dataclass(frozen=True)
class EWState:
    """Extrapolation-window controller state.

    Constant mode never mutates `ew`. Adaptive mode moves it by at most one
    per I-frame: down when the prediction/inference difference exceeds
    tau_diff, up after k_up consecutive clean comparisons.
    """

    mode: str = "constant"  # "constant" or "adaptive"
    ew: int = 1
    ew_min: int = DEFAULT_EW_MIN
    ew_max: int = DEFAULT_EW_MAX
    streak: int = 0
    tau_diff: float = DEFAULT_TAU_DIFF
    k_up: int = DEFAULT_K_UP

    def __post_init__(self):
        if self.mode not in ("constant", "adaptive"):
            raise ConfigError(f"unknown EW mode {self.mode!r}")
        if not 1 <= self.ew_min <= self.ew <= self.ew_max:
            raise ConfigError(
                f"EW {self.ew} outside bounds [{self.ew_min}, {self.ew_max}]"
            )


def prediction_diff(predicted: list[Roi], inferred: list[Roi]) -> float:
    """Disagreement between extrapolated and inferred boxes, in [0, 1].

    1 - mean IoU over greedily associated pairs, counting every unmatched box
    on either side as IoU 0. Two empty lists agree perfectly (0.0).
    """
    pairs, un_p, un_i = greedy_match(predicted, inferred)
    total = len(pairs) + len(un_p) + len(un_i)
    if total == 0:
        return 0.0
    return 1.0 - sum(s for _, _, s in pairs) / total


def _apply_diff(state: EWState, diff: float) -> EWState:
    if diff > state.tau_diff:
        return replace(state, ew=max(state.ew_min, state.ew - 1), streak=0)
    streak = state.streak + 1
    if streak >= state.k_up:
        return replace(state, ew=min(state.ew_max, state.ew + 1), streak=0)
    return replace(state, streak=streak)


def adaptive_update(state: EWState, predicted: list[Roi], inferred: list[Roi]) -> EWState:
    """EW update at an I-frame from the prediction/inference comparison."""
    return _apply_diff(state, prediction_diff(predicted, inferred))


@dataclass
class Association:
    pairs: list[tuple[int, int, float]]
    unmatched_predicted: list[int]
    unmatched_inferred: list[int]


def associate(predicted: list[Roi], inferred: list[Roi]) -> Association:
    """Greedy one-to-one association by descending IoU (IoU > 0 pairs only)."""
    pairs, un_p, un_i = greedy_match(predicted, inferred)
    return Association(pairs, un_p, un_i)


# ---------------------------------------------------------------------------
# Result trace


@dataclass(frozen=True)
class Detection:
    track_id: int
    roi: Roi

    def to_dict(self) -> dict:
        d = self.roi.to_dict()
        d["id"] = self.track_id
        return d


@dataclass(frozen=True)
class FrameRecord:
    index: int
    kind: str  # "I" or "E"
    detections: tuple[Detection, ...]
    ew: int | None = None  # EW in effect after this I-frame's decision
    diff: float | None = None  # adaptive comparison value (I-frames only)


@dataclass
class ResultTrace:
    """Per-frame pipeline output plus the effective configuration echo."""

    frames: list[FrameRecord]
    config: dict = field(default_factory=dict)
    version: str = ""

    @property
    def n_iframes(self) -> int:
        return sum(1 for f in self.frames if f.kind == I_FRAME)

    def kinds(self) -> list[str]:
        return [f.kind for f in self.frames]

    def detections_per_frame(self) -> list[list[Roi]]:
        return [[d.roi for d in f.detections] for f in self.frames]

    def to_jsonl(self) -> str:
        lines = [json.dumps({"config": self.config, "version": self.version}, sort_keys=True)]
        for f in self.frames:
            rec: dict = {
                "frame": f.index,
                "kind": f.kind,
                "boxes": [d.to_dict() for d in f.detections],
            }
            if f.ew is not None:
                rec["ew"] = f.ew
            if f.diff is not None:
                rec["diff"] = f.diff
            lines.append(json.dumps(rec, sort_keys=True))
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def load(cls, path: str | Path) -> "ResultTrace":
        frames: list[FrameRecord] = []
        config: dict = {}
        version = ""
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "frame" not in obj:
                config = obj.get("config", {})
                version = obj.get("version", "")
                continue
            dets = tuple(
                Detection(int(b.get("id", i)), Roi.from_dict(b))
                for i, b in enumerate(obj.get("boxes", []))
            )
            frames.append(
                FrameRecord(
                    int(obj["frame"]),
                    obj.get("kind", I_FRAME),
                    dets,
                    ew=obj.get("ew"),
                    diff=obj.get("diff"),
                )
            )
        frames.sort(key=lambda f: f.index)
        return cls(frames, config, version)


# ---------------------------------------------------------------------------
# Pipeline


@dataclass(frozen=True)
class PipelineConfig:
    mode: str = "ew:4"  # "ew:N" or "adaptive"
    motion: MotionParams = field(default_factory=MotionParams)
    sub_roi_grid: tuple[int, int] = DEFAULT_SUB_ROI_GRID
    filter_threshold: float = DEFAULT_FILTER_THRESHOLD
    tau_diff: float = DEFAULT_TAU_DIFF
    k_up: int = DEFAULT_K_UP
    ew_min: int = DEFAULT_EW_MIN
    ew_max: int = DEFAULT_EW_MAX
    initial_ew: int = 1  # adaptive mode's starting window

    def initial_ew_state(self) -> EWState:
        if self.mode == "adaptive":
            return EWState(
                "adaptive",
                ew=self.initial_ew,
                ew_min=self.ew_min,
                ew_max=self.ew_max,
                tau_diff=self.tau_diff,
                k_up=self.k_up,
            )
        if self.mode.startswith("ew:"):
            try:
                n = int(self.mode[3:])
            except ValueError:
                raise ConfigError(f"invalid mode {self.mode!r}, expected 'ew:N' or 'adaptive'") from None
            if n < 1:
                raise ConfigError(f"constant EW must be >= 1, got {n}")
            return EWState("constant", ew=n, ew_min=n, ew_max=n)
        raise ConfigError(f"invalid mode {self.mode!r}, expected 'ew:N' or 'adaptive'")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "motion": {
                "mb_size": self.motion.mb_size,
                "search_range": self.motion.search_range,
                "algorithm": self.motion.algorithm,
            },
            "sub_roi_grid": list(self.sub_roi_grid),
            "filter_threshold": self.filter_threshold,
            "adaptive": {
                "tau_diff": self.tau_diff,
                "k_up": self.k_up,
                "ew_min": self.ew_min,
                "ew_max": self.ew_max,
                "initial_ew": self.initial_ew,
            },
            "sub_roi_persistence": "across-ew",  # re-split only at I-frames
        }


def run_pipeline(
    provider: TraceProvider,
    cfg: PipelineConfig,
    frames: Sequence[Frame] | None = None,
    fields: Sequence[MotionField] | None = None,
) -> ResultTrace:
    """Run the I/E-frame pipeline and return its result trace.

    Exactly one of `frames` (motion estimated on the fly against each
    frame's predecessor) or `fields` (precomputed; fields[t-1] pairs frames
    t-1 and t) must be given. The trace is deterministic for identical
    inputs and configuration.
    """
    if (frames is None) == (fields is None):
        raise ConfigError("provide exactly one of frames= or fields=")
    if frames is not None:
        n = len(frames)
        size = (frames[0].width, frames[0].height) if n else (0, 0)
    else:
        n = len(fields) + 1
        size = (fields[0].width, fields[0].height) if fields else (0, 0)
    if n < 1:
        raise ConfigError("sequence must contain at least one frame")

    def field_for(t: int) -> MotionField:
        if fields is not None:
            f = fields[t - 1]
            if f is None:
                raise MissingDataError(f"no motion field for frame {t}")
            return f
        return estimate_motion_field(frames[t - 1], frames[t], cfg.motion)

    ew_state = cfg.initial_ew_state()
    adaptive = ew_state.mode == "adaptive"
    tracks: list[TrackState] = []
    next_id = 0
    next_iframe = 0
    records: list[FrameRecord] = []

    for t in range(n):
        if t == next_iframe:
            inferred = provider.detections(t)
            diff = None
            if adaptive and t > 0:
                carried = field_for(t)
                predicted = []
                for tr in tracks:
                    _, p = extrapolate_track(tr, carried, size)
                    if p is not None:
                        predicted.append(p)
                diff = prediction_diff(predicted, inferred)
                ew_state = _apply_diff(ew_state, diff)
            dets = []
            new_tracks = []
            for r in inferred:
                new_tracks.append(init_track(next_id, r, cfg.sub_roi_grid, cfg.filter_threshold))
                dets.append(Detection(next_id, r))
                next_id += 1
            tracks = new_tracks
            records.append(FrameRecord(t, I_FRAME, tuple(dets), ew=ew_state.ew, diff=diff))
            next_iframe = t + ew_state.ew
        else:
            f = field_for(t)
            dets = []
            survivors = []
            for tr in tracks:
                new_state, roi = extrapolate_track(tr, f, size)
                if roi is None:
                    continue  # lost; next I-frame re-seeds
                survivors.append(new_state)
                dets.append(Detection(new_state.track_id, roi))
            tracks = survivors
            records.append(FrameRecord(t, E_FRAME, tuple(dets)))

    return ResultTrace(records, config=cfg.to_dict())
