"""Frame ingestion and synthetic test sequences.

Frames are single-channel 8-bit luminance images. Two on-disk formats are
supported: binary PGM (P5, maxval 255) and headerless raw Y8 with dimensions
supplied out of band. Frame sequences are directories of zero-padded,
numerically ordered files.

All operations here are pure and safe to call from multiple threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, FrameFormatError
from .roi import Roi

FLAT_BACKGROUND_VALUE = 128


@dataclass(frozen=True, eq=False)
class Frame:
    """Single-channel 8-bit image; `pixels` has shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if not isinstance(px, np.ndarray) or px.ndim != 2:
            raise FrameFormatError("frame pixels must be a 2-D numpy array")
        if px.dtype != np.uint8:
            raise FrameFormatError(f"frame pixels must be uint8, got dtype={px.dtype}")
        if px.size == 0:
            raise FrameFormatError("frame must have at least one pixel")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_bytes(cls, width: int, height: int, payload: bytes) -> "Frame":
        expected = width * height
        if len(payload) != expected:
            raise FrameFormatError(
                f"payload size mismatch: declared {width}x{height} needs "
                f"{expected} bytes, got {len(payload)}"
            )
        px = np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy()
        return cls(px)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


# ---------------------------------------------------------------------------
# File I/O


def _parse_pgm(data: bytes, path: str) -> Frame:
    # P5 header: magic, width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed, then a single whitespace byte before the payload.
    if len(data) < 2 or data[:1] != b"P":
        raise FrameFormatError(f"{path}: not a PGM file (missing 'P' magic)")
    magic = data[:2]
    if magic != b"P5":
        raise FrameFormatError(f"{path}: unsupported PGM magic {magic!r}, only binary P5 is supported")

    pos = 2
    tokens: list[int] = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            if eol == -1:
                raise FrameFormatError(f"{path}: unterminated comment in header")
            pos = eol + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tok = data[start:pos]
        if not tok:
            raise FrameFormatError(f"{path}: truncated header, expected 3 numeric fields")
        if not tok.isdigit():
            raise FrameFormatError(f"{path}: malformed header field {tok!r}")
        tokens.append(int(tok))
    pos += 1  # exactly one whitespace byte separates header and payload

    width, height, maxval = tokens
    if width <= 0 or height <= 0:
        raise FrameFormatError(f"{path}: non-positive dimensions {width}x{height}")
    if maxval != 255:
        raise FrameFormatError(f"{path}: unsupported maxval {maxval}, only 255 is supported")
    payload = data[pos:]
    if len(payload) != width * height:
        raise FrameFormatError(
            f"{path}: payload size mismatch: header says {width}x{height} "
            f"({width * height} bytes), payload has {len(payload)}"
        )
    return Frame.from_bytes(width, height, payload)


def load_frame(
    path: str | Path,
    format: str | None = None,
    width: int | None = None,
    height: int | None = None,
) -> Frame:
    """Load a frame from `path`.

    `format` is "pgm" or "raw"; when None it is inferred from the extension
    (.pgm -> pgm, .raw/.y8 -> raw). Raw frames need `width` and `height`.
    """
    p = Path(path)
    if format is None:
        ext = p.suffix.lower()
        if ext == ".pgm":
            format = "pgm"
        elif ext in (".raw", ".y8"):
            format = "raw"
        else:
            raise FrameFormatError(f"{p}: cannot infer format from extension {ext!r}")
    if not p.is_file():
        raise FrameFormatError(f"{p}: file not found")
    data = p.read_bytes()

    if format == "pgm":
        return _parse_pgm(data, str(p))
    if format == "raw":
        if width is None or height is None:
            raise FrameFormatError(f"{p}: raw format requires declared width and height")
        try:
            return Frame.from_bytes(width, height, data)
        except FrameFormatError as e:
            raise FrameFormatError(f"{p}: {e}") from None
    raise FrameFormatError(f"{p}: unsupported format {format!r}")


def save_frame(frame: Frame, path: str | Path, format: str | None = None) -> None:
    """Write `frame` losslessly as PGM (P5) or raw Y8."""
    p = Path(path)
    if format is None:
        ext = p.suffix.lower()
        format = "pgm" if ext == ".pgm" else "raw" if ext in (".raw", ".y8") else None
        if format is None:
            raise FrameFormatError(f"{p}: cannot infer format from extension {ext!r}")
    if format == "pgm":
        header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
        p.write_bytes(header + frame.pixels.tobytes())
    elif format == "raw":
        p.write_bytes(frame.pixels.tobytes())
    else:
        raise FrameFormatError(f"{p}: unsupported format {format!r}")


def _numeric_key(path: Path) -> tuple:
    m = re.search(r"(\d+)", path.stem)
    return (int(m.group(1)) if m else -1, path.name)


def list_frame_files(directory: str | Path, pattern: str = "*.pgm") -> list[Path]:
    """Frame files of a sequence directory in numeric order."""
    files = sorted(Path(directory).glob(pattern), key=_numeric_key)
    if not files:
        raise FrameFormatError(f"{directory}: no frame files matching {pattern!r}")
    return files


def load_sequence(directory: str | Path, pattern: str = "*.pgm") -> list[Frame]:
    """Load all frames of a sequence; every frame must share dimensions."""
    frames: list[Frame] = []
    dims: tuple[int, int] | None = None
    for f in list_frame_files(directory, pattern):
        frame = load_frame(f)
        if dims is None:
            dims = (frame.width, frame.height)
        elif (frame.width, frame.height) != dims:
            raise FrameFormatError(
                f"{f}: dimensions {frame.width}x{frame.height} differ from "
                f"sequence dimensions {dims[0]}x{dims[1]}"
            )
        frames.append(frame)
    return frames


def save_sequence(frames: list[Frame], directory: str | Path) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        p = out / f"{i:06d}.pgm"
        save_frame(frame, p)
        paths.append(p)
    return paths


# ---------------------------------------------------------------------------
# Synthetic sequences


def noise_image(
    height: int,
    width: int,
    rng: np.random.Generator,
    carrier_period: float = 16.0,
    carrier_weight: float = 0.93,
) -> np.ndarray:
    """Seeded random texture, uint8, built for reliable block matching.

    A two-axis cosine carrier with random phases dominates the image and a
    thin layer of white speckle sits on top. The carrier makes the matching
    cost grow monotonically with misalignment in each axis, so coarse-to-fine
    searches descend to the true offset instead of getting trapped on the
    flat cost landscape pure white noise produces; the speckle keeps the
    zero-cost match unique. The default period equals the 16-pixel
    macroblock edge: every block then spans one full period (discrimination
    does not depend on block position) and no carrier alias fits inside a
    +-7 search window. The result is stretched to the full [0, 255] range so
    matches against flat regions stay unambiguous.
    """
    phase_x, phase_y = rng.uniform(0.0, 2.0 * np.pi, 2)
    yy = np.arange(height)[:, None]
    xx = np.arange(width)[None, :]
    carrier = 0.5 * (
        np.cos(2.0 * np.pi * xx / carrier_period + phase_x)
        + np.cos(2.0 * np.pi * yy / carrier_period + phase_y)
    )
    img = carrier_weight * (carrier + 1.0) / 2.0 + (1.0 - carrier_weight) * rng.random(
        (height, width)
    )
    lo, hi = img.min(), img.max()
    if hi - lo <= 0:
        return np.full((height, width), FLAT_BACKGROUND_VALUE, dtype=np.uint8)
    return ((img - lo) / (hi - lo) * 255.0).round().astype(np.uint8)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a moving-object sequence with exact ground truth.

    `trajectory[t-1]` is the integer displacement applied to the object
    between frames t-1 and t, so it must contain frame_count - 1 entries.
    `start` is the object's top-left corner at frame 0 (None = centered).
    """

    canvas_w: int
    canvas_h: int
    object_w: int
    object_h: int
    frame_count: int
    trajectory: tuple[tuple[int, int], ...]
    seed: int = 0
    background: str = "flat"
    start: tuple[int, int] | None = None

    def __post_init__(self):
        if min(self.canvas_w, self.canvas_h, self.object_w, self.object_h) <= 0:
            raise ConfigError("canvas and object dimensions must be positive")
        if self.object_w > self.canvas_w or self.object_h > self.canvas_h:
            raise ConfigError("object does not fit in canvas")
        if self.frame_count < 1:
            raise ConfigError("frame_count must be >= 1")
        if self.background not in ("flat", "noise"):
            raise ConfigError(f"unknown background mode {self.background!r}")
        if len(self.trajectory) != self.frame_count - 1:
            raise ConfigError(
                f"trajectory has {len(self.trajectory)} entries, "
                f"need frame_count - 1 = {self.frame_count - 1}"
            )

    @classmethod
    def constant(
        cls,
        canvas: tuple[int, int],
        obj: tuple[int, int],
        velocity: tuple[int, int],
        frame_count: int,
        **kwargs,
    ) -> "SyntheticSpec":
        traj = tuple((int(velocity[0]), int(velocity[1])) for _ in range(frame_count - 1))
        return cls(canvas[0], canvas[1], obj[0], obj[1], frame_count, traj, **kwargs)

    def to_dict(self) -> dict:
        return {
            "canvas": [self.canvas_w, self.canvas_h],
            "object": [self.object_w, self.object_h],
            "frames": self.frame_count,
            "trajectory": [list(d) for d in self.trajectory],
            "seed": self.seed,
            "background": self.background,
            "start": list(self.start) if self.start is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        traj = d.get("trajectory", [])
        frames = int(d["frames"])
        if len(traj) == 1 and frames > 2:
            traj = traj * (frames - 1)  # single displacement = constant velocity
        return cls(
            canvas_w=int(d["canvas"][0]),
            canvas_h=int(d["canvas"][1]),
            object_w=int(d["object"][0]),
            object_h=int(d["object"][1]),
            frame_count=frames,
            trajectory=tuple((int(a), int(b)) for a, b in traj),
            seed=int(d.get("seed", 0)),
            background=d.get("background", "flat"),
            start=tuple(d["start"]) if d.get("start") is not None else None,
        )


def generate_sequence(spec: SyntheticSpec) -> tuple[list[Frame], list[Roi]]:
    """Render the sequence described by `spec`.

    Frame t equals frame t-1 with the object translated by trajectory[t-1];
    the returned ROI at frame t exactly bounds the object. Deterministic for
    a given seed. Raises ConfigError when the trajectory pushes the object
    outside the canvas.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.background == "noise":
        bg = noise_image(spec.canvas_h, spec.canvas_w, rng)
    else:
        bg = np.full((spec.canvas_h, spec.canvas_w), FLAT_BACKGROUND_VALUE, dtype=np.uint8)
    texture = noise_image(spec.object_h, spec.object_w, rng)

    if spec.start is not None:
        x, y = int(spec.start[0]), int(spec.start[1])
    else:
        x = (spec.canvas_w - spec.object_w) // 2
        y = (spec.canvas_h - spec.object_h) // 2

    frames: list[Frame] = []
    rois: list[Roi] = []
    for t in range(spec.frame_count):
        if t > 0:
            dx, dy = spec.trajectory[t - 1]
            x += dx
            y += dy
        if not (0 <= x <= spec.canvas_w - spec.object_w and 0 <= y <= spec.canvas_h - spec.object_h):
            raise ConfigError(
                f"trajectory pushes object out of canvas at frame {t} "
                f"(top-left {x},{y}, object {spec.object_w}x{spec.object_h}, "
                f"canvas {spec.canvas_w}x{spec.canvas_h})"
            )
        canvas = bg.copy()
        canvas[y : y + spec.object_h, x : x + spec.object_w] = texture
        frames.append(Frame(canvas))
        rois.append(Roi(float(x), float(y), float(spec.object_w), float(spec.object_h), label=0, score=1.0))
    return frames, rois
