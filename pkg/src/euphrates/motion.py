"""Block-matching motion estimation and the motion-metadata codec.

A frame is divided into L x L macroblocks (MBs). For each MB of the current
frame the estimator finds the offset (u, v) within a (2d+1)^2 search window
that minimizes the sum of absolute differences (SAD) against the previous
frame. The motion vector follows the extrapolation convention: (u, v) is the
content displacement from the previous frame to the current one, i.e. the MB
at (x, y) matches the previous-frame block at (x - u, y - v).

Two search strategies are provided: exhaustive search (ES) over the whole
window and the classic three-step search (TSS), which walks a logarithmically
shrinking candidate ring. Per-MB confidence is 1 - SAD / (255 * L^2).

All search functions are pure; the per-MB loop in `estimate_motion_field`
could run in parallel (results land in disjoint grid slots) and tie-breaking
is position-free, so the output never depends on evaluation order.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatchError, MetadataError
from .pixels import Frame

ES = "es"
TSS = "tss"

METADATA_MAGIC = b"EUMV"
METADATA_VERSION = 1
_HEADER = struct.Struct("<4sBBHHHH")  # magic, version, algorithm, width, height, L, d
_ALGO_CODES = {ES: 0, TSS: 1}
_ALGO_NAMES = {v: k for k, v in _ALGO_CODES.items()}


@dataclass(frozen=True)
class MotionParams:
    """Macroblock edge L (power of two, >= 4), search range d >= 1, algorithm."""

    mb_size: int = 16
    search_range: int = 7
    algorithm: str = ES

    def __post_init__(self):
        L = self.mb_size
        if L < 4 or (L & (L - 1)) != 0:
            raise ValueError(f"mb_size must be a power of two >= 4, got {L}")
        if self.search_range < 1:
            raise ValueError(f"search_range must be >= 1, got {self.search_range}")
        if self.algorithm not in (ES, TSS):
            raise ValueError(f"algorithm must be 'es' or 'tss', got {self.algorithm!r}")

    @property
    def max_sad(self) -> int:
        return 255 * self.mb_size * self.mb_size


@dataclass(frozen=True)
class MotionVector:
    u: int
    v: int


@dataclass(eq=False)
class MotionField:
    """Per-macroblock motion vectors and SADs for one frame pair.

    `vectors` has shape (rows, cols, 2) holding (u, v); `sads` has shape
    (rows, cols). The grid covers the frame after padding to the L-grid:
    rows = ceil(height / L), cols = ceil(width / L).
    """

    width: int
    height: int
    params: MotionParams
    vectors: np.ndarray
    sads: np.ndarray

    @property
    def rows(self) -> int:
        return self.sads.shape[0]

    @property
    def cols(self) -> int:
        return self.sads.shape[1]

    @property
    def confidences(self) -> np.ndarray:
        """Per-MB confidence: 1 - SAD / (255 * L^2), in [0, 1]."""
        return 1.0 - self.sads / float(self.params.max_sad)

    def vector_at(self, row: int, col: int) -> MotionVector:
        u, v = self.vectors[row, col]
        return MotionVector(int(u), int(v))

    def __eq__(self, other) -> bool:
        if not isinstance(other, MotionField):
            return NotImplemented
        return (
            (self.width, self.height, self.params) == (other.width, other.height, other.params)
            and bool(np.array_equal(self.vectors, other.vectors))
            and bool(np.array_equal(self.sads, other.sads))
        )


def uniform_field(
    width: int, height: int, mv: tuple[int, int] = (0, 0), sad: int = 0, params: MotionParams | None = None
) -> MotionField:
    """Constant motion field; handy for tests and schedule-only simulations."""
    params = params or MotionParams()
    rows = -(-height // params.mb_size)
    cols = -(-width // params.mb_size)
    vectors = np.empty((rows, cols, 2), dtype=np.int16)
    vectors[..., 0] = mv[0]
    vectors[..., 1] = mv[1]
    sads = np.full((rows, cols), sad, dtype=np.int64)
    return MotionField(width, height, params, vectors, sads)


# ---------------------------------------------------------------------------
# Searches


def sad(block_a: np.ndarray, block_b: np.ndarray) -> int:
    """Sum of absolute differences over two equally shaped blocks."""
    a = np.asarray(block_a)
    b = np.asarray(block_b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"block shapes differ: {a.shape} vs {b.shape}")
    return int(np.abs(a.astype(np.int16) - b.astype(np.int16)).sum(dtype=np.int64))


def confidence(sad_value: int, mb_size: int) -> float:
    """Motion-vector confidence: 1 - SAD / (255 * L^2)."""
    max_sad = 255 * mb_size * mb_size
    if not 0 <= sad_value <= max_sad:
        raise ValueError(f"sad {sad_value} outside [0, {max_sad}] for L={mb_size}")
    return 1.0 - sad_value / max_sad


def _tie_key(u: int, v: int) -> tuple[int, int, int]:
    # Prefer short vectors (stabilizes static scenes), then smallest v, then u.
    return (abs(u) + abs(v), v, u)


@lru_cache(maxsize=32)
def _canonical_offsets(d: int) -> tuple[tuple[int, int], ...]:
    offsets = [(u, v) for v in range(-d, d + 1) for u in range(-d, d + 1)]
    offsets.sort(key=lambda o: _tie_key(*o))
    return tuple(offsets)


def _pixels(frame: Frame | np.ndarray) -> np.ndarray:
    return frame.pixels if isinstance(frame, Frame) else np.asarray(frame)


def _check_origin(origin: tuple[int, int], px: np.ndarray, L: int) -> tuple[int, int]:
    x, y = origin
    h, w = px.shape
    if x % L or y % L or not (0 <= x <= w - L and 0 <= y <= h - L):
        raise ValueError(f"mb_origin {origin} is not on the {L}-grid of a {w}x{h} frame")
    return x, y


def exhaustive_search(
    prev: Frame | np.ndarray, cur: Frame | np.ndarray, mb_origin: tuple[int, int], params: MotionParams
) -> tuple[MotionVector, int]:
    """Best (u, v) in [-d, d]^2 by SAD for the MB of `cur` at `mb_origin`.

    Candidate blocks that fall outside `prev` are skipped. Ties break toward
    the smallest |u|+|v|, then smallest v, then smallest u.
    """
    prev_px = _pixels(prev)
    cur_px = _pixels(cur)
    L = params.mb_size
    x, y = _check_origin(mb_origin, cur_px, L)
    h, w = prev_px.shape
    block = cur_px[y : y + L, x : x + L].astype(np.int16)

    best: tuple[int, tuple[int, int, int], int, int] | None = None
    for u, v in _canonical_offsets(params.search_range):
        sx, sy = x - u, y - v
        if not (0 <= sx <= w - L and 0 <= sy <= h - L):
            continue
        cand = prev_px[sy : sy + L, sx : sx + L]
        s = int(np.abs(block - cand).sum(dtype=np.int64))
        key = (s, _tie_key(u, v), u, v)
        if best is None or key < best:
            best = key
    assert best is not None  # zero offset is always in-frame
    return MotionVector(best[2], best[3]), best[0]


def _tss_initial_step(d: int) -> int:
    return 1 << (math.ceil(math.log2(d + 1)) - 1)


def three_step_search(
    prev: Frame | np.ndarray, cur: Frame | np.ndarray, mb_origin: tuple[int, int], params: MotionParams
) -> tuple[MotionVector, int]:
    """Three-step search: 9 candidates per round around the running center,
    recenter on the minimum, halve the step until it reaches 1.

    The step schedule is {4, 2, 1} for d = 7 and starts at
    2^(ceil(log2(d+1)) - 1) in general. Candidates outside [-d, d]^2 or
    outside `prev` are skipped; ties break as in exhaustive search.
    """
    prev_px = _pixels(prev)
    cur_px = _pixels(cur)
    L = params.mb_size
    d = params.search_range
    x, y = _check_origin(mb_origin, cur_px, L)
    h, w = prev_px.shape
    block = cur_px[y : y + L, x : x + L].astype(np.int16)

    def eval_at(u: int, v: int) -> int | None:
        sx, sy = x - u, y - v
        if not (0 <= sx <= w - L and 0 <= sy <= h - L):
            return None
        return int(np.abs(block - prev_px[sy : sy + L, sx : sx + L]).sum(dtype=np.int64))

    s0 = eval_at(0, 0)
    assert s0 is not None
    best = (s0, _tie_key(0, 0), 0, 0)
    step = _tss_initial_step(d)
    while step >= 1:
        cu, cv = best[2], best[3]
        for du in (-step, 0, step):
            for dv in (-step, 0, step):
                if du == 0 and dv == 0:
                    continue
                u, v = cu + du, cv + dv
                if abs(u) > d or abs(v) > d:
                    continue
                s = eval_at(u, v)
                if s is None:
                    continue
                key = (s, _tie_key(u, v), u, v)
                if key < best:
                    best = key
        step //= 2
    return MotionVector(best[2], best[3]), best[0]


def _pad_to_grid(px: np.ndarray, L: int) -> np.ndarray:
    h, w = px.shape
    ph = (-h) % L
    pw = (-w) % L
    if ph == 0 and pw == 0:
        return px
    return np.pad(px, ((0, ph), (0, pw)), mode="edge")


def _es_field(prev: np.ndarray, cur: np.ndarray, L: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized exhaustive search over the whole padded frame pair.

    Offsets are visited in tie-break order, so a strict `<` update yields the
    same winners as per-MB comparisons with the full tie-break key.
    """
    hp, wp = cur.shape
    rows, cols = hp // L, wp // L
    curi = cur.astype(np.int16)
    previ = prev.astype(np.int16)

    best_sad = np.full((rows, cols), np.iinfo(np.int64).max, dtype=np.int64)
    best_u = np.zeros((rows, cols), dtype=np.int16)
    best_v = np.zeros((rows, cols), dtype=np.int16)

    for u, v in _canonical_offsets(d):
        # MB (r, c) is valid iff its source block [cL-u, rL-v] lies in-frame.
        r0 = max(0, -((-v) // L))
        r1 = min(rows - 1, (hp - L + v) // L)
        c0 = max(0, -((-u) // L))
        c1 = min(cols - 1, (wp - L + u) // L)
        if r0 > r1 or c0 > c1:
            continue
        ys, ye = r0 * L, (r1 + 1) * L
        xs, xe = c0 * L, (c1 + 1) * L
        diff = np.abs(curi[ys:ye, xs:xe] - previ[ys - v : ye - v, xs - u : xe - u])
        sads = diff.reshape(r1 - r0 + 1, L, c1 - c0 + 1, L).sum(axis=(1, 3), dtype=np.int64)

        view = best_sad[r0 : r1 + 1, c0 : c1 + 1]
        better = sads < view
        view[better] = sads[better]
        best_u[r0 : r1 + 1, c0 : c1 + 1][better] = u
        best_v[r0 : r1 + 1, c0 : c1 + 1][better] = v

    vectors = np.stack([best_u, best_v], axis=-1)
    return vectors, best_sad


def estimate_motion_field(
    prev: Frame | np.ndarray, cur: Frame | np.ndarray, params: MotionParams | None = None
) -> MotionField:
    """One (motion vector, SAD) per macroblock of `cur` matched against `prev`.

    Frames must share dimensions. Partial edge MBs are padded by edge
    replication to the L-grid before matching; the result is identical to
    running the configured per-MB search on the padded frames.
    """
    params = params or MotionParams()
    prev_px = _pixels(prev)
    cur_px = _pixels(cur)
    if prev_px.shape != cur_px.shape:
        raise DimensionMismatchError(
            f"frame dimensions differ: prev {prev_px.shape[::-1]} vs cur {cur_px.shape[::-1]}"
        )
    height, width = cur_px.shape
    L = params.mb_size
    prev_pad = _pad_to_grid(prev_px, L)
    cur_pad = _pad_to_grid(cur_px, L)

    if params.algorithm == ES:
        vectors, sads = _es_field(prev_pad, cur_pad, L, params.search_range)
    else:
        rows, cols = cur_pad.shape[0] // L, cur_pad.shape[1] // L
        vectors = np.zeros((rows, cols, 2), dtype=np.int16)
        sads = np.zeros((rows, cols), dtype=np.int64)
        for r in range(rows):
            for c in range(cols):
                mv, s = three_step_search(prev_pad, cur_pad, (c * L, r * L), params)
                vectors[r, c] = (mv.u, mv.v)
                sads[r, c] = s
    return MotionField(width, height, params, vectors, sads)


# ---------------------------------------------------------------------------
# Metadata codec
#
# Little-endian layout:
#   header: magic "EUMV", version u8, algorithm u8, width u16, height u16,
#           L u16, d u16
#   then one record per MB in row-major grid order:
#     d <= 7: 1 byte, u in the high nibble and v in the low nibble, both
#             two's-complement 4-bit; then SAD as u32
#     d >  7: u and v as two's-complement 8-bit bytes; then SAD as u32


def encoded_size(width: int, height: int, params: MotionParams) -> int:
    rows = -(-height // params.mb_size)
    cols = -(-width // params.mb_size)
    per_mb = 5 if params.search_range <= 7 else 6
    return _HEADER.size + per_mb * rows * cols


def encode_metadata(field: MotionField) -> bytes:
    """Serialize a motion field to the compact frame-buffer metadata form."""
    params = field.params
    d = params.search_range
    if d > 127:
        raise MetadataError(f"search range {d} exceeds the wide form's 8-bit range")
    if not (0 < field.width < 65536 and 0 < field.height < 65536):
        raise MetadataError(f"dimensions {field.width}x{field.height} do not fit the header")
    u = field.vectors[..., 0].astype(np.int64).ravel()
    v = field.vectors[..., 1].astype(np.int64).ravel()
    if np.abs(u).max(initial=0) > d or np.abs(v).max(initial=0) > d:
        raise MetadataError(f"motion vector outside +-{d}; nibble/byte packing would overflow")
    sads = field.sads.astype(np.int64).ravel()
    if sads.min(initial=0) < 0 or sads.max(initial=0) > params.max_sad:
        raise MetadataError(f"sad outside [0, {params.max_sad}]")

    header = _HEADER.pack(
        METADATA_MAGIC,
        METADATA_VERSION,
        _ALGO_CODES[params.algorithm],
        field.width,
        field.height,
        params.mb_size,
        d,
    )
    n = u.size
    if d <= 7:
        records = np.empty((n, 5), dtype=np.uint8)
        records[:, 0] = ((u & 0xF) << 4 | (v & 0xF)).astype(np.uint8)
        records[:, 1:5] = sads.astype("<u4").view(np.uint8).reshape(n, 4)
    else:
        records = np.empty((n, 6), dtype=np.uint8)
        records[:, 0] = u.astype(np.int8).view(np.uint8)
        records[:, 1] = v.astype(np.int8).view(np.uint8)
        records[:, 2:6] = sads.astype("<u4").view(np.uint8).reshape(n, 4)
    return header + records.tobytes()


def decode_metadata(data: bytes) -> MotionField:
    """Inverse of `encode_metadata`; validates magic, version, and ranges."""
    if len(data) < _HEADER.size:
        raise MetadataError(f"stream too short for header: {len(data)} bytes")
    magic, version, algo_code, width, height, L, d = _HEADER.unpack_from(data)
    if magic != METADATA_MAGIC:
        raise MetadataError(f"bad magic {magic!r}, expected {METADATA_MAGIC!r}")
    if version != METADATA_VERSION:
        raise MetadataError(f"unsupported version {version}")
    if algo_code not in _ALGO_NAMES:
        raise MetadataError(f"unknown algorithm code {algo_code}")
    try:
        params = MotionParams(mb_size=L, search_range=d, algorithm=_ALGO_NAMES[algo_code])
    except ValueError as e:
        raise MetadataError(f"invalid header parameters: {e}") from None

    rows = -(-height // L)
    cols = -(-width // L)
    n = rows * cols
    per_mb = 5 if d <= 7 else 6
    expected = _HEADER.size + per_mb * n
    if len(data) != expected:
        kind = "truncated" if len(data) < expected else "oversized"
        raise MetadataError(f"{kind} stream: expected {expected} bytes, got {len(data)}")

    records = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size).reshape(n, per_mb)
    if d <= 7:
        u = (records[:, 0] >> 4).astype(np.int16)
        v = (records[:, 0] & 0xF).astype(np.int16)
        u[u >= 8] -= 16
        v[v >= 8] -= 16
        sads = records[:, 1:5].reshape(-1).view("<u4").astype(np.int64)
    else:
        u = records[:, 0].view(np.int8).astype(np.int16)
        v = records[:, 1].view(np.int8).astype(np.int16)
        sads = records[:, 2:6].reshape(-1).view("<u4").astype(np.int64)
    if np.abs(u).max(initial=0) > d or np.abs(v).max(initial=0) > d:
        raise MetadataError(f"decoded motion vector outside +-{d}")
    if sads.max(initial=0) > params.max_sad:
        raise MetadataError(f"decoded sad exceeds {params.max_sad}")

    vectors = np.stack([u.reshape(rows, cols), v.reshape(rows, cols)], axis=-1)
    return MotionField(width, height, params, vectors, sads.reshape(rows, cols))
