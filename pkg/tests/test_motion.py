"""Block matching: SAD, ES/TSS searches, field estimation, metadata codec."""

import numpy as np
import pytest

from euphrates.errors import DimensionMismatchError, MetadataError
from euphrates.motion import (
    MotionField,
    MotionParams,
    MotionVector,
    confidence,
    decode_metadata,
    encode_metadata,
    encoded_size,
    estimate_motion_field,
    exhaustive_search,
    sad,
    three_step_search,
    uniform_field,
)
from euphrates.pixels import Frame

from oracles import naive_block_search, naive_field, shifted_pair


def random_frame(seed, h=64, w=64):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(h, w), dtype=np.uint8)


# ---------------------------------------------------------------------------
# SAD


def test_sad_identity():
    b = random_frame(0, 16, 16)
    assert sad(b, b) == 0


def test_sad_maximum():
    a = np.zeros((16, 16), dtype=np.uint8)
    b = np.full((16, 16), 255, dtype=np.uint8)
    assert sad(a, b) == 65280  # 255 * 16^2


def test_sad_direct_arithmetic():
    a = np.array([[1, 2], [3, 4]], dtype=np.uint8)
    b = np.array([[2, 2], [3, 2]], dtype=np.uint8)
    assert sad(a, b) == 3


def test_sad_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        sad(np.zeros((4, 4), dtype=np.uint8), np.zeros((4, 8), dtype=np.uint8))


def test_sad_symmetry_and_triangle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a, b, c = (rng.integers(0, 256, size=(8, 8), dtype=np.uint8) for _ in range(3))
        assert sad(a, b) == sad(b, a)
        assert sad(a, c) <= sad(a, b) + sad(b, c)


def test_confidence_endpoints():
    assert confidence(0, 16) == 1.0
    assert confidence(65280, 16) == 0.0
    assert confidence(32640, 16) == 0.5


def test_confidence_monotone_and_range():
    prev = None
    for s in range(0, 65281, 4080):
        c = confidence(s, 16)
        assert 0.0 <= c <= 1.0
        if prev is not None:
            assert c < prev
        prev = c
    with pytest.raises(ValueError):
        confidence(65281, 16)
    with pytest.raises(ValueError):
        confidence(-1, 16)


# ---------------------------------------------------------------------------
# Searches


def test_exhaustive_recovers_shift():
    prev, cur = shifted_pair(7, 64, 64, (3, -2))
    mv, s = exhaustive_search(prev, cur, (16, 16), MotionParams())
    assert (mv.u, mv.v) == (3, -2) and s == 0
    # independent brute force agrees
    (u, v), s2 = naive_block_search(prev, cur, (16, 16), 16, 7)
    assert (u, v) == (3, -2) and s2 == 0


def test_exhaustive_identity_tie_break():
    f = random_frame(1)
    mv, s = exhaustive_search(f, f, (16, 32), MotionParams())
    assert (mv.u, mv.v) == (0, 0) and s == 0


def test_exhaustive_origin_validation():
    f = random_frame(2)
    with pytest.raises(ValueError):
        exhaustive_search(f, f, (7, 16), MotionParams())


def test_tss_recovers_shift():
    prev, cur = shifted_pair(8, 64, 64, (3, -2))
    mv, s = three_step_search(prev, cur, (16, 16), MotionParams(algorithm="tss"))
    assert (mv.u, mv.v) == (3, -2) and s == 0


def test_tss_identity():
    f = random_frame(4)
    mv, s = three_step_search(f, f, (32, 16), MotionParams(algorithm="tss"))
    assert (mv.u, mv.v) == (0, 0) and s == 0


def test_tss_never_beats_es():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        prev = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        cur = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        for origin in [(0, 0), (16, 16), (48, 32)]:
            _, s_es = exhaustive_search(prev, cur, origin, MotionParams())
            _, s_tss = three_step_search(prev, cur, origin, MotionParams(algorithm="tss"))
            assert s_tss >= s_es


def test_field_identical_frames():
    f = Frame(random_frame(5))
    field = estimate_motion_field(f, f)
    assert np.all(field.vectors == 0)
    assert np.all(field.sads == 0)
    assert np.all(field.confidences == 1.0)


def test_field_matches_per_mb_search_random():
    """The vectorized field equals the naive per-MB reference, MV and SAD."""
    params = MotionParams()
    for seed in range(8):
        rng = np.random.default_rng(seed)
        prev = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        cur = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        field = estimate_motion_field(Frame(prev), Frame(cur), params)
        ref_vectors, ref_sads = naive_field(prev, cur, 16, 7)
        assert np.array_equal(field.vectors, ref_vectors)
        assert np.array_equal(field.sads, ref_sads)


def test_field_global_translation_interior_exact():
    for seed, shift in [(0, (7, 7)), (1, (-5, 3)), (2, (1, -7)), (3, (-7, -7))]:
        prev, cur = shifted_pair(seed + 100, 96, 96, shift)
        field = estimate_motion_field(Frame(prev), Frame(cur))
        u, v = shift
        L = 16
        for r in range(field.rows):
            for c in range(field.cols):
                sx, sy = c * L - u, r * L - v
                if 0 <= sx <= 96 - L and 0 <= sy <= 96 - L:
                    assert field.vector_at(r, c) == MotionVector(u, v)
                    assert field.sads[r, c] == 0


def test_field_pads_partial_edge_mbs():
    """Non-multiple dims: field equals per-MB search on edge-padded frames."""
    rng = np.random.default_rng(12)
    prev = rng.integers(0, 256, size=(40, 52), dtype=np.uint8)
    cur = rng.integers(0, 256, size=(40, 52), dtype=np.uint8)
    field = estimate_motion_field(Frame(prev), Frame(cur))
    assert (field.rows, field.cols) == (3, 4)
    pp = np.pad(prev, ((0, 8), (0, 12)), mode="edge")
    cp = np.pad(cur, ((0, 8), (0, 12)), mode="edge")
    ref_vectors, ref_sads = naive_field(pp, cp, 16, 7)
    assert np.array_equal(field.vectors, ref_vectors)
    assert np.array_equal(field.sads, ref_sads)


def test_field_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        estimate_motion_field(Frame(random_frame(0, 32, 32)), Frame(random_frame(0, 32, 48)))


def test_field_tss_matches_per_mb_tss():
    params = MotionParams(algorithm="tss")
    prev, cur = shifted_pair(33, 64, 64, (4, 2))
    field = estimate_motion_field(Frame(prev), Frame(cur), params)
    for r in range(field.rows):
        for c in range(field.cols):
            mv, s = three_step_search(prev, cur, (c * 16, r * 16), params)
            assert field.vector_at(r, c) == mv and field.sads[r, c] == s


def test_1080p_grid_dims():
    field = uniform_field(1920, 1080)
    assert (field.cols, field.rows) == (120, 68)
    assert field.cols * field.rows == 8160  # not the rounded 8,100


def test_params_validation():
    with pytest.raises(ValueError):
        MotionParams(mb_size=12)
    with pytest.raises(ValueError):
        MotionParams(mb_size=2)
    with pytest.raises(ValueError):
        MotionParams(search_range=0)
    with pytest.raises(ValueError):
        MotionParams(algorithm="full")


# ---------------------------------------------------------------------------
# Metadata codec


def random_field(rng, d=7, algorithm="es"):
    L = int(rng.choice([4, 8, 16, 32]))
    width = int(rng.integers(1, 12)) * L + int(rng.integers(0, L))
    height = int(rng.integers(1, 12)) * L + int(rng.integers(0, L))
    params = MotionParams(L, d, algorithm)
    rows = -(-height // L)
    cols = -(-width // L)
    vectors = rng.integers(-d, d + 1, size=(rows, cols, 2)).astype(np.int16)
    sads = rng.integers(0, 255 * L * L + 1, size=(rows, cols)).astype(np.int64)
    return MotionField(width, height, params, vectors, sads)


def test_codec_nibble_byte_definition():
    field = uniform_field(16, 16, mv=(3, -2), sad=5)
    data = encode_metadata(field)
    assert data[:4] == b"EUMV"
    assert data[14] == 0x3E  # u=3 high nibble, v=-2 -> 0xE low nibble
    assert data[15:19] == (5).to_bytes(4, "little")


def test_codec_round_trip_random_fields():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        field = random_field(rng)
        assert decode_metadata(encode_metadata(field)) == field


def test_codec_wide_form_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(50):
        field = random_field(rng, d=15)
        data = encode_metadata(field)
        assert len(data) == 14 + 6 * field.rows * field.cols
        assert decode_metadata(data) == field


def test_codec_estimated_field_round_trip():
    prev, cur = shifted_pair(3, 64, 48, (2, 2))
    field = estimate_motion_field(Frame(prev), Frame(cur))
    assert decode_metadata(encode_metadata(field)) == field


def test_codec_size_formula():
    field = uniform_field(1920, 1080)
    data = encode_metadata(field)
    n_mbs = field.rows * field.cols
    assert n_mbs == 8160
    assert len(data) == encoded_size(1920, 1080, field.params) == 14 + 5 * n_mbs
    # MV payload alone: one byte per MB, about 8 KB per 1080p frame
    assert n_mbs == 8160 and abs(n_mbs - 8 * 1024) < 200


def test_codec_bad_magic():
    data = encode_metadata(uniform_field(32, 32))
    with pytest.raises(MetadataError, match="magic"):
        decode_metadata(b"XUMV" + data[4:])


def test_codec_bad_version():
    data = bytearray(encode_metadata(uniform_field(32, 32)))
    data[4] = 9
    with pytest.raises(MetadataError, match="version"):
        decode_metadata(bytes(data))


def test_codec_truncated_and_oversized():
    data = encode_metadata(uniform_field(32, 32))
    with pytest.raises(MetadataError, match="truncated"):
        decode_metadata(data[:-1])
    with pytest.raises(MetadataError, match="oversized"):
        decode_metadata(data + b"\x00")
    with pytest.raises(MetadataError, match="header"):
        decode_metadata(data[:6])


def test_codec_rejects_overflowing_vectors():
    field = uniform_field(32, 32, mv=(3, -2))
    field.vectors[0, 0] = (9, 0)  # outside +-7
    with pytest.raises(MetadataError, match="overflow"):
        encode_metadata(field)
