import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cfsi.patterns import (
    HALF_PLANE,
    SELF_CONJUGATE,
    BinaryPattern,
    FrequencyCoord,
    PatternParams,
    complement_binary,
    complement_gray,
    floyd_steinberg,
    floyd_steinberg_batch,
    fourier_pattern,
    fourier_patterns,
    frequency_schedule,
    half_plane,
    pattern_image,
    recombine_bitplanes,
    schedule_csv,
    temporal_bitplanes,
)
from oracles import conjugate_classes, floyd_steinberg_raster


def direct_cos_pattern(p):
    x = np.arange(p.width)[None, :]
    y = np.arange(p.height)[:, None]
    return p.a + p.b * np.cos(2 * np.pi * p.fx * x + 2 * np.pi * p.fy * y + p.theta)


# ---------------------------------------------------------------- grayscale

def test_dc_patterns():
    assert np.all(fourier_pattern(PatternParams(0, 0, 0, 5, 3)).data == 1.0)
    assert np.all(fourier_pattern(PatternParams(0, 0, math.pi, 5, 3)).data == 0.0)


def test_half_period():
    w = 16
    d = fourier_pattern(PatternParams(1 / w, 0, 0, w, 4)).data
    assert np.all(d[:, 0] == 1.0)
    assert np.all(d[:, w // 2] == 0.0)


@pytest.mark.parametrize("a, b", [(0.7, 0.5), (0.2, 0.5), (0.5, 0.0), (0.5, 1.2)])
def test_bad_params(a, b):
    with pytest.raises(ValueError):
        PatternParams(0.1, 0.1, 0, 4, 4, a=a, b=b)


def test_matches_direct_cosine():
    for params in [PatternParams(3 / 64, 5 / 64, 1.234, 64, 64),
                   PatternParams(3 / 64, 61 / 64, math.pi / 3, 64, 48),
                   PatternParams(0.3127, 0.77, -2.0, 20, 11, a=0.4, b=0.3)]:
        assert np.max(np.abs(fourier_pattern(params).data - direct_cos_pattern(params))) < 1e-12


def test_zero_crossings_are_exact():
    # sin(2 pi (x + 126 y) / 128) vanishes whenever x + 126 y = 0 mod 64
    d = fourier_pattern(PatternParams(1 / 128, 126 / 128, math.pi / 2, 128, 128)).data
    x, y = np.meshgrid(np.arange(128), np.arange(128))
    assert np.all(d[(x + 126 * y) % 64 == 0] == 0.5)


def test_batch_matches_single():
    coords = [FrequencyCoord(0, 0), FrequencyCoord(3, 1), FrequencyCoord(15, 9)]
    thetas = (0.0, 2 * math.pi / 3, 4 * math.pi / 3, math.pi / 2)
    batch = fourier_patterns(coords, thetas, 16, 12)
    for i, c in enumerate(coords):
        for j, th in enumerate(thetas):
            single = fourier_pattern(PatternParams(c.u / 16, c.v / 12, th, 16, 12)).data
            assert np.array_equal(batch[i, j], single)


def test_batch_off_grid_phase():
    batch = fourier_patterns([FrequencyCoord(2, 3)], [0.123], 8, 8)
    single = fourier_pattern(PatternParams(2 / 8, 3 / 8, 0.123, 8, 8)).data
    assert np.max(np.abs(batch[0, 0] - single)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(fx=st.floats(-1, 1), fy=st.floats(-1, 1), theta=st.floats(-10, 10),
       a=st.floats(0.05, 0.95), frac=st.floats(0.01, 1.0))
def test_pattern_within_bounds(fx, fy, theta, a, frac):
    b = frac * min(a, 1 - a)
    p = fourier_pattern(PatternParams(fx, fy, theta, 9, 7, a=a, b=b))
    assert p.data.min() >= a - b - 1e-15
    assert p.data.max() <= a + b + 1e-15


def test_complement_gray_examples():
    ones = fourier_pattern(PatternParams(0, 0, 0, 4, 4))
    assert np.all(complement_gray(ones).data == 0.0)
    p = fourier_pattern(PatternParams(1 / 8, 3 / 8, 0.4, 8, 8))
    assert np.array_equal(complement_gray(complement_gray(p)).data, p.data)
    q = fourier_pattern(PatternParams(2 / 8, 1 / 8, math.pi / 2, 8, 8))
    r = fourier_pattern(PatternParams(2 / 8, 1 / 8, 3 * math.pi / 2, 8, 8))
    assert np.max(np.abs(complement_gray(q).data - r.data)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(fx=st.floats(-0.5, 0.5), fy=st.floats(-0.5, 0.5), theta=st.floats(0, 2 * math.pi))
def test_complement_is_pi_shift(fx, fy, theta):
    params = PatternParams(fx, fy, theta, 12, 10)
    comp = complement_gray(fourier_pattern(params))
    shifted = fourier_pattern(params.shifted(math.pi))
    assert np.max(np.abs(comp.data - shifted.data)) <= 1e-12


# ---------------------------------------------------------------- binary

def test_binary_pattern_validation():
    with pytest.raises(ValueError):
        BinaryPattern(np.array([[0, 2]]))
    assert BinaryPattern(np.array([[0, 1]])).data.dtype == np.uint8


def test_complement_binary():
    ones = BinaryPattern(np.ones((3, 3), dtype=np.uint8))
    assert np.all(complement_binary(ones).data == 0)
    p = BinaryPattern(np.array([[0, 1, 1], [1, 0, 0]]))
    assert np.array_equal(complement_binary(complement_binary(p)).data, p.data)
    assert complement_binary(p).provenance == "complement"


def test_floyd_steinberg_constants():
    assert np.all(floyd_steinberg(np.zeros((5, 6))).data == 0)
    assert np.all(floyd_steinberg(np.ones((5, 6))).data == 1)


def test_floyd_steinberg_row_of_halves():
    # 0.5 -> 1 (e=-0.5); 0.28125 -> 0; 0.623046875 -> 1; 0.33... -> 0
    assert floyd_steinberg(np.full((1, 4), 0.5)).data.tolist() == [[1, 0, 1, 0]]
    assert floyd_steinberg_raster([[0.5] * 4]) == [[1, 0, 1, 0]]


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9)), elements=st.floats(0, 1)))
def test_floyd_steinberg_matches_raster_reference(gray):
    assert floyd_steinberg(gray).data.tolist() == floyd_steinberg_raster(gray.tolist())


def test_floyd_steinberg_reference_on_patterns():
    for params in [PatternParams(1 / 32, 30 / 32, math.pi / 2, 32, 32),
                   PatternParams(5 / 32, 3 / 24, 2 * math.pi / 3, 32, 24)]:
        gray = fourier_pattern(params).data
        assert floyd_steinberg(gray).data.tolist() == floyd_steinberg_raster(gray.tolist())


def test_floyd_steinberg_batch_shape():
    stack = np.random.default_rng(1).random((2, 3, 6, 5))
    out = floyd_steinberg_batch(stack)
    assert out.shape == stack.shape
    assert np.array_equal(out[1, 2], floyd_steinberg(stack[1, 2]).data)


@settings(max_examples=40, deadline=None)
@given(u=st.integers(0, 7), v=st.integers(0, 7), theta=st.floats(0, 2 * math.pi),
       size=st.sampled_from([16, 32, 64]))
def test_floyd_steinberg_preserves_mean(u, v, theta, size):
    gray = fourier_pattern(PatternParams(u / size, v / size, theta, size, size)).data
    binary = floyd_steinberg(gray).data
    assert abs(binary.mean() - gray.mean()) <= 2 / size


def test_dithered_complement_differs_from_pi_shift():
    p = PatternParams(1 / 128, 126 / 128, math.pi / 2, 128, 128)
    comp = complement_binary(floyd_steinberg(fourier_pattern(p)))
    shifted = floyd_steinberg(fourier_pattern(p.shifted(math.pi)))
    assert np.count_nonzero(comp.data != shifted.data) >= 1


# ---------------------------------------------------------------- bit planes

def test_bitplanes_examples():
    planes = temporal_bitplanes(np.ones((2, 2)))
    assert len(planes) == 8 and all(np.all(p.data == 1) for p in planes)
    assert all(np.all(p.data == 0) for p in temporal_bitplanes(np.zeros((2, 2))))
    planes = temporal_bitplanes(np.full((1, 1), 170 / 255))
    assert [int(p.data[0, 0]) for p in planes] == [0, 1, 0, 1, 0, 1, 0, 1]
    assert planes[3].provenance == "bit-plane(3)"


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 5), elements=st.floats(0, 1)))
def test_bitplanes_recombine(gray):
    expected = np.floor(255 * gray + 0.5).astype(np.int64)
    assert np.array_equal(recombine_bitplanes(temporal_bitplanes(gray)), expected)


# ---------------------------------------------------------------- schedule

def test_schedule_starts_at_dc():
    for w, h in [(2, 2), (8, 6), (128, 128)]:
        s = frequency_schedule(w, h)
        assert (s[0].u, s[0].v) == (0, 0)
        assert s[0].kind == SELF_CONJUGATE


def test_schedule_length_matches_exhaustive_count():
    assert len(conjugate_classes(128, 128)) == 8194
    assert len(frequency_schedule(128, 128)) == 8194


@pytest.mark.parametrize("w, h", [(8, 8), (16, 16), (8, 4), (6, 10)])
def test_schedule_covers_grid(w, h):
    sched = frequency_schedule(w, h)
    assert len(sched) == len(conjugate_classes(w, h))
    seen = set()
    for c in sched:
        pair = {(c.u, c.v), ((-c.u) % w, (-c.v) % h)}
        assert not (pair & seen), "two entries are conjugates of each other"
        seen |= pair
        assert c.kind == (SELF_CONJUGATE if len(pair) == 1 else HALF_PLANE)
    assert seen == {(u, v) for u in range(w) for v in range(h)}


def test_schedule_order():
    w = h = 16
    sched = frequency_schedule(w, h)
    keys = [(min(c.u, w - c.u) ** 2 + min(c.v, h - c.v) ** 2, c.v, c.u) for c in sched]
    assert keys == sorted(keys)
    assert [(c.u, c.v) for c in sched[:5]] == [(0, 0), (1, 0), (0, 1), (1, 1), (15, 1)]


def test_schedule_pluggable_order():
    raster = frequency_schedule(8, 8, order="raster")
    assert raster == half_plane(8, 8)
    rev = frequency_schedule(8, 8, order=lambda u, v, w, h: (-v, -u))
    assert (rev[0].u, rev[0].v) == (4, 4)


def test_schedule_rejects_odd():
    with pytest.raises(ValueError):
        frequency_schedule(7, 8)
    with pytest.raises(ValueError):
        frequency_schedule(0, 8)


def test_schedule_csv():
    text = schedule_csv(frequency_schedule(4, 4))
    lines = text.splitlines()
    assert lines[0] == "index,u,v,kind"
    assert lines[1] == "0,0,0,self-conjugate"
    assert len(lines) == 1 + 10


def test_pattern_image_scaling():
    assert pattern_image(BinaryPattern(np.array([[0, 1]]))).data.tolist() == [[0.0, 255.0]]
    assert pattern_image(fourier_pattern(PatternParams(0, 0, 0, 2, 2))).data.max() == 255.0
