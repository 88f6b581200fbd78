import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cfsi.imaging import (
    Image,
    PGMHeaderError,
    TruncatedDataError,
    UnsupportedMaxvalError,
    decode_pgm,
    load_image,
    mse,
    psnr,
    psnr_from_mse,
    save_image,
)


def test_image_invariants():
    img = Image.from_values(3, 2, [1, 2, 3, 4, 5, 6])
    assert (img.width, img.height) == (3, 2)
    assert img.data[1, 0] == 4
    with pytest.raises(ValueError):
        Image.from_values(3, 2, [1, 2, 3])
    with pytest.raises(ValueError):
        Image(np.zeros((0, 4)))


def test_load_p2(tmp_path):
    path = tmp_path / "a.pgm"
    path.write_text("P2\n# a comment\n2 2\n255\n0 255\n255 0\n")
    img = load_image(path)
    assert (img.width, img.height) == (2, 2)
    assert img.data.ravel().tolist() == [0, 255, 255, 0]


def test_load_p5_with_comment():
    buf = b"P5\n# made by hand\n3 1 # trailing\n255\n" + bytes([1, 2, 3])
    assert decode_pgm(buf).data.ravel().tolist() == [1, 2, 3]


def test_unsupported_maxval():
    buf = b"P5\n2 1\n65535\n" + bytes(4)
    with pytest.raises(UnsupportedMaxvalError, match="unsupported maxval"):
        decode_pgm(buf)


@pytest.mark.parametrize("buf, exc", [
    (b"", PGMHeaderError),
    (b"P6\n1 1\n255\n\x00", PGMHeaderError),
    (b"P5\n2 x\n255\n", PGMHeaderError),
    (b"P5\n2 2\n", PGMHeaderError),
    (b"P5\n2 2\n255\n\x00\x01", TruncatedDataError),
    (b"P2\n2 2\n255\n1 2 3", TruncatedDataError),
])
def test_parse_errors(buf, exc):
    with pytest.raises(exc):
        decode_pgm(buf)


def test_empty_file(tmp_path):
    path = tmp_path / "empty.pgm"
    path.write_bytes(b"")
    with pytest.raises(PGMHeaderError):
        load_image(path)


def test_save_rounding_and_clipping(tmp_path):
    path = tmp_path / "r.pgm"
    save_image(Image.from_values(4, 1, [127.6, -3.0, 300.0, 2.5]), path)
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n4 1\n255\n")
    assert list(raw[-4:]) == [128, 0, 255, 3]


def test_integer_roundtrip_identity(tmp_path, rng):
    img = Image(rng.integers(0, 256, size=(5, 7)).astype(float))
    save_image(img, tmp_path / "i.pgm")
    assert np.array_equal(load_image(tmp_path / "i.pgm").data, img.data)


def test_save_unwritable(tmp_path):
    with pytest.raises(OSError):
        save_image(Image(np.zeros((2, 2))), tmp_path / "missing" / "x.pgm")


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(0, 255, allow_nan=False)))
def test_roundtrip_within_half(tmp_path_factory, data):
    path = tmp_path_factory.mktemp("rt") / "x.pgm"
    save_image(Image(data), path)
    assert np.max(np.abs(load_image(path).data - data)) <= 0.5


def test_mse_examples():
    a = Image(np.full((3, 3), 7.0))
    assert mse(a, a) == 0
    assert mse(Image(np.zeros((2, 2))), Image(np.full((2, 2), 255.0))) == 65025
    assert mse(Image.from_values(2, 1, [0, 0]), Image.from_values(2, 1, [3, 4])) == 12.5


def test_mse_dimension_mismatch():
    with pytest.raises(ValueError):
        mse(Image(np.zeros((2, 2))), Image(np.zeros((2, 3))))
    with pytest.raises(ValueError):
        psnr(Image(np.zeros((2, 2))), Image(np.zeros((3, 2))))


def test_psnr_examples():
    a = Image(np.zeros((4, 4)))
    rep = psnr(a, a)
    assert rep.mse == 0 and math.isinf(rep.psnr_db) and rep.is_perfect
    assert psnr(a, Image(np.full((4, 4), 255.0))).psnr_db == pytest.approx(0.0, abs=1e-12)
    # 20 log10(255)
    assert psnr(a, Image(np.ones((4, 4)))).psnr_db == pytest.approx(48.1308036087, abs=1e-9)


def test_psnr_bit_depth():
    a = Image(np.zeros((2, 2)))
    assert psnr(a, Image(np.ones((2, 2))), k=1).psnr_db == pytest.approx(0.0)


pairs = arrays(np.float64, (4, 4), elements=st.floats(0, 255, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(pairs, pairs)
def test_mse_symmetric(a, b):
    assert mse(Image(a), Image(b)) == mse(Image(b), Image(a))


@settings(max_examples=60, deadline=None)
@given(pairs, pairs, pairs)
def test_psnr_monotone_in_mse(ref, t1, t2):
    r1, r2 = psnr(Image(ref), Image(t1)), psnr(Image(ref), Image(t2))
    if r1.mse < r2.mse:
        assert r1.psnr_db > r2.psnr_db
    elif r1.mse == r2.mse:
        assert r1.psnr_db == r2.psnr_db


def test_psnr_from_mse_consistent():
    assert psnr_from_mse(1.0) == pytest.approx(20 * math.log10(255))
