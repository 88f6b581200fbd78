"""Image container, 8-bit PGM file I/O and PSNR/MSE quality metrics."""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass

import numpy as np

PSNR_INF = math.inf


class PGMError(ValueError):
    """Base class for PGM decoding failures."""


class PGMHeaderError(PGMError):
    pass


class UnsupportedMaxvalError(PGMError):
    pass


class TruncatedDataError(PGMError):
    pass


@dataclass(frozen=True, eq=False)
class Image:
    """Real-valued grayscale image, stored as a ``(height, width)`` float array.

    Pixel ``(x, y)`` lives at ``data[y, x]``.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"image data must be a non-empty 2-D grid, got shape {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @classmethod
    def from_values(cls, width: int, height: int, values) -> "Image":
        """Build an image from a flat row-major sequence of ``width * height`` values."""
        flat = np.asarray(values, dtype=np.float64).ravel()
        if width < 1 or height < 1:
            raise ValueError("width and height must be >= 1")
        if flat.size != width * height:
            raise ValueError(f"expected {width * height} values, got {flat.size}")
        return cls(flat.reshape(height, width))

    def clipped(self, lo: float = 0.0, hi: float = 255.0) -> "Image":
        return Image(np.clip(self.data, lo, hi))

    def to_bytes(self) -> np.ndarray:
        """Clip to [0, 255] and round half-up to uint8."""
        return np.floor(np.clip(self.data, 0.0, 255.0) + 0.5).astype(np.uint8)


@dataclass(frozen=True)
class QualityReport:
    mse: float
    psnr_db: float
    bit_depth_k: int = 8

    @property
    def is_perfect(self) -> bool:
        return self.mse == 0.0


# --------------------------------------------------------------------------
# PGM I/O
# --------------------------------------------------------------------------

_TOKEN = re.compile(rb"\S+")


def _header_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments.

    Returns the tokens and the offset just past the last token.
    """
    tokens = []
    pos = 0
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise PGMHeaderError("unexpected end of file in PGM header")
        if buf[pos : pos + 1] == b"#":
            nl = buf.find(b"\n", pos)
            pos = n if nl < 0 else nl + 1
            continue
        m = _TOKEN.match(buf, pos)
        tok = m.group(0)
        # a comment may start immediately after a token
        if b"#" in tok:
            tok = tok[: tok.index(b"#")]
            pos += len(tok)
        else:
            pos = m.end()
        tokens.append(tok)
    return tokens, pos


def _parse_int(tok: bytes, field: str) -> int:
    try:
        value = int(tok)
    except ValueError:
        raise PGMHeaderError(f"malformed {field} in PGM header: {tok!r}") from None
    if value < 1:
        raise PGMHeaderError(f"{field} must be positive, got {value}")
    return value


def decode_pgm(buf: bytes) -> Image:
    if not buf:
        raise PGMHeaderError("empty file")
    magic = buf[:2]
    if magic not in (b"P2", b"P5"):
        raise PGMHeaderError(f"not a P2/P5 PGM file (magic {magic!r})")
    tokens, pos = _header_tokens(buf[2:], 3)
    pos += 2
    width = _parse_int(tokens[0], "width")
    height = _parse_int(tokens[1], "height")
    maxval = _parse_int(tokens[2], "maxval")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"unsupported maxval {maxval} (only 255 is supported)")
    count = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        if pos >= len(buf) or not buf[pos : pos + 1].isspace():
            raise TruncatedDataError("missing raster data after PGM header")
        raster = buf[pos + 1 : pos + 1 + count]
        if len(raster) < count:
            raise TruncatedDataError(f"expected {count} data bytes, found {len(raster)}")
        values = np.frombuffer(raster, dtype=np.uint8)
    else:
        body = re.sub(rb"#[^\n]*", b"", buf[pos:])
        words = body.split()
        if len(words) < count:
            raise TruncatedDataError(f"expected {count} samples, found {len(words)}")
        try:
            values = np.array([int(w) for w in words[:count]], dtype=np.int64)
        except ValueError:
            raise PGMError("non-integer sample in P2 data") from None
        if values.min() < 0 or values.max() > maxval:
            raise PGMError("sample value outside [0, maxval]")
    return Image.from_values(width, height, values)


def load_image(path: str | os.PathLike) -> Image:
    """Read an 8-bit PGM (binary P5 or ASCII P2)."""
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def encode_pgm(img: Image) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.to_bytes().tobytes()


def save_image(img: Image, path: str | os.PathLike) -> None:
    """Write ``img`` as binary P5, clipping to [0, 255] and rounding half-up."""
    with open(path, "wb") as fh:
        fh.write(encode_pgm(img))


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------

def _pair(ref: Image, test: Image) -> tuple[np.ndarray, np.ndarray]:
    a = ref.data if isinstance(ref, Image) else np.asarray(ref, dtype=np.float64)
    b = test.data if isinstance(test, Image) else np.asarray(test, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")
    return a, b


def mse(ref: Image, test: Image) -> float:
    a, b = _pair(ref, test)
    return float(np.mean((b - a) ** 2))


def psnr(ref: Image, test: Image, k: int = 8) -> QualityReport:
    """Peak signal-to-noise ratio, ``10 log10((2^k - 1)^2 / MSE)``.

    An exact match yields ``psnr_db = inf`` rather than raising.
    """
    err = mse(ref, test)
    return QualityReport(mse=err, psnr_db=psnr_from_mse(err, k), bit_depth_k=k)


def psnr_from_mse(err: float, k: int = 8) -> float:
    if err == 0.0:
        return PSNR_INF
    peak = (2**k - 1) ** 2
    return 10.0 * math.log10(peak / err)
