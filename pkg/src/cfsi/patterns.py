"""Fourier basis illumination patterns and their binarizations.

Grayscale patterns follow ``a + b cos(2 pi fx x + 2 pi fy y + theta)`` on
integer pixel coordinates.  Binary versions come from Floyd-Steinberg error
diffusion (one frame) or 8-bit plane decomposition (eight frames).  The
frequency schedule picks one member of every conjugate pair on the DFT grid.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .imaging import Image

SELF_CONJUGATE = "self-conjugate"
HALF_PLANE = "half-plane"

_EPS = 1e-12


@dataclass(frozen=True)
class PatternParams:
    fx: float
    fy: float
    theta: float
    width: int
    height: int
    a: float = 0.5
    b: float = 0.5

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"pattern size must be >= 1, got {self.width}x{self.height}")
        if not 0.0 < self.b <= 1.0:
            raise ValueError(f"contrast b must lie in (0, 1], got {self.b}")
        if self.a + self.b > 1.0 + _EPS or self.a - self.b < -_EPS:
            raise ValueError(f"need a - b >= 0 and a + b <= 1, got a={self.a}, b={self.b}")

    def shifted(self, dtheta: float) -> "PatternParams":
        return PatternParams(self.fx, self.fy, self.theta + dtheta, self.width, self.height, self.a, self.b)


@dataclass(frozen=True, eq=False)
class GrayPattern:
    data: np.ndarray  # (height, width), values in [a - b, a + b]
    params: PatternParams

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class BinaryPattern:
    data: np.ndarray  # (height, width) uint8 of 0/1
    provenance: str = "spatial-dither"

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError("binary pattern must be 2-D")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("binary pattern values must be exactly 0 or 1")
        object.__setattr__(self, "data", arr.astype(np.uint8))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, order=True)
class FrequencyCoord:
    u: int
    v: int
    kind: str = field(default=HALF_PLANE, compare=False)

    def frequency(self, width: int, height: int) -> tuple[float, float]:
        return self.u / width, self.v / height


def is_self_conjugate(u: int, v: int, width: int, height: int) -> bool:
    return (2 * u) % width == 0 and (2 * v) % height == 0


# --------------------------------------------------------------------------
# grayscale patterns
# --------------------------------------------------------------------------

# phases within this many turns of a multiple of 1/12 turn are taken as exact
_PHASE_SNAP = 1e-9
_PHASE_DIV = 12


def _snap_twelfths(theta: float) -> int | None:
    turns = theta / (2 * math.pi)
    k = round(turns * _PHASE_DIV)
    return k if abs(turns * _PHASE_DIV - k) < _PHASE_SNAP else None


def _grid_index(fx: float, n: int) -> int | None:
    k = round(fx * n)
    return k if abs(fx * n - k) < 1e-9 else None


def cos_turns(t: np.ndarray) -> np.ndarray:
    """``cos(2 pi t)`` with exact reduction to the first octant.

    Quarter-turn multiples give exactly 0 or +-1, so a sinusoid's zero
    crossings sit exactly at the DC level ``a``.
    """
    t = np.asarray(t, dtype=np.float64)
    r = 4.0 * (t - np.floor(t))
    n = np.floor(r + 0.5)
    ang = (r - n) * (np.pi / 2)
    q = n.astype(np.int64) % 4
    c, s = np.cos(ang), np.sin(ang)
    return np.select([q == 0, q == 1, q == 2], [c, -s, -c], s)


def _phase_denominator(width: int, height: int) -> int:
    return _PHASE_DIV * math.lcm(width, height)


@functools.lru_cache(maxsize=8)
def _cos_table(d: int) -> np.ndarray:
    # three periods so that indices up to 3d need no modulo
    return np.tile(cos_turns(np.arange(d, dtype=np.float64) / d), 3)


def _phase_numerators(us, vs, width, height) -> np.ndarray:
    """Integer pixel phase in units of ``1/d`` turn, ``d = 12 lcm(W, H)``; shape ``(n, H, W)``.

    Values lie in ``[0, 2d)`` and are not reduced modulo ``d``.
    """
    lcm = math.lcm(width, height)
    x = np.arange(width, dtype=np.int64)
    y = np.arange(height, dtype=np.int64)
    us = np.asarray(us, dtype=np.int64)[:, None, None]
    vs = np.asarray(vs, dtype=np.int64)[:, None, None]
    col = (_PHASE_DIV * (lcm // width) * ((us * x[None, None, :]) % width)).astype(np.int32)
    row = (_PHASE_DIV * (lcm // height) * ((vs * y[None, :, None]) % height)).astype(np.int32)
    return col + row


def _cosines(us, vs, thetas, width, height) -> np.ndarray:
    """``cos(2 pi (u x / W + v y / H) + theta)``, shape ``(n, len(thetas), H, W)``."""
    ks = [_snap_twelfths(t) for t in thetas]
    if all(k is not None for k in ks):
        # exact rational phase, looked up in a table of the same cos_turns values
        d = _phase_denominator(width, height)
        m = _phase_numerators(us, vs, width, height)
        table = _cos_table(d)
        out = np.empty((m.shape[0], len(ks)) + m.shape[1:], dtype=np.float64)
        for j, k in enumerate(ks):
            np.take(table, m + np.int32((k * d // _PHASE_DIV) % d), out=out[:, j])
        return out
    x = np.arange(width, dtype=np.float64)
    y = np.arange(height, dtype=np.float64)
    fx = np.asarray(us, dtype=np.float64)[:, None, None] / width
    fy = np.asarray(vs, dtype=np.float64)[:, None, None] / height
    base = fx * x[None, None, :] + fy * y[None, :, None]
    th = np.array([t / (2 * math.pi) for t in thetas])
    return cos_turns(base[:, None, :, :] + th[None, :, None, None])


def fourier_pattern(params: PatternParams) -> GrayPattern:
    """Evaluate the sinusoid at integer pixel coordinates.

    Grid frequencies (``fx * W`` and ``fy * H`` integral) with phases on
    twelfths of a turn are evaluated from an exact rational phase; anything
    else falls back to floating-point turns.
    """
    p = params
    u = _grid_index(p.fx, p.width)
    v = _grid_index(p.fy, p.height)
    if u is not None and v is not None:
        cos = _cosines([u], [v], [p.theta], p.width, p.height)[0, 0]
    else:
        x = np.arange(p.width, dtype=np.float64)
        y = np.arange(p.height, dtype=np.float64)
        cos = cos_turns(p.fx * x[None, :] + p.fy * y[:, None] + p.theta / (2 * math.pi))
    return GrayPattern(p.a + p.b * cos, p)


def fourier_patterns(coords: Sequence[FrequencyCoord], thetas: Sequence[float], width: int, height: int,
                     a: float = 0.5, b: float = 0.5) -> np.ndarray:
    """Batch of grayscale patterns, shape ``(len(coords), len(thetas), height, width)``.

    Values are identical to calling :func:`fourier_pattern` one by one.
    """
    us = [c.u for c in coords]
    vs = [c.v for c in coords]
    return a + b * _cosines(us, vs, thetas, width, height)


def complement_gray(p: GrayPattern) -> GrayPattern:
    """Mirror the pattern about its DC level; same as shifting the phase by pi."""
    return GrayPattern(2 * p.params.a - p.data, p.params.shifted(math.pi))


def complement_binary(p: BinaryPattern) -> BinaryPattern:
    return BinaryPattern(1 - p.data, "complement")


# --------------------------------------------------------------------------
# spatial dithering
# --------------------------------------------------------------------------

_W_RIGHT = 7.0 / 16.0
_W_BELOW_LEFT = 3.0 / 16.0
_W_BELOW = 5.0 / 16.0
_W_BELOW_RIGHT = 1.0 / 16.0


def floyd_steinberg_batch(gray: np.ndarray) -> np.ndarray:
    """Floyd-Steinberg dither of a stack of patterns, shape ``(..., H, W)``.

    Raster order, threshold ``>= 0.5``, error leaving the grid is dropped.
    The scan is evaluated along wavefronts ``x + 2y = t``: every pixel on a
    wavefront depends only on earlier ones.  Each pixel adds its neighbours'
    diffused errors in the same order a raster scan would push them, so the
    result is bit-identical to the sequential algorithm.
    """
    gray = np.asarray(gray, dtype=np.float64)
    lead = gray.shape[:-2]
    h, w = gray.shape[-2:]
    # batch axis last keeps each wavefront gather contiguous
    src = np.ascontiguousarray(np.moveaxis(gray.reshape((-1, h, w)), 0, -1))
    n = src.shape[-1]
    # error grid padded by one row on top and one column on each side
    err = np.zeros((h + 1, w + 2, n), dtype=np.float64)
    out = np.zeros((h, w, n), dtype=np.uint8)
    for t in range(w + 2 * (h - 1)):
        ys = np.arange(max(0, (t - w + 2) // 2), min(h - 1, t // 2) + 1)
        xs = t - 2 * ys
        ey, ex = ys + 1, xs + 1
        acc = src[ys, xs]
        acc += err[ey - 1, ex - 1] * _W_BELOW_RIGHT
        acc += err[ey - 1, ex] * _W_BELOW
        acc += err[ey - 1, ex + 1] * _W_BELOW_LEFT
        acc += err[ey, ex - 1] * _W_RIGHT
        bit = acc >= 0.5
        out[ys, xs] = bit
        err[ey, ex] = acc - bit
    # padding cells stay zero, which is how off-grid error gets dropped
    return np.moveaxis(out, -1, 0).reshape(lead + (h, w))


def floyd_steinberg(p: GrayPattern | np.ndarray) -> BinaryPattern:
    data = p.data if isinstance(p, GrayPattern) else p
    return BinaryPattern(floyd_steinberg_batch(data), "spatial-dither")


# --------------------------------------------------------------------------
# temporal dithering
# --------------------------------------------------------------------------

def quantize8(p: GrayPattern | np.ndarray) -> np.ndarray:
    data = p.data if isinstance(p, GrayPattern) else np.asarray(p, dtype=np.float64)
    return np.floor(255.0 * data + 0.5).astype(np.uint8)


def temporal_bitplanes(p: GrayPattern | np.ndarray) -> list[BinaryPattern]:
    """Split ``round(255 * p)`` into eight bit-planes, least significant first."""
    q = quantize8(p)
    return [BinaryPattern((q >> k) & 1, f"bit-plane({k})") for k in range(8)]


def recombine_bitplanes(planes: Iterable[BinaryPattern]) -> np.ndarray:
    total = None
    for k, plane in enumerate(planes):
        term = plane.data.astype(np.int64) << k
        total = term if total is None else total + term
    return total


# --------------------------------------------------------------------------
# frequency schedule
# --------------------------------------------------------------------------

def radial_key(u: int, v: int, width: int, height: int) -> tuple:
    du = min(u, width - u)
    dv = min(v, height - v)
    return (du * du + dv * dv, v, u)


def raster_key(u: int, v: int, width: int, height: int) -> tuple:
    return (v, u)


ORDERS: dict[str, Callable[[int, int, int, int], tuple]] = {
    "radial": radial_key,
    "raster": raster_key,
}


def half_plane(width: int, height: int) -> list[FrequencyCoord]:
    """One representative per conjugate pair, in raster order.

    Rows ``v = 0`` and ``v = H/2`` keep ``u <= W/2``; rows ``0 < v < H/2`` keep all ``u``.
    """
    coords = []
    for v in range(height // 2 + 1):
        u_max = width // 2 if v in (0, height // 2) else width - 1
        for u in range(u_max + 1):
            kind = SELF_CONJUGATE if is_self_conjugate(u, v, width, height) else HALF_PLANE
            coords.append(FrequencyCoord(u, v, kind))
    return coords


def frequency_schedule(width: int, height: int, order: str | Callable = "radial") -> list[FrequencyCoord]:
    """Measurement order over the half-plane, low frequencies first by default.

    ``order`` is a name from :data:`ORDERS` or a key function ``(u, v, W, H) -> sortable``.
    """
    if width < 2 or height < 2 or width % 2 or height % 2:
        raise ValueError(f"schedule needs even dimensions >= 2, got {width}x{height}")
    key = ORDERS[order] if isinstance(order, str) else order
    return sorted(half_plane(width, height), key=lambda c: key(c.u, c.v, width, height))


def schedule_csv(schedule: Sequence[FrequencyCoord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "u", "v", "kind"])
    for i, c in enumerate(schedule):
        writer.writerow([i, c.u, c.v, c.kind])
    return buf.getvalue()


# --------------------------------------------------------------------------
# export helpers
# --------------------------------------------------------------------------

def pattern_image(p: GrayPattern | BinaryPattern) -> Image:
    """Scale a pattern to 0..255 for viewing as PGM."""
    return Image(np.asarray(p.data, dtype=np.float64) * 255.0)
