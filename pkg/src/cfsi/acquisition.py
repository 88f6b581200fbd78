"""Single-pixel detection simulation.

A reading is the mean over pixels of object times pattern.  The complementary
scheme reads the pattern on the "plus" detector and its complement on the
"minus" detector at the same time.  Gaussian noise is keyed on
``(master_seed, seq, arm)``, so readings do not depend on evaluation order.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .imaging import Image
from .patterns import (
    BinaryPattern,
    FrequencyCoord,
    GrayPattern,
    complement_binary,
    complement_gray,
    floyd_steinberg_batch,
    fourier_patterns,
    is_self_conjugate,
    SELF_CONJUGATE,
    HALF_PLANE,
)

ARM_SINGLE = "single"
ARM_PLUS = "plus"
ARM_MINUS = "minus"
ARM_CODES = {ARM_SINGLE: 0, ARM_PLUS: 1, ARM_MINUS: 2}
ARM_NAMES = {code: name for name, code in ARM_CODES.items()}

# phase_index of the two-step uniform DC reference reading
UNIFORM_PHASE = -1

METHODS = ("cfsi", "four-step", "three-step", "two-step")
MODES = ("grayscale", "binary")

PHASES = {
    "cfsi": (0.0, math.pi / 2),
    "four-step": (0.0, math.pi / 2, math.pi, 3 * math.pi / 2),
    "three-step": (0.0, 2 * math.pi / 3, 4 * math.pi / 3),
    "two-step": (0.0, math.pi / 2),
}

# patterns displayed per coefficient
STEPS = {method: len(phases) for method, phases in PHASES.items()}

_BATCH_PIXELS = 1 << 22


class AcquisitionError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.0
    mu: float = 0.0
    master_seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class AcquisitionConfig:
    method: str
    mode: str = "grayscale"
    budget: int = 0
    noise: NoiseSpec = NoiseSpec()
    background_flux: float = 0.0
    a: float = 0.5
    b: float = 0.5

    def __post_init__(self):
        if self.method not in STEPS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.budget < STEPS[self.method]:
            raise AcquisitionError(
                f"budget {self.budget} is smaller than one coefficient's phase set "
                f"({STEPS[self.method]} patterns for {self.method})")
        if not self.background_flux >= 0:
            raise ValueError("background_flux must be >= 0")

    @property
    def steps(self) -> int:
        return STEPS[self.method]

    @property
    def coefficients(self) -> int:
        return self.budget // self.steps


@dataclass(frozen=True)
class MeasurementRecord:
    coord: FrequencyCoord
    phase_index: int
    arm: str
    value: float
    seq: int


@dataclass(eq=False)
class MeasurementSet:
    """Detector readings stored column-wise, in acquisition order."""

    method: str
    width: int
    height: int
    seq: np.ndarray
    u: np.ndarray
    v: np.ndarray
    phase_index: np.ndarray
    arm: np.ndarray  # codes from ARM_CODES
    value: np.ndarray

    def __len__(self) -> int:
        return len(self.value)

    def __iter__(self) -> Iterator[MeasurementRecord]:
        for s, u, v, p, a, val in zip(self.seq, self.u, self.v, self.phase_index, self.arm, self.value):
            u, v = int(u), int(v)
            kind = SELF_CONJUGATE if is_self_conjugate(u, v, self.width, self.height) else HALF_PLANE
            yield MeasurementRecord(FrequencyCoord(u, v, kind), int(p), ARM_NAMES[int(a)], float(val), int(s))

    @property
    def coefficients(self) -> int:
        sel = self.phase_index >= 0
        return len(set(zip(self.u[sel].tolist(), self.v[sel].tolist())))

    @property
    def dc_reading(self) -> float | None:
        idx = np.flatnonzero(self.phase_index == UNIFORM_PHASE)
        return float(self.value[idx[0]]) if idx.size else None

    def identical(self, other: "MeasurementSet") -> bool:
        """Bit-for-bit equality of every column."""
        return (self.method == other.method and self.width == other.width and self.height == other.height
                and all(np.array_equal(getattr(self, f), getattr(other, f))
                        for f in ("seq", "u", "v", "phase_index", "arm"))
                and self.value.tobytes() == other.value.tobytes())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["seq", "u", "v", "phase_index", "arm", "value"])
        for row in zip(self.seq.tolist(), self.u.tolist(), self.v.tolist(), self.phase_index.tolist(),
                       self.arm.tolist(), self.value.tolist()):
            s, u, v, p, a, val = row
            writer.writerow([s, u, v, p, ARM_NAMES[a], f"{val:.15g}"])
        return buf.getvalue()

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, method: str, width: int, height: int) -> "MeasurementSet":
        rows = list(csv.DictReader(io.StringIO(text)))
        try:
            return cls(
                method=method, width=width, height=height,
                seq=np.array([int(r["seq"]) for r in rows], dtype=np.int64),
                u=np.array([int(r["u"]) for r in rows], dtype=np.int64),
                v=np.array([int(r["v"]) for r in rows], dtype=np.int64),
                phase_index=np.array([int(r["phase_index"]) for r in rows], dtype=np.int64),
                arm=np.array([ARM_CODES[r["arm"]] for r in rows], dtype=np.int64),
                value=np.array([float(r["value"]) for r in rows], dtype=np.float64),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError(f"malformed measurement CSV: {exc}") from None

    @classmethod
    def read_csv(cls, path: str | os.PathLike, method: str, width: int, height: int) -> "MeasurementSet":
        with open(path, newline="") as fh:
            return cls.from_csv(fh.read(), method, width, height)


# --------------------------------------------------------------------------
# noise
# --------------------------------------------------------------------------

def _standard_normal(master_seed: int, seq: int, arm_code: int) -> float:
    # Philox is counter based: the (seq, arm) pair selects an independent stream
    bitgen = np.random.Philox(key=master_seed, counter=[0, seq, arm_code, 0])
    return float(np.random.Generator(bitgen).standard_normal())


def noise_draws(noise: NoiseSpec, seqs: Sequence[int], arms: Sequence[int]) -> np.ndarray:
    """Noise terms ``c`` for a batch of readings (zeros when ``sigma == 0``)."""
    seqs = np.asarray(seqs, dtype=np.int64)
    arms = np.asarray(arms, dtype=np.int64)
    if noise.sigma == 0:
        return np.zeros(seqs.shape, dtype=np.float64)
    z = np.array([_standard_normal(noise.master_seed, int(s), int(a)) for s, a in zip(seqs.ravel(), arms.ravel())])
    return noise.mu + noise.sigma * z.reshape(seqs.shape)


def add_noise(value: float, noise: NoiseSpec, seq: int, arm: str = ARM_SINGLE) -> float:
    if noise.sigma == 0:
        return value
    return value + (noise.mu + noise.sigma * _standard_normal(noise.master_seed, seq, ARM_CODES[arm]))


# --------------------------------------------------------------------------
# measurement
# --------------------------------------------------------------------------

def _data(obj) -> np.ndarray:
    return obj.data if hasattr(obj, "data") else np.asarray(obj, dtype=np.float64)


def measure(obj: Image, pattern: GrayPattern | BinaryPattern) -> float:
    o = _data(obj)
    p = _data(pattern)
    if o.shape != p.shape:
        raise ValueError(f"object {o.shape} and pattern {p.shape} dimensions differ")
    return float(np.mean(o * p))


def measure_complementary(obj: Image, pattern: GrayPattern | BinaryPattern, noise: NoiseSpec = NoiseSpec(),
                          seq: int = 0, background_flux: float = 0.0) -> tuple[float, float]:
    """Readings of the two detector arms for one displayed pattern.

    The minus arm sees the complement: ``1 - P`` for a binary pattern, the
    pi-shifted pattern for a grayscale one.
    """
    if isinstance(pattern, BinaryPattern):
        comp = complement_binary(pattern)
    elif isinstance(pattern, GrayPattern):
        comp = complement_gray(pattern)
    else:
        raise TypeError("pattern must be a GrayPattern or BinaryPattern")
    i_plus = add_noise(measure(obj, pattern) + background_flux, noise, seq, ARM_PLUS)
    i_minus = add_noise(measure(obj, comp) + background_flux, noise, seq, ARM_MINUS)
    return i_plus, i_minus


def _batched_means(obj: np.ndarray, patterns: np.ndarray) -> np.ndarray:
    # patterns: (n, P, H, W) -> (n, P)
    # row-wise pairwise sums, so a reading does not depend on how many share its batch
    n, k = patterns.shape[:2]
    return (patterns * obj).reshape(n, k, -1).sum(axis=-1) / obj.size


def patterns_for_budget(method: str, budget: int) -> int:
    return (budget // STEPS[method]) * STEPS[method]


def full_budget(method: str, schedule_len: int) -> int:
    return STEPS[method] * schedule_len


def acquire(obj: Image, schedule: Sequence[FrequencyCoord], config: AcquisitionConfig) -> MeasurementSet:
    """Display each coefficient's phase set in schedule order until the budget runs out."""
    o = _data(obj)
    h, w = o.shape
    method = config.method
    steps = config.steps
    if config.budget > steps * len(schedule):
        raise AcquisitionError(
            f"budget {config.budget} exceeds the {steps * len(schedule)} patterns of the full schedule")
    n_coef = config.coefficients
    coords = list(schedule[:n_coef])
    thetas = PHASES[method]
    binary = config.mode == "binary"

    seq_parts, u_parts, v_parts, ph_parts, arm_parts, val_parts = [], [], [], [], [], []
    seq0 = 0

    if method == "two-step":
        uniform = np.full((1, 1, h, w), config.a)
        if binary:
            uniform = floyd_steinberg_batch(uniform).astype(np.float64)
        dc = float(_batched_means(o, uniform)[0, 0])
        # reference reading: not background-shifted, see README "Background flux"
        dc += float(noise_draws(config.noise, [0], [ARM_CODES[ARM_SINGLE]])[0])
        seq_parts.append(np.array([0]))
        u_parts.append(np.array([0]))
        v_parts.append(np.array([0]))
        ph_parts.append(np.array([UNIFORM_PHASE]))
        arm_parts.append(np.array([ARM_CODES[ARM_SINGLE]]))
        val_parts.append(np.array([dc]))
        seq0 = 1

    batch = max(1, _BATCH_PIXELS // (h * w * steps))
    for start in range(0, n_coef, batch):
        chunk = coords[start : start + batch]
        n = len(chunk)
        pats = fourier_patterns(chunk, thetas, w, h, config.a, config.b)
        if binary:
            pats = floyd_steinberg_batch(pats)
        plus = _batched_means(o, pats.astype(np.float64, copy=False))
        # one seq per displayed pattern
        seqs = seq0 + (start + np.arange(n))[:, None] * steps + np.arange(steps)[None, :]
        if method == "cfsi":
            comp = (1 - pats) if binary else (2 * config.a - pats)
            minus = _batched_means(o, comp.astype(np.float64, copy=False))
            vals = np.stack([plus, minus], axis=-1) + config.background_flux
            arms = np.broadcast_to(np.array([ARM_CODES[ARM_PLUS], ARM_CODES[ARM_MINUS]]), vals.shape)
            seqs = np.repeat(seqs[:, :, None], 2, axis=-1)
        else:
            vals = (plus + config.background_flux)[:, :, None]
            arms = np.full(vals.shape, ARM_CODES[ARM_SINGLE])
            seqs = seqs[:, :, None]
        vals = vals + noise_draws(config.noise, seqs, arms)
        phase_idx = np.broadcast_to(np.arange(steps)[None, :, None], vals.shape)
        us = np.broadcast_to(np.array([c.u for c in chunk])[:, None, None], vals.shape)
        vs = np.broadcast_to(np.array([c.v for c in chunk])[:, None, None], vals.shape)
        seq_parts.append(seqs.ravel())
        u_parts.append(us.ravel())
        v_parts.append(vs.ravel())
        ph_parts.append(phase_idx.ravel())
        arm_parts.append(np.asarray(arms).ravel())
        val_parts.append(vals.ravel())

    def cat(parts, dtype):
        return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype=dtype)

    return MeasurementSet(
        method=method, width=w, height=h,
        seq=cat(seq_parts, np.int64), u=cat(u_parts, np.int64), v=cat(v_parts, np.int64),
        phase_index=cat(ph_parts, np.int64), arm=cat(arm_parts, np.int64), value=cat(val_parts, np.float64),
    )
