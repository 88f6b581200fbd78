"""Fourier coefficient assembly and inverse-transform reconstruction.

Transform convention: the forward coefficient is the pixel *mean* of
``O * exp(-j 2 pi (u x / W + v y / H))`` and the inverse is the plain sum with
``exp(+j ...)``.  Under this convention a phase-shift reading difference maps
straight onto a coefficient with no extra scaling.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass

import numpy as np

from .acquisition import (
    ARM_CODES,
    ARM_MINUS,
    ARM_PLUS,
    ARM_SINGLE,
    STEPS,
    UNIFORM_PHASE,
    MeasurementSet,
)
from .imaging import Image

IMAG_RESIDUE_TOL = 1e-6
_CONJ_TOL = 1e-9
_SQRT3 = math.sqrt(3.0)


class IntegrityError(ValueError):
    """Measurements or spectrum entries are missing or contradictory."""


@dataclass(eq=False)
class SpectrumGrid:
    """Complex coefficients indexed ``coeffs[v, u]`` with a matching fill mask."""

    coeffs: np.ndarray
    filled: np.ndarray

    @classmethod
    def empty(cls, width: int, height: int) -> "SpectrumGrid":
        return cls(np.zeros((height, width), dtype=np.complex128), np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.coeffs.shape[1]

    @property
    def height(self) -> int:
        return self.coeffs.shape[0]

    def __getitem__(self, uv: tuple[int, int]) -> complex:
        u, v = uv
        return complex(self.coeffs[v, u])

    def __setitem__(self, uv: tuple[int, int], value: complex) -> None:
        u, v = uv
        self.coeffs[v, u] = value
        self.filled[v, u] = True

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["u", "v", "re", "im", "filled"])
        for v in range(self.height):
            for u in range(self.width):
                c = self.coeffs[v, u]
                writer.writerow([u, v, f"{c.real:.15g}", f"{c.imag:.15g}", int(self.filled[v, u])])
        return buf.getvalue()

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def _gather(records: MeasurementSet, method: str, arms: tuple[str, ...]):
    """Arrange readings into ``table[v, u, phase, arm]`` (NaN where absent).

    Returns the table and the mask of coefficients that have any reading.
    """
    if records.method != method:
        raise IntegrityError(f"measurement set was acquired with {records.method!r}, not {method!r}")
    h, w = records.height, records.width
    steps = STEPS[method]
    sel = records.phase_index >= 0
    u, v = records.u[sel], records.v[sel]
    ph, arm, val = records.phase_index[sel], records.arm[sel], records.value[sel]

    slot_of = {ARM_CODES[name]: k for k, name in enumerate(arms)}
    slot = np.array([slot_of.get(int(a), -1) for a in arm], dtype=np.int64)
    if np.any(slot < 0):
        raise IntegrityError(f"{method} expects detector arms {arms}")
    if np.any((ph >= steps)) or np.any((u < 0) | (u >= w) | (v < 0) | (v >= h)):
        raise IntegrityError("phase index or frequency out of range")

    flat = ((v * w + u) * steps + ph) * len(arms) + slot
    if np.unique(flat).size != flat.size:
        raise IntegrityError("duplicate reading for the same frequency, phase and arm")
    table = np.full((h, w, steps, len(arms)), np.nan)
    table.reshape(-1)[flat] = val
    claimed = np.zeros((h, w), dtype=bool)
    claimed[v, u] = True
    missing = claimed & np.isnan(table).any(axis=(2, 3))
    if missing.any():
        vv, uu = np.argwhere(missing)[0]
        raise IntegrityError(f"coefficient (u={uu}, v={vv}) lacks a phase or arm reading")
    return table, claimed


def _grid(coeffs: np.ndarray, claimed: np.ndarray) -> SpectrumGrid:
    return SpectrumGrid(np.where(claimed, coeffs, 0).astype(np.complex128), claimed.copy())


def assemble_cfsi(records: MeasurementSet, b: float = 0.5) -> SpectrumGrid:
    """Complementary pairs at 0 and pi/2: ``((I+_0 - I-_0) + j (I+_pi/2 - I-_pi/2)) / 2b``."""
    t, claimed = _gather(records, "cfsi", (ARM_PLUS, ARM_MINUS))
    with np.errstate(invalid="ignore"):
        d0 = t[:, :, 0, 0] - t[:, :, 0, 1]
        d1 = t[:, :, 1, 0] - t[:, :, 1, 1]
    return _grid((d0 + 1j * d1) / (2 * b), claimed)


def assemble_four_step(records: MeasurementSet, b: float = 0.5) -> SpectrumGrid:
    t, claimed = _gather(records, "four-step", (ARM_SINGLE,))
    i0, i1, i2, i3 = (t[:, :, k, 0] for k in range(4))
    with np.errstate(invalid="ignore"):
        return _grid(((i0 - i2) + 1j * (i1 - i3)) / (2 * b), claimed)


def assemble_three_step(records: MeasurementSet, b: float = 0.5) -> SpectrumGrid:
    """Phases 0, 2pi/3, 4pi/3: ``((2 I0 - I1 - I2) + j sqrt3 (I1 - I2)) / 3b``."""
    t, claimed = _gather(records, "three-step", (ARM_SINGLE,))
    i0, i1, i2 = (t[:, :, k, 0] for k in range(3))
    with np.errstate(invalid="ignore"):
        return _grid(((2 * i0 - i1 - i2) + 1j * _SQRT3 * (i1 - i2)) / (3 * b), claimed)


def assemble_two_step(records: MeasurementSet, b: float = 0.5, dc_reading: float | None = None) -> SpectrumGrid:
    """Phases 0 and pi/2, each referenced to one uniform-pattern reading.

    ``dc_reading`` defaults to the uniform reading stored in ``records``.
    """
    if dc_reading is None:
        dc_reading = records.dc_reading
    if dc_reading is None:
        raise IntegrityError("two-step assembly needs the uniform-pattern DC reading")
    t, claimed = _gather(records, "two-step", (ARM_SINGLE,))
    i0, i1 = t[:, :, 0, 0], t[:, :, 1, 0]
    with np.errstate(invalid="ignore"):
        return _grid(((i0 - dc_reading) + 1j * (i1 - dc_reading)) / b, claimed)


def assemble(records: MeasurementSet, b: float = 0.5) -> SpectrumGrid:
    """Dispatch on ``records.method``."""
    return _ASSEMBLERS[records.method](records, b)


_ASSEMBLERS = {
    "cfsi": assemble_cfsi,
    "four-step": assemble_four_step,
    "three-step": assemble_three_step,
    "two-step": assemble_two_step,
}


def _conjugate_index(width: int, height: int):
    vv, uu = np.indices((height, width))
    return (-vv) % height, (-uu) % width


def symmetrize(half: SpectrumGrid) -> SpectrumGrid:
    """Fill conjugate positions so the inverse transform is real.

    Self-conjugate entries keep only their real part.
    """
    h, w = half.height, half.width
    cv, cu = _conjugate_index(w, h)
    self_conj = (cv == np.indices((h, w))[0]) & (cu == np.indices((h, w))[1])
    c, f = half.coeffs, half.filled
    mirrored = np.conj(c[cv, cu])
    mirror_filled = f[cv, cu]

    both = f & mirror_filled & ~self_conj
    if both.any():
        scale = np.maximum(1.0, np.abs(c))
        bad = both & (np.abs(c - mirrored) > _CONJ_TOL * scale)
        if bad.any():
            vv, uu = np.argwhere(bad)[0]
            raise IntegrityError(f"inconsistent conjugate pair at (u={uu}, v={vv})")

    out = np.where(f, c, np.where(mirror_filled, mirrored, 0))
    out = np.where(self_conj, out.real + 0j, out)
    return SpectrumGrid(out.astype(np.complex128), f | mirror_filled)


def reconstruct(spectrum: SpectrumGrid, clip: bool = True) -> Image:
    """Inverse transform of a symmetrized spectrum.

    Raises ``IntegrityError`` when the result is not real to within
    ``IMAG_RESIDUE_TOL`` relative, which means the spectrum was not symmetric.
    With ``clip`` the image is limited to [0, 255].
    """
    h, w = spectrum.height, spectrum.width
    field = np.fft.ifft2(spectrum.coeffs) * (w * h)
    re, im = field.real, field.imag
    if np.max(np.abs(im)) > IMAG_RESIDUE_TOL * np.max(np.abs(re)):
        raise IntegrityError("inverse transform has an imaginary residue; spectrum not symmetrized")
    if clip:
        re = np.clip(re, 0.0, 255.0)
    return Image(re)


def forward_spectrum(img: Image) -> SpectrumGrid:
    """Full-plane mean-normalized DFT of an image (all entries filled)."""
    h, w = img.shape
    coeffs = np.fft.fft2(img.data) / (w * h)
    return SpectrumGrid(coeffs, np.ones((h, w), dtype=bool))
