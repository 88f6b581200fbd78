"""Experiment harness: single runs, parameter sweeps and the pattern-discrepancy check."""

from __future__ import annotations

import csv
import itertools
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .acquisition import METHODS, MODES, STEPS, AcquisitionConfig, NoiseSpec, acquire
from .imaging import Image, encode_pgm, load_image, psnr, save_image
from .patterns import (
    PatternParams,
    complement_binary,
    floyd_steinberg,
    fourier_pattern,
    frequency_schedule,
    pattern_image,
)
from .reconstruction import assemble, reconstruct, symmetrize

log = logging.getLogger(__name__)

CSV_HEADER = ["method", "mode", "budget", "sigma", "seed", "coefficients_covered", "mse", "psnr_db", "wall_ms"]

# the budgets and noise levels used for the 128x128 simulations
BUDGET_LADDER = (600, 1200, 1800, 2400, 3000, 3600, 6400, 16384)
SIGMA_LADDER = (0.0, 0.1, 0.5, 1.0, 3.0, 5.0, 10.0)


class ConfigError(ValueError):
    """Invalid run or sweep configuration; message names the offending field."""


@dataclass(frozen=True)
class ResultRow:
    method: str
    mode: str
    budget: int
    sigma: float
    seed: int
    coefficients_covered: int
    mse: float
    psnr_db: float
    wall_ms: int

    @property
    def key(self) -> tuple:
        return cell_key(self.method, self.mode, self.budget, self.sigma, self.seed)

    def csv_fields(self) -> list[str]:
        return [
            self.method, self.mode, str(self.budget), format_sigma(self.sigma), str(self.seed),
            str(self.coefficients_covered), f"{self.mse:.10g}",
            "inf" if math.isinf(self.psnr_db) else f"{self.psnr_db:.10g}",
            str(self.wall_ms),
        ]


def format_sigma(sigma: float) -> str:
    return format(float(sigma), "g")


def cell_key(method, mode, budget, sigma, seed) -> tuple:
    return (method, mode, int(budget), format_sigma(sigma), int(seed))


def image_name(method: str, mode: str, budget: int, sigma: float, seed: int) -> str:
    return f"{method}_{mode}_m{budget}_s{format_sigma(sigma).replace('.', 'p')}_seed{seed}.pgm"


def _validate_run(obj: Image, method: str, mode: str, budget: int, sigma: float, seed: int):
    if method not in METHODS:
        raise ConfigError(f"method: expected one of {', '.join(METHODS)}, got {method!r}")
    if mode not in MODES:
        raise ConfigError(f"mode: expected one of {', '.join(MODES)}, got {mode!r}")
    if obj.width != obj.height or obj.width % 2:
        raise ConfigError(f"object: must be square with even side, got {obj.width}x{obj.height}")
    if not isinstance(budget, (int, np.integer)) or budget < STEPS[method]:
        raise ConfigError(f"budget: {method} needs at least {STEPS[method]} patterns, got {budget}")
    full = STEPS[method] * len(frequency_schedule(obj.width, obj.height))
    if budget > full:
        raise ConfigError(f"budget: {budget} exceeds full sampling ({full} patterns) for {method}")
    if not sigma >= 0:
        raise ConfigError(f"sigma: must be >= 0, got {sigma}")
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {seed}")


def run_single(obj: Image, method: str, mode: str, budget: int, sigma: float = 0.0, seed: int = 0,
               background_flux: float = 0.0, b: float = 0.5) -> tuple[Image, ResultRow]:
    """Schedule, acquire, assemble, symmetrize, reconstruct, score.

    The returned image is the 8-bit result (clipped, rounded half up) that
    gets written to disk, and the metrics are computed on it, so an exact
    reconstruction scores an infinite PSNR.
    """
    _validate_run(obj, method, mode, budget, sigma, seed)
    t0 = time.perf_counter()
    schedule = frequency_schedule(obj.width, obj.height)
    config = AcquisitionConfig(method=method, mode=mode, budget=int(budget),
                               noise=NoiseSpec(sigma=float(sigma), master_seed=int(seed)),
                               background_flux=background_flux, b=b)
    records = acquire(obj, schedule, config)
    recon = Image(reconstruct(symmetrize(assemble(records, b))).to_bytes().astype(np.float64))
    report = psnr(obj, recon)
    wall_ms = max(1, math.ceil((time.perf_counter() - t0) * 1000))
    row = ResultRow(method, mode, int(budget), float(sigma), int(seed), config.coefficients,
                    report.mse, report.psnr_db, wall_ms)
    return recon, row


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

def _as_list(value, convert) -> list:
    if isinstance(value, str):
        items = [s.strip() for s in value.split(",") if s.strip()]
    else:
        items = list(value)
    return [convert(x) for x in items]


@dataclass
class SweepSpec:
    object_path: str
    methods: Sequence[str]
    modes: Sequence[str] = ("grayscale",)
    budgets: Sequence[int] = BUDGET_LADDER
    sigmas: Sequence[float] = (0.0,)
    seeds: Sequence[int] = (0,)
    output_dir: str = "results"
    background_flux: float = 0.0
    jobs: int = 1

    def __post_init__(self):
        try:
            self.methods = _as_list(self.methods, str)
            self.modes = _as_list(self.modes, str)
            self.budgets = _as_list(self.budgets, int)
            self.sigmas = _as_list(self.sigmas, float)
            self.seeds = _as_list(self.seeds, int)
        except ValueError as exc:
            raise ConfigError(f"could not parse list value: {exc}") from None
        for name in ("methods", "modes", "budgets", "sigmas", "seeds"):
            if not getattr(self, name):
                raise ConfigError(f"{name}: list must not be empty")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"methods: unknown method {m!r}")
        for m in self.modes:
            if m not in MODES:
                raise ConfigError(f"modes: unknown mode {m!r}")
        if any(bud <= 0 for bud in self.budgets):
            raise ConfigError("budgets: must be positive")
        if any(not s >= 0 for s in self.sigmas):
            raise ConfigError("sigmas: must be >= 0")
        if int(self.jobs) < 1:
            raise ConfigError("jobs: must be >= 1")
        if not self.object_path:
            raise ConfigError("object: path is required")

    def cells(self) -> list[tuple]:
        return list(itertools.product(self.methods, self.modes, self.budgets, self.sigmas, self.seeds))

    @classmethod
    def from_text(cls, text: str, **overrides) -> "SweepSpec":
        """Parse ``key=value`` lines; lists are comma separated, ``#`` starts a comment."""
        values = {}
        aliases = {"object": "object_path", "out": "output_dir", "output": "output_dir",
                   "method": "methods", "mode": "modes", "budget": "budgets", "sigma": "sigmas",
                   "seed": "seeds", "background": "background_flux"}
        known = set(cls.__dataclass_fields__)
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            key = aliases.get(key, key.replace("-", "_"))
            if key not in known:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = value
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            if "background_flux" in values:
                values["background_flux"] = float(values["background_flux"])
            if "jobs" in values:
                values["jobs"] = int(values["jobs"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if "object_path" not in values:
            raise ConfigError("object: path is required")
        if "methods" not in values:
            raise ConfigError("methods: list is required")
        return cls(**values)

    @classmethod
    def from_file(cls, path: str | os.PathLike, **overrides) -> "SweepSpec":
        with open(path) as fh:
            return cls.from_text(fh.read(), **overrides)


def _check_writable(directory: Path) -> None:
    try:
        directory.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=directory):
            pass
    except OSError as exc:
        raise OSError(f"output_dir {str(directory)!r} is not writable: {exc}") from exc


def _completed_keys(csv_path: Path) -> set[tuple]:
    if not csv_path.exists():
        return set()
    done = set()
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                done.add(cell_key(row["method"], row["mode"], row["budget"], float(row["sigma"]), row["seed"]))
            except (KeyError, ValueError, TypeError):
                continue  # a torn last line from an interrupted run
    return done


def _run_cell(args) -> tuple[ResultRow, bytes, str]:
    obj_data, method, mode, budget, sigma, seed, background_flux = args
    obj = Image(obj_data)
    recon, row = run_single(obj, method, mode, budget, sigma, seed, background_flux)
    return row, encode_pgm(recon), image_name(method, mode, budget, sigma, seed)


def run_sweep(spec: SweepSpec, results_name: str = "results.csv") -> list[ResultRow]:
    """Run every cell of the sweep's Cartesian product.

    Rows are appended to ``output_dir/results.csv`` in product order as they
    finish, so an interrupted sweep resumes by skipping cells already present.
    Returns the rows computed in this call.
    """
    out_dir = Path(spec.output_dir)
    _check_writable(out_dir)
    obj = load_image(spec.object_path)
    for m in spec.methods:
        for bud in spec.budgets:
            _validate_run(obj, m, spec.modes[0], bud, spec.sigmas[0], spec.seeds[0])

    csv_path = out_dir / results_name
    done = _completed_keys(csv_path)
    todo = [c for c in spec.cells() if cell_key(*c) not in done]
    log.info("sweep: %d cells, %d already done", len(spec.cells()), len(spec.cells()) - len(todo))

    new_file = not csv_path.exists() or csv_path.stat().st_size == 0
    tasks = [(obj.data, *cell, spec.background_flux) for cell in todo]
    rows = []
    with open(csv_path, "a", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if new_file:
            writer.writerow(CSV_HEADER)
            fh.flush()
        if spec.jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
                results = pool.map(_run_cell, tasks)
                rows = _drain(results, writer, fh, out_dir)
        else:
            rows = _drain(map(_run_cell, tasks), writer, fh, out_dir)
    return rows


def _drain(results: Iterable, writer, fh, out_dir: Path) -> list[ResultRow]:
    rows = []
    for row, pgm, name in results:
        (out_dir / name).write_bytes(pgm)
        writer.writerow(row.csv_fields())
        fh.flush()
        rows.append(row)
        log.info("%s %s m=%d sigma=%s seed=%d psnr=%.3f", row.method, row.mode, row.budget,
                 format_sigma(row.sigma), row.seed, row.psnr_db)
    return rows


# --------------------------------------------------------------------------
# complement vs pi-shift after dithering
# --------------------------------------------------------------------------

@dataclass
class DiffReport:
    differing_pixels: int
    total_pixels: int
    files: list[str] = field(default_factory=list)


def diff_patterns(fx: float, fy: float, theta: float, size: int,
                  out_dir: str | os.PathLike | None = None) -> DiffReport:
    """Compare the complement of a dithered pattern with the dithered pi-shifted pattern.

    Writes five PGMs when ``out_dir`` is given: the grayscale pattern, its
    dither, the complement of that dither, the dither of the pi-shifted
    pattern, and their XOR.
    """
    if not isinstance(size, (int, np.integer)) or size < 1:
        raise ConfigError(f"size: must be a positive integer, got {size}")
    params = PatternParams(fx=fx, fy=fy, theta=theta, width=size, height=size)
    gray = fourier_pattern(params)
    dithered = floyd_steinberg(gray)
    comp = complement_binary(dithered)
    shifted = floyd_steinberg(fourier_pattern(params.shifted(math.pi)))
    xor = (comp.data ^ shifted.data).astype(np.uint8)
    report = DiffReport(int(xor.sum()), size * size)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        panels = {
            "a_gray.pgm": pattern_image(gray),
            "b_dithered.pgm": pattern_image(dithered),
            "c_complement.pgm": pattern_image(comp),
            "d_dithered_shifted.pgm": pattern_image(shifted),
            "e_difference.pgm": Image(xor * 255.0),
        }
        for name, img in panels.items():
            save_image(img, out / name)
            report.files.append(str(out / name))
    return report
