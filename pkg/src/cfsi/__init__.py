"""Complementary Fourier single-pixel imaging simulator with phase-shift baselines."""

from .acquisition import (
    METHODS,
    MODES,
    STEPS,
    AcquisitionConfig,
    MeasurementSet,
    NoiseSpec,
    acquire,
    add_noise,
    measure,
    measure_complementary,
)
from .imaging import Image, QualityReport, load_image, mse, psnr, save_image
from .patterns import (
    BinaryPattern,
    FrequencyCoord,
    GrayPattern,
    PatternParams,
    complement_binary,
    complement_gray,
    floyd_steinberg,
    fourier_pattern,
    frequency_schedule,
    temporal_bitplanes,
)
from .reconstruction import (
    SpectrumGrid,
    assemble,
    assemble_cfsi,
    assemble_four_step,
    assemble_three_step,
    assemble_two_step,
    reconstruct,
    symmetrize,
)

__version__ = "0.1.0"
