from pathlib import Path

import numpy as np
import pytest

from cfsi import Image, load_image

DATA = Path(__file__).parent / "data"

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def cameraman():
    # 512x512 skimage "camera" block-averaged 4x4 to 128x128 and rounded
    return load_image(DATA / "cameraman128.pgm")


@pytest.fixture(scope="session")
def cameraman64(cameraman):
    small = cameraman.data.reshape(64, 2, 64, 2).mean(axis=(1, 3))
    return Image(np.floor(small + 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_image(rng, width, height):
    return Image(rng.integers(0, 256, size=(height, width)).astype(float))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
