from pathlib import Path

import numpy as np
import pytest

from zoomtok.imaging import ImageBuffer
from zoomtok.rng import u64_stream

DATA_DIR = Path(__file__).parent / "data"


def make_noise_image(seed: int, width: int, height: int) -> ImageBuffer:
    """Deterministic noise image built from the package's seeded stream."""
    n = width * height * 3
    words = u64_stream(seed, (n + 7) // 8)
    pixels = words.astype("<u8").view("u1")[:n].reshape(height, width, 3)
    return ImageBuffer(pixels.copy())


@pytest.fixture
def noise_image():
    return make_noise_image


@pytest.fixture
def datadir() -> Path:
    return DATA_DIR


@pytest.fixture
def gradient_image():
    def make(width: int, height: int) -> ImageBuffer:
        x = np.arange(width, dtype=np.int64)[None, :]
        y = np.arange(height, dtype=np.int64)[:, None]
        channels = [(x * 3 + y * 7) % 256, (x * 11 + y * 5) % 256, (x * 13 + y * 17 + 128) % 256]
        return ImageBuffer(np.stack(channels, axis=-1).astype(np.uint8))

    return make
