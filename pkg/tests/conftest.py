import numpy as np
import pytest
from PIL import Image

from flickermine.imageproc import GrayImage


def write_frames(root, video_id, arrays):
    """Write float [0,1] arrays as the 8-bit grayscale frame layout."""
    vdir = root / video_id
    vdir.mkdir(parents=True, exist_ok=True)
    for i, arr in enumerate(arrays):
        data = np.round(np.asarray(arr, dtype=np.float64) * 255.0).astype(np.uint8)
        Image.fromarray(data, mode="L").save(vdir / f"{i:08d}.png")
    return root


def quantized(arr):
    """The [0,1] values a frame written by write_frames reads back as."""
    data = np.round(np.asarray(arr, dtype=np.float64) * 255.0).astype(np.uint8)
    return data.astype(np.float64) / 255.0


def gray(arr):
    return GrayImage(np.asarray(arr, dtype=np.float64))


@pytest.fixture
def rng():
    return np.random.default_rng(42)
