"""Reference fixture: a drifting real photograph containing one face.

Used by the tests and the README walkthrough; handy for smoke-testing a
full mine-hn run without collecting any video.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from skimage import data as skimage_data

FIXTURE_SIZE = 256


def render_face_fixture(
    frames_dir: str | Path, video_id: str = "studio", n_frames: int = 10, shift: int = 2
) -> Path:
    """Write ``n_frames`` frames of a slowly panning face photograph."""
    base = np.asarray(
        Image.fromarray(skimage_data.astronaut()).resize(
            (FIXTURE_SIZE, FIXTURE_SIZE), Image.LANCZOS
        )
    )
    vdir = Path(frames_dir) / video_id
    vdir.mkdir(parents=True, exist_ok=True)
    for f in range(n_frames):
        frame = np.roll(base, shift=(shift * f, shift * f), axis=(0, 1))
        Image.fromarray(frame).save(vdir / f"{f:08d}.png")
    return Path(frames_dir)
