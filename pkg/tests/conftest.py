import numpy as np
import pytest

from omnitraj.images import save_image
from omnitraj.sphere import FrameGeometry
from omnitraj.tracking import VideoFrames


def make_noise_image(rng, h, w):
    return rng.integers(0, 256, size=(h, w, 3)).astype(np.uint8)


def make_yaw_video(rng, w=64, h=32, frames=6, shift=2):
    """Synthetic ERP clip: a noise texture circularly shifted shift px/frame."""
    base = rng.integers(0, 256, size=(h, w, 3)).astype(np.uint8)
    stack = np.stack([np.roll(base, shift * i, axis=1) for i in range(frames)])
    return VideoFrames(FrameGeometry(W=w, H=h, L=frames), stack)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def textured_erp(rng):
    return make_noise_image(rng, 64, 128)


@pytest.fixture(scope="session")
def yaw_frames_dir(tmp_path_factory):
    """On-disk PNG frame directory with 2 px/frame yaw rotation (64x32, L=6)."""
    rng = np.random.default_rng(7)
    video = make_yaw_video(rng, w=64, h=32, frames=6, shift=2)
    d = tmp_path_factory.mktemp("yaw_frames")
    for i in range(video.geometry.L):
        save_image(video.frames[i], d / f"frame_{i:03d}.png")
    return d


@pytest.fixture(scope="session")
def static_frames_dir(tmp_path_factory):
    rng = np.random.default_rng(8)
    frame = rng.integers(0, 256, size=(32, 64, 3)).astype(np.uint8)
    d = tmp_path_factory.mktemp("static_frames")
    for i in range(4):
        save_image(frame, d / f"frame_{i:03d}.png")
    return d
