"""PNG / binary-PPM image and frame-directory loading."""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .errors import FormatError
from .sphere import FrameGeometry

FRAME_SUFFIXES = (".png", ".ppm")


def load_image(path) -> np.ndarray:
    """Read an 8-bit image as an (H, W, 3) uint8 RGB array."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise FormatError("bad-image", f"{path}: {exc}") from exc


def save_image(arr: np.ndarray, path) -> None:
    """Write an (H, W) or (H, W, 3) uint8 array as PNG or binary PPM by suffix."""
    arr = np.asarray(arr)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path)


def list_frame_files(directory) -> list[str]:
    names = [n for n in os.listdir(directory) if n.lower().endswith(FRAME_SUFFIXES)]
    names.sort()
    return [os.path.join(directory, n) for n in names]


def load_frame_dir(directory) -> tuple[FrameGeometry, np.ndarray]:
    """Load a lexicographically ordered PNG/PPM frame directory.

    Returns the frame geometry (L = number of files) and an
    (L, H, W, 3) uint8 array.
    """
    paths = list_frame_files(directory)
    if not paths:
        raise FormatError("no-frames", f"no .png or .ppm frames in {directory}")
    frames = []
    for p in paths:
        img = load_image(p)
        if frames and img.shape != frames[0].shape:
            raise FormatError(
                "frame-size-mismatch",
                f"{p}: frame shape {img.shape[:2]} differs from first frame {frames[0].shape[:2]}",
            )
        frames.append(img)
    stack = np.stack(frames)
    h, w = stack.shape[1:3]
    return FrameGeometry(W=w, H=h, L=len(frames)), stack
