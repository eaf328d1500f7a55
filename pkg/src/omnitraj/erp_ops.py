"""ERP raster operations: width-axis (latent) rotation and gnomonic viewports.

A "viewport" is the perspective rendering a headset or flat player shows for
a given gaze direction: rays through an image plane at ``yaw``/``pitch`` with
horizontal field of view ``fov``, converted to sphere coordinates and sampled
bilinearly from the ERP frame (columns wrap at the seam, rows clamp at the
poles).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .controller import ConditionMap, FeatureBlock
from .errors import DomainError
from .sphere import HALF_PI, TWO_PI

HORIZONTAL_EIGHT_YAWS = tuple(k * math.pi / 4.0 for k in range(8))


@dataclass(frozen=True)
class ViewportSpec:
    """Gaze direction and framing for a perspective render.

    ``fov`` is the horizontal field of view; vertical extent follows from the
    output aspect ratio (square pixels).
    """

    yaw: float
    pitch: float
    fov: float = HALF_PI
    out_w: int = 512
    out_h: int = 512

    def __post_init__(self):
        if not (0.0 < self.fov < math.pi):
            raise DomainError(f"fov must lie strictly inside (0, pi), got {self.fov}")
        if self.out_w <= 0 or self.out_h <= 0:
            raise DomainError(f"output size must be positive, got {self.out_w}x{self.out_h}")


def _width_axis(arr: np.ndarray) -> int:
    # 2D: (H, W). 3D: channels-last image (H, W, C<=4) vs (C, H, W) stack.
    # 4D: (L, C, H, W).
    if arr.ndim == 2:
        return 1
    if arr.ndim == 3:
        return 1 if arr.shape[-1] <= 4 else 2
    if arr.ndim == 4:
        return 3
    raise DomainError(f"cannot locate a width axis on shape {arr.shape}")


def latent_rotate(block, k: int):
    """Circularly shift the width axis by ``k`` columns (mod W).

    Column ``j`` of the result holds former column ``(j - k) mod W``; every
    other axis is untouched. Accepts a FeatureBlock, a ConditionMap, or a
    bare array, and returns the same type.
    """
    if isinstance(block, FeatureBlock):
        return FeatureBlock(np.roll(block.data, k, axis=3))
    if isinstance(block, ConditionMap):
        return ConditionMap(block.geometry, np.roll(block.data, k, axis=3))
    arr = np.asarray(block)
    return np.roll(arr, k, axis=_width_axis(arr))


def _camera_basis(yaw: float, pitch: float):
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    forward = np.array([cp * cy, cp * sy, sp])
    right = np.array([-sy, cy, 0.0])
    up = np.cross(forward, right)
    return forward, right, up


def erp_sample_bilinear(image: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear lookup at continuous ERP positions; x wraps, y clamps.

    Integer positions return the pixel exactly. Output is float64 with the
    image's channel layout.
    """
    h, w = image.shape[:2]
    img = image.astype(np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    x0 = np.floor(xs).astype(np.int64)
    fx = xs - x0
    x0 %= w
    x1 = (x0 + 1) % w
    # clamp before flooring so out-of-range rows read the edge row, not a blend
    yc = np.clip(np.asarray(ys, dtype=np.float64), 0.0, float(h - 1))
    y0 = np.floor(yc).astype(np.int64)
    fy = yc - y0
    y1 = np.minimum(y0 + 1, h - 1)
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = (1.0 - fx) * img[y0, x0] + fx * img[y0, x1]
    bot = (1.0 - fx) * img[y1, x0] + fx * img[y1, x1]
    return (1.0 - fy) * top + fy * bot


def viewport_rays(spec: ViewportSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-output-pixel (phi, theta) arrays for the spec's camera."""
    forward, right, up = _camera_basis(spec.yaw, spec.pitch)
    tan_half = math.tan(spec.fov / 2.0)
    jj, ii = np.meshgrid(np.arange(spec.out_w), np.arange(spec.out_h))
    u = (jj + 0.5 - spec.out_w / 2.0) * (tan_half / (spec.out_w / 2.0))
    v = (spec.out_h / 2.0 - (ii + 0.5)) * (tan_half / (spec.out_w / 2.0))
    ray = forward + u[..., None] * right + v[..., None] * up
    norm = np.linalg.norm(ray, axis=-1)
    phi = np.arctan2(ray[..., 1], ray[..., 0])
    theta = np.arcsin(np.clip(ray[..., 2] / norm, -1.0, 1.0))
    return phi, theta


def render_viewport(erp_image: np.ndarray, spec: ViewportSpec) -> np.ndarray:
    """Gnomonic projection of an ERP frame; returns uint8 of spec's size."""
    if erp_image.ndim not in (2, 3):
        raise DomainError(f"expected an (H, W[, C]) image, got shape {erp_image.shape}")
    h, w = erp_image.shape[:2]
    phi, theta = viewport_rays(spec)
    xs = (phi + math.pi) * (w / TWO_PI)
    ys = (theta + HALF_PI) * (h / math.pi)
    out = erp_sample_bilinear(erp_image, xs, ys)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def horizontal_eight(erp_image: np.ndarray, fov: float = HALF_PI, out_size: int = 512):
    """The evaluation sweep: pitch 0, yaw stepping 0..315 degrees by 45."""
    return [
        render_viewport(erp_image, ViewportSpec(yaw, 0.0, fov, out_size, out_size))
        for yaw in HORIZONTAL_EIGHT_YAWS
    ]
