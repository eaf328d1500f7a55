"""Canonical spherical geometry for equirectangular (ERP) frames.

Coordinate conventions:

* ERP pixel coordinates: ``x`` is the column in ``[0, W)``, ``y`` the row in
  ``[0, H)``, both continuous.
* Sphere coordinates: longitude ``phi`` in ``[-pi, pi)`` and latitude
  ``theta`` in ``[-pi/2, pi/2]``, related to pixels by

      phi   = 2*pi*x/W - pi
      theta = pi*y/H   - pi/2

The drag-to-trajectory interpolation rule implemented by
:func:`spherical_interpolate` moves latitude along the arcsin blend of the
endpoint latitudes and longitude linearly (seam-aware); its path is *not*
a great circle off the equator, and that is intentional.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import DegeneratePathError, DomainError

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

# Below this separation the interpolation collapses to a constant path;
# within this distance of pi the endpoints are treated as antipodal.
DEGENERATE_ARC = 1e-9


@dataclass(frozen=True)
class ErpPoint:
    """Continuous pixel position on an equirectangular frame."""

    x: float
    y: float


@dataclass(frozen=True)
class SpherePoint:
    """Longitude/latitude pair on the unit sphere.

    ``phi`` is wrapped into ``[-pi, pi)`` and ``theta`` clamped to
    ``[-pi/2, pi/2]`` on construction; values already in range are kept
    bit-identical.
    """

    phi: float
    theta: float

    def __post_init__(self):
        phi = float(self.phi)
        theta = float(self.theta)
        if not (-math.pi <= phi < math.pi):
            phi = (phi + math.pi) % TWO_PI - math.pi
        if theta < -HALF_PI:
            theta = -HALF_PI
        elif theta > HALF_PI:
            theta = HALF_PI
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class FrameGeometry:
    """Pixel dimensions and frame count of an ERP video or image sequence.

    ``L = 1`` is permitted so that seed-point files (single-frame
    trajectories) share this type; operations that need motion check
    ``L >= 2`` themselves.
    """

    W: int
    H: int
    L: int

    def __post_init__(self):
        if self.W <= 0 or self.H <= 0 or self.L <= 0:
            raise DomainError(
                f"frame geometry must be strictly positive, got W={self.W} H={self.H} L={self.L}"
            )
        if self.W != 2 * self.H:
            warnings.warn(
                f"ERP frames are conventionally W = 2*H; got W={self.W}, H={self.H}",
                stacklevel=3,
            )


def erp_to_sphere(p: ErpPoint, g: FrameGeometry, pixel_center: bool = False) -> SpherePoint:
    """Convert an in-bounds ERP pixel position to sphere coordinates.

    ``pixel_center=True`` applies a +0.5 offset for integrations that index
    pixel centers; the default uses the plain linear mapping.
    """
    if not (0.0 <= p.x < g.W):
        raise DomainError(f"x={p.x} outside [0, {g.W})")
    if not (0.0 <= p.y < g.H):
        raise DomainError(f"y={p.y} outside [0, {g.H})")
    off = 0.5 if pixel_center else 0.0
    phi = TWO_PI * (p.x + off) / g.W - math.pi
    theta = math.pi * (p.y + off) / g.H - HALF_PI
    return SpherePoint(phi, theta)


def sphere_to_erp(s: SpherePoint, g: FrameGeometry, pixel_center: bool = False) -> ErpPoint:
    """Exact inverse of :func:`erp_to_sphere` on the open domain.

    ``x`` is wrapped into ``[0, W)``; ``y`` lands in ``[0, H]`` with the
    closed upper end reached only at the north-pole latitude.
    """
    off = 0.5 if pixel_center else 0.0
    x = (s.phi + math.pi) * g.W / TWO_PI - off
    y = (s.theta + HALF_PI) * g.H / math.pi - off
    x = x % g.W
    # float modulo of a tiny negative value rounds up to the modulus itself
    if x == g.W:
        x = 0.0
    return ErpPoint(x, y)


def spherical_distance(a: SpherePoint, b: SpherePoint) -> float:
    """Great-circle distance in radians via the spherical law of cosines.

    The arccos argument is clamped to [-1, 1] so numerically coincident or
    antipodal points never produce NaN; identical inputs return exactly 0.
    """
    if a.phi == b.phi and a.theta == b.theta:
        return 0.0
    c = math.sin(a.theta) * math.sin(b.theta) + math.cos(a.theta) * math.cos(b.theta) * math.cos(
        a.phi - b.phi
    )
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    return math.acos(c)


def wrap_longitude_delta(delta: float) -> float:
    """Wrap a longitude difference into (-pi, pi] (shortest way around)."""
    d = math.remainder(delta, TWO_PI)
    if d == -math.pi:
        d = math.pi
    return d


def spherical_interpolate(handle: SpherePoint, target: SpherePoint, steps: int) -> list[SpherePoint]:
    """Fill a drag gesture with ``steps`` points from handle to target.

    Latitudes follow the arcsin blend

        theta_i = arcsin((sin((1-t_i) w) sin(theta_0) + sin(t_i w) sin(theta_end)) / sin(w))

    with ``w`` the endpoint great-circle distance, while longitudes move
    linearly along the seam-aware shortest longitude difference. The
    interpolation factor is ``t_i = i/(steps-1)`` so elements 0 and
    ``steps-1`` are exactly the handle and target.
    """
    if steps < 2:
        raise DomainError(f"interpolation needs at least 2 steps, got {steps}")
    w = spherical_distance(handle, target)
    if w < DEGENERATE_ARC:
        return [handle] * steps
    if abs(w - math.pi) < DEGENERATE_ARC:
        raise DegeneratePathError(
            "antipodal handle/target pair: interpolation path is undefined (sin(omega) = 0)"
        )
    sin_w = math.sin(w)
    sin_t0 = math.sin(handle.theta)
    sin_t1 = math.sin(target.theta)
    dphi = wrap_longitude_delta(target.phi - handle.phi)

    points = [handle]
    for i in range(1, steps - 1):
        t = i / (steps - 1)
        s = (math.sin((1.0 - t) * w) * sin_t0 + math.sin(t * w) * sin_t1) / sin_w
        if s > 1.0:
            s = 1.0
        elif s < -1.0:
            s = -1.0
        points.append(SpherePoint(handle.phi + t * dphi, math.asin(s)))
    points.append(target)
    return points
