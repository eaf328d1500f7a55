"""Equal-area iso-latitude seeding grid (RING-scheme pixel centers).

The grid divides the sphere into ``12 * n_side**2`` pixels of equal solid
angle whose centers sit on ``4*n_side - 1`` iso-latitude rings:

* polar caps (rings ``i = 1 .. n-1`` from either pole, ``4i`` centers each):
      z = +-(1 - i**2 / (3 n**2)),   phi_j = (pi / (2i)) * (j + 1/2)
* equatorial belt (rings ``i = n .. 3n``, ``4n`` centers each):
      z = 4/3 - 2i / (3n),           phi_j = (pi / (2n)) * (j + s/2)
  where ``s = (i - n + 1) mod 2`` staggers alternate rings by half a step
  and ``j`` counts from 0 within each ring.

Southern rings are emitted as exact mirrors of their northern partners so
the center multiset is bit-invariant under ``theta -> -theta``. Centers are
returned in RING order: north to south, ascending longitude within a ring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .sphere import ErpPoint, FrameGeometry, SpherePoint, sphere_to_erp


@dataclass(frozen=True)
class HealpixGrid:
    """Resolution descriptor for the seeding grid."""

    n_side: int

    def __post_init__(self):
        if self.n_side < 1:
            raise DomainError(f"n_side must be a positive integer, got {self.n_side}")

    @property
    def n_points(self) -> int:
        return 12 * self.n_side * self.n_side

    @property
    def n_rings(self) -> int:
        return 4 * self.n_side - 1


def _ring_longitudes(count: int, stagger: bool) -> list[float]:
    # stagger=True offsets the ring by half a step; in-ring order starts at
    # the first center with phi >= 0, matching RING-scheme pixel indexing.
    step = 2.0 * math.pi / count
    off = 0.5 if stagger else 0.0
    return [(j + off) * step for j in range(count)]


def _northern_rings(n: int) -> list[tuple[float, list[float]]]:
    """(theta, longitudes) for rings strictly north of the equator plus the equator."""
    rings = []
    for i in range(1, n):  # polar cap
        z = 1.0 - (i * i) / (3.0 * n * n)
        rings.append((math.asin(z), _ring_longitudes(4 * i, stagger=True)))
    for i in range(n, 2 * n):  # belt above the equator
        z = 4.0 / 3.0 - (2.0 * i) / (3.0 * n)
        rings.append((math.asin(z), _ring_longitudes(4 * n, stagger=(i - n + 1) % 2 == 1)))
    # equator ring i = 2n: z = 4/3 - 4/3 = 0 exactly
    rings.append((0.0, _ring_longitudes(4 * n, stagger=(n + 1) % 2 == 1)))
    return rings


def healpix_centers(n_side: int) -> list[SpherePoint]:
    """Pixel centers of the equal-area grid, RING order, as SpherePoints."""
    grid = HealpixGrid(n_side)
    n = grid.n_side
    north = _northern_rings(n)
    points: list[SpherePoint] = []
    for theta, phis in north:
        points.extend(SpherePoint(p, theta) for p in phis)
    # south of the equator: mirror northern rings (excluding the equator)
    # in reverse so the overall order stays north -> south
    for theta, phis in reversed(north[:-1]):
        points.extend(SpherePoint(p, -theta) for p in phis)
    assert len(points) == grid.n_points
    return points


def init_points(n_side: int, g: FrameGeometry) -> list[ErpPoint]:
    """Seeding grid mapped onto ERP pixel coordinates of frame 0."""
    return [sphere_to_erp(s, g) for s in healpix_centers(n_side)]
