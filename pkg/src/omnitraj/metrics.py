"""Spherical motion metrics: ObjMC trajectory fidelity and clip motion score.

ObjMC measures how faithfully generated motion follows the requested
trajectories: the great-circle distance between corresponding points of two
trajectory sets, reported per trajectory, per frame, and aggregated. The
clip motion score is the mean endpoint arc per clip, used to drop
low-motion clips from a training corpus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .sme import trajectory_sphere_distance
from .sphere import HALF_PI, TWO_PI
from .tracking import TrajectorySet


@dataclass
class ObjMCReport:
    """Distance breakdowns in radians.

    ``mean_distance`` is the average of per-trajectory means (so every
    trajectory counts equally regardless of occlusions); ``pooled_mean``
    averages all visible point pairs directly.
    """

    mean_distance: float
    pooled_mean: float
    per_trajectory: np.ndarray
    per_frame: np.ndarray


def _sphere_angles(tset: TrajectorySet):
    g = tset.geometry
    xy = tset.as_array()
    phi = TWO_PI * xy[..., 0] / g.W - np.pi
    theta = np.clip(np.pi * xy[..., 1] / g.H - HALF_PI, -HALF_PI, HALF_PI)
    return phi, theta


def _pairwise_distances(a: TrajectorySet, b: TrajectorySet) -> np.ndarray:
    pa, ta = _sphere_angles(a)
    pb, tb = _sphere_angles(b)
    c = np.sin(ta) * np.sin(tb) + np.cos(ta) * np.cos(tb) * np.cos(pa - pb)
    d = np.arccos(np.clip(c, -1.0, 1.0))
    # Coincident points are exactly distance 0; the law of cosines can land
    # one ulp shy of arccos(1) and report ~1e-8 instead.
    d[(pa == pb) & (ta == tb)] = 0.0
    return d


def objmc(generated: TrajectorySet, reference: TrajectorySet) -> ObjMCReport:
    """Spherical distance between corresponding trajectory points.

    Points invisible in either set are excluded from every average. A frame
    (or trajectory) with no visible pair contributes NaN to its breakdown
    entry and is skipped by the aggregate means.
    """
    if len(generated) != len(reference):
        raise DomainError(
            f"trajectory count mismatch: generated has {len(generated)}, "
            f"reference has {len(reference)}"
        )
    if generated.geometry.L != reference.geometry.L:
        raise DomainError(
            f"length mismatch: generated L={generated.geometry.L}, "
            f"reference L={reference.geometry.L}"
        )
    if generated.geometry != reference.geometry:
        raise DomainError(
            f"geometry mismatch: generated {generated.geometry}, "
            f"reference {reference.geometry}"
        )
    if len(generated) == 0:
        raise DomainError("cannot score empty trajectory sets")

    dist = _pairwise_distances(generated, reference)
    vis = np.stack([t.visible for t in generated]) & np.stack(
        [t.visible for t in reference]
    )
    if not vis.any():
        raise DomainError("no visible point pairs to score")

    with np.errstate(invalid="ignore", divide="ignore"):
        per_traj = np.where(vis, dist, 0.0).sum(axis=1) / vis.sum(axis=1)
        per_frame = np.where(vis, dist, 0.0).sum(axis=0) / vis.sum(axis=0)
    mean_distance = float(np.nanmean(per_traj))
    pooled = float(dist[vis].mean())
    return ObjMCReport(mean_distance, pooled, per_traj, per_frame)


def clip_motion_score(tset: TrajectorySet) -> float:
    """Mean endpoint great-circle distance over the set's trajectories."""
    if len(tset) == 0:
        raise DomainError("cannot score an empty trajectory set")
    scores = [trajectory_sphere_distance(t, tset.geometry) for t in tset]
    return float(np.mean(scores))


def quantile_filter(scores, q: float) -> list[int]:
    """Indices that survive dropping the floor(q*n) lowest scores.

    Survivors keep their original order; among tied scores the lower index
    is dropped first (stable sort).
    """
    if not (0.0 <= q < 1.0):
        raise DomainError(f"quantile must satisfy 0 <= q < 1, got {q}")
    scores = np.asarray(scores, dtype=np.float64)
    n = len(scores)
    drop = int(q * n)
    if drop == 0:
        return list(range(n))
    dropped = set(np.argsort(scores, kind="stable")[:drop].tolist())
    return [i for i in range(n) if i not in dropped]
