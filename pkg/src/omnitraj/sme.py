"""Spherical motion estimation: select tracked trajectories for training
conditions and estimate full trajectories from user drag pairs.

Training side: endpoint great-circle distance scores each trajectory, a
strict threshold filters weak motion, and a distance-weighted draw without
replacement picks the conditioning subset. Inference side: each drag pair
is expanded to a full trajectory through the spherical interpolation rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePathError, DomainError, EmptySelectionError, FormatError
from .healpix import init_points
from .sphere import (
    ErpPoint,
    FrameGeometry,
    erp_to_sphere,
    sphere_to_erp,
    spherical_distance,
    spherical_interpolate,
)
from .tracking import (
    DRAG_FORMAT,
    Trajectory,
    TrajectorySet,
    VideoFrames,
    _load_json,
    _require_header,
    track,
)

DEFAULT_DISTANCE_THRESHOLD = 0.05  # radians; CLI-overridable, see FilterPolicy


@dataclass(frozen=True)
class FilterPolicy:
    """Thresholding and sampling knobs for trajectory selection."""

    d_th: float = DEFAULT_DISTANCE_THRESHOLD
    n_samp_min: int = 1
    n_samp_max: int = 10
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.d_th <= np.pi):
            raise DomainError(f"d_th must be in [0, pi], got {self.d_th}")
        if not (1 <= self.n_samp_min <= self.n_samp_max):
            raise DomainError(
                f"need 1 <= n_samp_min <= n_samp_max, got {self.n_samp_min}..{self.n_samp_max}"
            )


@dataclass(frozen=True)
class DragPair:
    """User gesture: where motion starts (handle) and ends (target)."""

    handle: ErpPoint
    target: ErpPoint


def trajectory_sphere_distance(t: Trajectory, g: FrameGeometry) -> float:
    """Great-circle distance between a trajectory's first and last positions."""
    if len(t) < 2:
        raise DomainError("endpoint distance needs at least 2 frames")
    return spherical_distance(erp_to_sphere(t.point(0), g), erp_to_sphere(t.point(len(t) - 1), g))


def filter_trajectories(tset: TrajectorySet, policy: FilterPolicy) -> TrajectorySet:
    """Keep exactly the trajectories whose endpoint distance strictly exceeds d_th."""
    kept = [
        t for t in tset if trajectory_sphere_distance(t, tset.geometry) > policy.d_th
    ]
    return TrajectorySet(tset.geometry, kept)


def _weighted_indices_without_replacement(weights, k, rng):
    """Sequential weighted draws; uniform fallback once remaining weight is zero."""
    weights = list(weights)
    available = list(range(len(weights)))
    chosen = []
    for _ in range(k):
        total = sum(weights[i] for i in available)
        r = rng.random()
        if total > 0.0:
            acc = 0.0
            pick = available[-1]
            for i in available:
                acc += weights[i] / total
                if r < acc:
                    pick = i
                    break
        else:
            pick = available[int(r * len(available))]
        chosen.append(pick)
        available.remove(pick)
    return chosen


def sample_trajectories(tset: TrajectorySet, policy: FilterPolicy) -> TrajectorySet:
    """Draw a conditioning subset with probability proportional to motion size.

    The draw count is uniform on [n_samp_min, n_samp_max], capped at the set
    size; selection order in the result preserves the input order. All
    randomness comes from the policy seed.
    """
    if len(tset) == 0:
        raise EmptySelectionError(
            "no trajectories to sample; lower d_th (or use --d-th 0) and retry"
        )
    rng = np.random.default_rng(policy.seed)
    n_samp = int(rng.integers(policy.n_samp_min, policy.n_samp_max + 1))
    k = min(n_samp, len(tset))
    distances = [trajectory_sphere_distance(t, tset.geometry) for t in tset]
    if max(distances) == min(distances):
        # Equal weights (including the all-zero case): degrade to uniform.
        distances = [1.0] * len(distances)
    chosen = _weighted_indices_without_replacement(distances, k, rng)
    chosen.sort()
    return TrajectorySet(tset.geometry, [tset[i] for i in chosen])


def estimate_trajectories(pairs, g: FrameGeometry) -> TrajectorySet:
    """Expand drag pairs into full L-frame trajectories on the sphere."""
    pairs = list(pairs)
    if not pairs:
        raise DomainError("need at least one drag pair")
    if g.L < 2:
        raise DomainError(f"estimation needs L >= 2 frames, got L={g.L}")
    trajectories = []
    for k, pair in enumerate(pairs):
        a = erp_to_sphere(pair.handle, g)
        b = erp_to_sphere(pair.target, g)
        try:
            path = spherical_interpolate(a, b, g.L)
        except DegeneratePathError as exc:
            raise DegeneratePathError(
                f"drag pair {k} is antipodal: {exc}", pair_index=k
            ) from exc
        xy = [(sphere_to_erp(s, g).x, sphere_to_erp(s, g).y) for s in path]
        trajectories.append(Trajectory(np.asarray(xy)))
    return TrajectorySet(g, trajectories)


def extract_condition_trajectories(
    video: VideoFrames, n_side: int, policy: FilterPolicy, tracker
) -> TrajectorySet:
    """Training-side pipeline: seed on the equal-area grid, track, filter, sample."""
    seeds = init_points(n_side, video.geometry)
    tracked = track(video, seeds, tracker)
    filtered = filter_trajectories(tracked, policy)
    if len(filtered) == 0:
        raise EmptySelectionError(
            f"no trajectories above threshold d_th={policy.d_th}; lower d_th and retry"
        )
    return sample_trajectories(filtered, policy)


# ---------------------------------------------------------------------------
# omnidrag/1 interchange format


def drag_pair_document(pairs, g: FrameGeometry, meta=None) -> dict:
    doc = {
        "format": DRAG_FORMAT,
        "W": g.W,
        "H": g.H,
        "L": g.L,
        "pairs": [
            {
                "handle": [float(p.handle.x), float(p.handle.y)],
                "target": [float(p.target.x), float(p.target.y)],
            }
            for p in pairs
        ],
    }
    if meta is not None:
        doc["meta"] = meta
    return doc


def dumps_drag_pairs(pairs, g: FrameGeometry, meta=None) -> str:
    """Canonical omnidrag/1 text: compact separators, trailing newline."""
    return json.dumps(drag_pair_document(pairs, g, meta), separators=(",", ":")) + "\n"


def save_drag_pairs(pairs, g: FrameGeometry, path, meta=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_drag_pairs(pairs, g, meta))


def parse_drag_pair_document(doc, source="<memory>") -> tuple[list[DragPair], FrameGeometry]:
    """Validate a decoded omnidrag/1 document and build its pairs."""
    path = source
    geometry = _require_header(doc, DRAG_FORMAT, path)
    records = doc.get("pairs")
    if not isinstance(records, list):
        raise FormatError("bad-header", f"{path}: 'pairs' missing or not a list")
    pairs = []
    for k, rec in enumerate(records):
        try:
            hx, hy = rec["handle"]
            tx, ty = rec["target"]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(
                "bad-pair", f"{path}: pair {k} lacks 2-element handle/target"
            ) from exc
        pairs.append(
            DragPair(ErpPoint(float(hx), float(hy)), ErpPoint(float(tx), float(ty)))
        )
    return pairs, geometry


def load_drag_pairs(path) -> tuple[list[DragPair], FrameGeometry]:
    return parse_drag_pair_document(_load_json(path), str(path))
