"""Point trajectories over ERP video: trackers and the omnitraj/1 file format.

The external neural tracker used in production is abstracted behind the
:class:`Tracker` interface. Two implementations live here:

* :class:`AnalyticTracker` follows a known synthetic motion exactly and is
  the test backbone.
* :class:`BlockMatchTracker` is a coarse-to-fine block matcher that works on
  real pixel data and respects the ERP seam (horizontal wrap).

Trackers report positions in *unwrapped* x (continuous across the seam);
:func:`track` re-wraps them into ``[0, W)`` and applies the shared
out-of-latitude policy: a point whose row leaves ``[0, H)`` is frozen at its
last valid position and marked invisible from then on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FormatError, TrackerError
from .images import load_frame_dir
from .sphere import ErpPoint, FrameGeometry

TRAJECTORY_FORMAT = "omnitraj/1"
DRAG_FORMAT = "omnidrag/1"


class Trajectory:
    """One tracked point: (L, 2) float positions plus per-frame visibility."""

    def __init__(self, xy, visible=None):
        self.xy = np.asarray(xy, dtype=np.float64)
        if self.xy.ndim != 2 or self.xy.shape[1] != 2:
            raise DomainError(f"trajectory positions must be (L, 2), got {self.xy.shape}")
        if visible is None:
            visible = np.ones(len(self.xy), dtype=bool)
        self.visible = np.asarray(visible, dtype=bool)
        if self.visible.shape != (len(self.xy),):
            raise DomainError("visibility flags must be one per frame")

    def __len__(self):
        return len(self.xy)

    def point(self, i: int) -> ErpPoint:
        return ErpPoint(float(self.xy[i, 0]), float(self.xy[i, 1]))

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return np.array_equal(self.xy, other.xy) and np.array_equal(self.visible, other.visible)

    def __repr__(self):
        return f"Trajectory(L={len(self)}, start={tuple(self.xy[0])}, end={tuple(self.xy[-1])})"


class TrajectorySet:
    """Trajectories plus the frame geometry they live in."""

    def __init__(self, geometry: FrameGeometry, trajectories):
        self.geometry = geometry
        self.trajectories = list(trajectories)
        for k, t in enumerate(self.trajectories):
            if len(t) != geometry.L:
                raise DomainError(
                    f"trajectory {k} has {len(t)} frames, geometry says L={geometry.L}"
                )

    def __len__(self):
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def __getitem__(self, i):
        return self.trajectories[i]

    def __eq__(self, other):
        if not isinstance(other, TrajectorySet):
            return NotImplemented
        return self.geometry == other.geometry and self.trajectories == other.trajectories

    def as_array(self) -> np.ndarray:
        """Positions as an (N, L, 2) array (empty sets give (0, L, 2))."""
        if not self.trajectories:
            return np.zeros((0, self.geometry.L, 2))
        return np.stack([t.xy for t in self.trajectories])


@dataclass
class VideoFrames:
    """Decoded video: (L, H, W) grayscale or (L, H, W, 3) RGB pixels."""

    geometry: FrameGeometry
    frames: np.ndarray

    def __post_init__(self):
        f = self.frames
        if f.ndim not in (3, 4) or (f.ndim == 4 and f.shape[3] != 3):
            raise DomainError(f"frames must be (L, H, W) or (L, H, W, 3), got {f.shape}")
        if f.shape[:3] != (self.geometry.L, self.geometry.H, self.geometry.W):
            raise DomainError(
                f"frame stack {f.shape[:3]} does not match geometry "
                f"(L={self.geometry.L}, H={self.geometry.H}, W={self.geometry.W})"
            )

    def grayscale(self) -> np.ndarray:
        if self.frames.ndim == 3:
            return self.frames.astype(np.float64)
        return self.frames.astype(np.float64).mean(axis=3)


def load_video_dir(directory) -> VideoFrames:
    """Load a directory of PNG/PPM frames, lexicographically ordered."""
    geometry, frames = load_frame_dir(directory)
    return VideoFrames(geometry, frames)


# ---------------------------------------------------------------------------
# Trackers


class Tracker:
    """Interface: produce unwrapped positions for every seed across a video."""

    def run(self, video: VideoFrames, seeds) -> tuple[np.ndarray, np.ndarray]:
        """Return ((N, L, 2) float positions, (N, L) bool visibility).

        Positions are continuity-unwrapped in x (no seam jumps); the caller
        wraps them. Implementations must be safe to call concurrently on
        read-only frames.
        """
        raise NotImplementedError


class AnalyticTracker(Tracker):
    """Oracle tracker that evaluates a known motion function exactly.

    ``motion(seed, frame_index) -> (x, y)`` in unwrapped coordinates.
    """

    def __init__(self, motion):
        self.motion = motion

    @classmethod
    def static(cls):
        return cls(lambda seed, i: (seed.x, seed.y))

    @classmethod
    def yaw_shift(cls, px_per_frame: float):
        return cls(lambda seed, i: (seed.x + px_per_frame * i, seed.y))

    @classmethod
    def pitch_shift(cls, px_per_frame: float):
        return cls(lambda seed, i: (seed.x, seed.y + px_per_frame * i))

    def run(self, video, seeds):
        L = video.geometry.L
        pos = np.empty((len(seeds), L, 2))
        for j, seed in enumerate(seeds):
            try:
                for i in range(L):
                    pos[j, i] = self.motion(seed, i)
            except Exception as exc:
                raise TrackerError(f"motion function failed on seed {j}: {exc}", j) from exc
        return pos, np.ones(pos.shape[:2], dtype=bool)


def _downsample2(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    h2, w2 = h // 2 * 2, w // 2 * 2
    c = img[:h2, :w2]
    return 0.25 * (c[0::2, 0::2] + c[1::2, 0::2] + c[0::2, 1::2] + c[1::2, 1::2])


def _extract_patch(img, cy, cx, half_h, half_w):
    # Rows clamp at the poles, columns wrap across the seam.
    rows = np.clip(np.arange(cy - half_h, cy + half_h + 1), 0, img.shape[0] - 1)
    cols = np.arange(cx - half_w, cx + half_w + 1) % img.shape[1]
    return img[np.ix_(rows, cols)]


@dataclass
class BlockMatchTracker(Tracker):
    """Coarse-to-fine SSD block matching with seam-aware patch extraction."""

    patch: int = 16
    search: int = 8
    levels: int = 3

    def run(self, video, seeds):
        gray = video.grayscale()
        L = video.geometry.L
        pyramids = [self._pyramid(gray[i]) for i in range(L)]
        pos = np.empty((len(seeds), L, 2))
        for j, seed in enumerate(seeds):
            try:
                pos[j] = self._track_seed(pyramids, seed, L)
            except Exception as exc:
                raise TrackerError(f"block matching failed on seed {j}: {exc}", j) from exc
        return pos, np.ones(pos.shape[:2], dtype=bool)

    def _pyramid(self, img):
        levels = [img]
        for _ in range(self.levels - 1):
            levels.append(_downsample2(levels[-1]))
        return levels

    def _track_seed(self, pyramids, seed, L):
        out = np.empty((L, 2))
        out[0] = (seed.x, seed.y)
        x, y = seed.x, seed.y
        for i in range(1, L):
            dx, dy = self._match(pyramids[i - 1], pyramids[i], x, y)
            x, y = x + dx, y + dy
            out[i] = (x, y)
        return out

    def _match(self, prev_pyr, next_pyr, x, y):
        half = self.patch // 2
        dx = dy = 0.0
        for lvl in range(self.levels - 1, -1, -1):
            scale = 2**lvl
            prev_img, next_img = prev_pyr[lvl], next_pyr[lvl]
            h, w = prev_img.shape
            cx = int(round(x / scale)) % w
            cy = int(np.clip(round(y / scale), 0, h - 1))
            ref = _extract_patch(prev_img, cy, cx, half, half)
            sx = int(round((x + dx) / scale)) % w
            sy = int(np.clip(round((y + dy) / scale), 0, h - 1))
            region = _extract_patch(next_img, sy, sx, half + self.search, half + self.search)
            windows = np.lib.stride_tricks.sliding_window_view(region, ref.shape)
            ssd = ((windows - ref) ** 2).sum(axis=(2, 3))
            best = np.unravel_index(np.argmin(ssd), ssd.shape)
            dx += (best[1] - self.search) * scale
            dy += (best[0] - self.search) * scale
        return dx, dy


def track(video: VideoFrames, seeds, tracker: Tracker) -> TrajectorySet:
    """Run a tracker over in-bounds seed points and normalize its output.

    Output trajectories start exactly at their seeds, have x wrapped into
    ``[0, W)``, and apply the freeze-when-out-of-latitude visibility rule.
    """
    g = video.geometry
    if g.L < 2:
        raise DomainError(f"tracking needs at least 2 frames, got L={g.L}")
    for j, s in enumerate(seeds):
        if not (0 <= s.x < g.W and 0 <= s.y < g.H):
            raise DomainError(f"seed {j} at ({s.x}, {s.y}) outside {g.W}x{g.H} frame")

    pos, visible = tracker.run(video, list(seeds))
    trajectories = []
    for j, seed in enumerate(seeds):
        xy = pos[j].copy()
        vis = visible[j].copy()
        xy[0] = (seed.x, seed.y)
        for i in range(1, g.L):
            if not (0 <= xy[i, 1] < g.H):
                xy[i:] = xy[i - 1]
                vis[i:] = False
                break
        xy[:, 0] %= g.W
        trajectories.append(Trajectory(xy, vis))
    return TrajectorySet(g, trajectories)


# ---------------------------------------------------------------------------
# omnitraj/1 interchange format


def _require_header(doc, expected_format, path):
    if not isinstance(doc, dict) or doc.get("format") != expected_format:
        raise FormatError(
            "bad-format", f"{path}: expected a '{expected_format}' document"
        )
    try:
        w, h, length = int(doc["W"]), int(doc["H"]), int(doc["L"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError("bad-header", f"{path}: W/H/L missing or non-integer") from exc
    try:
        return FrameGeometry(w, h, length)
    except DomainError as exc:
        raise FormatError("bad-header", f"{path}: {exc}") from exc


def _load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError("bad-json", f"{path}: not valid JSON ({exc})") from exc


def trajectory_document(tset: TrajectorySet, meta=None) -> dict:
    doc = {
        "format": TRAJECTORY_FORMAT,
        "W": tset.geometry.W,
        "H": tset.geometry.H,
        "L": tset.geometry.L,
        "trajectories": [[[float(x), float(y)] for x, y in t.xy] for t in tset],
        "visible": [[bool(v) for v in t.visible] for t in tset],
    }
    if meta is not None:
        doc["meta"] = meta
    return doc


def dumps_trajectories(tset: TrajectorySet, meta=None) -> str:
    """Canonical omnitraj/1 text: compact separators, trailing newline."""
    return json.dumps(trajectory_document(tset, meta), separators=(",", ":")) + "\n"


def save_trajectories(tset: TrajectorySet, path, meta=None) -> None:
    """Write an omnitraj/1 document; byte-deterministic for equal inputs."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_trajectories(tset, meta))


def parse_trajectory_document(
    doc, source="<memory>", expect_geometry: FrameGeometry | None = None
) -> TrajectorySet:
    """Validate a decoded omnitraj/1 document (header, record lengths)."""
    path = source
    geometry = _require_header(doc, TRAJECTORY_FORMAT, path)
    if expect_geometry is not None and geometry != expect_geometry:
        raise FormatError(
            "geometry-mismatch",
            f"{path}: file geometry {geometry} differs from expected {expect_geometry}",
        )
    records = doc.get("trajectories")
    if not isinstance(records, list):
        raise FormatError("bad-header", f"{path}: 'trajectories' missing or not a list")
    vis_records = doc.get("visible")
    if vis_records is not None and len(vis_records) != len(records):
        raise FormatError(
            "length-mismatch",
            f"{path}: {len(vis_records)} visibility records for {len(records)} trajectories",
        )
    trajectories = []
    for k, rec in enumerate(records):
        if len(rec) != geometry.L:
            raise FormatError(
                "length-mismatch",
                f"{path}: trajectory {k} has {len(rec)} points, header says L={geometry.L}",
            )
        vis = None
        if vis_records is not None:
            if len(vis_records[k]) != geometry.L:
                raise FormatError(
                    "length-mismatch",
                    f"{path}: visibility record {k} has {len(vis_records[k])} flags, "
                    f"header says L={geometry.L}",
                )
            vis = vis_records[k]
        trajectories.append(Trajectory(rec, vis))
    return TrajectorySet(geometry, trajectories)


def load_trajectories(path, expect_geometry: FrameGeometry | None = None) -> TrajectorySet:
    """Read an omnitraj/1 document, validating header and record lengths."""
    return parse_trajectory_document(_load_json(path), str(path), expect_geometry)
