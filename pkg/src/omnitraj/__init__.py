"""Spherical motion toolkit for omnidirectional (ERP) video.

Covers the conditioning side of drag-driven 360-degree video generation:
equal-area seed points, trajectory tracking and selection, drag-to-trajectory
interpolation on the sphere, condition-map construction, control-feature
normalization, gnomonic viewport rendering, and spherical motion metrics.
"""

__version__ = "0.1.0"

from .controller import (
    ConditionMap,
    CrossNormParams,
    FeatureBlock,
    channel_lift,
    control_blocks,
    cross_normalize,
    gaussian_smooth,
    inject,
    load_condition_map,
    save_condition_map,
    speed_encode,
)
from .erp_ops import ViewportSpec, horizontal_eight, latent_rotate, render_viewport
from .errors import (
    DegeneratePathError,
    DomainError,
    EmptySelectionError,
    FormatError,
    ToolkitError,
    TrackerError,
)
from .healpix import HealpixGrid, healpix_centers, init_points
from .metrics import ObjMCReport, clip_motion_score, objmc, quantile_filter
from .sme import (
    DragPair,
    FilterPolicy,
    estimate_trajectories,
    extract_condition_trajectories,
    filter_trajectories,
    load_drag_pairs,
    sample_trajectories,
    save_drag_pairs,
    trajectory_sphere_distance,
)
from .sphere import (
    ErpPoint,
    FrameGeometry,
    SpherePoint,
    erp_to_sphere,
    sphere_to_erp,
    spherical_distance,
    spherical_interpolate,
    wrap_longitude_delta,
)
from .tracking import (
    AnalyticTracker,
    BlockMatchTracker,
    Trajectory,
    TrajectorySet,
    Tracker,
    VideoFrames,
    load_trajectories,
    load_video_dir,
    save_trajectories,
    track,
)

__all__ = [name for name in dir() if not name.startswith("_")]
