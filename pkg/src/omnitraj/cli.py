"""Command-line entry point.

Angles on the command line are degrees; everything on disk and in memory is
radians. Every output embeds (or sits next to) metadata recording the tool
version, the seed, and the parameters that produced it, so runs are
reproducible byte for byte.

Exit codes: 0 success, 2 parse/format errors, 3 domain errors, 4 I/O errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .controller import gaussian_smooth, save_condition_map, speed_encode
from .erp_ops import HORIZONTAL_EIGHT_YAWS, ViewportSpec, render_viewport
from .errors import DomainError, FormatError, ToolkitError
from .healpix import init_points
from .images import load_image, save_image
from .metrics import clip_motion_score, objmc, quantile_filter
from .report import write_clip_score_report, write_objmc_report
from .sme import (
    DEFAULT_DISTANCE_THRESHOLD,
    FilterPolicy,
    estimate_trajectories,
    extract_condition_trajectories,
    load_drag_pairs,
)
from .sphere import FrameGeometry
from .tracking import (
    AnalyticTracker,
    BlockMatchTracker,
    Trajectory,
    TrajectorySet,
    load_trajectories,
    load_video_dir,
    save_trajectories,
)

EXIT_FORMAT = 2
EXIT_DOMAIN = 3
EXIT_IO = 4


def _meta(seed=None, **parameters):
    return {
        "tool": "omnitraj",
        "version": __version__,
        "seed": seed,
        "parameters": parameters,
    }


def _write_meta_json(path, meta) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, separators=(",", ":"), sort_keys=True)
        fh.write("\n")


def _save_png_with_meta(arr, path, meta) -> None:
    """PNG outputs carry metadata in a tEXt chunk; other formats get a sidecar."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        from PIL import Image
        from PIL.PngImagePlugin import PngInfo

        info = PngInfo()
        info.add_text("omnitraj", json.dumps(meta, separators=(",", ":"), sort_keys=True))
        Image.fromarray(arr).save(path, pnginfo=info)
    else:
        save_image(arr, path)
        _write_meta_json(str(path) + ".meta.json", meta)


def cmd_init_points(args) -> int:
    g = FrameGeometry(W=args.width, H=args.height, L=1)
    seeds = init_points(args.n_side, g)
    tset = TrajectorySet(g, [Trajectory([[p.x, p.y]]) for p in seeds])
    meta = _meta(n_side=args.n_side, width=args.width, height=args.height)
    save_trajectories(tset, args.out, meta)
    print(f"wrote {len(seeds)} seed points to {args.out}")
    return 0


def _make_tracker(name: str):
    if name == "block":
        return BlockMatchTracker()
    if name == "static":
        return AnalyticTracker.static()
    raise DomainError(f"unknown tracker {name!r} (choose block or static)")


def cmd_extract(args) -> int:
    video = load_video_dir(args.frames)
    policy = FilterPolicy(
        d_th=math.radians(args.d_th),
        n_samp_min=args.n_min,
        n_samp_max=args.n_max,
        seed=args.seed,
    )
    tset = extract_condition_trajectories(video, args.n_side, policy, _make_tracker(args.tracker))
    meta = _meta(
        seed=args.seed,
        frames=str(args.frames),
        n_side=args.n_side,
        d_th_degrees=args.d_th,
        n_min=args.n_min,
        n_max=args.n_max,
        tracker=args.tracker,
    )
    save_trajectories(tset, args.out, meta)
    print(f"extracted {len(tset)} conditioning trajectories to {args.out}")
    return 0


def cmd_estimate(args) -> int:
    pairs, g = load_drag_pairs(args.pairs)
    length = args.frames if args.frames is not None else g.L
    tset = estimate_trajectories(pairs, FrameGeometry(g.W, g.H, length))
    meta = _meta(pairs=str(args.pairs), frames=length)
    save_trajectories(tset, args.out, meta)
    print(f"estimated {len(tset)} trajectories over {length} frames to {args.out}")
    return 0


def cmd_condition(args) -> int:
    tset = load_trajectories(args.traj)
    cmap = gaussian_smooth(speed_encode(tset), args.sigma)
    save_condition_map(cmap, args.out)
    meta = _meta(traj=str(args.traj), sigma=args.sigma)
    _write_meta_json(str(args.out) + ".meta.json", meta)
    print(f"wrote condition map {tuple(cmap.data.shape)} to {args.out}")
    return 0


def cmd_objmc(args) -> int:
    generated = load_trajectories(args.generated)
    reference = load_trajectories(args.reference)
    report = objmc(generated, reference)
    paths = write_objmc_report(report, args.out_dir)
    _write_meta_json(
        Path(args.out_dir) / "meta.json",
        _meta(generated=str(args.generated), reference=str(args.reference)),
    )
    print(f"mean_distance {report.mean_distance!r}")
    print(f"pooled_mean {report.pooled_mean!r}")
    print(f"report: {paths['tsv']} {paths['figure']}")
    return 0


def _fov_radians(degrees: float) -> float:
    # ViewportSpec validates in radians; complain in the units the flag takes
    if not 0.0 < degrees < 180.0:
        raise DomainError(f"--fov must lie strictly inside (0, 180) degrees, got {degrees}")
    return math.radians(degrees)


def _viewport_spec(args, yaw_degrees: float) -> ViewportSpec:
    return ViewportSpec(
        yaw=math.radians(yaw_degrees),
        pitch=math.radians(args.pitch),
        fov=_fov_radians(args.fov),
        out_w=args.size,
        out_h=args.size,
    )


def cmd_viewport(args) -> int:
    image = load_image(args.image)
    spec = _viewport_spec(args, args.yaw)
    out = render_viewport(image, spec)
    meta = _meta(
        image=str(args.image), yaw=args.yaw, pitch=args.pitch, fov=args.fov, size=args.size
    )
    _save_png_with_meta(out, args.out, meta)
    print(f"rendered {args.size}x{args.size} viewport to {args.out}")
    return 0


def cmd_h8(args) -> int:
    image = load_image(args.image)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for yaw in HORIZONTAL_EIGHT_YAWS:
        deg = round(math.degrees(yaw))
        spec = ViewportSpec(yaw=yaw, pitch=0.0, fov=_fov_radians(args.fov),
                            out_w=args.size, out_h=args.size)
        meta = _meta(
            image=str(args.image), yaw=deg, pitch=0.0, fov=args.fov, size=args.size
        )
        _save_png_with_meta(render_viewport(image, spec), out_dir / f"yaw{deg:03d}.png", meta)
    print(f"rendered 8 viewports to {out_dir}")
    return 0


def cmd_score_clips(args) -> int:
    manifest = Path(args.manifest)
    with open(manifest, "r", encoding="utf-8") as fh:
        names = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not names:
        raise DomainError(f"manifest {manifest} lists no clips")
    scores = []
    for name in names:
        clip_path = Path(name)
        if not clip_path.is_absolute():
            clip_path = manifest.parent / clip_path
        scores.append(clip_motion_score(load_trajectories(clip_path)))
    kept = quantile_filter(scores, args.q)
    paths = write_clip_score_report(names, scores, kept, args.q, args.out_dir)
    _write_meta_json(
        Path(args.out_dir) / "meta.json", _meta(manifest=str(manifest), q=args.q)
    )
    print(f"kept {len(kept)}/{len(names)} clips; manifest: {paths['kept']}")
    return 0


def cmd_serve(args) -> int:
    from .server import run_server

    image = load_image(args.image)
    run_server(
        image,
        length=args.frames,
        host=args.host,
        port=args.port,
        export_dir=args.export_dir,
        ui_dir=args.ui_dir,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omnitraj",
        description="Spherical motion toolkit for omnidirectional (ERP) video.",
    )
    parser.add_argument("--version", action="version", version=f"omnitraj {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-points", help="write an equal-area seed-point file")
    p.add_argument("--n-side", type=int, required=True)
    p.add_argument("--width", type=int, required=True, help="ERP width in pixels")
    p.add_argument("--height", type=int, required=True, help="ERP height in pixels")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_init_points)

    p = sub.add_parser("extract", help="seed, track, filter, and sample trajectories")
    p.add_argument("--frames", required=True, help="directory of PNG/PPM ERP frames")
    p.add_argument("--n-side", type=int, default=8)
    p.add_argument(
        "--d-th",
        type=float,
        default=math.degrees(DEFAULT_DISTANCE_THRESHOLD),
        help="endpoint arc threshold in degrees",
    )
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tracker", choices=("block", "static"), default="block")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("estimate", help="expand drag pairs into full trajectories")
    p.add_argument("--pairs", required=True, help="omnidrag/1 file")
    p.add_argument("-L", "--frames", type=int, default=None, help="override frame count")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("condition", help="build the smoothed speed condition map")
    p.add_argument("--traj", required=True, help="omnitraj/1 file")
    p.add_argument("--sigma", type=float, default=2.0, help="Gaussian sigma in pixels")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_condition)

    p = sub.add_parser("objmc", help="score generated against reference trajectories")
    p.add_argument("--generated", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_objmc)

    p = sub.add_parser("viewport", help="render one perspective viewport")
    p.add_argument("--image", required=True, help="ERP image (PNG/PPM)")
    p.add_argument("--yaw", type=float, default=0.0, help="degrees")
    p.add_argument("--pitch", type=float, default=0.0, help="degrees")
    p.add_argument("--fov", type=float, default=90.0, help="horizontal FOV, degrees")
    p.add_argument("--size", type=int, default=512)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_viewport)

    p = sub.add_parser("h8", help="render the horizontal eight-viewport sweep")
    p.add_argument("--image", required=True)
    p.add_argument("--fov", type=float, default=90.0, help="horizontal FOV, degrees")
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_h8)

    p = sub.add_parser("score-clips", help="drop the lowest-motion clips from a manifest")
    p.add_argument("--manifest", required=True, help="text file, one omnitraj/1 path per line")
    p.add_argument("--q", type=float, default=0.25, help="fraction to drop")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_score_clips)

    p = sub.add_parser("serve", help="serve the drag-UI HTTP endpoints")
    p.add_argument("--image", required=True, help="reference ERP image")
    p.add_argument("-L", "--frames", type=int, default=25, help="trajectory length")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--export-dir", default="exports")
    p.add_argument("--ui-dir", default=None, help="optional static UI directory")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
