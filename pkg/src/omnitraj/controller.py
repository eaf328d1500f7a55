"""Conditioning-signal math for the motion controller, at desk scale.

Builds the per-frame motion-speed planes from sampled trajectories, smooths
them with an ERP-aware Gaussian, lifts them to the control channel width
through a small convolutional stack, and normalizes/injects them against a
caller-supplied main-branch feature. No diffusion model is involved: the
main branch here is any (L, C, H, W) tensor.

All in-memory math is float64; the interchange formats store 32-bit reals.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import DomainError, FormatError
from .sphere import FrameGeometry
from .tracking import TrajectorySet

LIFT_CHANNELS = 320
CONDITION_MAGIC = b"OMNICND1"
WEIGHTS_FORMAT = "omniweights/1"


@dataclass
class ConditionMap:
    """Per-frame, per-pixel motion planes: (L, C, H, W) with C=2 raw, 320 lifted."""

    geometry: FrameGeometry
    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        g = self.geometry
        if d.ndim != 4 or d.shape[0] != g.L or d.shape[2] != g.H or d.shape[3] != g.W:
            raise DomainError(
                f"condition data must be (L={g.L}, C, H={g.H}, W={g.W}), got {d.shape}"
            )
        self.data = d

    @property
    def channels(self) -> int:
        return self.data.shape[1]


@dataclass
class FeatureBlock:
    """Generic finite (L, C, H, W) feature tensor."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 4:
            raise DomainError(f"feature block must be 4D (L, C, H, W), got {d.shape}")
        if not np.isfinite(d).all():
            raise DomainError("feature block contains non-finite values")
        self.data = d

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True)
class CrossNormParams:
    """Scale, stabilizer, and statistics axes for cross-normalization."""

    gamma: float = 1.0
    epsilon: float = 1e-6
    reduction_axes: tuple = (0, 2, 3)  # per-channel over frames x height x width

    def __post_init__(self):
        if self.gamma <= 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if self.epsilon <= 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if not self.reduction_axes or any(a not in (0, 1, 2, 3) for a in self.reduction_axes):
            raise DomainError(f"reduction axes must be drawn from (0,1,2,3), got {self.reduction_axes}")


def speed_encode(tset: TrajectorySet) -> ConditionMap:
    """Rasterize frame-to-frame speeds (u, v) at each trajectory's position.

    Frame 0 and unvisited pixels stay (0, 0). Horizontal differences are
    wrap-corrected into (-W/2, W/2] so seam crossings read as short moves.
    Positions rasterize to the nearest pixel; later trajectories overwrite
    earlier ones on collision.
    """
    g = tset.geometry
    data = np.zeros((g.L, 2, g.H, g.W))
    half_w = g.W / 2.0
    for t in tset:
        for i in range(1, g.L):
            if not (t.visible[i] and t.visible[i - 1]):
                continue
            u = t.xy[i, 0] - t.xy[i - 1, 0]
            u = (u + half_w) % g.W - half_w
            if u == -half_w:
                u = half_w
            v = t.xy[i, 1] - t.xy[i - 1, 1]
            col = int(round(t.xy[i, 0])) % g.W
            row = min(max(int(round(t.xy[i, 1])), 0), g.H - 1)
            data[i, 0, row, col] = u
            data[i, 1, row, col] = v
    return ConditionMap(g, data)


def gaussian_smooth(cmap: ConditionMap, sigma: float) -> ConditionMap:
    """Per-frame, per-channel 2D Gaussian; wraps across the seam, clamps at poles."""
    if sigma < 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return ConditionMap(cmap.geometry, cmap.data.copy())
    out = gaussian_filter1d(cmap.data, sigma, axis=3, mode="wrap")
    out = gaussian_filter1d(out, sigma, axis=2, mode="nearest")
    return ConditionMap(cmap.geometry, out)


# ---------------------------------------------------------------------------
# Convolutional lift and residual control blocks


def _silu(x):
    return x / (1.0 + np.exp(-x))


def conv2d_erp(x: np.ndarray, weight: np.ndarray, bias=None) -> np.ndarray:
    """Same-size 2D convolution of (C_in, H, W) with ERP boundary handling:
    columns wrap, rows replicate at the poles."""
    kh, kw = weight.shape[2], weight.shape[3]
    xp = np.pad(x, ((0, 0), (0, 0), (kw // 2, kw // 2)), mode="wrap")
    xp = np.pad(xp, ((0, 0), (kh // 2, kh // 2), (0, 0)), mode="edge")
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    out = np.einsum("chwij,ocij->ohw", win, weight.astype(np.float64), optimize=True)
    if bias is not None:
        out += np.asarray(bias, dtype=np.float64)[:, None, None]
    return out


def channel_lift(cmap: ConditionMap, weights: dict, activation: str = "silu") -> ConditionMap:
    """Lift the raw 2-channel speed map to the control channel width.

    ``weights`` needs ``lift.weight`` (C_out, C_in, kh, kw) and optional
    ``lift.bias``. With ``activation="none"`` the lift is linear in its input.
    """
    w = weights.get("lift.weight")
    if w is None:
        raise DomainError("weights lack 'lift.weight'")
    if cmap.channels != w.shape[1]:
        raise DomainError(
            f"lift expects {w.shape[1]} input channels, condition map has {cmap.channels}"
        )
    if activation not in ("silu", "none"):
        raise DomainError(f"unknown activation {activation!r}")
    bias = weights.get("lift.bias")
    frames = [conv2d_erp(f, w, bias) for f in cmap.data]
    out = np.stack(frames)
    if activation == "silu":
        out = _silu(out)
    return ConditionMap(cmap.geometry, out)


def _res_block(x, weights, prefix):
    w1, b1 = weights[f"{prefix}.conv1.weight"], weights.get(f"{prefix}.conv1.bias")
    w2, b2 = weights[f"{prefix}.conv2.weight"], weights.get(f"{prefix}.conv2.bias")
    h = conv2d_erp(x, w1, b1)
    return x + conv2d_erp(_silu(h), w2, b2)


def control_blocks(cmap: ConditionMap, weights: dict) -> FeatureBlock:
    """Two residual blocks over the lifted map.

    Each block is conv, activation, conv, skip-add; the second convolutions
    are zero-initialized by default, so an untrained controller passes the
    lift through unchanged.
    """
    c = weights["block1.conv1.weight"].shape[1]
    if cmap.channels != c:
        raise DomainError(
            f"control blocks expect {c} channels (a lifted map), got {cmap.channels}"
        )
    frames = []
    for f in cmap.data:
        h = _res_block(f, weights, "block1")
        h = _res_block(h, weights, "block2")
        frames.append(h)
    return FeatureBlock(np.stack(frames))


def cross_normalize(
    control: FeatureBlock, main: FeatureBlock, params: CrossNormParams = CrossNormParams()
) -> FeatureBlock:
    """Normalize the control feature by the main branch's statistics.

    Mean and variance are computed from ``main`` over the reduction axes and
    applied to ``control``:  (control - mu) / sqrt(var + eps) * gamma.
    """
    axes = tuple(params.reduction_axes)
    kept = [a for a in range(4) if a not in axes]
    for a in kept:
        if control.shape[a] != main.shape[a]:
            raise DomainError(
                f"control/main disagree on non-reduced axis {a}: "
                f"{control.shape[a]} vs {main.shape[a]}"
            )
    mu = main.data.mean(axis=axes, keepdims=True)
    var = main.data.var(axis=axes, keepdims=True)
    return FeatureBlock((control.data - mu) / np.sqrt(var + params.epsilon) * params.gamma)


def inject(main: FeatureBlock, normalized_control: FeatureBlock) -> FeatureBlock:
    """Additive injection of the normalized control into the main feature."""
    if main.shape != normalized_control.shape:
        raise DomainError(
            f"shape mismatch: main {main.shape} vs control {normalized_control.shape}"
        )
    return FeatureBlock(main.data + normalized_control.data)


# ---------------------------------------------------------------------------
# Weight generation and the flat binary weight file


def _he_normal(rng, shape):
    fan_in = int(np.prod(shape[1:]))
    w = rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)
    return w.astype(np.float32)


def make_lift_weights(
    seed: int, out_channels: int = LIFT_CHANNELS, in_channels: int = 2,
    kernel: int = 3, zero: bool = False,
) -> dict:
    rng = np.random.default_rng(seed)
    shape = (out_channels, in_channels, kernel, kernel)
    weight = np.zeros(shape, np.float32) if zero else _he_normal(rng, shape)
    return {"lift.weight": weight, "lift.bias": np.zeros(out_channels, np.float32)}


def make_control_weights(
    seed: int, channels: int = LIFT_CHANNELS, kernel: int = 3, zero_final: bool = True
) -> dict:
    rng = np.random.default_rng(seed)
    shape = (channels, channels, kernel, kernel)
    weights = {}
    for prefix in ("block1", "block2"):
        weights[f"{prefix}.conv1.weight"] = _he_normal(rng, shape)
        weights[f"{prefix}.conv1.bias"] = np.zeros(channels, np.float32)
        final = np.zeros(shape, np.float32) if zero_final else _he_normal(rng, shape)
        weights[f"{prefix}.conv2.weight"] = final
        weights[f"{prefix}.conv2.bias"] = np.zeros(channels, np.float32)
    return weights


def save_weights(weights: dict, path) -> None:
    """Text header (name + shape per line, 'end' terminator) then raw float32 LE."""
    with open(path, "wb") as fh:
        fh.write((WEIGHTS_FORMAT + "\n").encode("ascii"))
        for name, arr in weights.items():
            dims = " ".join(str(d) for d in arr.shape)
            fh.write(f"{name} {dims}\n".encode("ascii"))
        fh.write(b"end\n")
        for arr in weights.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_weights(path) -> dict:
    with open(path, "rb") as fh:
        blob = fh.read()
    head, sep, _ = blob.partition(b"\nend\n")
    if not sep:
        raise FormatError("bad-header", f"{path}: missing 'end' terminator")
    lines = head.decode("ascii", errors="replace").splitlines()
    if not lines or lines[0] != WEIGHTS_FORMAT:
        raise FormatError("bad-magic", f"{path}: not a {WEIGHTS_FORMAT} file")
    specs = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) < 2:
            raise FormatError("bad-header", f"{path}: malformed tensor line {ln!r}")
        try:
            shape = tuple(int(p) for p in parts[1:])
        except ValueError as exc:
            raise FormatError("bad-header", f"{path}: non-integer shape in {ln!r}") from exc
        specs.append((parts[0], shape))
    payload = blob[len(head) + len(b"\nend\n"):]
    need = sum(int(np.prod(s)) for _, s in specs) * 4
    if len(payload) < need:
        raise FormatError("truncated-payload", f"{path}: need {need} bytes, have {len(payload)}")
    if len(payload) > need:
        raise FormatError("trailing-bytes", f"{path}: {len(payload) - need} extra bytes")
    weights, off = {}, 0
    for name, shape in specs:
        n = int(np.prod(shape))
        weights[name] = np.frombuffer(payload, "<f4", count=n, offset=off).reshape(shape).copy()
        off += n * 4
    return weights


# ---------------------------------------------------------------------------
# Condition-map binary format (OMNICND1)


def save_condition_map(cmap: ConditionMap, path) -> None:
    """Magic, four LE u32 (L, C, H, W), then float32 LE payload in C order."""
    L, C, H, W = cmap.data.shape
    with open(path, "wb") as fh:
        fh.write(CONDITION_MAGIC)
        fh.write(struct.pack("<4I", L, C, H, W))
        fh.write(np.ascontiguousarray(cmap.data, dtype="<f4").tobytes())


def load_condition_map(path) -> ConditionMap:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != CONDITION_MAGIC:
        raise FormatError("bad-magic", f"{path}: missing {CONDITION_MAGIC!r} magic")
    if len(blob) < 24:
        raise FormatError("bad-header", f"{path}: truncated dimension header")
    L, C, H, W = struct.unpack("<4I", blob[8:24])
    if min(L, C, H, W) == 0:
        raise FormatError("bad-header", f"{path}: zero dimension in header {(L, C, H, W)}")
    need = L * C * H * W * 4
    payload = blob[24:]
    if len(payload) < need:
        raise FormatError("truncated-payload", f"{path}: need {need} bytes, have {len(payload)}")
    if len(payload) > need:
        raise FormatError("trailing-bytes", f"{path}: {len(payload) - need} extra bytes")
    data = np.frombuffer(payload, "<f4").reshape(L, C, H, W).astype(np.float64)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # latent-sized maps need not be W = 2H
        geometry = FrameGeometry(W=W, H=H, L=L)
    return ConditionMap(geometry, data)
