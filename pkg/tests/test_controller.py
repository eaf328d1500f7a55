import math

import numpy as np
import pytest

from omnitraj.controller import (
    ConditionMap,
    CrossNormParams,
    FeatureBlock,
    channel_lift,
    control_blocks,
    conv2d_erp,
    cross_normalize,
    gaussian_smooth,
    inject,
    load_condition_map,
    load_weights,
    make_control_weights,
    make_lift_weights,
    save_condition_map,
    save_weights,
    speed_encode,
)
from omnitraj.errors import DomainError, FormatError
from omnitraj.sphere import FrameGeometry
from omnitraj.tracking import Trajectory, TrajectorySet


def simple_set(w=64, h=32, length=4):
    g = FrameGeometry(w, h, length)
    xy = np.stack([10.0 + 2.0 * np.arange(length), np.full(length, 8.0)], axis=1)
    return TrajectorySet(g, [Trajectory(xy)])


def test_speed_encode_basic():
    tset = simple_set()
    cmap = speed_encode(tset)
    assert cmap.data.shape == (4, 2, 32, 64)
    assert not cmap.data[0].any()  # frame 0 carries no speeds
    for i in range(1, 4):
        frame = cmap.data[i]
        col = 10 + 2 * i
        assert frame[0, 8, col] == 2.0
        assert frame[1, 8, col] == 0.0
        frame[0, 8, col] = 0.0
        assert not frame.any()  # nothing else written


def test_speed_encode_wraps_seam():
    g = FrameGeometry(64, 32, 2)
    t = Trajectory([[63.0, 8.0], [1.0, 8.0]])  # +2 px across the seam
    cmap = speed_encode(TrajectorySet(g, [t]))
    assert cmap.data[1, 0, 8, 1] == 2.0


def test_speed_encode_vertical_component_and_rounding():
    g = FrameGeometry(64, 32, 2)
    t = Trajectory([[10.0, 8.0], [10.6, 11.5]])
    cmap = speed_encode(TrajectorySet(g, [t]))
    # position rasterizes to nearest pixel (11, 12)
    assert cmap.data[1, 0, 12, 11] == pytest.approx(0.6)
    assert cmap.data[1, 1, 12, 11] == pytest.approx(3.5)


def test_speed_encode_skips_invisible():
    g = FrameGeometry(64, 32, 3)
    t = Trajectory([[10.0, 8.0], [12.0, 8.0], [14.0, 8.0]], [True, False, True])
    cmap = speed_encode(TrajectorySet(g, [t]))
    assert not cmap.data[1].any()  # transition into an invisible frame
    assert not cmap.data[2].any()  # transition out of an invisible frame


def test_gaussian_smooth_identity_and_validation():
    tset = simple_set()
    cmap = speed_encode(tset)
    out = gaussian_smooth(cmap, 0.0)
    assert np.array_equal(out.data, cmap.data)
    assert out.data is not cmap.data
    with pytest.raises(DomainError):
        gaussian_smooth(cmap, -1.0)


def test_gaussian_smooth_wraps_horizontally():
    g = FrameGeometry(32, 16, 2)
    data = np.zeros((2, 2, 16, 32))
    data[1, 0, 8, 0] = 1.0  # impulse on the seam column
    sm = gaussian_smooth(ConditionMap(g, data), 1.5)
    frame = sm.data[1, 0]
    assert frame[8, 1] == pytest.approx(frame[8, 31], abs=1e-15)
    assert frame.sum() == pytest.approx(1.0, abs=1e-9)


def test_gaussian_smooth_matches_manual_separable_convolution():
    rng = np.random.default_rng(12)
    g = FrameGeometry(24, 12, 2)
    data = rng.normal(size=(2, 2, 12, 24))
    sigma = 1.7
    sm = gaussian_smooth(ConditionMap(g, data), sigma)
    radius = int(4.0 * sigma + 0.5)
    k = np.exp(-0.5 * (np.arange(-radius, radius + 1) / sigma) ** 2)
    k /= k.sum()
    frame = data[1, 0]
    h, w = frame.shape
    wrapped = np.zeros_like(frame)
    for r in range(h):
        for c in range(w):
            wrapped[r, c] = sum(
                kv * frame[r, (c - (j - radius)) % w] for j, kv in enumerate(k)
            )
    manual = np.zeros_like(frame)
    for r in range(h):
        for c in range(w):
            manual[r, c] = sum(
                kv * wrapped[min(max(r - (j - radius), 0), h - 1), c]
                for j, kv in enumerate(k)
            )
    assert np.allclose(sm.data[1, 0], manual, atol=1e-12)


def conv_oracle(x, w, b):
    c_out, c_in, kh, kw = w.shape
    h, wid = x.shape[1:]
    out = np.zeros((c_out, h, wid))
    for o in range(c_out):
        for r in range(h):
            for c in range(wid):
                acc = float(b[o]) if b is not None else 0.0
                for ci in range(c_in):
                    for dr in range(-(kh // 2), kh // 2 + 1):
                        for dc in range(-(kw // 2), kw // 2 + 1):
                            rr = min(max(r + dr, 0), h - 1)
                            cc = (c + dc) % wid
                            acc += x[ci, rr, cc] * float(w[o, ci, dr + kh // 2, dc + kw // 2])
                out[o, r, c] = acc
    return out


def test_conv2d_erp_matches_scalar_oracle():
    rng = np.random.default_rng(42)
    x = rng.normal(size=(2, 4, 5))
    w = rng.normal(size=(3, 2, 3, 3)).astype(np.float32)
    b = rng.normal(size=3).astype(np.float32)
    assert np.allclose(conv2d_erp(x, w, b), conv_oracle(x, w, b), atol=1e-12)
    assert np.allclose(conv2d_erp(x, w, None), conv_oracle(x, w, None), atol=1e-12)


def test_channel_lift_shapes_and_activation():
    g = FrameGeometry(8, 4, 2)
    rng = np.random.default_rng(11)
    raw = ConditionMap(g, rng.normal(size=(2, 2, 4, 8)))
    weights = make_lift_weights(7, out_channels=4)
    lifted = channel_lift(raw, weights)
    assert lifted.data.shape == (2, 4, 4, 8)
    linear = channel_lift(raw, weights, activation="none")
    silu = linear.data / (1.0 + np.exp(-linear.data))
    assert np.allclose(lifted.data, silu, atol=1e-12)
    with pytest.raises(DomainError):
        channel_lift(lifted, weights)  # wrong channel count
    with pytest.raises(DomainError):
        channel_lift(raw, weights, activation="relu")
    with pytest.raises(DomainError):
        channel_lift(raw, {})


def test_control_blocks_zero_init_pass_through():
    g = FrameGeometry(8, 4, 2)
    rng = np.random.default_rng(13)
    lifted = ConditionMap(g, rng.normal(size=(2, 6, 4, 8)))
    weights = make_control_weights(3, channels=6)
    out = control_blocks(lifted, weights)
    assert np.array_equal(out.data, lifted.data)  # exact skip-connection identity
    trained = make_control_weights(3, channels=6, zero_final=False)
    assert not np.array_equal(control_blocks(lifted, trained).data, lifted.data)
    with pytest.raises(DomainError):
        control_blocks(ConditionMap(g, rng.normal(size=(2, 2, 4, 8))), weights)


def test_cross_normalize_matches_fsum_oracle():
    rng = np.random.default_rng(21)
    main = FeatureBlock(rng.normal(loc=1.5, scale=2.0, size=(3, 4, 5, 6)))
    ctrl = FeatureBlock(rng.normal(size=(3, 4, 5, 6)))
    params = CrossNormParams(gamma=1.25, epsilon=1e-6)
    got = cross_normalize(ctrl, main, params)
    for ch in range(4):
        vals = [float(v) for v in main.data[:, ch].ravel()]
        mu = math.fsum(vals) / len(vals)
        var = math.fsum((v - mu) ** 2 for v in vals) / len(vals)
        want = (ctrl.data[:, ch] - mu) / math.sqrt(var + 1e-6) * 1.25
        assert np.allclose(got.data[:, ch], want, atol=1e-10)


def test_cross_normalize_axes_and_validation():
    rng = np.random.default_rng(22)
    main = FeatureBlock(rng.normal(size=(2, 3, 4, 5)))
    ctrl = FeatureBlock(rng.normal(size=(2, 3, 4, 5)))
    # full-tensor statistics
    full = cross_normalize(ctrl, main, CrossNormParams(reduction_axes=(0, 1, 2, 3)))
    want = (ctrl.data - main.data.mean()) / np.sqrt(main.data.var() + 1e-6)
    assert np.allclose(full.data, want, atol=1e-12)
    with pytest.raises(DomainError):
        cross_normalize(FeatureBlock(rng.normal(size=(2, 4, 4, 5))), main)
    with pytest.raises(DomainError):
        CrossNormParams(gamma=0.0)
    with pytest.raises(DomainError):
        CrossNormParams(epsilon=-1.0)
    with pytest.raises(DomainError):
        CrossNormParams(reduction_axes=(5,))


def test_inject_adds_and_validates():
    rng = np.random.default_rng(23)
    a = FeatureBlock(rng.normal(size=(2, 3, 4, 5)))
    b = FeatureBlock(rng.normal(size=(2, 3, 4, 5)))
    assert np.array_equal(inject(a, b).data, a.data + b.data)
    with pytest.raises(DomainError):
        inject(a, FeatureBlock(rng.normal(size=(2, 3, 4, 6))))


def test_identity_at_initialization_bit_exact():
    g = FrameGeometry(16, 8, 3)
    rng = np.random.default_rng(5)
    raw = ConditionMap(g, rng.normal(size=(3, 2, 8, 16)))
    feat = control_blocks(
        channel_lift(raw, make_lift_weights(0, out_channels=6, zero=True)),
        make_control_weights(1, channels=6),
    )
    assert not feat.data.any()
    # integer-balanced main: per-channel mean is exactly zero, so the
    # normalized zero control is exactly zero and injection is the identity
    half = rng.integers(-9, 10, size=(3, 6, 4, 16)).astype(np.float64)
    main = FeatureBlock(np.concatenate([half, -half], axis=2))
    out = inject(main, cross_normalize(feat, main))
    assert np.array_equal(out.data, main.data)


def test_feature_block_rejects_non_finite():
    with pytest.raises(DomainError):
        FeatureBlock(np.array([[[[np.nan]]]]))
    with pytest.raises(DomainError):
        FeatureBlock(np.zeros((2, 3)))


def test_condition_map_shape_validation():
    g = FrameGeometry(8, 4, 2)
    with pytest.raises(DomainError):
        ConditionMap(g, np.zeros((2, 2, 4, 9)))


def f32(rng, shape):
    return rng.normal(size=shape).astype(np.float32).astype(np.float64)


def test_condition_map_file_round_trip(tmp_path):
    g = FrameGeometry(8, 4, 3)
    rng = np.random.default_rng(31)
    cmap = ConditionMap(g, f32(rng, (3, 2, 4, 8)))
    path = tmp_path / "c.bin"
    save_condition_map(cmap, path)
    loaded = load_condition_map(path)
    assert loaded.data.dtype == np.float64
    assert np.array_equal(loaded.data, cmap.data)
    second = tmp_path / "c2.bin"
    save_condition_map(loaded, second)
    assert path.read_bytes() == second.read_bytes()


def test_condition_map_error_codes(tmp_path):
    g = FrameGeometry(8, 4, 2)
    rng = np.random.default_rng(32)
    path = tmp_path / "c.bin"
    save_condition_map(ConditionMap(g, f32(rng, (2, 2, 4, 8))), path)
    blob = path.read_bytes()

    def load_blob(b):
        p = tmp_path / "bad.bin"
        p.write_bytes(b)
        return load_condition_map(p)

    with pytest.raises(FormatError) as err:
        load_blob(b"NOTMAGIC" + blob[8:])
    assert err.value.code == "bad-magic"
    with pytest.raises(FormatError) as err:
        load_blob(blob[:12])
    assert err.value.code == "bad-header"
    with pytest.raises(FormatError) as err:
        load_blob(blob[:-4])
    assert err.value.code == "truncated-payload"
    with pytest.raises(FormatError) as err:
        load_blob(blob + b"\x00\x00\x00\x00")
    assert err.value.code == "trailing-bytes"


def test_weights_file_round_trip(tmp_path):
    weights = make_lift_weights(7, out_channels=4)
    weights.update(make_control_weights(8, channels=4))
    path = tmp_path / "w.bin"
    save_weights(weights, path)
    loaded = load_weights(path)
    assert list(loaded) == list(weights)
    for name in weights:
        assert np.array_equal(loaded[name], weights[name])
    second = tmp_path / "w2.bin"
    save_weights(loaded, second)
    assert path.read_bytes() == second.read_bytes()


def test_weights_file_error_codes(tmp_path):
    weights = make_lift_weights(7, out_channels=2)
    path = tmp_path / "w.bin"
    save_weights(weights, path)
    blob = path.read_bytes()

    def load_blob(b):
        p = tmp_path / "bad.bin"
        p.write_bytes(b)
        return load_weights(p)

    with pytest.raises(FormatError) as err:
        load_blob(blob.replace(b"omniweights/1", b"otherformat/1"))
    assert err.value.code == "bad-magic"
    with pytest.raises(FormatError) as err:
        load_blob(blob.replace(b"\nend\n", b"\n"))
    assert err.value.code == "bad-header"
    with pytest.raises(FormatError) as err:
        load_blob(blob[:-8])
    assert err.value.code == "truncated-payload"
    with pytest.raises(FormatError) as err:
        load_blob(blob + b"\x00" * 4)
    assert err.value.code == "trailing-bytes"
    with pytest.raises(FormatError) as err:
        load_blob(blob.replace(b"lift.bias 2", b"lift.bias x"))
    assert err.value.code == "bad-header"
