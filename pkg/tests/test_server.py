import io
import json
import threading
import urllib.error
import urllib.request

import numpy as np
import pytest
from PIL import Image

from omnitraj import __version__
from omnitraj.server import make_server
from omnitraj.sme import DragPair, dumps_drag_pairs, estimate_trajectories
from omnitraj.sphere import ErpPoint, FrameGeometry
from omnitraj.tracking import (
    Trajectory,
    TrajectorySet,
    dumps_trajectories,
    load_trajectories,
    trajectory_document,
)

from conftest import make_noise_image

REF_IMAGE = make_noise_image(np.random.default_rng(30), 32, 64)
SESSION_L = 12


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    root = tmp_path_factory.mktemp("server")
    ui = root / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<!doctype html><title>drag</title>")
    (ui / "app.js").write_text("console.log('ok');")
    server = make_server(
        REF_IMAGE, SESSION_L, port=0, export_dir=root / "exports", ui_dir=ui
    )
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield {"base": f"http://{host}:{port}", "root": root}
    server.shutdown()
    server.server_close()
    thread.join(timeout=5)


def get(base, path):
    with urllib.request.urlopen(base + path, timeout=10) as resp:
        return resp.status, dict(resp.headers), resp.read()


def post(base, path, body: bytes):
    req = urllib.request.Request(
        base + path, data=body, headers={"Content-Type": "application/json"}, method="POST"
    )
    with urllib.request.urlopen(req, timeout=10) as resp:
        return resp.status, dict(resp.headers), resp.read()


def request_error(fn, *args):
    with pytest.raises(urllib.error.HTTPError) as err:
        fn(*args)
    e = err.value
    return e.code, json.loads(e.read().decode("utf-8"))


def test_meta_endpoint(service):
    status, headers, body = get(service["base"], "/meta")
    assert status == 200
    assert headers["Access-Control-Allow-Origin"] == "*"
    assert json.loads(body) == {"W": 64, "H": 32, "L": SESSION_L}


def test_erp_endpoint_round_trips_pixels(service):
    status, headers, body = get(service["base"], "/erp")
    assert status == 200
    assert headers["Content-Type"] == "image/png"
    with Image.open(io.BytesIO(body)) as im:
        assert np.array_equal(np.asarray(im), REF_IMAGE)


def test_estimate_endpoint_matches_library(service):
    g = FrameGeometry(64, 32, 4)
    pairs = [DragPair(ErpPoint(10.0, 16.0), ErpPoint(20.0, 16.0))]
    body = dumps_drag_pairs(pairs, g).encode("utf-8")
    status, _, resp = post(service["base"], "/estimate", body)
    assert status == 200
    meta = {"tool": "omnitraj", "version": __version__, "seed": None, "parameters": {}}
    want = dumps_trajectories(estimate_trajectories(pairs, g), meta).encode("utf-8")
    assert resp == want  # byte-identical to the library serialization

    doc = json.loads(resp)
    xs = [p[0] for p in doc["trajectories"][0]]
    assert xs == pytest.approx(list(np.linspace(10.0, 20.0, 4)), abs=1e-9)


def test_estimate_uses_session_length_for_short_requests(service):
    g = FrameGeometry(64, 32, 1)
    pairs = [DragPair(ErpPoint(10.0, 16.0), ErpPoint(20.0, 16.0))]
    status, _, resp = post(service["base"], "/estimate", dumps_drag_pairs(pairs, g).encode())
    assert status == 200
    assert json.loads(resp)["L"] == SESSION_L


def test_estimate_rejects_wrong_image_geometry(service):
    g = FrameGeometry(128, 64, 4)
    pairs = [DragPair(ErpPoint(10.0, 16.0), ErpPoint(20.0, 16.0))]
    code, doc = request_error(post, service["base"], "/estimate",
                              dumps_drag_pairs(pairs, g).encode())
    assert code == 400
    assert doc["code"] == "geometry-mismatch"


def test_estimate_rejects_bad_json(service):
    code, doc = request_error(post, service["base"], "/estimate", b"{nope")
    assert code == 400
    assert doc["code"] == "bad-json"


def test_estimate_rejects_antipodal(service):
    g = FrameGeometry(64, 32, 4)
    pairs = [DragPair(ErpPoint(10.0, 16.0), ErpPoint(42.0, 16.0))]
    code, doc = request_error(post, service["base"], "/estimate",
                              dumps_drag_pairs(pairs, g).encode())
    assert code == 400
    assert "antipodal" in doc["error"]


def test_viewport_endpoint(service):
    status, headers, body = get(service["base"], "/viewport?yaw=90&size=5")
    assert status == 200
    assert headers["Content-Type"] == "image/png"
    with Image.open(io.BytesIO(body)) as im:
        arr = np.asarray(im)
    assert arr.shape == (5, 5, 3)
    assert np.array_equal(arr[2, 2], REF_IMAGE[16, 48])


def test_viewport_rejects_bad_parameters(service):
    code, doc = request_error(get, service["base"], "/viewport?fov=200")
    assert code == 400
    assert "fov" in doc["error"]
    code, doc = request_error(get, service["base"], "/viewport?yaw=abc")
    assert code == 400
    code, doc = request_error(get, service["base"], "/viewport?size=huge")
    assert code == 400


def test_export_persists_canonical_file(service):
    g = FrameGeometry(64, 32, 3)
    tset = TrajectorySet(g, [Trajectory([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])])
    doc = trajectory_document(tset, meta={"note": "from-test"})
    body = (json.dumps(doc) + "\n").encode("utf-8")
    status, _, resp = post(service["base"], "/export", body)
    assert status == 200
    path = json.loads(resp)["path"]
    assert "export_" in path
    saved = load_trajectories(path)
    assert saved.geometry == g
    assert np.allclose(saved[0].xy, [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    text = open(path, encoding="utf-8").read()
    assert '"note":"from-test"' in text
    assert text.endswith("\n")

    # a second export gets a fresh numbered file
    status, _, resp2 = post(service["base"], "/export", body)
    assert json.loads(resp2)["path"] != path


def test_export_rejects_malformed_document(service):
    code, doc = request_error(post, service["base"], "/export", b'{"format":"omnitraj/9"}')
    assert code == 400
    assert doc["code"] == "bad-format"


def test_unknown_endpoints_are_404(service):
    code, doc = request_error(post, service["base"], "/nope", b"{}")
    assert code == 404


def test_options_preflight(service):
    req = urllib.request.Request(service["base"] + "/estimate", method="OPTIONS")
    with urllib.request.urlopen(req, timeout=10) as resp:
        assert resp.status == 204
        assert resp.headers["Access-Control-Allow-Origin"] == "*"
        assert "POST" in resp.headers["Access-Control-Allow-Methods"]


def test_static_ui_serving(service):
    status, headers, body = get(service["base"], "/")
    assert status == 200
    assert headers["Content-Type"].startswith("text/html")
    assert b"drag" in body
    status, headers, _ = get(service["base"], "/app.js")
    assert status == 200
    assert headers["Content-Type"].startswith("text/javascript")
    code, _ = request_error(get, service["base"], "/missing.js")
    assert code == 404


def test_no_ui_dir_means_404_root(tmp_path):
    server = make_server(REF_IMAGE, 4, port=0, export_dir=tmp_path)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        host, port = server.server_address[:2]
        code, _ = request_error(get, f"http://{host}:{port}", "/")
        assert code == 404
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)


def test_server_state_rejects_bad_image(tmp_path):
    from omnitraj.errors import DomainError
    from omnitraj.server import ServerState

    with pytest.raises(DomainError):
        ServerState(np.zeros((4, 8), dtype=np.uint8), 4, tmp_path)
