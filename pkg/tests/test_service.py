import json
import threading
import urllib.error
import urllib.request
import uuid

import pytest

from tangiviz.chart_model import default_calibration
from tangiviz.raster import png_bytes
from tangiviz.service import make_server
from tangiviz.synth import render_slider_scene, render_template_page
from tangiviz.template_scanner import BAR_LINE_LAYOUT, PIE_LAYOUT


@pytest.fixture
def server(tmp_path):
    srv = make_server(0, tmp_path / "store")
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{srv.server_address[1]}"
    yield base
    srv.shutdown()
    srv.server_close()


def request(method, url, body=None, content_type="application/json"):
    req = urllib.request.Request(url, data=body, method=method)
    if body is not None:
        req.add_header("Content-Type", content_type)
    try:
        with urllib.request.urlopen(req, timeout=30) as resp:
            return resp.status, resp.read(), resp.headers.get("Content-Type", "")
    except urllib.error.HTTPError as err:
        return err.code, err.read(), err.headers.get("Content-Type", "")


def post_json(url, payload):
    status, body, _ = request("POST", url, json.dumps(payload).encode())
    return status, json.loads(body)


def get_json(url):
    status, body, _ = request("GET", url)
    return status, json.loads(body)


def multipart_scan(png: bytes, extra_fields=None):
    boundary = uuid.uuid4().hex
    parts = []
    fields = {"type": "scan_captured"}
    fields.update(extra_fields or {})
    for name, value in fields.items():
        parts.append(
            f'--{boundary}\r\nContent-Disposition: form-data; name="{name}"\r\n\r\n{value}\r\n'.encode()
        )
    parts.append(
        f'--{boundary}\r\nContent-Disposition: form-data; name="image"; filename="scan.png"\r\n'
        f"Content-Type: image/png\r\n\r\n".encode() + png + b"\r\n"
    )
    parts.append(f"--{boundary}--\r\n".encode())
    return b"".join(parts), f"multipart/form-data; boundary={boundary}"


def new_session_id(base, calib_doc=None) -> str:
    body = json.dumps(calib_doc).encode() if calib_doc else b""
    status, payload = post_json(f"{base}/sessions", calib_doc or {})
    assert status == 201
    return payload["session_id"]


def slider_frame_png(heights) -> bytes:
    frame, _ = render_slider_scene(default_calibration(), heights, y_max=10.0)
    return png_bytes(frame.pixels)


def page_png(kind="bar_line") -> bytes:
    layout = BAR_LINE_LAYOUT if kind == "bar_line" else PIE_LAYOUT
    fills = {"title": 70, }
    frame, _ = render_template_page(layout, fills, seed=2, jitter_frac=0.02)
    return png_bytes(frame.pixels)


# --- sessions ----------------------------------------------------------------


def test_create_session_defaults(server):
    status, payload = post_json(f"{server}/sessions", {})
    assert status == 201
    assert payload["session_id"]
    status, state = get_json(f"{server}/sessions/{payload['session_id']}/state")
    assert status == 200
    assert state["flow"] == "home"
    assert state["chart"] is None


def test_create_session_with_calibration(server):
    doc = default_calibration().to_json_dict()
    status, payload = post_json(f"{server}/sessions", doc)
    assert status == 201


def test_create_session_duplicate_marker_ids_400(server):
    doc = default_calibration().to_json_dict()
    doc["channels"][1]["marker_id"] = doc["channels"][0]["marker_id"]
    status, payload = post_json(f"{server}/sessions", doc)
    assert status == 400
    assert payload["code"] == "bad_request"


def test_unknown_session_404(server):
    status, payload = get_json(f"{server}/sessions/deadbeef0000/state")
    assert status == 404
    assert payload["code"] == "not_found"


# --- frames ---------------------------------------------------------------------


def test_frame_in_home_409(server):
    sid = new_session_id(server)
    status, body, _ = request(
        "POST", f"{server}/sessions/{sid}/frames", slider_frame_png([0.5] * 5), "image/png"
    )
    assert status == 409
    assert json.loads(body)["code"] == "illegal_transition"


def test_truncated_png_400(server):
    sid = new_session_id(server)
    post_json(f"{server}/sessions/{sid}/events", {"type": "select_flow", "flow": "flow1"})
    good = slider_frame_png([0.5] * 5)
    status, body, _ = request(
        "POST", f"{server}/sessions/{sid}/frames", good[: len(good) // 2], "image/png"
    )
    assert status == 400
    assert json.loads(body)["code"] == "bad_request"


def test_flow1_frames_drive_chart(server):
    sid = new_session_id(server)
    post_json(f"{server}/sessions/{sid}/events", {"type": "select_flow", "flow": "flow1", "kind": "bar"})
    png = slider_frame_png([0.0, 0.25, 0.5, 0.75, 1.0])
    last = None
    for _ in range(8):
        status, body, _ = request("POST", f"{server}/sessions/{sid}/frames", png, "image/png")
        assert status == 200
        last = json.loads(body)
    values = last["chart"]["values"]
    for got, want in zip(values, [0.0, 2.5, 5.0, 7.5, 10.0]):
        assert abs(got - want) <= 0.2  # 2% of y_max
    assert len(last["observations"]) == 5
    obs = last["observations"][0]
    assert set(obs) == {"id", "center", "corners", "orientation_deg", "bit_errors"}


# --- events --------------------------------------------------------------------


def test_toggle_pause_event(server):
    sid = new_session_id(server)
    post_json(f"{server}/sessions/{sid}/events", {"type": "select_flow", "flow": "flow1"})
    status, state = post_json(f"{server}/sessions/{sid}/events", {"type": "toggle_pause"})
    assert status == 200
    assert state["chart"]["paused"] is True


def test_axes_configured_out_of_range_400(server):
    sid = new_session_id(server)
    post_json(f"{server}/sessions/{sid}/events", {"type": "select_flow", "flow": "flow2", "kind": "bar"})
    scan_body, ctype = multipart_scan(page_png())
    status, body, _ = request("POST", f"{server}/sessions/{sid}/events", scan_body, ctype)
    assert status == 200
    status, payload = post_json(
        f"{server}/sessions/{sid}/events", {"type": "axes_configured", "n_points": 6, "y_max": 10}
    )
    assert status == 400
    assert payload["code"] == "bad_request"


def test_save_outside_authoring_409(server):
    sid = new_session_id(server)
    status, payload = post_json(f"{server}/sessions/{sid}/events", {"type": "save"})
    assert status == 409
    assert payload["code"] == "illegal_transition"


def test_malformed_event_400(server):
    sid = new_session_id(server)
    status, payload = post_json(f"{server}/sessions/{sid}/events", {"no_type": True})
    assert status == 400


def test_unknown_event_type_400(server):
    sid = new_session_id(server)
    status, payload = post_json(f"{server}/sessions/{sid}/events", {"type": "explode"})
    assert status == 400


# --- flow 2 end to end -----------------------------------------------------------


def test_flow2_scan_configure_author_save_gallery(server):
    sid = new_session_id(server)
    post_json(f"{server}/sessions/{sid}/events", {"type": "select_flow", "flow": "flow2", "kind": "bar"})

    scan_body, ctype = multipart_scan(page_png())
    status, state = (lambda s, b, _: (s, json.loads(b)))(
        *request("POST", f"{server}/sessions/{sid}/events", scan_body, ctype)
    )
    assert status == 200
    assert state["phase"] == "axis_config"

    status, state = post_json(
        f"{server}/sessions/{sid}/events", {"type": "axes_configured", "n_points": 5, "y_max": 20}
    )
    assert status == 200
    assert state["phase"] == "authoring"
    assert state["chart"]["y_max"] == 20
    assert state["chart"]["title_image"]

    # scanned crops are fetchable
    title_ref = state["chart"]["title_image"]
    status, data, ctype2 = request("GET", f"{server}/sessions/{sid}/images/{title_ref}")
    assert status == 200 and ctype2 == "image/png" and data[:4] == b"\x89PNG"

    png = slider_frame_png([0.5] * 5)
    for _ in range(8):
        request("POST", f"{server}/sessions/{sid}/frames", png, "image/png")

    status, state = post_json(f"{server}/sessions/{sid}/events", {"type": "save"})
    assert status == 200
    assert state["saved_flag"] is True
    snap_id = state["snapshot_id"]

    status, snaps = get_json(f"{server}/sessions/{sid}/snapshots")
    assert status == 200
    assert [s["snapshot_id"] for s in snaps] == [snap_id]
    assert abs(snaps[0]["values"][0] - 10.0) <= 0.5

    status, image, ctype3 = request(
        "GET", f"{server}/sessions/{sid}/snapshots/{snap_id}/image"
    )
    assert status == 200 and ctype3 == "image/png" and image[:4] == b"\x89PNG"

    status, payload = get_json(f"{server}/sessions/{sid}/snapshots/ffffffffffff/image")
    assert status == 404


def test_pie_flow_skips_axis_entry_over_http(server):
    sid = new_session_id(server)
    post_json(f"{server}/sessions/{sid}/events", {"type": "select_flow", "flow": "flow2", "kind": "pie"})
    scan_body, ctype = multipart_scan(page_png("pie"))
    status, body, _ = request("POST", f"{server}/sessions/{sid}/events", scan_body, ctype)
    state = json.loads(body)
    assert status == 200
    assert state["phase"] == "authoring"
    assert state["chart"]["kind"] == "pie"


# --- reads ------------------------------------------------------------------------


def test_get_state_stateless(server):
    sid = new_session_id(server)
    post_json(f"{server}/sessions/{sid}/events", {"type": "select_flow", "flow": "flow1"})
    _, first = get_json(f"{server}/sessions/{sid}/state")
    _, second = get_json(f"{server}/sessions/{sid}/state")
    assert first == second


def test_fresh_session_snapshots_empty(server):
    sid = new_session_id(server)
    status, snaps = get_json(f"{server}/sessions/{sid}/snapshots")
    assert status == 200 and snaps == []


# --- concurrency ---------------------------------------------------------------------


def test_concurrent_sessions_do_not_interfere(server):
    sids = [new_session_id(server) for _ in range(3)]
    for sid in sids:
        post_json(f"{server}/sessions/{sid}/events", {"type": "select_flow", "flow": "flow1"})

    colors = ["red", "green", "blue"]
    errors = []

    def worker(sid, color):
        try:
            for i in range(20):
                status, _ = post_json(
                    f"{server}/sessions/{sid}/events",
                    {"type": "tap_color", "index": i % 5, "color": color},
                )
                assert status == 200
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [
        threading.Thread(target=worker, args=(sid, color))
        for sid, color in zip(sids, colors)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []
    for sid, color in zip(sids, colors):
        _, state = get_json(f"{server}/sessions/{sid}/state")
        assert state["chart"]["colors"] == [color] * 5
