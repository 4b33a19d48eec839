import json
import shutil
from dataclasses import replace

import numpy as np
import pytest

from tangiviz.chart_model import default_calibration, fruit_tutorial_chart, new_chart
from tangiviz.chart_render import render_chart_image
from tangiviz.raster import png_bytes
from tangiviz.session import (
    AxesConfigured,
    Back,
    BadEvent,
    Flow1,
    Flow2,
    Flow3,
    FrameReceived,
    Home,
    IllegalTransition,
    Save,
    ScanCaptured,
    SelectFlow,
    SnapshotStore,
    StorageFailure,
    TapColor,
    TogglePause,
    dispatch,
    list_snapshots,
    new_session,
    save_snapshot,
)
from tangiviz.template_scanner import TemplateScan

from test_chart_model import channel_obs


def make_scan(kind="bar_line", n=5):
    blank = np.full((60, 160), 255, dtype=np.uint8)
    labels = tuple(blank.copy() for _ in range(n)) if kind == "bar_line" else ()
    legends = tuple(blank.copy() for _ in range(n)) if kind == "pie" else ()
    return TemplateScan(
        rectified=np.full((600, 1000), 255, dtype=np.uint8),
        title_image=np.full((72, 900), 255, dtype=np.uint8),
        label_images=labels,
        legend_images=legends,
        scanned_at="2026-01-01T00:00:00.000000Z",
        kind=kind,
        title_ref="scan_title.png",
        label_refs=tuple(f"scan_label_{i}.png" for i in range(len(labels))),
        legend_refs=tuple(f"scan_legend_{i}.png" for i in range(len(legends))),
    )


def authoring_session(store=None, kind="bar", y_max=10.0, n_points=3):
    state = new_session()
    state = dispatch(state, SelectFlow("flow2", kind))
    state = dispatch(state, ScanCaptured(make_scan("pie" if kind == "pie" else "bar_line")))
    if kind != "pie":
        state = dispatch(state, AxesConfigured(n_points, y_max))
    return state


# --- flow graph ----------------------------------------------------------------


def test_home_to_flow1_builds_fruit_chart():
    state = dispatch(new_session(), SelectFlow("flow1", "bar"))
    assert isinstance(state.current, Flow1)
    chart = state.current.chart
    assert chart.n_points == 5
    assert chart.y_max == 10.0
    assert chart.label_texts == ("apple", "banana", "orange", "grape", "pear")


def test_pie_scan_skips_axis_entry():
    state = dispatch(new_session(), SelectFlow("flow2", "pie"))
    state = dispatch(state, ScanCaptured(make_scan("pie")))
    assert isinstance(state.current, Flow2)
    assert state.current.phase == "authoring"
    assert state.current.chart is not None
    assert state.current.chart.kind == "pie"


def test_bar_scan_requires_axis_entry():
    state = dispatch(new_session(), SelectFlow("flow2", "bar"))
    state = dispatch(state, ScanCaptured(make_scan()))
    assert state.current.phase == "axis_config"
    state = dispatch(state, AxesConfigured(3, 25.0))
    assert state.current.phase == "authoring"
    chart = state.current.chart
    assert chart.n_points == 3 and chart.y_max == 25.0
    assert len(chart.label_images) == 3


def test_flow1_save_is_illegal(tmp_path):
    state = dispatch(new_session(), SelectFlow("flow1", "bar"))
    store = SnapshotStore(tmp_path / "snaps")
    with pytest.raises(IllegalTransition):
        dispatch(state, Save(), store=store)


def test_axes_out_of_range_rejected():
    state = dispatch(new_session(), SelectFlow("flow2", "bar"))
    state = dispatch(state, ScanCaptured(make_scan()))
    with pytest.raises(BadEvent):
        dispatch(state, AxesConfigured(6, 10.0))
    with pytest.raises(BadEvent):
        dispatch(state, AxesConfigured(3, 0.0))


def test_pause_freezes_chart():
    calib = default_calibration()
    state = authoring_session()
    state = dispatch(state, TogglePause())
    before = state.current.chart
    assert before.paused
    obs = tuple(channel_obs(calib, i, 1.0) for i in range(3))
    state = dispatch(state, FrameReceived(obs))
    assert state.current.chart == before


def test_frame_received_updates_flow1_chart():
    calib = default_calibration()
    state = dispatch(new_session(), SelectFlow("flow1", "bar"))
    obs = (channel_obs(calib, 0, 1.0),)
    state = dispatch(state, FrameReceived(obs))
    assert state.current.chart.values[0] > 0


def test_frame_received_illegal_in_home_and_scanning():
    with pytest.raises(IllegalTransition):
        dispatch(new_session(), FrameReceived(()))
    scanning = dispatch(new_session(), SelectFlow("flow2", "bar"))
    with pytest.raises(IllegalTransition):
        dispatch(scanning, FrameReceived(()))


def test_back_pops_to_home_and_home_back_illegal():
    state = authoring_session()
    state = dispatch(state, Back())
    assert isinstance(state.current, Home)
    with pytest.raises(IllegalTransition):
        dispatch(state, Back())


def test_tap_color_in_authoring():
    state = authoring_session()
    state = dispatch(state, TapColor(1, "purple"))
    assert state.current.chart.colors[1] == "purple"
    with pytest.raises(BadEvent):
        dispatch(state, TapColor(3, "red"))  # n_points == 3
    with pytest.raises(BadEvent):
        dispatch(state, TapColor(0, "mauve"))


def test_select_flow_outside_home_illegal():
    state = authoring_session()
    with pytest.raises(IllegalTransition):
        dispatch(state, SelectFlow("flow1"))


# --- snapshots --------------------------------------------------------------------


def test_save_snapshot_roundtrip(tmp_path):
    store = SnapshotStore(tmp_path / "snaps")
    state = authoring_session()
    chart = replace(state.current.chart, values=(2.0, 4.0, 1.0))
    state = replace(state, current=replace(state.current, chart=chart))
    state, snapshot = save_snapshot(state, store)
    assert state.saved_flag
    assert store.count() == 1
    loaded = store.get(snapshot.snapshot_id)
    assert loaded is not None
    assert loaded.values == (2.0, 4.0, 1.0)
    assert loaded.y_max == 10.0
    assert (store.directory / loaded.image_file).is_file()


def test_saved_flag_clears_on_next_event(tmp_path):
    store = SnapshotStore(tmp_path / "snaps")
    state = authoring_session()
    state = dispatch(state, Save(), store=store)
    assert state.saved_flag
    state = dispatch(state, TogglePause())
    assert not state.saved_flag


def test_two_saves_strictly_increasing_timestamps(tmp_path):
    store = SnapshotStore(tmp_path / "snaps")
    state = authoring_session()
    state, first = save_snapshot(state, store)
    state, second = save_snapshot(state, store)
    assert store.count() == 2
    assert second.saved_at > first.saved_at


def test_save_after_store_removed_fails_cleanly(tmp_path):
    store = SnapshotStore(tmp_path / "snaps")
    state = authoring_session()
    state, _ = save_snapshot(state, store)
    shutil.rmtree(store.directory)
    with pytest.raises(StorageFailure):
        save_snapshot(state, store)
    # session still usable afterwards
    state = dispatch(state, TogglePause())
    assert state.current.chart.paused


def test_list_snapshots_fresh_store_empty(tmp_path):
    assert list_snapshots(SnapshotStore(tmp_path / "snaps")) == []


def test_list_snapshots_sorted_after_k_saves(tmp_path):
    store = SnapshotStore(tmp_path / "snaps")
    state = authoring_session()
    for _ in range(4):
        state, _ = save_snapshot(state, store)
    snaps = list_snapshots(store)
    assert len(snaps) == 4
    stamps = [s.saved_at for s in snaps]
    assert stamps == sorted(stamps)


def test_corrupt_index_entry_skipped(tmp_path):
    store = SnapshotStore(tmp_path / "snaps")
    state = authoring_session()
    state, keeper = save_snapshot(state, store)
    index = json.loads((store.directory / "index.json").read_text())
    index.append({"snapshot_id": "broken"})  # missing required fields
    (store.directory / "index.json").write_text(json.dumps(index))
    snaps = list_snapshots(store)
    assert [s.snapshot_id for s in snaps] == [keeper.snapshot_id]


def test_persistence_survives_reload(tmp_path):
    store = SnapshotStore(tmp_path / "snaps")
    state = authoring_session()
    chart = replace(state.current.chart, values=(7.5, 0.0, 3.25), colors=("blue", "red", "gray"))
    state = replace(state, current=replace(state.current, chart=chart))
    _, saved = save_snapshot(state, store)

    reloaded = SnapshotStore(tmp_path / "snaps", create=False).list()
    assert len(reloaded) == 1
    got = reloaded[0]
    assert got.values == (7.5, 0.0, 3.25)
    assert got.colors == ("blue", "red", "gray")
    assert got.y_max == 10.0
    assert got.snapshot_id == saved.snapshot_id


def test_flow3_lists_snapshots(tmp_path):
    store = SnapshotStore(tmp_path / "snaps")
    state = authoring_session()
    state, _ = save_snapshot(state, store)
    state = dispatch(state, Back())
    state = dispatch(state, SelectFlow("flow3"), store=store)
    assert isinstance(state.current, Flow3)
    assert len(state.current.snapshots) == 1


# --- chart rendering -----------------------------------------------------------------


def test_render_deterministic_byte_identical():
    chart = replace(fruit_tutorial_chart("bar"), values=(1.0, 3.0, 5.0, 7.0, 9.0))
    a = png_bytes(render_chart_image(chart))
    b = png_bytes(render_chart_image(chart))
    assert a == b


def test_render_zero_bars_have_stubs():
    chart = fruit_tutorial_chart("bar")  # all zeros
    image = render_chart_image(chart)
    # the baseline row just above the axis carries colored stubs
    row = image[469, :, :]
    colored = (np.abs(row.astype(int) - np.array([252, 252, 250])).sum(axis=1) > 30).sum()
    assert colored > 0


def test_render_pie_half_and_half():
    chart = new_chart("pie", n_points=2)
    chart = replace(chart, values=(0.5, 0.5), colors=("red", "blue"))
    image = render_chart_image(chart)
    left = image[310, 460 - 100]
    right = image[310, 460 + 100]
    # wedge 0 covers clockwise 0-180 deg from 12 o'clock: the right half
    assert tuple(right) == (214, 69, 65)
    assert tuple(left) == (79, 129, 216)


def test_render_kinds_differ():
    bar = replace(fruit_tutorial_chart("bar"), values=(1.0, 2.0, 3.0, 4.0, 5.0))
    line = replace(fruit_tutorial_chart("line"), values=(1.0, 2.0, 3.0, 4.0, 5.0))
    assert png_bytes(render_chart_image(bar)) != png_bytes(render_chart_image(line))


# --- fuzz ------------------------------------------------------------------------


def test_flow_graph_fuzz_no_crashes(tmp_path):
    rng = np.random.default_rng(1234)
    calib = default_calibration()
    store = SnapshotStore(tmp_path / "fuzz")

    def random_event():
        roll = int(rng.integers(0, 8))
        kind = ("bar", "line", "pie")[int(rng.integers(0, 3))]
        if roll == 0:
            flow = ("flow1", "flow2", "flow3")[int(rng.integers(0, 3))]
            return SelectFlow(flow, kind)
        if roll == 1:
            return ScanCaptured(make_scan("pie" if kind == "pie" else "bar_line"))
        if roll == 2:
            return AxesConfigured(int(rng.integers(1, 6)), float(rng.uniform(1, 50)))
        if roll == 3:
            obs = tuple(
                channel_obs(calib, i, float(rng.uniform(0, 1)))
                for i in range(int(rng.integers(0, 6)))
            )
            return FrameReceived(obs)
        if roll == 4:
            return TogglePause()
        if roll == 5:
            return Save()
        if roll == 6:
            return TapColor(int(rng.integers(0, 5)), "green")
        return Back()

    for _ in range(400):
        state = new_session(calib)
        for _ in range(12):
            event = random_event()
            try:
                state = dispatch(state, event, store=store)
            except (IllegalTransition, BadEvent):
                continue
            cur = state.current
            if isinstance(cur, Flow2):
                if cur.phase == "authoring":
                    assert cur.scan is not None
                    assert cur.chart is not None
                    if cur.kind != "pie":
                        assert cur.chart.y_max is not None
                if cur.phase == "axis_config":
                    assert cur.scan is not None
