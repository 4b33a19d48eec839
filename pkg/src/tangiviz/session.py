"""Three-flow session state machine with snapshot persistence.

Flow 1 is the fruit tutorial, Flow 2 scans a paper template then authors a
chart, Flow 3 browses saved snapshots. Session states are immutable values;
dispatch returns a new state or raises IllegalTransition. Snapshots live in
one directory per session: index.json plus rendered and cropped PNGs, all
written atomically.
"""

from __future__ import annotations

import json
import logging
import os
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

import numpy as np

from . import chart_model
from .chart_model import (
    CalibrationConfig,
    ChartState,
    apply_observations,
    fruit_tutorial_chart,
    new_chart,
    set_color,
)
from .chart_render import render_chart_image
from .raster import png_bytes
from .template_scanner import TemplateScan
from .vision import MarkerObservation

logger = logging.getLogger(__name__)

FLOWS = ("flow1", "flow2", "flow3")


class IllegalTransition(Exception):
    """Event not allowed in the current session state."""


class BadEvent(ValueError):
    """Structurally valid event carrying out-of-range values."""


class StorageFailure(Exception):
    pass


# --- screens ---------------------------------------------------------------


@dataclass(frozen=True)
class Home:
    pass


@dataclass(frozen=True)
class Flow1:
    kind: str
    chart: ChartState


@dataclass(frozen=True)
class Flow2:
    phase: str  # "scanning" | "axis_config" | "authoring"
    kind: str
    scan: TemplateScan | None = None
    chart: ChartState | None = None


@dataclass(frozen=True)
class Flow3:
    snapshots: tuple["Snapshot", ...] = ()


@dataclass(frozen=True)
class SessionState:
    session_id: str
    calib: CalibrationConfig
    current: Home | Flow1 | Flow2 | Flow3
    saved_flag: bool = False


def new_session(calib: CalibrationConfig | None = None, session_id: str | None = None) -> SessionState:
    return SessionState(
        session_id=session_id or uuid.uuid4().hex[:12],
        calib=calib or chart_model.default_calibration(),
        current=Home(),
    )


# --- events ----------------------------------------------------------------


@dataclass(frozen=True)
class SelectFlow:
    flow: str
    kind: str = "bar"


@dataclass(frozen=True)
class ScanCaptured:
    scan: TemplateScan


@dataclass(frozen=True)
class AxesConfigured:
    n_points: int
    y_max: float


@dataclass(frozen=True)
class FrameReceived:
    observations: tuple[MarkerObservation, ...]


@dataclass(frozen=True)
class TogglePause:
    pass


@dataclass(frozen=True)
class Save:
    pass


@dataclass(frozen=True)
class TapColor:
    index: int
    color: str


@dataclass(frozen=True)
class Back:
    pass


Event = SelectFlow | ScanCaptured | AxesConfigured | FrameReceived | TogglePause | Save | TapColor | Back


def _state_name(state: SessionState) -> str:
    cur = state.current
    if isinstance(cur, Flow2):
        return f"flow2.{cur.phase}"
    return type(cur).__name__.lower()


def _illegal(state: SessionState, event: Event) -> IllegalTransition:
    return IllegalTransition(
        f"event {type(event).__name__} not allowed in state {_state_name(state)}"
    )


def _chart_from_scan(kind: str, scan: TemplateScan, n_points: int, y_max: float | None) -> ChartState:
    labels = scan.label_refs if kind in ("bar", "line") else scan.legend_refs
    return new_chart(
        kind,
        n_points=n_points,
        y_max=y_max,
        title_image=scan.title_ref,
        label_images=tuple(labels[:n_points]),
    )


def dispatch(
    state: SessionState, event: Event, store: "SnapshotStore | None" = None
) -> SessionState:
    """Apply one event to the session. Raises IllegalTransition when the
    event is not legal in the current state, BadEvent on out-of-range values.
    """
    cur = state.current
    state = replace(state, saved_flag=False)  # the saved indicator is transient

    if isinstance(event, SelectFlow):
        if not isinstance(cur, Home):
            raise _illegal(state, event)
        if event.flow not in FLOWS:
            raise BadEvent(f"unknown flow {event.flow!r}")
        if event.kind not in chart_model.CHART_KINDS:
            raise BadEvent(f"unknown chart kind {event.kind!r}")
        if event.flow == "flow1":
            return replace(state, current=Flow1(kind=event.kind, chart=fruit_tutorial_chart(event.kind)))
        if event.flow == "flow2":
            return replace(state, current=Flow2(phase="scanning", kind=event.kind))
        snapshots = tuple(list_snapshots(store)) if store is not None else ()
        return replace(state, current=Flow3(snapshots=snapshots))

    if isinstance(event, Back):
        if isinstance(cur, Home):
            raise _illegal(state, event)
        return replace(state, current=Home())

    if isinstance(event, ScanCaptured):
        if not (isinstance(cur, Flow2) and cur.phase == "scanning"):
            raise _illegal(state, event)
        if cur.kind == "pie":
            n = max(len(event.scan.legend_images), 1)
            chart = _chart_from_scan("pie", event.scan, n_points=n, y_max=None)
            return replace(
                state,
                current=Flow2(phase="authoring", kind=cur.kind, scan=event.scan, chart=chart),
            )
        return replace(state, current=Flow2(phase="axis_config", kind=cur.kind, scan=event.scan))

    if isinstance(event, AxesConfigured):
        if not (isinstance(cur, Flow2) and cur.phase == "axis_config"):
            raise _illegal(state, event)
        if not 1 <= event.n_points <= chart_model.MAX_POINTS:
            raise BadEvent(f"n_points {event.n_points} outside [1, {chart_model.MAX_POINTS}]")
        if event.y_max <= 0:
            raise BadEvent("y_max must be positive")
        assert cur.scan is not None
        chart = _chart_from_scan(cur.kind, cur.scan, event.n_points, event.y_max)
        return replace(
            state,
            current=Flow2(phase="authoring", kind=cur.kind, scan=cur.scan, chart=chart),
        )

    if isinstance(event, FrameReceived):
        chart, put = _authoring_chart(state, event)
        updated = apply_observations(chart, list(event.observations), state.calib)
        return put(updated)

    if isinstance(event, TogglePause):
        chart, put = _authoring_chart(state, event)
        return put(replace(chart, paused=not chart.paused))

    if isinstance(event, TapColor):
        chart, put = _authoring_chart(state, event)
        try:
            return put(set_color(chart, event.index, event.color))
        except chart_model.ChartModelError as exc:
            raise BadEvent(str(exc)) from exc

    if isinstance(event, Save):
        if store is None:
            raise StorageFailure("no snapshot store attached to this session")
        next_state, _ = save_snapshot(state, store)
        return next_state

    raise _illegal(state, event)


def _authoring_chart(state: SessionState, event: Event):
    """The live chart in Flow1 or Flow2.Authoring, plus a setter for it."""
    cur = state.current
    if isinstance(cur, Flow1):
        return cur.chart, lambda c: replace(state, current=replace(cur, chart=c))
    if isinstance(cur, Flow2) and cur.phase == "authoring" and cur.chart is not None:
        return cur.chart, lambda c: replace(state, current=replace(cur, chart=c))
    raise _illegal(state, event)


# --- snapshots ---------------------------------------------------------------


@dataclass(frozen=True)
class Snapshot:
    snapshot_id: str
    saved_at: str  # RFC 3339 UTC
    kind: str
    n_points: int
    values: tuple[float, ...]
    colors: tuple[str, ...]
    y_max: float | None
    image_file: str
    title_image_file: str | None = None
    label_image_files: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "snapshot_id": self.snapshot_id,
            "saved_at": self.saved_at,
            "kind": self.kind,
            "n_points": self.n_points,
            "values": list(self.values),
            "colors": list(self.colors),
            "y_max": self.y_max,
            "image_file": self.image_file,
            "title_image_file": self.title_image_file,
            "label_image_files": list(self.label_image_files),
        }

    @staticmethod
    def from_json_dict(data: Mapping) -> "Snapshot":
        return Snapshot(
            snapshot_id=str(data["snapshot_id"]),
            saved_at=str(data["saved_at"]),
            kind=str(data["kind"]),
            n_points=int(data["n_points"]),
            values=tuple(float(v) for v in data["values"]),
            colors=tuple(str(c) for c in data["colors"]),
            y_max=None if data.get("y_max") is None else float(data["y_max"]),
            image_file=str(data["image_file"]),
            title_image_file=data.get("title_image_file"),
            label_image_files=tuple(data.get("label_image_files", ())),
        )


def _utc_now_rfc3339() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


class SnapshotStore:
    """One directory of snapshots: index.json + PNG files, atomic writes."""

    def __init__(self, directory: str | Path, create: bool = True) -> None:
        self.directory = Path(directory)
        if create:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._index_path = self.directory / "index.json"

    def _atomic_write(self, path: Path, data: bytes) -> None:
        tmp = path.with_name(path.name + ".tmp")
        try:
            tmp.write_bytes(data)
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageFailure(f"cannot write {path.name}: {exc}") from exc

    def _read_index(self) -> list[dict]:
        if not self._index_path.exists():
            return []
        try:
            raw = json.loads(self._index_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageFailure(f"cannot read snapshot index: {exc}") from exc
        if not isinstance(raw, list):
            raise StorageFailure("snapshot index is not a list")
        return raw

    def count(self) -> int:
        return len(self.list())

    def list(self) -> list[Snapshot]:
        """All snapshots, saved_at ascending; corrupt entries are skipped."""
        snapshots = []
        for entry in self._read_index():
            try:
                snapshots.append(Snapshot.from_json_dict(entry))
            except (KeyError, TypeError, ValueError) as exc:
                logger.warning("skipping corrupt snapshot entry: %s", exc)
        snapshots.sort(key=lambda s: s.saved_at)
        return snapshots

    def save(
        self,
        chart: ChartState,
        images: Mapping[str, np.ndarray] | None = None,
    ) -> Snapshot:
        """Persist a chart: rendered PNG, crop PNGs, and an index entry."""
        if not self.directory.is_dir():
            raise StorageFailure(f"snapshot directory {self.directory} is missing")
        existing = self._read_index()
        sid = uuid.uuid4().hex[:12]
        saved_at = _utc_now_rfc3339()
        if existing:
            last = max(e.get("saved_at", "") for e in existing)
            if saved_at <= last:
                bumped = datetime.strptime(last, "%Y-%m-%dT%H:%M:%S.%fZ")
                saved_at = (
                    datetime.fromtimestamp(bumped.timestamp() + 1e-6, tz=timezone.utc)
                    .strftime("%Y-%m-%dT%H:%M:%S.%fZ")
                )

        rendered = render_chart_image(chart, images)
        image_file = f"snap_{sid}.png"
        self._atomic_write(self.directory / image_file, png_bytes(rendered))

        title_file = None
        label_files: list[str] = []
        if images:
            if chart.title_image and chart.title_image in images:
                title_file = f"snap_{sid}_title.png"
                self._atomic_write(
                    self.directory / title_file, png_bytes(images[chart.title_image])
                )
            for i, ref in enumerate(chart.label_images):
                if ref in images:
                    name = f"snap_{sid}_label_{i}.png"
                    self._atomic_write(self.directory / name, png_bytes(images[ref]))
                    label_files.append(name)

        snapshot = Snapshot(
            snapshot_id=sid,
            saved_at=saved_at,
            kind=chart.kind,
            n_points=chart.n_points,
            values=chart.values,
            colors=chart.colors,
            y_max=chart.y_max,
            image_file=image_file,
            title_image_file=title_file,
            label_image_files=tuple(label_files),
        )
        existing.append(snapshot.to_json_dict())
        self._atomic_write(
            self._index_path, json.dumps(existing, indent=2).encode("utf-8")
        )
        return snapshot

    def get(self, snapshot_id: str) -> Snapshot | None:
        for snap in self.list():
            if snap.snapshot_id == snapshot_id:
                return snap
        return None

    def image_bytes(self, snapshot_id: str) -> bytes | None:
        snap = self.get(snapshot_id)
        if snap is None:
            return None
        path = self.directory / snap.image_file
        try:
            return path.read_bytes()
        except OSError:
            return None


def save_snapshot(
    state: SessionState,
    store: SnapshotStore,
    images: Mapping[str, np.ndarray] | None = None,
) -> tuple[SessionState, Snapshot]:
    """Persist the authoring chart; only legal in Flow2.Authoring."""
    cur = state.current
    if not (isinstance(cur, Flow2) and cur.phase == "authoring" and cur.chart is not None):
        raise IllegalTransition(
            f"event Save not allowed in state {_state_name(state)}"
        )
    if images is None and cur.scan is not None:
        images = scan_image_map(cur.scan)
    snapshot = store.save(cur.chart, images)
    return replace(state, saved_flag=True), snapshot


def scan_image_map(scan: TemplateScan) -> dict[str, np.ndarray]:
    """Map a scan's image refs to pixel arrays for rendering/persistence."""
    images: dict[str, np.ndarray] = {}
    if scan.title_ref:
        images[scan.title_ref] = scan.title_image
    for ref, img in zip(scan.label_refs, scan.label_images):
        images[ref] = img
    for ref, img in zip(scan.legend_refs, scan.legend_images):
        images[ref] = img
    return images


def list_snapshots(store: SnapshotStore) -> list[Snapshot]:
    return store.list()
