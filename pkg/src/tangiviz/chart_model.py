"""Marker observations -> live chart state for bar, line, and pie charts.

Slider channels map marker heights linearly onto [0, y_max]; pie sections
turn per-marker orientations into wedge fractions. Missing markers hold
their last value (stale-hold) so brief occlusions do not zero the chart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .vision import Frame, MarkerObservation, DetectConfig, detect_markers

PALETTE = ("red", "orange", "yellow", "green", "blue", "purple", "gray")

CHART_KINDS = ("bar", "line", "pie")

FRUIT_CATEGORIES = ("apple", "banana", "orange", "grape", "pear")
FRUIT_Y_MAX = 10.0

SMOOTHING_ALPHA = 0.5

MAX_POINTS = 5


class ChartModelError(Exception):
    """Base class for chart mapping failures."""

    code = "chart_error"


class NoCalibration(ChartModelError):
    code = "no_calibration"


class SectionsOverlap(ChartModelError):
    code = "sections_overlap"


class MissingSection(ChartModelError):
    code = "missing_section"


class IndexOutOfRange(ChartModelError):
    code = "index_out_of_range"


class UnknownColor(ChartModelError):
    code = "unknown_color"


class MissingMarker(ChartModelError):
    code = "missing_marker"


class InvertedChannel(ChartModelError):
    code = "inverted_channel"


class InvalidCalibration(ValueError):
    pass


@dataclass(frozen=True)
class SliderChannel:
    index: int
    x_center: float
    y_bottom: float
    y_top: float
    marker_id: int


@dataclass(frozen=True)
class PieSection:
    marker_id: int
    color_name: str
    zero_offset_deg: float = 0.0


@dataclass(frozen=True)
class CalibrationConfig:
    channels: tuple[SliderChannel, ...]
    pie_markers: tuple[PieSection, ...] = ()
    flip_h: bool = False
    flip_v: bool = False

    def __post_init__(self) -> None:
        if not 1 <= len(self.channels) <= MAX_POINTS:
            raise InvalidCalibration("calibration needs 1 to 5 slider channels")
        ids = [ch.marker_id for ch in self.channels]
        if len(set(ids)) != len(ids):
            raise InvalidCalibration("duplicate channel marker ids")
        for ch in self.channels:
            if ch.y_bottom <= ch.y_top:
                raise InvalidCalibration(
                    f"channel {ch.index}: y_bottom must exceed y_top (image y grows down)"
                )
        if len(self.pie_markers) > MAX_POINTS:
            raise InvalidCalibration("at most 5 pie sections")
        pids = [s.marker_id for s in self.pie_markers]
        if len(set(pids)) != len(pids):
            raise InvalidCalibration("duplicate pie marker ids")

    def to_json_dict(self) -> dict:
        return {
            "channels": [
                {
                    "index": ch.index,
                    "x_center": ch.x_center,
                    "y_bottom": ch.y_bottom,
                    "y_top": ch.y_top,
                    "marker_id": ch.marker_id,
                }
                for ch in self.channels
            ],
            "pie_markers": [
                {
                    "marker_id": s.marker_id,
                    "color_name": s.color_name,
                    "zero_offset_deg": s.zero_offset_deg,
                }
                for s in self.pie_markers
            ],
            "flip_h": self.flip_h,
            "flip_v": self.flip_v,
        }

    @staticmethod
    def from_json_dict(data: Mapping) -> "CalibrationConfig":
        try:
            channels = tuple(
                SliderChannel(
                    index=int(ch["index"]),
                    x_center=float(ch["x_center"]),
                    y_bottom=float(ch["y_bottom"]),
                    y_top=float(ch["y_top"]),
                    marker_id=int(ch["marker_id"]),
                )
                for ch in data["channels"]
            )
            pies = tuple(
                PieSection(
                    marker_id=int(s["marker_id"]),
                    color_name=str(s["color_name"]),
                    zero_offset_deg=float(s.get("zero_offset_deg", 0.0)),
                )
                for s in data.get("pie_markers", ())
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidCalibration(f"malformed calibration document: {exc}") from exc
        return CalibrationConfig(
            channels=channels,
            pie_markers=pies,
            flip_h=bool(data.get("flip_h", False)),
            flip_v=bool(data.get("flip_v", False)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2))

    @staticmethod
    def load(path: str | Path) -> "CalibrationConfig":
        return CalibrationConfig.from_json_dict(json.loads(Path(path).read_text()))


def default_calibration() -> CalibrationConfig:
    """Standard 640x480 box geometry: 5 channels (ids 0-4), 5 pie ids 10-14."""
    channels = tuple(
        SliderChannel(index=i, x_center=80.0 + 120.0 * i, y_bottom=420.0, y_top=120.0,
                      marker_id=i)
        for i in range(5)
    )
    pies = tuple(
        PieSection(marker_id=10 + i, color_name=PALETTE[i]) for i in range(5)
    )
    return CalibrationConfig(channels=channels, pie_markers=pies)


@dataclass(frozen=True)
class ChartState:
    kind: str
    n_points: int
    values: tuple[float, ...]
    colors: tuple[str, ...]
    y_max: float | None = None
    title_image: str | None = None
    label_images: tuple[str, ...] = ()
    label_texts: tuple[str, ...] = ()
    paused: bool = False
    error: str | None = None
    held_orientations: tuple[tuple[int, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in CHART_KINDS:
            raise ValueError(f"unknown chart kind {self.kind!r}")
        if not 1 <= self.n_points <= MAX_POINTS:
            raise ValueError("n_points must be in [1, 5]")
        if len(self.values) != self.n_points:
            raise ValueError("values length must equal n_points")
        if len(self.colors) != self.n_points:
            raise ValueError("colors length must equal n_points")
        for color in self.colors:
            if color not in PALETTE:
                raise UnknownColor(f"color {color!r} not in palette")
        if self.kind == "pie":
            if any(v < -1e-9 or v > 1 + 1e-9 for v in self.values):
                raise ValueError("pie fractions must lie in [0, 1]")
            if abs(sum(self.values) - 1.0) > 1e-9:
                raise ValueError("pie fractions must sum to 1")
        else:
            if self.y_max is None or self.y_max <= 0:
                raise ValueError("bar/line charts need y_max > 0")
            if any(v < -1e-9 or v > self.y_max + 1e-9 for v in self.values):
                raise ValueError("values must lie in [0, y_max]")

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_points": self.n_points,
            "values": list(self.values),
            "colors": list(self.colors),
            "y_max": self.y_max,
            "title_image": self.title_image,
            "label_images": list(self.label_images),
            "label_texts": list(self.label_texts),
            "paused": self.paused,
            "error": self.error,
        }


def default_colors(n_points: int) -> tuple[str, ...]:
    return tuple(PALETTE[i % len(PALETTE)] for i in range(n_points))


def new_chart(
    kind: str,
    n_points: int,
    y_max: float | None = None,
    title_image: str | None = None,
    label_images: Sequence[str] = (),
    label_texts: Sequence[str] = (),
) -> ChartState:
    if kind == "pie":
        values = tuple(1.0 / n_points for _ in range(n_points))
        y_max = None
    else:
        values = tuple(0.0 for _ in range(n_points))
        if y_max is None:
            raise ValueError("bar/line charts need y_max")
    return ChartState(
        kind=kind,
        n_points=n_points,
        values=values,
        colors=default_colors(n_points),
        y_max=y_max,
        title_image=title_image,
        label_images=tuple(label_images),
        label_texts=tuple(label_texts),
    )


def fruit_tutorial_chart(kind: str = "bar") -> ChartState:
    """Flow 1's predefined chart: five fruit categories, scale 0-10."""
    return new_chart(
        kind,
        n_points=len(FRUIT_CATEGORIES),
        y_max=None if kind == "pie" else FRUIT_Y_MAX,
        label_texts=FRUIT_CATEGORIES,
    )


def _clamp(value: float, lo: float, hi: float) -> float:
    return lo if value < lo else hi if value > hi else value


def bar_values(
    obs: Iterable[MarkerObservation],
    calib: CalibrationConfig,
    y_max: float,
    n_points: int,
    previous: Sequence[float] | None = None,
) -> list[float]:
    """Map slider marker heights onto chart values.

    Channels are matched by marker id, not position. A channel whose marker
    is absent keeps its previous value (zero when no previous is given).
    """
    channels = sorted(calib.channels, key=lambda ch: ch.index)
    if not channels:
        raise NoCalibration("no slider channels calibrated")
    if n_points > len(channels):
        raise NoCalibration(
            f"chart needs {n_points} channels but only {len(channels)} calibrated"
        )
    if y_max <= 0:
        raise ValueError("y_max must be positive")
    prev = list(previous) if previous is not None else [0.0] * n_points
    if len(prev) != n_points:
        raise ValueError("previous values length must equal n_points")
    by_id: dict[int, MarkerObservation] = {}
    for o in obs:
        by_id.setdefault(o.marker_id, o)
    out = []
    for i, ch in enumerate(channels[:n_points]):
        o = by_id.get(ch.marker_id)
        if o is None:
            out.append(prev[i])
        else:
            t = (ch.y_bottom - o.center[1]) / (ch.y_bottom - ch.y_top)
            out.append(y_max * _clamp(t, 0.0, 1.0))
    return out


def line_values(
    obs: Iterable[MarkerObservation],
    calib: CalibrationConfig,
    y_max: float,
    n_points: int,
    previous: Sequence[float] | None = None,
) -> list[float]:
    """Same mapping as bar_values; the series is connected in channel order."""
    return bar_values(obs, calib, y_max, n_points, previous)


def pie_fractions(
    obs: Iterable[MarkerObservation],
    calib: CalibrationConfig,
    n_points: int,
    held: Mapping[int, float] | None = None,
) -> list[float]:
    """Turn section marker orientations into wedge fractions.

    Sections are the first n_points calibrated pie markers, stacked in
    marker_id ascending order. Consecutive orientation gaps (mod 360) must
    sum to exactly one full turn; a spiral crossing makes the sum a larger
    multiple of 360 and raises SectionsOverlap.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if n_points > len(calib.pie_markers):
        raise NoCalibration(
            f"chart needs {n_points} pie sections but only "
            f"{len(calib.pie_markers)} calibrated"
        )
    sections = sorted(calib.pie_markers[:n_points], key=lambda s: s.marker_id)
    wanted = {s.marker_id for s in sections}
    orientations = dict(held or {})
    for o in obs:
        if o.marker_id in wanted:
            orientations[o.marker_id] = o.orientation_deg
    missing = sorted(wanted - set(orientations))
    if missing:
        raise MissingSection(f"pie markers absent with no stale value: {missing}")
    if n_points == 1:
        return [1.0]
    thetas = [
        (orientations[s.marker_id] - s.zero_offset_deg) % 360.0 for s in sections
    ]
    gaps = [
        (thetas[(i + 1) % n_points] - thetas[i]) % 360.0 for i in range(n_points)
    ]
    total = sum(gaps)
    if round(total / 360.0) != 1:
        raise SectionsOverlap(
            f"orientation gaps sum to {total:.1f} deg, expected 360"
        )
    return [g / total for g in gaps]


def set_color(state: ChartState, index: int, color: str) -> ChartState:
    if not 0 <= index < state.n_points:
        raise IndexOutOfRange(f"index {index} outside [0, {state.n_points - 1}]")
    if color not in PALETTE:
        raise UnknownColor(f"color {color!r} not in palette {PALETTE}")
    colors = list(state.colors)
    colors[index] = color
    return replace(state, colors=tuple(colors))


def apply_observations(
    state: ChartState,
    obs: Sequence[MarkerObservation],
    calib: CalibrationConfig,
) -> ChartState:
    """Advance the chart one frame. Paused charts are returned untouched.

    Bar/line values are exponentially smoothed (alpha 0.5); mapping errors
    flag the state but keep the last good values.
    """
    if state.paused:
        return state
    if state.kind == "pie":
        held = dict(state.held_orientations)
        wanted = {s.marker_id for s in calib.pie_markers}
        for o in obs:
            if o.marker_id in wanted:
                held[o.marker_id] = o.orientation_deg
        held_t = tuple(sorted(held.items()))
        try:
            fractions = pie_fractions(obs, calib, state.n_points, held=held)
        except ChartModelError as exc:
            return replace(state, error=exc.code, held_orientations=held_t)
        return replace(
            state,
            values=tuple(fractions),
            error=None,
            held_orientations=held_t,
        )

    mapper = bar_values if state.kind == "bar" else line_values
    try:
        mapped = mapper(obs, calib, state.y_max, state.n_points, previous=state.values)
    except ChartModelError as exc:
        return replace(state, error=exc.code)
    smoothed = tuple(
        SMOOTHING_ALPHA * new + (1.0 - SMOOTHING_ALPHA) * old
        for new, old in zip(mapped, state.values)
    )
    return replace(state, values=smoothed, error=None)


def calibrate_two_pose(
    frame_bottom: Frame,
    frame_top: Frame,
    marker_ids: Sequence[int],
    config: DetectConfig | None = None,
) -> CalibrationConfig:
    """Build slider channels from two frames with all sliders at the extremes."""
    obs_bottom = {o.marker_id: o for o in detect_markers(frame_bottom, config)}
    obs_top = {o.marker_id: o for o in detect_markers(frame_top, config)}
    missing = sorted(
        mid for mid in marker_ids if mid not in obs_bottom or mid not in obs_top
    )
    if missing:
        raise MissingMarker(f"markers not found in both frames: {missing}")
    entries = []
    for mid in marker_ids:
        bottom = obs_bottom[mid]
        top = obs_top[mid]
        if bottom.center[1] <= top.center[1]:
            raise InvertedChannel(
                f"marker {mid}: bottom pose y {bottom.center[1]:.1f} is not below "
                f"top pose y {top.center[1]:.1f}"
            )
        entries.append(
            (
                (bottom.center[0] + top.center[0]) / 2.0,
                bottom.center[1],
                top.center[1],
                mid,
            )
        )
    entries.sort(key=lambda e: e[0])
    channels = tuple(
        SliderChannel(index=i, x_center=x, y_bottom=yb, y_top=yt, marker_id=mid)
        for i, (x, yb, yt, mid) in enumerate(entries)
    )
    return CalibrationConfig(channels=channels)
