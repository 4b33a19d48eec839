"""Rectify photographed paper templates and crop their labeled regions.

A template is photographed face-down inside the box, so the page appears
bright on the dark interior and mirrored; rectification finds the page quad,
warps it to the layout's canonical size, and un-mirrors it. Handwriting is
never OCR'd: title and label crops are pasted into the chart as images.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources

import numpy as np

from .vision import (
    Frame,
    adaptive_threshold,
    approx_quads,
    homography_from_quad,
    trace_contours,
)

MAX_POINTS = 5


class NoPageFound(ValueError):
    """No bright quad covering enough of the frame."""


class BadNPoints(ValueError):
    pass


@dataclass(frozen=True)
class TemplateLayout:
    kind: str  # "bar_line" | "pie"
    canonical_size: tuple[int, int]  # (width, height) px
    regions: dict

    def region_names(self) -> list[str]:
        return list(self.regions)

    def region_pixels(self, name: str) -> tuple[int, int, int, int]:
        """Half-open pixel rect (x0, y0, x1, y1) of a region on the canvas."""
        x0, y0, x1, y1 = self.regions[name]
        w, h = self.canonical_size
        return (
            int(round(x0 * w)),
            int(round(y0 * h)),
            int(round(x1 * w)),
            int(round(y1 * h)),
        )

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "canonical_size": list(self.canonical_size),
            "regions": {k: list(v) for k, v in self.regions.items()},
        }


def _load_layouts() -> dict[str, TemplateLayout]:
    """The shipped layout file is the single source of the template geometry
    (the printable PDFs are generated from the same coordinates)."""
    raw = json.loads(
        resources.files("tangiviz").joinpath("data/template_layouts.json").read_text()
    )
    return {
        kind: TemplateLayout(
            kind=kind,
            canonical_size=(int(doc["canonical_size"][0]), int(doc["canonical_size"][1])),
            regions={name: tuple(rect) for name, rect in doc["regions"].items()},
        )
        for kind, doc in raw.items()
    }


_LAYOUTS = _load_layouts()
BAR_LINE_LAYOUT = _LAYOUTS["bar_line"]
PIE_LAYOUT = _LAYOUTS["pie"]


def layout_for(kind: str) -> TemplateLayout:
    if kind in ("bar", "line", "bar_line"):
        return BAR_LINE_LAYOUT
    if kind == "pie":
        return PIE_LAYOUT
    raise ValueError(f"unknown template kind {kind!r}")


@dataclass(frozen=True)
class TemplateScan:
    rectified: np.ndarray
    title_image: np.ndarray
    label_images: tuple[np.ndarray, ...]
    legend_images: tuple[np.ndarray, ...]
    scanned_at: str
    kind: str
    title_ref: str | None = None
    label_refs: tuple[str, ...] = ()
    legend_refs: tuple[str, ...] = ()

    @property
    def n_crops(self) -> int:
        return len(self.label_images) if self.kind == "bar_line" else len(self.legend_images)


def _quad_area(quad: np.ndarray) -> float:
    x = quad[:, 0]
    y = quad[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def rectify_template(
    frame: Frame,
    layout: TemplateLayout,
    face_down_flip: bool = True,
    threshold_radius: int = 15,
    threshold_c: int = 7,
    min_area_frac: float = 0.30,
) -> np.ndarray:
    """Find the page, warp it to the canonical size, and un-mirror it.

    The page is the largest bright quad; it must cover at least
    min_area_frac of the frame or NoPageFound is raised.
    """
    bright = adaptive_threshold(frame, threshold_radius, threshold_c, bright=True)
    contours = trace_contours(bright)
    quads = approx_quads(contours)
    frame_area = float(frame.width * frame.height)
    best = None
    best_area = 0.0
    for quad in quads:
        area = _quad_area(quad)
        if area > best_area:
            best = quad
            best_area = area
    if best is None or best_area < min_area_frac * frame_area:
        raise NoPageFound(
            f"largest bright quad covers {best_area / frame_area:.0%} of the frame, "
            f"need {min_area_frac:.0%}"
        )
    # The page is placed roughly upright: assign the canonical top-left to
    # the corner nearest the image origin (the quad stays clockwise).
    best = np.roll(best, -int(np.argmin(best.sum(axis=1))), axis=0)

    cw, ch = layout.canonical_size
    src = np.array([[0, 0], [cw, 0], [cw, ch], [0, ch]], dtype=np.float64)
    h = homography_from_quad(src, best)
    ys, xs = np.mgrid[0:ch, 0:cw]
    pts = np.column_stack(
        [xs.ravel().astype(np.float64) + 0.5, ys.ravel().astype(np.float64) + 0.5]
    )
    ones = np.ones((len(pts), 1))
    mapped = np.hstack([pts, ones]) @ h.T
    mx = np.clip(np.rint(mapped[:, 0] / mapped[:, 2]).astype(np.int64), 0, frame.width - 1)
    my = np.clip(np.rint(mapped[:, 1] / mapped[:, 2]).astype(np.int64), 0, frame.height - 1)
    rectified = frame.pixels[my, mx].reshape(ch, cw)
    if face_down_flip:
        rectified = np.fliplr(rectified).copy()
    return rectified


def crop_regions(rectified: np.ndarray, layout: TemplateLayout, n_points: int) -> TemplateScan:
    """Cut the title plus the first n_points label or legend crops."""
    if not 1 <= n_points <= MAX_POINTS:
        raise BadNPoints(f"n_points {n_points} outside [1, {MAX_POINTS}]")

    def cut(name: str) -> np.ndarray:
        x0, y0, x1, y1 = layout.region_pixels(name)
        return rectified[y0:y1, x0:x1].copy()

    title = cut("title")
    labels: tuple[np.ndarray, ...] = ()
    legends: tuple[np.ndarray, ...] = ()
    if layout.kind == "bar_line":
        labels = tuple(cut(f"label_{i}") for i in range(n_points))
    else:
        legends = tuple(cut(f"legend_{i}") for i in range(n_points))
    return TemplateScan(
        rectified=rectified,
        title_image=title,
        label_images=labels,
        legend_images=legends,
        scanned_at=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ"),
        kind=layout.kind,
    )


def scan_template(
    frame: Frame,
    kind: str,
    n_points: int,
    face_down_flip: bool = True,
) -> TemplateScan:
    """rectify_template + crop_regions in one call."""
    layout = layout_for(kind)
    rectified = rectify_template(frame, layout, face_down_flip=face_down_flip)
    return crop_regions(rectified, layout, n_points)
