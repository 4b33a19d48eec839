"""Deterministic 800x600 chart rasters for the snapshot gallery.

Pure numpy drawing: identical chart state yields byte-identical pixels (and
therefore byte-identical PNGs). Scanned title/label crops are pasted as
images; the only text the renderer itself draws is the y-axis scale, using a
tiny built-in digit font.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .chart_model import ChartState

CANVAS_W = 800
CANVAS_H = 600

PALETTE_RGB: dict[str, tuple[int, int, int]] = {
    "red": (214, 69, 65),
    "orange": (235, 151, 50),
    "yellow": (240, 212, 77),
    "green": (94, 174, 92),
    "blue": (79, 129, 216),
    "purple": (155, 94, 199),
    "gray": (148, 148, 148),
}

_BG = (252, 252, 250)
_INK = (40, 40, 40)

# 3x5 digit font, row-major strings; scaled up at draw time.
_GLYPHS = {
    "0": ("111", "101", "101", "101", "111"),
    "1": ("010", "110", "010", "010", "111"),
    "2": ("111", "001", "111", "100", "111"),
    "3": ("111", "001", "111", "001", "111"),
    "4": ("101", "101", "111", "001", "001"),
    "5": ("111", "100", "111", "001", "111"),
    "6": ("111", "100", "111", "101", "111"),
    "7": ("111", "001", "010", "010", "010"),
    "8": ("111", "101", "111", "101", "111"),
    "9": ("111", "101", "111", "001", "111"),
    ".": ("000", "000", "000", "000", "010"),
}


def _new_canvas() -> np.ndarray:
    canvas = np.empty((CANVAS_H, CANVAS_W, 3), dtype=np.uint8)
    canvas[:] = _BG
    return canvas


def _fill_rect(canvas: np.ndarray, x0: int, y0: int, x1: int, y1: int, rgb) -> None:
    x0 = max(x0, 0)
    y0 = max(y0, 0)
    x1 = min(x1, canvas.shape[1])
    y1 = min(y1, canvas.shape[0])
    if x0 < x1 and y0 < y1:
        canvas[y0:y1, x0:x1] = rgb


def _draw_text(canvas: np.ndarray, x: int, y: int, text: str, scale: int = 2) -> None:
    cx = x
    for ch in text:
        glyph = _GLYPHS.get(ch)
        if glyph is None:
            cx += 4 * scale
            continue
        for gy, row in enumerate(glyph):
            for gx, bit in enumerate(row):
                if bit == "1":
                    _fill_rect(
                        canvas,
                        cx + gx * scale,
                        y + gy * scale,
                        cx + (gx + 1) * scale,
                        y + (gy + 1) * scale,
                        _INK,
                    )
        cx += 4 * scale


def _format_scale(y_max: float) -> str:
    if abs(y_max - round(y_max)) < 1e-9:
        return str(int(round(y_max)))
    return f"{y_max:.1f}"


def _resize_nearest(image: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Deterministic nearest-neighbor resize; grayscale is expanded to RGB."""
    if image.ndim == 2:
        image = np.repeat(image[:, :, None], 3, axis=2)
    in_h, in_w = image.shape[:2]
    ys = np.minimum((np.arange(out_h) * in_h) // out_h, in_h - 1)
    xs = np.minimum((np.arange(out_w) * in_w) // out_w, in_w - 1)
    return image[ys[:, None], xs[None, :]]


def _paste(canvas: np.ndarray, image: np.ndarray, x0: int, y0: int, w: int, h: int) -> None:
    if w <= 0 or h <= 0:
        return
    patch = _resize_nearest(image, w, h)
    _fill_rect(canvas, x0 - 1, y0 - 1, x0 + w + 1, y0 + h + 1, _INK)
    canvas[y0 : y0 + h, x0 : x0 + w] = patch


def _draw_line(canvas: np.ndarray, p0, p1, rgb, thickness: int = 2) -> None:
    x0, y0 = p0
    x1, y1 = p1
    steps = int(max(abs(x1 - x0), abs(y1 - y0))) + 1
    xs = np.rint(np.linspace(x0, x1, steps)).astype(int)
    ys = np.rint(np.linspace(y0, y1, steps)).astype(int)
    t = thickness // 2
    for x, y in zip(xs, ys):
        _fill_rect(canvas, x - t, y - t, x + t + 1, y + t + 1, rgb)


def _resolve(ref: str | None, images: Mapping[str, np.ndarray] | None):
    if ref and images and ref in images:
        return images[ref]
    return None


_PLOT_LEFT = 90
_PLOT_RIGHT = 770
_PLOT_TOP = 120
_PLOT_BOTTOM = 470
_LABEL_TOP = 486
_LABEL_H = 60
_TITLE_RECT = (150, 16, 650, 96)  # x0, y0, x1, y1


def _draw_axes(canvas: np.ndarray, y_max: float) -> None:
    _fill_rect(canvas, _PLOT_LEFT - 2, _PLOT_TOP - 10, _PLOT_LEFT, _PLOT_BOTTOM + 2, _INK)
    _fill_rect(canvas, _PLOT_LEFT - 2, _PLOT_BOTTOM, _PLOT_RIGHT + 2, _PLOT_BOTTOM + 2, _INK)
    # Ticks at 0, half, and full scale with digit labels.
    for frac in (0.0, 0.5, 1.0):
        y = int(round(_PLOT_BOTTOM - frac * (_PLOT_BOTTOM - _PLOT_TOP)))
        _fill_rect(canvas, _PLOT_LEFT - 8, y - 1, _PLOT_LEFT - 2, y + 1, _INK)
        _draw_text(canvas, _PLOT_LEFT - 54, y - 5, _format_scale(y_max * frac))


def _draw_title(canvas: np.ndarray, chart: ChartState, images) -> None:
    title = _resolve(chart.title_image, images)
    if title is not None:
        x0, y0, x1, y1 = _TITLE_RECT
        _paste(canvas, title, x0, y0, x1 - x0, y1 - y0)


def _slot_centers(n: int) -> list[int]:
    span = _PLOT_RIGHT - _PLOT_LEFT
    return [int(round(_PLOT_LEFT + span * (i + 0.5) / n)) for i in range(n)]


def _value_to_y(value: float, y_max: float) -> int:
    frac = 0.0 if y_max <= 0 else min(max(value / y_max, 0.0), 1.0)
    return int(round(_PLOT_BOTTOM - frac * (_PLOT_BOTTOM - _PLOT_TOP)))


def _draw_point_labels(canvas: np.ndarray, chart: ChartState, images) -> None:
    centers = _slot_centers(chart.n_points)
    slot_w = (_PLOT_RIGHT - _PLOT_LEFT) // chart.n_points
    width = min(int(slot_w * 0.8), 140)
    for i in range(chart.n_points):
        ref = chart.label_images[i] if i < len(chart.label_images) else None
        img = _resolve(ref, images)
        if img is not None:
            _paste(canvas, img, centers[i] - width // 2, _LABEL_TOP, width, _LABEL_H)


def _render_bar(canvas: np.ndarray, chart: ChartState, images) -> None:
    _draw_axes(canvas, chart.y_max or 1.0)
    centers = _slot_centers(chart.n_points)
    slot_w = (_PLOT_RIGHT - _PLOT_LEFT) // chart.n_points
    bar_w = max(int(slot_w * 0.6), 8)
    for i, value in enumerate(chart.values):
        top = _value_to_y(value, chart.y_max or 1.0)
        height = max(_PLOT_BOTTOM - top, 1)  # zero values leave a 1-px stub
        rgb = PALETTE_RGB[chart.colors[i]]
        _fill_rect(
            canvas,
            centers[i] - bar_w // 2,
            _PLOT_BOTTOM - height,
            centers[i] + bar_w // 2,
            _PLOT_BOTTOM,
            rgb,
        )
    _draw_point_labels(canvas, chart, images)


def _render_line(canvas: np.ndarray, chart: ChartState, images) -> None:
    _draw_axes(canvas, chart.y_max or 1.0)
    centers = _slot_centers(chart.n_points)
    pts = [
        (centers[i], _value_to_y(v, chart.y_max or 1.0))
        for i, v in enumerate(chart.values)
    ]
    for a, b in zip(pts, pts[1:]):
        _draw_line(canvas, a, b, _INK, thickness=3)
    for i, (x, y) in enumerate(pts):
        _fill_rect(canvas, x - 6, y - 6, x + 7, y + 7, PALETTE_RGB[chart.colors[i]])
    _draw_point_labels(canvas, chart, images)


def _render_pie(canvas: np.ndarray, chart: ChartState, images) -> None:
    cx, cy, radius = 460, 310, 210
    ys, xs = np.mgrid[cy - radius : cy + radius + 1, cx - radius : cx + radius + 1]
    dx = xs - cx
    dy = ys - cy
    inside = dx * dx + dy * dy <= radius * radius
    # Angle measured clockwise from 12 o'clock.
    ang = np.degrees(np.arctan2(dx, -dy)) % 360.0
    start = 0.0
    for i, frac in enumerate(chart.values):
        end = start + frac * 360.0
        wedge = inside & (ang >= start) & (ang < end)
        region = canvas[cy - radius : cy + radius + 1, cx - radius : cx + radius + 1]
        region[wedge] = PALETTE_RGB[chart.colors[i]]
        start = end
    # Legend: color swatches with the scanned legend crops beside them.
    lx, ly = 40, 150
    for i in range(chart.n_points):
        _fill_rect(canvas, lx, ly, lx + 26, ly + 26, PALETTE_RGB[chart.colors[i]])
        ref = chart.label_images[i] if i < len(chart.label_images) else None
        img = _resolve(ref, images)
        if img is not None:
            _paste(canvas, img, lx + 36, ly, 120, 40)
        ly += 56


def render_chart_image(
    chart: ChartState, images: Mapping[str, np.ndarray] | None = None
) -> np.ndarray:
    """Rasterize a chart state to a deterministic 800x600 RGB image."""
    canvas = _new_canvas()
    _draw_title(canvas, chart, images)
    if chart.kind == "bar":
        _render_bar(canvas, chart, images)
    elif chart.kind == "line":
        _render_line(canvas, chart, images)
    else:
        _render_pie(canvas, chart, images)
    return canvas
