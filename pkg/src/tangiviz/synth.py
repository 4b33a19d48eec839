"""Synthetic ground-truth scene rendering.

Renders markers, slider scenes, and template pages with exact known geometry
so the detection, mapping, and scanning paths can be tested against an
independent oracle. Rendering is nearest-neighbor (no anti-aliasing); noise
and blur model photometric degradation separately and are fully seeded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import marker_codec
from .raster import box_blur
from .vision import Frame, MarkerObservation, homography_from_quad


class OverlapError(ValueError):
    """Two placements' bounding discs intersect."""


class OutOfBounds(ValueError):
    """A placement's bounding disc leaves the frame."""


@dataclass(frozen=True)
class Placement:
    marker_id: int
    center: tuple[float, float]
    scale: float  # marker side length in px
    rotation_deg: float = 0.0


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    background: int = 255
    placements: tuple[Placement, ...] = ()
    noise_sigma: float = 0.0
    blur_radius: int = 0

    @staticmethod
    def from_json_dict(data: dict) -> "SceneSpec":
        return SceneSpec(
            width=int(data["width"]),
            height=int(data["height"]),
            background=int(data.get("background", 255)),
            placements=tuple(
                Placement(
                    marker_id=int(p["marker_id"]),
                    center=(float(p["center"][0]), float(p["center"][1])),
                    scale=float(p["scale"]),
                    rotation_deg=float(p.get("rotation_deg", 0.0)),
                )
                for p in data.get("placements", ())
            ),
            noise_sigma=float(data.get("noise_sigma", 0.0)),
            blur_radius=int(data.get("blur_radius", 0)),
        )


def _axes(rotation_deg: float) -> tuple[np.ndarray, np.ndarray]:
    """Image-coordinate direction of the marker's top edge and left edge."""
    theta = math.radians(rotation_deg)
    u = np.array([math.cos(theta), -math.sin(theta)])  # top-left -> top-right
    v = np.array([math.sin(theta), math.cos(theta)])  # top-left -> bottom-left
    return u, v


def placement_corners(p: Placement) -> tuple[tuple[float, float], ...]:
    """Exact image positions of the marker corners, canonical top-left first."""
    u, v = _axes(p.rotation_deg)
    c = np.array(p.center)
    half = p.scale / 2.0
    corners = (
        c - half * u - half * v,
        c + half * u - half * v,
        c + half * u + half * v,
        c - half * u + half * v,
    )
    return tuple((float(x), float(y)) for x, y in corners)


def _validate(spec: SceneSpec) -> None:
    radii = [p.scale * math.sqrt(2.0) / 2.0 for p in spec.placements]
    for p, r in zip(spec.placements, radii):
        x, y = p.center
        if x - r < 0 or y - r < 0 or x + r > spec.width or y + r > spec.height:
            raise OutOfBounds(f"marker {p.marker_id} bounding disc leaves the frame")
    for i in range(len(spec.placements)):
        for j in range(i + 1, len(spec.placements)):
            a, b = spec.placements[i], spec.placements[j]
            dist = math.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1])
            if dist < radii[i] + radii[j]:
                raise OverlapError(f"markers {a.marker_id} and {b.marker_id} overlap")


def _stamp_marker(img: np.ndarray, p: Placement) -> None:
    grid = marker_codec.encode_id(p.marker_id)
    u, v = _axes(p.rotation_deg)
    half = p.scale / 2.0
    reach = int(math.ceil(half * math.sqrt(2.0))) + 1
    cx, cy = p.center
    x0 = max(int(math.floor(cx - reach)), 0)
    x1 = min(int(math.ceil(cx + reach)), img.shape[1] - 1)
    y0 = max(int(math.floor(cy - reach)), 0)
    y1 = min(int(math.ceil(cy + reach)), img.shape[0] - 1)

    xs = np.arange(x0, x1 + 1, dtype=np.float64) - cx
    ys = np.arange(y0, y1 + 1, dtype=np.float64) - cy
    gx, gy = np.meshgrid(xs, ys)
    lu = gx * u[0] + gy * u[1]
    lv = gx * v[0] + gy * v[1]
    inside = (np.abs(lu) <= half) & (np.abs(lv) <= half)
    n = marker_codec.GRID_SIZE
    col = np.clip(((lu + half) / p.scale * n).astype(np.int64), 0, n - 1)
    row = np.clip(((lv + half) / p.scale * n).astype(np.int64), 0, n - 1)
    values = np.where(grid[row, col] == 1, 0, 255).astype(np.uint8)
    region = img[y0 : y1 + 1, x0 : x1 + 1]
    region[inside] = values[inside]


def render_scene(spec: SceneSpec, seed: int = 0) -> tuple[Frame, list[MarkerObservation]]:
    """Render a spec to a frame plus exact ground-truth observations."""
    _validate(spec)
    img = np.full((spec.height, spec.width), spec.background, dtype=np.uint8)
    for p in spec.placements:
        _stamp_marker(img, p)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        noisy = img.astype(np.float64) + rng.normal(0.0, spec.noise_sigma, img.shape)
        img = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
    if spec.blur_radius > 0:
        img = box_blur(img, spec.blur_radius)

    truth = [
        MarkerObservation(
            marker_id=p.marker_id,
            corners=placement_corners(p),
            center=(float(p.center[0]), float(p.center[1])),
            orientation_deg=p.rotation_deg % 360.0,
            bit_errors=0,
        )
        for p in spec.placements
    ]
    return Frame(pixels=img), truth


def render_slider_scene(
    calib,
    heights: list[float],
    y_max: float = 10.0,
    width: int = 640,
    height: int = 480,
    scale: float = 56.0,
    background: int = 255,
    noise_sigma: float = 0.0,
    blur_radius: int = 0,
    seed: int = 0,
) -> tuple[Frame, list[float]]:
    """Render slider channel markers at the given normalized heights.

    heights[i] in [0, 1] positions channel i's marker linearly between its
    calibrated bottom and top; the expected chart values are heights * y_max.
    """
    channels = sorted(calib.channels, key=lambda ch: ch.index)
    if len(heights) != len(channels):
        raise ValueError("need exactly one height per calibrated channel")
    placements = []
    for ch, h in zip(channels, heights):
        y = ch.y_bottom - h * (ch.y_bottom - ch.y_top)
        placements.append(
            Placement(marker_id=ch.marker_id, center=(ch.x_center, y), scale=scale)
        )
    spec = SceneSpec(
        width=width,
        height=height,
        background=background,
        placements=tuple(placements),
        noise_sigma=noise_sigma,
        blur_radius=blur_radius,
    )
    frame, _ = render_scene(spec, seed=seed)
    return frame, [h * y_max for h in heights]


def render_pie_scene(
    calib,
    orientations_deg: list[float],
    n_points: int | None = None,
    width: int = 640,
    height: int = 480,
    scale: float = 56.0,
    background: int = 255,
    seed: int = 0,
) -> Frame:
    """Render the first n pie section markers at the given orientations."""
    sections = list(calib.pie_markers[: n_points or len(orientations_deg)])
    if len(orientations_deg) != len(sections):
        raise ValueError("need one orientation per pie section")
    margin = scale * math.sqrt(2.0) / 2.0 + 2
    xs = np.linspace(margin, width - margin, max(len(sections), 2))
    y = height / 2.0
    placements = tuple(
        Placement(marker_id=s.marker_id, center=(float(xs[i]), y), scale=scale,
                  rotation_deg=orientations_deg[i])
        for i, s in enumerate(sections)
    )
    spec = SceneSpec(width=width, height=height, background=background,
                     placements=placements)
    frame, _ = render_scene(spec, seed=seed)
    return frame


def render_template_page(
    layout,
    region_fills: dict[str, int],
    seed: int = 0,
    margin_frac: float = 0.12,
    jitter_frac: float = 0.05,
    background: int = 20,
    page_intensity: int = 255,
    mirrored: bool = True,
) -> tuple[Frame, dict[str, tuple[int, int, int, int]]]:
    """Render a filled template page under a mild random perspective.

    The page content is drawn at the layout's canonical size, mirrored when
    mirrored=True (the camera sees a face-down page), then warped into a
    frame with corner jitter up to jitter_frac of the page size. Returns the
    frame plus the canonical pixel rect of every region.
    """
    cw, ch = layout.canonical_size
    page = np.full((ch, cw), page_intensity, dtype=np.uint8)
    rects = {}
    for name in layout.region_names():
        x0, y0, x1, y1 = layout.region_pixels(name)
        rects[name] = (x0, y0, x1, y1)
        if name in region_fills:
            page[y0:y1, x0:x1] = region_fills[name]
    if mirrored:
        page = np.fliplr(page)

    mx = int(round(cw * margin_frac))
    my = int(round(ch * margin_frac))
    fw, fh = cw + 2 * mx, ch + 2 * my
    base = np.array(
        [[mx, my], [mx + cw, my], [mx + cw, my + ch], [mx, my + ch]], dtype=np.float64
    )
    rng = np.random.default_rng(seed)
    jitter = rng.uniform(-jitter_frac, jitter_frac, size=(4, 2)) * np.array([cw, ch])
    corners = base + jitter

    # Map frame pixels back into page space and sample nearest-neighbor.
    page_corners = np.array([[0, 0], [cw, 0], [cw, ch], [0, ch]], dtype=np.float64)
    h_page_to_frame = homography_from_quad(page_corners, corners)
    h_frame_to_page = np.linalg.inv(h_page_to_frame)
    h_frame_to_page /= h_frame_to_page[2, 2]

    ys, xs = np.mgrid[0:fh, 0:fw]
    pts = np.column_stack([xs.ravel().astype(np.float64), ys.ravel().astype(np.float64)])
    ones = np.ones((len(pts), 1))
    mapped = np.hstack([pts, ones]) @ h_frame_to_page.T
    px = mapped[:, 0] / mapped[:, 2]
    py = mapped[:, 1] / mapped[:, 2]
    inside = (px >= 0) & (px < cw) & (py >= 0) & (py < ch)
    img = np.full(fh * fw, background, dtype=np.uint8)
    sx = np.clip(px[inside].astype(np.int64), 0, cw - 1)
    sy = np.clip(py[inside].astype(np.int64), 0, ch - 1)
    img[inside] = page[sy, sx]
    return Frame(pixels=img.reshape(fh, fw)), rects
