import numpy as np
import pytest

from tangiviz.raster import png_bytes
from tangiviz.synth import render_template_page
from tangiviz.template_scanner import (
    BAR_LINE_LAYOUT,
    BadNPoints,
    NoPageFound,
    PIE_LAYOUT,
    TemplateLayout,
    crop_regions,
    layout_for,
    rectify_template,
    scan_template,
)
from tangiviz.vision import Frame


# --- layout ---------------------------------------------------------------


def test_layout_label0_pixel_rect():
    assert BAR_LINE_LAYOUT.region_pixels("label_0") == (120, 528, 280, 588)


def test_layout_regions_inside_canvas():
    for layout in (BAR_LINE_LAYOUT, PIE_LAYOUT):
        w, h = layout.canonical_size
        for name in layout.region_names():
            x0, y0, x1, y1 = layout.region_pixels(name)
            assert 0 <= x0 < x1 <= w
            assert 0 <= y0 < y1 <= h


def test_layout_label_regions_disjoint():
    rects = [BAR_LINE_LAYOUT.region_pixels(f"label_{i}") for i in range(5)]
    for i, a in enumerate(rects):
        for b in rects[i + 1 :]:
            assert a[2] <= b[0] or b[2] <= a[0]  # disjoint in x


def test_layout_for_aliases():
    assert layout_for("bar") is BAR_LINE_LAYOUT
    assert layout_for("line") is BAR_LINE_LAYOUT
    assert layout_for("pie") is PIE_LAYOUT
    with pytest.raises(ValueError):
        layout_for("donut")


# --- crop_regions ------------------------------------------------------------


def canvas_for(layout: TemplateLayout, value: int = 255) -> np.ndarray:
    w, h = layout.canonical_size
    return np.full((h, w), value, dtype=np.uint8)


def test_crop_counts_bar_line():
    scan = crop_regions(canvas_for(BAR_LINE_LAYOUT), BAR_LINE_LAYOUT, 3)
    assert scan.title_image.shape == (72, 900)
    assert len(scan.label_images) == 3
    assert len(scan.legend_images) == 0
    assert scan.label_images[0].shape == (60, 160)


def test_crop_counts_pie():
    scan = crop_regions(canvas_for(PIE_LAYOUT), PIE_LAYOUT, 5)
    assert len(scan.legend_images) == 5
    assert len(scan.label_images) == 0


def test_crop_rejects_bad_n_points():
    for bad in (0, 6, -1):
        with pytest.raises(BadNPoints):
            crop_regions(canvas_for(BAR_LINE_LAYOUT), BAR_LINE_LAYOUT, bad)


def test_crops_never_overlap_for_any_n():
    w, h = BAR_LINE_LAYOUT.canonical_size
    for n in range(1, 6):
        cover = np.zeros((h, w), dtype=np.uint8)
        names = ["title"] + [f"label_{i}" for i in range(n)]
        for name in names:
            x0, y0, x1, y1 = BAR_LINE_LAYOUT.region_pixels(name)
            cover[y0:y1, x0:x1] += 1
        assert cover.max() == 1


# --- rectify -------------------------------------------------------------------


def test_rectify_blank_dark_frame_no_page():
    frame = Frame(pixels=np.full((300, 400), 15, dtype=np.uint8))
    with pytest.raises(NoPageFound):
        rectify_template(frame, BAR_LINE_LAYOUT)


def test_rectify_small_bright_patch_no_page():
    img = np.full((300, 400), 15, dtype=np.uint8)
    img[100:140, 100:160] = 250  # bright but only 2% of the frame
    with pytest.raises(NoPageFound):
        rectify_template(Frame(pixels=img), BAR_LINE_LAYOUT)


def test_rectify_recovers_corner_dots_within_2px():
    """Synth page oracle: dark dots at known page positions must land at
    their canonical coordinates after rectification."""
    dots = {
        "d0": (80, 80),
        "d1": (920, 80),
        "d2": (920, 520),
        "d3": (80, 520),
    }
    layout = BAR_LINE_LAYOUT
    w, h = layout.canonical_size
    page = np.full((h, w), 255, dtype=np.uint8)
    for x, y in dots.values():
        page[y - 4 : y + 5, x - 4 : x + 5] = 0
    # embed mirrored (face-down) at a known offset, no jitter
    mx, my = 120, 80
    img = np.full((h + 2 * my, w + 2 * mx), 20, dtype=np.uint8)
    img[my : my + h, mx : mx + w] = np.fliplr(page)
    rect = rectify_template(Frame(pixels=img), layout)

    for x, y in dots.values():
        window = rect[y - 8 : y + 9, x - 8 : x + 9]
        dark = np.argwhere(window < 128)
        assert len(dark) > 0
        cy, cx = dark.mean(axis=0)
        assert abs(cx - 8) <= 2.0 and abs(cy - 8) <= 2.0


def test_rectify_twice_is_identity_up_to_resampling():
    fills = {"title": 90, "label_0": 140, "label_2": 60, "y_scale": 180}
    frame, _ = render_template_page(
        BAR_LINE_LAYOUT, fills, seed=3, jitter_frac=0.03, mirrored=False
    )
    first = rectify_template(frame, BAR_LINE_LAYOUT, face_down_flip=False)
    # embed the rectified page in a dark margin and rectify again
    h, w = first.shape
    mx, my = 100, 70
    img = np.full((h + 2 * my, w + 2 * mx), 20, dtype=np.uint8)
    img[my : my + h, mx : mx + w] = first
    second = rectify_template(Frame(pixels=img), BAR_LINE_LAYOUT, face_down_flip=False)
    diff = np.abs(first.astype(np.int64) - second.astype(np.int64))
    assert diff.mean() < 5.0


def test_scan_deterministic_byte_identical():
    fills = {"title": 70, "label_0": 120, "label_1": 160}
    frame, _ = render_template_page(BAR_LINE_LAYOUT, fills, seed=9)
    a = scan_template(frame, "bar_line", 3)
    b = scan_template(frame, "bar_line", 3)
    assert png_bytes(a.rectified) == png_bytes(b.rectified)
    assert png_bytes(a.title_image) == png_bytes(b.title_image)
    for left, right in zip(a.label_images, b.label_images):
        assert png_bytes(left) == png_bytes(right)


@pytest.mark.parametrize("kind,layout", [("bar_line", BAR_LINE_LAYOUT), ("pie", PIE_LAYOUT)])
def test_scan_end_to_end_crop_dominance(kind, layout):
    """Distinct fills in every region: each crop must be dominated by the
    intensity planted in its own region."""
    names = layout.region_names()
    fills = {name: 40 + 25 * i for i, name in enumerate(names)}
    frame, _ = render_template_page(layout, fills, seed=4, jitter_frac=0.02)
    scan = scan_template(frame, kind, 5)
    crops = {"title": scan.title_image}
    for i, img in enumerate(scan.label_images):
        crops[f"label_{i}"] = img
    for i, img in enumerate(scan.legend_images):
        crops[f"legend_{i}"] = img
    for name, crop in crops.items():
        share = (crop == fills[name]).mean()
        assert share >= 0.95, f"{name}: {share:.2%}"


def test_jittered_page_crop_iou():
    layout = BAR_LINE_LAYOUT
    names = layout.region_names()
    fills = {name: 40 + 25 * i for i, name in enumerate(names)}
    for seed in range(3):
        frame, rects = render_template_page(layout, fills, seed=seed, jitter_frac=0.05)
        rect = rectify_template(frame, layout)
        for name, (x0, y0, x1, y1) in rects.items():
            mask = rect == fills[name]
            truth = np.zeros_like(mask)
            truth[y0:y1, x0:x1] = True
            inter = float(np.logical_and(mask, truth).sum())
            union = float(np.logical_or(mask, truth).sum())
            assert inter / union >= 0.95, f"seed {seed} {name}: IoU {inter/union:.3f}"
