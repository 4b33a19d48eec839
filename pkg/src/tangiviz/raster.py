"""Low-level raster helpers shared by the vision, synth, and chart layers.

Everything here is deterministic: integer arithmetic where exactness matters
(windowed means via integral images) and fixed rounding everywhere else.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image


class UnsupportedImage(ValueError):
    """Raised for image inputs outside the supported 8-bit gray/RGB set."""


def read_png(source: str | Path | bytes) -> np.ndarray:
    """Load a PNG into a uint8 array: HxW for grayscale, HxWx3 for color.

    RGBA inputs are composited over white; palette images are expanded.
    Anything that does not reduce to 8-bit gray or RGB is rejected.
    """
    if isinstance(source, bytes):
        buf = io.BytesIO(source)
    else:
        buf = Path(source)
    try:
        with Image.open(buf) as img:
            img.load()
            if img.mode == "P":
                img = img.convert("RGBA")
            if img.mode == "RGBA":
                bg = Image.new("RGBA", img.size, (255, 255, 255, 255))
                img = Image.alpha_composite(bg, img).convert("RGB")
            if img.mode == "LA":
                img = img.convert("L")
            if img.mode not in ("L", "RGB"):
                raise UnsupportedImage(f"unsupported image mode {img.mode!r}")
            return np.asarray(img, dtype=np.uint8).copy()
    except UnsupportedImage:
        raise
    except Exception as exc:
        raise UnsupportedImage(f"cannot decode image: {exc}") from exc


def write_png(target: str | Path | io.BytesIO, pixels: np.ndarray) -> None:
    """Write a uint8 array (HxW gray or HxWx3 RGB) as a PNG."""
    arr = np.ascontiguousarray(pixels)
    if arr.dtype != np.uint8:
        raise UnsupportedImage("write_png expects uint8 pixels")
    if arr.ndim == 2:
        img = Image.fromarray(arr, mode="L")
    elif arr.ndim == 3 and arr.shape[2] == 3:
        img = Image.fromarray(arr, mode="RGB")
    else:
        raise UnsupportedImage(f"unsupported array shape {arr.shape}")
    img.save(target, format="PNG")


def png_bytes(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    write_png(buf, pixels)
    return buf.getvalue()


def window_sums(values: np.ndarray, radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact sums and pixel counts of (2*radius+1)^2 windows clipped at borders.

    Returns int64 arrays (sums, counts) of the input shape, computed with a
    padded integral image so no floating-point error enters the mean.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    h, w = values.shape
    integ = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(np.cumsum(values, axis=0, dtype=np.int64), axis=1, out=integ[1:, 1:])

    ys = np.arange(h)
    xs = np.arange(w)
    y0 = np.maximum(ys - radius, 0)
    y1 = np.minimum(ys + radius, h - 1) + 1
    x0 = np.maximum(xs - radius, 0)
    x1 = np.minimum(xs + radius, w - 1) + 1

    sums = (
        integ[y1[:, None], x1[None, :]]
        - integ[y0[:, None], x1[None, :]]
        - integ[y1[:, None], x0[None, :]]
        + integ[y0[:, None], x0[None, :]]
    )
    counts = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    return sums, counts


def box_blur(pixels: np.ndarray, radius: int) -> np.ndarray:
    """Box blur with border-clipped windows; means rounded half-up to uint8."""
    if radius <= 0:
        return pixels.copy()
    sums, counts = window_sums(pixels.astype(np.int64), radius)
    blurred = (2 * sums + counts) // (2 * counts)
    return blurred.astype(np.uint8)
