"""Shared fixtures and synthetic-scene helpers."""

from __future__ import annotations

import math

import numpy as np
import pytest

from tangiviz.chart_model import CalibrationConfig, PieSection, SliderChannel, default_calibration
from tangiviz.synth import Placement, SceneSpec


@pytest.fixture
def calib() -> CalibrationConfig:
    return default_calibration()


@pytest.fixture
def small_calib() -> CalibrationConfig:
    channels = tuple(
        SliderChannel(index=i, x_center=100.0 + 150.0 * i, y_bottom=400.0, y_top=100.0,
                      marker_id=20 + i)
        for i in range(3)
    )
    pies = tuple(PieSection(marker_id=30 + i, color_name="red") for i in range(3))
    return CalibrationConfig(channels=channels, pie_markers=pies)


def random_scene(
    rng: np.random.Generator,
    width: int = 640,
    height: int = 480,
    max_markers: int = 5,
    scale_range: tuple[float, float] = (40.0, 120.0),
    noise_sigma: float = 0.0,
    blur_radius: int = 0,
) -> SceneSpec:
    """Non-overlapping random marker placements, fully inside the frame."""
    n = int(rng.integers(1, max_markers + 1))
    placements: list[Placement] = []
    attempts = 0
    while len(placements) < n and attempts < 300:
        attempts += 1
        scale = float(rng.uniform(*scale_range))
        radius = scale * math.sqrt(2.0) / 2.0
        cx = float(rng.uniform(radius + 1, width - radius - 1))
        cy = float(rng.uniform(radius + 1, height - radius - 1))
        clear = all(
            math.hypot(cx - p.center[0], cy - p.center[1])
            > radius + p.scale * math.sqrt(2.0) / 2.0 + 2
            for p in placements
        )
        if not clear:
            continue
        marker_id = int(rng.integers(0, 1024))
        if any(p.marker_id == marker_id for p in placements):
            continue
        placements.append(
            Placement(
                marker_id=marker_id,
                center=(cx, cy),
                scale=scale,
                rotation_deg=float(rng.uniform(0.0, 360.0)),
            )
        )
    return SceneSpec(
        width=width,
        height=height,
        placements=tuple(placements),
        noise_sigma=noise_sigma,
        blur_radius=blur_radius,
    )


def angle_diff(a: float, b: float) -> float:
    """Smallest absolute difference between two angles in degrees."""
    return abs((a - b + 180.0) % 360.0 - 180.0)
