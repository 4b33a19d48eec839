"""tangiviz: fiducial-marker vision pipeline and tangible chart engine."""

from .chart_model import (
    CalibrationConfig,
    ChartState,
    PALETTE,
    apply_observations,
    bar_values,
    default_calibration,
    line_values,
    pie_fractions,
    set_color,
)
from .marker_codec import decode_grid, encode_id, render_marker
from .session import SessionState, SnapshotStore, dispatch, new_session
from .synth import Placement, SceneSpec, render_scene, render_slider_scene
from .template_scanner import crop_regions, layout_for, rectify_template, scan_template
from .vision import DetectConfig, Frame, MarkerObservation, detect_markers, preprocess

__version__ = "0.1.0"

__all__ = [
    "CalibrationConfig",
    "ChartState",
    "DetectConfig",
    "Frame",
    "MarkerObservation",
    "PALETTE",
    "Placement",
    "SceneSpec",
    "SessionState",
    "SnapshotStore",
    "apply_observations",
    "bar_values",
    "crop_regions",
    "decode_grid",
    "default_calibration",
    "detect_markers",
    "dispatch",
    "encode_id",
    "layout_for",
    "line_values",
    "new_session",
    "pie_fractions",
    "preprocess",
    "rectify_template",
    "render_marker",
    "render_scene",
    "render_slider_scene",
    "scan_template",
    "set_color",
]
