"""Command-line entry points: marker generation, detection, template
scanning, scene synthesis, slider calibration, and the HTTP service.

Exit codes: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import marker_codec, synth, template_scanner
from .chart_model import CalibrationConfig, ChartModelError, calibrate_two_pose
from .raster import UnsupportedImage, read_png, write_png
from .service import make_server
from .vision import DetectConfig, detect_markers, preprocess


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tangiviz",
        description="Fiducial-marker chart toolkit: detection, synthesis, service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-marker", help="render a marker to a PNG")
    p.add_argument("--id", type=int, required=True, dest="marker_id")
    p.add_argument("--cell-px", type=int, default=10)
    p.add_argument("--out", type=Path, default=Path("marker.png"))

    p = sub.add_parser("detect", help="detect markers in a PNG frame")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--flip-h", action="store_true")
    p.add_argument("--flip-v", action="store_true")
    p.add_argument("--tolerance", type=int, default=0)
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("scan-template", help="rectify a template photo and crop regions")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--kind", choices=("bar_line", "pie"), required=True)
    p.add_argument("--n", type=int, required=True, dest="n_points")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--no-flip", action="store_true", help="skip the face-down mirror flip")

    p = sub.add_parser("synth", help="render a synthetic scene from a JSON spec")
    p.add_argument("--spec", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--truth", type=Path)

    p = sub.add_parser("calibrate", help="build slider channels from two extreme poses")
    p.add_argument("--bottom", type=Path, required=True)
    p.add_argument("--top", type=Path, required=True)
    p.add_argument("--ids", type=str, required=True, help="comma-separated marker ids")
    p.add_argument("--out", type=Path, default=Path("calibration.json"))

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--store", type=Path, default=Path("tangiviz-store"))
    p.add_argument("--calib", type=Path)
    p.add_argument("--ui-dir", type=Path, help="serve a static UI from this directory")

    return parser


def _cmd_gen_marker(args: argparse.Namespace) -> int:
    image = marker_codec.render_marker(args.marker_id, args.cell_px)
    write_png(args.out, image)
    print(f"wrote {args.out} ({image.shape[1]}x{image.shape[0]})")
    return 0


def _cmd_detect(args: argparse.Namespace) -> int:
    raw = read_png(args.input)
    frame = preprocess(raw, flip_h=args.flip_h, flip_v=args.flip_v)
    config = DetectConfig(decode_tolerance=args.tolerance)
    observations = detect_markers(frame, config)
    if args.as_json:
        for obs in observations:
            print(json.dumps(obs.to_json_dict()))
    else:
        for obs in observations:
            cx, cy = obs.center
            print(
                f"id={obs.marker_id} center=({cx:.1f},{cy:.1f}) "
                f"orientation={obs.orientation_deg:.1f} bit_errors={obs.bit_errors}"
            )
        if not observations:
            print("no markers detected")
    return 0


def _cmd_scan_template(args: argparse.Namespace) -> int:
    raw = read_png(args.input)
    frame = preprocess(raw)
    scan = template_scanner.scan_template(
        frame, args.kind, args.n_points, face_down_flip=not args.no_flip
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_png(args.out_dir / "rectified.png", scan.rectified)
    write_png(args.out_dir / "title.png", scan.title_image)
    for i, img in enumerate(scan.label_images):
        write_png(args.out_dir / f"label_{i}.png", img)
    for i, img in enumerate(scan.legend_images):
        write_png(args.out_dir / f"legend_{i}.png", img)
    crops = 1 + len(scan.label_images) + len(scan.legend_images)
    print(f"wrote rectified page and {crops} crops to {args.out_dir}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = synth.SceneSpec.from_json_dict(json.loads(args.spec.read_text()))
    frame, truth = synth.render_scene(spec, seed=args.seed)
    write_png(args.out, frame.pixels)
    if args.truth:
        args.truth.write_text(
            json.dumps([o.to_json_dict() for o in truth], indent=2)
        )
    print(f"wrote {args.out}" + (f" and {args.truth}" if args.truth else ""))
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    ids = [int(v) for v in args.ids.split(",") if v.strip()]
    bottom = preprocess(read_png(args.bottom))
    top = preprocess(read_png(args.top))
    calib = calibrate_two_pose(bottom, top, ids)
    calib.save(args.out)
    print(f"wrote {args.out} with {len(calib.channels)} channels")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    store = Path(os.environ.get("TANGIVIZ_STORE", str(args.store)))
    calib = CalibrationConfig.load(args.calib) if args.calib else None
    try:
        server = make_server(
            args.port, store, calib=calib, host=args.host, ui_dir=args.ui_dir
        )
    except OSError as exc:
        print(f"cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 1
    print(f"serving on http://{args.host}:{server.server_address[1]} (store: {store})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


_COMMANDS = {
    "gen-marker": _cmd_gen_marker,
    "detect": _cmd_detect,
    "scan-template": _cmd_scan_template,
    "synth": _cmd_synth,
    "calibrate": _cmd_calibrate,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING)
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (
        UnsupportedImage,
        ChartModelError,
        marker_codec.MarkerCodecError,
        template_scanner.NoPageFound,
        template_scanner.BadNPoints,
        synth.OverlapError,
        synth.OutOfBounds,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
