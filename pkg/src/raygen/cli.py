"""Command line front end: load a JSON scene, render a frame sequence, and
write beauty PNGs plus optional annotation layers and bounding-box JSON.

Exit codes: 0 on success, 1 for scene problems (parse errors, bad
references, invalid settings), 2 for I/O problems (unreadable scene file,
unwritable output directory).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import imgio, scenedoc
from .aov import LAYER_NAMES, extract_boxes, render_aovs
from .errors import RenderError
from .integrator import RenderConfig, render
from .randomize import apply_directives
from .scenedata import CompiledScene


def build_parser():
    parser = argparse.ArgumentParser(
        prog="raygen",
        description="Render a JSON scene to PNG images with optional "
                    "annotation layers and bounding-box metadata.")
    parser.add_argument("--scene", required=True, help="scene JSON file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--spp", type=int, default=None,
                        help="samples per pixel (overrides the scene file)")
    parser.add_argument("--width", type=int, default=None)
    parser.add_argument("--height", type=int, default=None)
    parser.add_argument("--aov", default="",
                        help="comma separated annotation layers to write as "
                             f"PFM ({','.join(LAYER_NAMES)} or 'all')")
    parser.add_argument("--frames", type=int, default=1,
                        help="number of frames to render")
    parser.add_argument("--seed", type=int, default=None,
                        help="base random seed (overrides the scene file)")
    parser.add_argument("--boxes", action="store_true",
                        help="write per-frame bounding-box JSON")
    parser.add_argument("--strict", action="store_true",
                        help="reject unknown keys in the scene file")
    return parser


def _parse_aov_list(text):
    names = [n.strip() for n in text.split(",") if n.strip()]
    if "all" in names:
        return list(LAYER_NAMES)
    for n in names:
        if n not in LAYER_NAMES:
            raise RenderError(
                f"unknown annotation layer '{n}' (choose from "
                f"{', '.join(LAYER_NAMES)})")
    return names


def _boxes_payload(boxes):
    def clean(arr):
        return [[None if not np.isfinite(v) else float(v) for v in row]
                for row in np.asarray(arr, dtype=np.float64)]

    return {
        "entities": [{
            "name": e.name,
            "id": e.entity_id,
            "visible_pixels": e.visible_pixels,
            "box2d": None if e.box2d is None else list(e.box2d),
            "box3d_world": clean(e.box3d_world),
            "box3d_image": clean(e.box3d_image),
        } for e in boxes.entities],
        "camera": {
            "intrinsics": clean(boxes.intrinsics),
            "world_from_camera": clean(boxes.world_from_camera),
        },
    }


def run(args):
    try:
        with open(args.scene, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read scene file: {exc}", file=sys.stderr)
        return 2

    try:
        doc = scenedoc.parse_scene(
            text, strict=args.strict,
            base_dir=os.path.dirname(os.path.abspath(args.scene)))
        layers = _parse_aov_list(args.aov)
        overrides = {}
        if args.spp is not None:
            overrides["samples_per_pixel"] = args.spp
        if args.width is not None:
            overrides["width"] = args.width
        if args.height is not None:
            overrides["height"] = args.height
        if args.seed is not None:
            overrides["seed"] = args.seed
        config = dataclasses.replace(doc.render_config, **overrides)
        if args.frames < 1:
            raise RenderError("--frames must be >= 1")
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    for msg in doc.warnings:
        print(f"warning: {msg}", file=sys.stderr)

    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return 2

    registry = doc.registry
    if doc.directives is not None and args.seed is not None:
        doc.directives.seed = args.seed

    for frame in range(args.frames):
        try:
            if doc.directives is not None:
                apply_directives(registry, doc.directives, frame)
            snapshot = registry.take_snapshot()
            compiled = CompiledScene(snapshot, config.width, config.height)
            frame_config = dataclasses.replace(config, seed=config.seed + frame)
            fb = render(snapshot, frame_config, compiled=compiled)
            rgb = fb.resolve()
            aovs = (render_aovs(snapshot, frame_config, layers, compiled=compiled)
                    if layers or args.boxes else None)
            if args.boxes:
                box_aovs = aovs
                if box_aovs.seg is None:
                    box_aovs = render_aovs(snapshot, frame_config, ("seg",),
                                           compiled=compiled)
                boxes = extract_boxes(box_aovs, snapshot, compiled)
        except RenderError as exc:
            print(f"error: frame {frame}: {exc}", file=sys.stderr)
            return 1

        try:
            imgio.write_png(rgb, os.path.join(args.out, f"frame_{frame:05d}.png"))
            if aovs is not None:
                for name in layers:
                    imgio.write_pfm(
                        np.asarray(getattr(aovs, name), dtype=np.float32),
                        os.path.join(args.out, f"frame_{frame:05d}_{name}.pfm"))
            if args.boxes:
                path = os.path.join(args.out, f"frame_{frame:05d}_boxes.json")
                with open(path, "w", encoding="utf-8") as fh:
                    json.dump(_boxes_payload(boxes), fh, indent=2, sort_keys=True)
                    fh.write("\n")
        except OSError as exc:
            print(f"error: cannot write outputs: {exc}", file=sys.stderr)
            return 2
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        code = run(args)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 1
    return code


if __name__ == "__main__":
    sys.exit(main())
