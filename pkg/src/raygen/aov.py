"""Annotation layers: depth, normals, segmentation ids, texture coordinates,
optical flow, albedo, world position, and 2D/3D bounding-box extraction.

These layers come from a single deterministic center-of-pixel pinhole pass
at shutter close, so they carry no Monte Carlo noise and are bitwise
reproducible regardless of seed or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import camera as cam_mod
from .kernels import FLOW_INVALID
from .kernels_render import aov_kernel
from .mathutils import affine_inverse
from .scenedata import CompiledScene

LAYER_NAMES = ("depth", "normal", "seg", "uv", "flow", "albedo", "position")


@dataclass
class AOVSet:
    depth: np.ndarray = None       # (h, w) float, inf on miss
    normal: np.ndarray = None      # (h, w, 3) world-space unit vectors
    seg: np.ndarray = None         # (h, w) entity id, -1 background
    uv: np.ndarray = None          # (h, w, 2)
    flow: np.ndarray = None        # (h, w, 2) pixels, current minus previous
    albedo: np.ndarray = None      # (h, w, 3) resolved base color
    position: np.ndarray = None    # (h, w, 3) world hit position
    layers: tuple = ()

    def as_dict(self):
        return {name: getattr(self, name) for name in self.layers}


def render_aovs(snapshot, config, layers=LAYER_NAMES, compiled=None):
    """Fill the requested annotation layers for one snapshot."""
    for name in layers:
        if name not in LAYER_NAMES:
            raise ValueError(f"unknown annotation layer '{name}'")
    if compiled is None:
        compiled = CompiledScene(snapshot, config.width, config.height)
    w, h = config.width, config.height
    depth = np.full((h, w), np.inf)
    normal = np.zeros((h, w, 3))
    seg = np.full((h, w), -1, np.int64)
    uv = np.zeros((h, w, 2))
    flow = np.zeros((h, w, 2))
    albedo = np.zeros((h, w, 3))
    position = np.zeros((h, w, 3))

    cam = snapshot.camera.camera
    k = cam_mod.intrinsics(cam, w, h)
    intr = np.array([k[0, 0], k[1, 1], k[0, 2], k[1, 2]])
    w2c0 = affine_inverse(compiled.arrays[39])
    aov_kernel(compiled.arrays, w, h, w2c0, intr,
               depth, normal, seg, uv, flow, albedo, position)

    out = AOVSet(layers=tuple(layers))
    full = {"depth": depth, "normal": normal, "seg": seg, "uv": uv,
            "flow": flow, "albedo": albedo, "position": position}
    for name in layers:
        setattr(out, name, full[name])
    return out


@dataclass
class EntityBoxes:
    name: str
    entity_id: int
    visible_pixels: int
    box2d: tuple | None          # (x0, y0, x1, y1) inclusive pixel bounds
    box3d_world: np.ndarray      # (8, 3) transformed mesh AABB corners
    box3d_image: np.ndarray      # (8, 2) raster projections (nan if behind)


@dataclass
class BoundingBoxes:
    entities: list = field(default_factory=list)
    intrinsics: np.ndarray = None
    world_from_camera: np.ndarray = None


def extract_boxes(aovs, snapshot, compiled):
    """2D boxes from the segmentation footprint, 3D boxes from the mesh AABB
    corners under the shutter-close transform."""
    if aovs.seg is None:
        raise ValueError("box extraction needs the seg layer")
    h, w = aovs.seg.shape
    cam = snapshot.camera.camera
    k = cam_mod.intrinsics(cam, w, h)
    c2w = compiled.arrays[40]
    w2c = affine_inverse(c2w)

    boxes = BoundingBoxes(intrinsics=k, world_from_camera=np.asarray(c2w))
    ids, counts = np.unique(aovs.seg, return_counts=True)
    coverage = {int(i): int(c) for i, c in zip(ids, counts) if i >= 0}

    names = {inst.entity_id: inst.entity_name for inst in snapshot.instances}
    for eid, (lo, hi, inst_idx) in sorted(compiled.entity_boxes.items()):
        visible = coverage.get(eid, 0)
        box2d = None
        if visible > 0:
            ys, xs = np.nonzero(aovs.seg == eid)
            box2d = (int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))
        corners = np.array([[x, y, z] for x in (lo[0], hi[0])
                            for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
        m = compiled.arrays[9][inst_idx]
        world = corners @ m[:3, :3].T + m[:3, 3]
        image = np.full((8, 2), np.nan)
        for i, p in enumerate(world):
            pc = w2c[:3, :3] @ p + w2c[:3, 3]
            if pc[2] < -1e-12:
                image[i, 0] = k[0, 2] + k[0, 0] * (pc[0] / -pc[2])
                image[i, 1] = k[1, 2] - k[1, 1] * (pc[1] / -pc[2])
        boxes.entities.append(EntityBoxes(
            name=names.get(eid, ""), entity_id=eid, visible_pixels=visible,
            box2d=box2d, box3d_world=world, box3d_image=image))
    return boxes


def albedo_at(compiled, hit):
    """Resolved base color at a hit; black for background or material-less
    surfaces."""
    from .kernels import resolve_material
    if hit is None:
        return np.zeros(3)
    mat = int(compiled.arrays[5][hit.instance])
    if mat < 0:
        return np.zeros(3)
    par = np.empty(7)
    resolve_material(compiled.arrays, mat, hit.uv[0], hit.uv[1], par)
    return par[:3].copy()
