"""Perspective camera: thin-lens ray generation and intrinsic/projection
matrix export.

The camera looks down -z in its local frame with +y up; image rows run
top to bottom, so raster v grows downward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RenderError
from .kernels_render import gen_camera_ray
from .mathutils import Ray


@dataclass
class Camera:
    field_of_view_y: float = math.radians(45.0)
    aspect: float = 1.0
    aperture_radius: float = 0.0
    focus_distance: float = 1.0
    near: float = 0.01
    far: float = 1000.0

    def __post_init__(self):
        if not 0.0 < self.field_of_view_y < math.pi:
            raise RenderError("field_of_view_y must be in (0, pi)")
        if self.focus_distance <= 0.0:
            raise RenderError("focus_distance must be > 0")
        if self.aperture_radius < 0.0:
            raise RenderError("aperture_radius must be >= 0")
        if not 0.0 < self.near < self.far:
            raise RenderError("need 0 < near < far")

    def set_fov(self, fov_y):
        if not 0.0 < fov_y < math.pi:
            raise RenderError("field_of_view_y must be in (0, pi)")
        self.field_of_view_y = float(fov_y)

    def set_focus_distance(self, d):
        if d <= 0.0:
            raise RenderError("focus_distance must be > 0")
        self.focus_distance = float(d)

    def set_aperture(self, r):
        if r < 0.0:
            raise RenderError("aperture_radius must be >= 0")
        self.aperture_radius = float(r)

    def params(self):
        return np.array([self.field_of_view_y, self.aspect,
                         self.aperture_radius, self.focus_distance])


def generate_ray(camera, cam_to_world, width, height, pixel, jitter=(0.5, 0.5),
                 lens=(0.0, 0.0), time=1.0):
    """Ray through pixel (x, y) + jitter; thin-lens offset when the aperture
    is open. cam_to_world is the camera entity's affine matrix."""
    out = np.empty(6)
    gen_camera_ray(camera.params(), np.ascontiguousarray(cam_to_world, dtype=np.float64),
                   int(width), int(height),
                   float(pixel[0]) + float(jitter[0]), float(pixel[1]) + float(jitter[1]),
                   float(lens[0]), float(lens[1]), out)
    return Ray(origin=out[:3].copy(), direction=out[3:].copy(), time=time)


def intrinsics(camera, width, height):
    """3x3 pixel intrinsic matrix; fx = fy (square pixels), principal point
    at the image center."""
    fy = (height / 2.0) / math.tan(camera.field_of_view_y / 2.0)
    fx = fy
    return np.array([[fx, 0.0, width / 2.0],
                     [0.0, fy, height / 2.0],
                     [0.0, 0.0, 1.0]])


def camera_matrices(camera, width, height):
    """(intrinsic 3x3, perspective projection 4x4 using near/far)."""
    k = intrinsics(camera, width, height)
    n, f = camera.near, camera.far
    t = math.tan(camera.field_of_view_y / 2.0)
    proj = np.zeros((4, 4))
    proj[0, 0] = 1.0 / (t * camera.aspect)
    proj[1, 1] = 1.0 / t
    proj[2, 2] = -(f + n) / (f - n)
    proj[2, 3] = -2.0 * f * n / (f - n)
    proj[3, 2] = -1.0
    return k, proj


def project(camera, width, height, point_cam):
    """Camera-space point (z < 0 in front) to raster (u, v) pixels."""
    p = np.asarray(point_cam, dtype=np.float64)
    if p[2] >= 0.0:
        raise RenderError("cannot project a point at or behind the camera plane")
    k = intrinsics(camera, width, height)
    u = k[0, 2] + k[0, 0] * (p[0] / -p[2])
    v = k[1, 2] - k[1, 1] * (p[1] / -p[2])
    return np.array([u, v])


def unproject(camera, width, height, uv, depth_z):
    """Raster (u, v) plus camera-space depth (positive distance along -z)
    back to the camera-space point."""
    k = intrinsics(camera, width, height)
    x = (uv[0] - k[0, 2]) / k[0, 0] * depth_z
    y = -(uv[1] - k[1, 2]) / k[1, 1] * depth_z
    return np.array([x, y, -depth_z])
