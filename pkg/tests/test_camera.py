import math

import numpy as np
import pytest

from raygen import Camera, camera_matrices, generate_ray
from raygen.camera import intrinsics, project, unproject
from raygen.errors import RenderError
from raygen.kernels import rand_f, rng_init


def test_fov90_512_gives_fy_256():
    cam = Camera(field_of_view_y=math.radians(90.0))
    k = intrinsics(cam, 512, 512)
    assert k[1, 1] == pytest.approx(256.0)
    assert k[0, 0] == pytest.approx(256.0)
    assert k[0, 2] == pytest.approx(256.0)
    assert k[1, 2] == pytest.approx(256.0)


def test_project_unproject_round_trip(rng):
    cam = Camera(field_of_view_y=math.radians(70.0), aspect=1.5)
    w, h = 640, 480
    worst = 0.0
    n = 0
    while n < 1000:
        p = np.array([rng.uniform(-3, 3), rng.uniform(-2, 2),
                      -rng.uniform(0.5, 50.0)])
        uv = project(cam, w, h, p)
        if not (0 <= uv[0] < w and 0 <= uv[1] < h):
            continue
        n += 1
        back = unproject(cam, w, h, uv, -p[2])
        worst = max(worst, float(np.max(np.abs(back - p))))
    assert worst <= 1e-4


def test_points_behind_camera_do_not_project():
    cam = Camera()
    with pytest.raises(RenderError):
        project(cam, 64, 64, (0.0, 0.0, 1.0))


def test_camera_matrix_agrees_with_projection():
    cam = Camera(field_of_view_y=math.radians(60.0), aspect=4 / 3)
    w, h = 400, 300
    k, proj = camera_matrices(cam, w, h)
    p = np.array([0.4, -0.3, -2.0, 1.0])
    clip = proj @ p
    ndc = clip[:3] / clip[3]
    u = (ndc[0] * 0.5 + 0.5) * w
    v = (0.5 - ndc[1] * 0.5) * h
    uv = project(cam, w, h, p[:3])
    assert np.allclose([u, v], uv, atol=1e-9)


def test_pinhole_center_ray_looks_down_minus_z():
    cam = Camera(field_of_view_y=math.radians(45.0))
    ray = generate_ray(cam, np.eye(4), 33, 33, (16, 16))
    assert np.allclose(ray.origin, 0.0)
    assert np.allclose(ray.direction, [0.0, 0.0, -1.0], atol=1e-12)


def test_raster_axes_orientation():
    cam = Camera(field_of_view_y=math.radians(45.0))
    right = generate_ray(cam, np.eye(4), 33, 33, (30, 16))
    up = generate_ray(cam, np.eye(4), 33, 33, (16, 2))
    assert right.direction[0] > 0.0   # larger u points toward +x
    assert up.direction[1] > 0.0      # smaller v (top of image) points toward +y


def test_thin_lens_converges_on_focal_plane():
    """Rays from one pixel through different lens points must meet at one
    point on the plane of focus."""
    cam = Camera(field_of_view_y=math.radians(50.0), aperture_radius=0.2,
                 focus_distance=4.0)
    st = np.zeros(1, dtype=np.uint64)
    rng_init(st, 11, 0, 0)
    hits = []
    for _ in range(64):
        lens = (rand_f(st), rand_f(st))
        ray = generate_ray(cam, np.eye(4), 65, 65, (40, 21),
                           jitter=(0.5, 0.5), lens=lens)
        t = (-cam.focus_distance - ray.origin[2]) / ray.direction[2]
        hits.append(ray.origin + t * ray.direction)
    hits = np.asarray(hits)
    spread = hits.max(axis=0) - hits.min(axis=0)
    assert np.all(spread <= 1e-5)
    assert np.std(np.asarray(hits)[:, 0]) <= 1e-6


def test_zero_aperture_ignores_lens_sample():
    cam = Camera(field_of_view_y=math.radians(50.0))
    a = generate_ray(cam, np.eye(4), 65, 65, (10, 50), lens=(0.1, 0.9))
    b = generate_ray(cam, np.eye(4), 65, 65, (10, 50), lens=(0.8, 0.2))
    assert np.array_equal(a.origin, b.origin)
    assert np.array_equal(a.direction, b.direction)


def test_camera_validation():
    with pytest.raises(RenderError):
        Camera(field_of_view_y=0.0)
    with pytest.raises(RenderError):
        Camera(aperture_radius=-0.1)
    with pytest.raises(RenderError):
        Camera(focus_distance=0.0)
