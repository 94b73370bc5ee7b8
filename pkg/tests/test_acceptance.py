"""End-to-end checks for the guarantees the renderer advertises: furnace
energy conservation, exact acceleration-structure agreement, analytic light
transport references, annotation accuracy, and byte-level reproducibility.
"""

import hashlib
import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import stats

from conftest import add_camera, furnace_registry, quad_light_registry
from raygen import (
    Camera,
    Ray,
    RenderConfig,
    Transform,
    VolumeGrid,
    generate_ray,
    render,
    render_aovs,
)
from raygen.camera import intrinsics, project, unproject
from raygen.imgio import linear_to_srgb_u8, read_pfm, write_pfm, _rgbe_to_float
from raygen.kernels import rand_f, rng_init
from raygen.randomize import LightSpec, PoseJitter, RandomizationDirectives, apply_directives
from raygen.scenedata import CompiledScene
from raygen.scenedoc import load_scene, parse_scene, serialize_scene

from test_bvh import SCENES
from test_lights import _quad_irradiance
from test_materials import _consistency_worst, _furnace_energy
from test_randomize import _target_registry
from test_volume import _hg_mean_cos, _mean_transmittance, _uniform_grid

SCENES_DIR = os.path.join(os.path.dirname(__file__), "..", "scenes")


# --- 1. white furnace ------------------------------------------------------

def test_furnace_sphere_unity_at_1024spp():
    """Every sphere pixel of a 128x128, 1024 spp furnace render sits within
    2 percent of unit radiance, and the render finishes inside two minutes."""
    # finer tessellation keeps the interpolated shading normal close to the
    # geometric one at the silhouette, where the mismatch otherwise loses a
    # couple percent of sampled energy
    reg = furnace_registry(segments=128)
    snap = reg.take_snapshot()
    warm_cfg = RenderConfig(width=8, height=8, samples_per_pixel=1, seed=0,
                            clamp_radiance=None)
    render(snap, warm_cfg)  # compile outside the timed window

    config = RenderConfig(width=128, height=128, samples_per_pixel=1024,
                          seed=11, clamp_radiance=None)
    start = time.perf_counter()
    img = render(snap, config).resolve()
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0

    seg = render_aovs(snap, config, layers=("seg",)).seg
    on = seg >= 0
    assert on.sum() > 1000
    assert np.all(np.abs(img[on] - 1.0) <= 0.02)


# --- 2. acceleration structure ---------------------------------------------

def test_bvh_exactness_five_scenes_ten_thousand_rays():
    for build in SCENES:
        rng = np.random.default_rng(hash(build.__name__) % (2 ** 31))
        reg = build(rng)
        add_camera(reg, (0, -8, 0), (0, 0, 0))
        compiled = CompiledScene(reg.take_snapshot(), 8, 8)
        origins = rng.uniform(-6.0, 6.0, (10_000, 3))
        dirs = rng.normal(size=(10_000, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        for o, d in zip(origins, dirs):
            ray = Ray(origin=o, direction=d)
            fast = compiled.intersect(ray)
            slow = compiled.brute_force_intersect(ray)
            assert (fast is None) == (slow is None), build.__name__
            if fast is None:
                continue
            assert fast.instance == slow.instance, build.__name__
            assert fast.triangle == slow.triangle, build.__name__
            assert abs(fast.t - slow.t) <= 1e-6 * slow.t, build.__name__


# --- 3. material model -----------------------------------------------------

def test_bsdf_energy_and_consistency_grid():
    grid = (0.0, 0.5, 1.0)
    for rough in grid:
        for metal in grid:
            for trans in grid:
                energy = _furnace_energy(rough, metal, trans, 1.45,
                                         math.cos(math.radians(40.0)),
                                         1_000_000, 42)
                assert energy <= 1.015, (rough, metal, trans)
    assert _consistency_worst(10_000, 7) <= 1e-5


# --- 4. direct lighting ----------------------------------------------------

def test_quad_light_matches_analytic_irradiance():
    half_x, half_y, height = 0.5, 0.4, 1.0
    intensity, albedo = 2.0, 0.8
    reg = quad_light_registry(half_x, half_y, height,
                              intensity=intensity, floor_albedo=albedo)
    add_camera(reg, (0.0, -3.0, 1.5), (0.0, 0.0, 0.0), fov_deg=2.0)
    config = RenderConfig(width=9, height=9, samples_per_pixel=4096, seed=4,
                          clamp_radiance=None)
    img = render(reg.take_snapshot(), config).resolve()
    expected = albedo / math.pi * _quad_irradiance(half_x, half_y, height,
                                                   intensity)
    assert img[4, 4].mean() == pytest.approx(expected, rel=0.02)


# --- 5. participating media ------------------------------------------------

def test_volume_transmittance_and_phase():
    length = 0.8
    for optical_depth in (0.5, 2.0, 10.0):
        grid = _uniform_grid(1.0, sigma_t=optical_depth / length)
        mean = _mean_transmittance(grid._info(), grid.density, grid.sigma_t,
                                   grid.max_density, grid.min_density, length,
                                   100_000, int(optical_depth * 10))
        assert mean == pytest.approx(math.exp(-optical_depth), rel=0.01)
    for g in (-0.7, 0.0, 0.35, 0.9):
        assert _hg_mean_cos(g, 200_000, int((g + 1) * 1000)) == pytest.approx(
            g, abs=0.01)


# --- 6. annotations --------------------------------------------------------

def _sphere_cam_registry():
    from conftest import sphere_depth_registry
    return sphere_depth_registry()


def test_annotation_layers_meet_tolerances(monkeypatch):
    res = 65  # odd: keeps the central ray on the optical axis
    reg = _sphere_cam_registry()
    reg.take_snapshot()
    snap = reg.take_snapshot()
    config = RenderConfig(width=res, height=res, samples_per_pixel=1, seed=0)
    aovs = render_aovs(snap, config)

    assert aovs.depth[res // 2, res // 2] == pytest.approx(2.0, abs=1e-4)
    on = aovs.seg >= 0
    assert np.all(aovs.flow[on] == 0.0)  # static scene: exact zero

    again = render_aovs(snap, config)
    monkeypatch.setenv("RAYGEN_WORKERS", "1")
    single = render_aovs(snap, config)
    for name in ("depth", "normal", "seg", "uv", "flow", "albedo", "position"):
        assert np.array_equal(getattr(aovs, name), getattr(again, name),
                              equal_nan=True), name
        assert np.array_equal(getattr(aovs, name), getattr(single, name),
                              equal_nan=True), name


def test_translated_quad_flow_within_half_pixel():
    from raygen import PrincipledMaterial, Registry, create_plane
    from raygen.mathutils import quat_from_axis_angle
    reg = Registry()
    m = reg.add_component("mesh", "quad", create_plane((4.0, 4.0)))
    a = reg.add_component("material", "mat", PrincipledMaterial())
    tf = Transform(rotation=quat_from_axis_angle([1.0, 0.0, 0.0], math.pi / 2))
    t = reg.add_component("transform", "t_quad", tf)
    reg.create_entity("quad", transform=t, mesh=m, material=a)
    add_camera(reg, (0.0, -5.0, 0.0), (0.0, 0.0, 0.0), fov_deg=60.0)
    reg.take_snapshot()
    h = 101
    fy = (h / 2.0) / math.tan(math.radians(30.0))
    tf.set_translation((10.0 * 5.0 / fy, 0.0, 0.0))
    aovs = render_aovs(reg.take_snapshot(),
                       RenderConfig(width=h, height=h, samples_per_pixel=1))
    on = aovs.seg >= 0
    assert on.sum() > 1000
    assert np.all(np.abs(aovs.flow[on][:, 0] - 10.0) <= 0.51)
    assert np.all(np.abs(aovs.flow[on][:, 1]) <= 0.51)


# --- 7. camera model -------------------------------------------------------

def test_camera_intrinsics_and_round_trip():
    cam = Camera(field_of_view_y=math.radians(90.0))
    k = intrinsics(cam, 512, 512)
    assert k[1, 1] == pytest.approx(256.0)

    cam = Camera(field_of_view_y=math.radians(70.0), aspect=1.5)
    rng = np.random.default_rng(99)
    w, h = 640, 480
    n = 0
    while n < 1000:
        p = np.array([rng.uniform(-3, 3), rng.uniform(-2, 2),
                      -rng.uniform(0.5, 50.0)])
        uv = project(cam, w, h, p)
        if not (0 <= uv[0] < w and 0 <= uv[1] < h):
            continue
        n += 1
        assert np.max(np.abs(unproject(cam, w, h, uv, -p[2]) - p)) <= 1e-4


def test_thin_lens_focus():
    cam = Camera(field_of_view_y=math.radians(50.0), aperture_radius=0.2,
                 focus_distance=4.0)
    st = np.zeros(1, dtype=np.uint64)
    rng_init(st, 11, 0, 0)
    hits = []
    for _ in range(64):
        lens = (rand_f(st), rand_f(st))
        ray = generate_ray(cam, np.eye(4), 65, 65, (40, 21), lens=lens)
        t = (-cam.focus_distance - ray.origin[2]) / ray.direction[2]
        hits.append(ray.origin + t * ray.direction)
    hits = np.asarray(hits)
    assert np.all(hits.max(axis=0) - hits.min(axis=0) <= 1e-5)


# --- 8. command line reproducibility ---------------------------------------

def _run_cli(scene, out, workers=None):
    env = dict(os.environ)
    if workers is not None:
        env["RAYGEN_WORKERS"] = str(workers)
    res = subprocess.run(
        [sys.executable, "-m", "raygen.cli", "--scene", scene,
         "--out", str(out), "--aov", "depth,seg", "--boxes"],
        capture_output=True, text=True, env=env)
    assert res.returncode == 0, res.stderr
    return {name: hashlib.sha256(
        (out / name).read_bytes()).hexdigest()
        for name in sorted(os.listdir(out))}


@pytest.mark.parametrize("scene_name", ["basic.json", "randomized.json"])
def test_cli_outputs_byte_identical(scene_name, tmp_path):
    scene = os.path.join(SCENES_DIR, scene_name)
    runs = [_run_cli(scene, tmp_path / "a"),
            _run_cli(scene, tmp_path / "b"),
            _run_cli(scene, tmp_path / "c", workers=1)]
    assert runs[0] == runs[1] == runs[2]
    assert any(n.endswith(".png") for n in runs[0])


# --- 9. image and scene formats --------------------------------------------

def test_format_reference_values(tmp_path):
    assert linear_to_srgb_u8(np.array([0.5]))[0] == 188

    rgbe = np.array([[[128, 128, 128, 136]]], dtype=np.uint8)
    assert np.allclose(_rgbe_to_float(rgbe), 1.0)

    img = np.random.default_rng(3).random((7, 5, 3)).astype(
        np.float32).astype(np.float64)
    path = tmp_path / "x.pfm"
    write_pfm(img, path)
    assert np.array_equal(read_pfm(path).astype(np.float32),
                          img.astype(np.float32))


def test_scene_serialization_fixpoint_all_shipped_scenes():
    import glob
    paths = sorted(glob.glob(os.path.join(SCENES_DIR, "*.json")))
    assert paths
    for path in paths:
        sd = load_scene(path)
        once = serialize_scene(sd.registry, sd.render_config, sd.directives)
        sd2 = parse_scene(once, base_dir=sd.base_dir)
        twice = serialize_scene(sd2.registry, sd2.render_config, sd2.directives)
        assert once == twice, path


# --- 10. domain randomization ----------------------------------------------

def test_randomization_distribution_and_reproducibility():
    reg = _target_registry()
    aabb = np.array([[-0.8, -0.6, 0.1], [0.8, 0.6, 1.2]])
    d = RandomizationDirectives(seed=123)
    d.pose_jitter = [PoseJitter(entities=["target"], aabb=aabb)]
    d.lights = LightSpec(count=(2, 6))

    tf = reg.resolve(reg.get_entity("target").transform_ref)
    counts = np.zeros(5, dtype=int)
    translations = []
    for frame in range(1000):
        apply_directives(reg, d, frame)
        assert np.all(tf.translation >= aabb[0])
        assert np.all(tf.translation <= aabb[1])
        translations.append(tf.translation.copy())
        n = sum(1 for e in reg.entity_names() if e.startswith("_rand_light"))
        counts[n - 2] += 1
    _, p = stats.chisquare(counts)
    assert p > 0.01

    # replaying any frame with the same seed reproduces it exactly
    apply_directives(reg, d, 500)
    assert np.array_equal(tf.translation, translations[500])
