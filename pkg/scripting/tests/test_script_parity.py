"""The scripting layer must be a veneer: any scene it builds exports to a
document that the command line renderer turns into the identical image.
"""

import hashlib
import os
import subprocess
import sys

import pytest

import rayscript as rs


@pytest.fixture(autouse=True)
def scene_lifecycle():
    rs.initialize()
    yield
    rs.deinitialize()


def _sha(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _build_demo_scene():
    cam = rs.entity.create(
        name="cam",
        transform=rs.transform.create("c_tfm"),
        camera=rs.camera.create("c_cam"))
    cam.get_transform().look_at(eye=[3, 3, 3], at=[0, 0, 0], up=[0, 0, 1])
    rs.set_camera_entity(cam)
    rs.entity.create(
        name="obj",
        transform=rs.transform.create("o_tfm"),
        mesh=rs.mesh.create_sphere("o_mesh"),
        material=rs.material.create("o_mat"))
    rs.material.get("o_mat").set_base_color([1, 0, 0])
    rs.set_environment(color=[1.0, 1.0, 1.0])


def _run_cli(scene_path, out_dir):
    res = subprocess.run(
        [sys.executable, "-m", "raygen.cli", "--scene", str(scene_path),
         "--out", str(out_dir)],
        capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    return os.path.join(out_dir, "frame_00000.png")


def test_script_render_matches_cli_on_exported_scene(tmp_path):
    _build_demo_scene()
    img = tmp_path / "image.png"
    scene = tmp_path / "scene.json"
    rs.render_to_file(width=64, height=64, samples_per_pixel=16,
                      file_path=str(img), seed=5)
    rs.export_scene(str(scene), width=64, height=64, samples_per_pixel=16,
                    seed=5)
    cli_png = _run_cli(scene, tmp_path / "cli")
    assert _sha(img) == _sha(cli_png)


def test_mesh_from_data_matches_obj_load(tmp_path):
    """The same quad, passed as in-memory arrays and parsed from an OBJ
    file, must render to identical bytes."""
    positions = [[-1.0, -1.0, 0.0], [1.0, -1.0, 0.0],
                 [1.0, 1.0, 0.0], [-1.0, 1.0, 0.0]]
    normals = [[0.0, 0.0, 1.0]] * 4
    indices = [[0, 1, 2], [0, 2, 3]]

    obj_path = tmp_path / "quad.obj"
    lines = [f"v {p[0]!r} {p[1]!r} {p[2]!r}" for p in positions]
    lines += [f"vn {n[0]!r} {n[1]!r} {n[2]!r}" for n in normals]
    lines += [f"f {a + 1}//{a + 1} {b + 1}//{b + 1} {c + 1}//{c + 1}"
              for a, b, c in indices]
    obj_path.write_text("\n".join(lines) + "\n")

    outputs = []
    for tag in ("data", "file"):
        rs.initialize()
        cam = rs.entity.create(name="cam",
                               transform=rs.transform.create("c_tfm"),
                               camera=rs.camera.create("c_cam"))
        cam.get_transform().look_at(eye=[0, -3, 1], at=[0, 0, 0],
                                    up=[0, 0, 1])
        rs.set_camera_entity(cam)
        if tag == "data":
            m = rs.mesh.create_from_data("quad", positions, indices,
                                         normals=normals)
        else:
            m = rs.mesh.create_from_file("quad", str(obj_path))
        rs.entity.create(name="quad", transform=rs.transform.create("q_tfm"),
                         mesh=m, material=rs.material.create("q_mat"))
        rs.set_environment(color=[0.8, 0.9, 1.0])
        out = tmp_path / f"{tag}.png"
        rs.render_to_file(width=48, height=48, samples_per_pixel=8,
                          file_path=str(out), seed=2)
        outputs.append(_sha(out))
        rs.deinitialize()
    rs.initialize()  # keep the fixture teardown balanced
    assert outputs[0] == outputs[1]


def test_exported_scene_reimports_equivalently(tmp_path):
    from raygen.scenedoc import load_scene, serialize_scene
    _build_demo_scene()
    scene = tmp_path / "scene.json"
    rs.export_scene(str(scene), width=32, height=32, samples_per_pixel=2)
    sd = load_scene(str(scene))
    assert sorted(sd.registry.entity_names()) == ["cam", "obj"]
    text = scene.read_text()
    assert serialize_scene(sd.registry, sd.render_config) == text
