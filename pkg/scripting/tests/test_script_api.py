import numpy as np
import pytest

import rayscript as rs
from raygen.errors import NoActiveCameraError, RenderError, UnknownNameError
from raygen.imgio import read_png, srgb_to_linear


@pytest.fixture(autouse=True)
def scene_lifecycle():
    rs.initialize()
    yield
    rs.deinitialize()


def _build_sphere_scene():
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
    rs.set_environment(color=[1.0, 1.0, 1.0])


def test_minimal_script_writes_png(tmp_path):
    _build_sphere_scene()
    out = tmp_path / "image.png"
    rs.render_to_file(width=48, height=48, samples_per_pixel=4,
                      file_path=str(out))
    assert out.exists()
    img = read_png(out)
    assert img.shape[:2] == (48, 48)
    assert img.shape[2] >= 3


def test_setter_on_fetched_material_changes_pixels(tmp_path):
    _build_sphere_scene()
    rs.material.get("o_mat").set_base_color([1, 0, 0])
    out = tmp_path / "red.png"
    rs.render_to_file(width=33, height=33, samples_per_pixel=16,
                      file_path=str(out))
    center = srgb_to_linear(read_png(out)[16, 16] / 255.0)
    assert center[0] > 2.0 * center[1]
    assert center[0] > 2.0 * center[2]


def test_deinitialize_twice_is_noop():
    rs.deinitialize()
    rs.deinitialize()
    assert not rs.is_initialized()
    rs.initialize()  # restore for the fixture teardown


def test_create_after_deinitialize_raises():
    rs.deinitialize()
    with pytest.raises(rs.NotInitializedError):
        rs.transform.create("t")
    rs.initialize()


def test_initialize_resets_scene():
    rs.transform.create("t")
    rs.initialize()
    with pytest.raises(UnknownNameError):
        rs.transform.get("t")


def test_deleted_component_ref_raises_catchable_error():
    ref = rs.material.create("m", base_color=(0.5, 0.5, 0.5))
    ref.remove()
    with pytest.raises(RenderError):
        ref.set_base_color([1, 0, 0])
    with pytest.raises(RenderError):
        rs.material.get("m")


def test_deleted_entity_ref_raises():
    t = rs.transform.create("t")
    ent = rs.entity.create(name="e", transform=t)
    ent.remove()
    with pytest.raises(UnknownNameError):
        ent.get_transform()


def test_missing_camera_error_names_the_fix(tmp_path):
    rs.entity.create(name="e", transform=rs.transform.create("t"))
    with pytest.raises(rs.ScriptError, match="set_camera_entity"):
        rs.render_to_file(width=8, height=8, samples_per_pixel=1,
                          file_path=str(tmp_path / "x.png"))


def test_entity_component_getters():
    _build_sphere_scene()
    obj = rs.entity.get("obj")
    assert obj.get_mesh().name == "o_mesh"
    assert obj.get_material().name == "o_mat"
    with pytest.raises(rs.ScriptError, match="light"):
        obj.get_light()


def test_keyword_arguments_reach_core_constructors():
    t = rs.transform.create("t", translation=(1.0, 2.0, 3.0))
    assert np.allclose(t.translation, [1, 2, 3])
    c = rs.camera.create("c", aspect=2.0)
    assert c.aspect == 2.0
    m = rs.material.create("m", roughness=0.25)
    assert m.roughness == 0.25


def test_core_validation_surfaces_as_exceptions():
    with pytest.raises(RenderError):
        rs.camera.create("bad", field_of_view_y=0.0)
    rs.transform.create("dup")
    with pytest.raises(RenderError):
        rs.transform.create("dup")


def test_render_aovs_to_files(tmp_path):
    from raygen.imgio import read_pfm
    _build_sphere_scene()
    paths = {"depth": str(tmp_path / "d.pfm"), "seg": str(tmp_path / "s.pfm")}
    rs.render_aovs_to_files(24, 24, paths)
    depth = read_pfm(paths["depth"])
    seg = read_pfm(paths["seg"])
    assert depth.shape[:2] == (24, 24)
    assert (seg >= 0).any() and np.isfinite(depth).any()
