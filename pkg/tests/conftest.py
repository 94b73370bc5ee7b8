import math

import numpy as np
import pytest

from raygen import (
    Camera,
    Environment,
    Light,
    PrincipledMaterial,
    Registry,
    RenderConfig,
    Transform,
    create_plane,
    create_sphere,
)
from raygen.mathutils import look_at_rotation


def add_camera(registry, eye, at, fov_deg=45.0, aspect=1.0, name="camera"):
    """Attach a look-at camera entity and make it active."""
    eye = np.asarray(eye, dtype=np.float64)
    view = np.asarray(at, dtype=np.float64) - eye
    view = view / np.linalg.norm(view)
    up = (0.0, 1.0, 0.0) if abs(view[2]) > 0.999 else (0.0, 0.0, 1.0)
    tf = Transform(translation=eye, rotation=look_at_rotation(eye, at, up))
    t_h = registry.add_component("transform", f"{name}_tfm", tf)
    c_h = registry.add_component("camera", f"{name}_cam",
                                 Camera(field_of_view_y=math.radians(fov_deg),
                                        aspect=aspect))
    registry.create_entity(name, transform=t_h, camera=c_h)
    registry.set_camera_entity(name)
    return registry.get_entity(name)


def furnace_registry(segments=64):
    """Albedo-1 diffuse sphere inside a constant radiance-1 dome."""
    reg = Registry()
    m_h = reg.add_component("mesh", "ball", create_sphere(1.0, segments))
    mat = PrincipledMaterial(base_color=(1.0, 1.0, 1.0), roughness=1.0)
    a_h = reg.add_component("material", "white", mat)
    t_h = reg.add_component("transform", "t_ball", Transform())
    reg.create_entity("ball", transform=t_h, mesh=m_h, material=a_h)
    add_camera(reg, (0.0, -3.0, 0.0), (0.0, 0.0, 0.0), fov_deg=60.0)
    reg.set_environment(Environment(mode="constant", color=(1.0, 1.0, 1.0)))
    return reg


def sphere_depth_registry(fov_deg=60.0, segments=64):
    """Unit sphere at the origin, camera 3 units up the z axis looking down.

    The center camera ray passes through the +z pole vertex of the
    tessellation, so its hit distance is exactly 2.0 regardless of how
    coarsely the sphere is triangulated.
    """
    reg = Registry()
    m_h = reg.add_component("mesh", "ball", create_sphere(1.0, segments))
    a_h = reg.add_component("material", "gray",
                            PrincipledMaterial(base_color=(0.5, 0.5, 0.5)))
    t_h = reg.add_component("transform", "t_ball", Transform())
    reg.create_entity("ball", transform=t_h, mesh=m_h, material=a_h)
    add_camera(reg, (0.0, 0.0, 3.0), (0.0, 0.0, 0.0), fov_deg=fov_deg)
    return reg


def quad_light_registry(light_half_x, light_half_y, height, intensity=1.0,
                        floor_albedo=0.8):
    """Lambertian floor under a centered rectangular light panel."""
    reg = Registry()
    f_h = reg.add_component("mesh", "floor", create_plane((20.0, 20.0)))
    fm_h = reg.add_component(
        "material", "floor_mat",
        PrincipledMaterial(base_color=(floor_albedo,) * 3, roughness=1.0))
    ft_h = reg.add_component("transform", "t_floor", Transform())
    reg.create_entity("floor", transform=ft_h, mesh=f_h, material=fm_h)

    p_h = reg.add_component("mesh", "panel",
                            create_plane((2.0 * light_half_x, 2.0 * light_half_y)))
    l_h = reg.add_component("light", "panel_light",
                            Light(intensity=intensity, two_sided=True))
    lt_h = reg.add_component("transform", "t_panel",
                             Transform(translation=(0.0, 0.0, height)))
    reg.create_entity("panel", transform=lt_h, mesh=p_h, light=l_h)
    return reg


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def small_config():
    return RenderConfig(width=32, height=32, samples_per_pixel=4, seed=1)
