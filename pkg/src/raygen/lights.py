"""Mesh area lights and the dome environment, including the luminance CDF
tables used for importance sampling and the light half of next event
estimation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RenderError


class Light:
    """Uniform emitted-radiance area light; requires the entity to also carry
    a mesh. Color may be a constant RGB or a Texture sampled at the mesh uv."""

    def __init__(self, intensity=1.0, color=(1.0, 1.0, 1.0), two_sided=False,
                 color_texture=None):
        self.set_intensity(intensity)
        self.set_color(color)
        self.two_sided = bool(two_sided)
        self.color_texture = color_texture

    def set_intensity(self, value):
        value = float(value)
        if value < 0.0:
            raise RenderError("light intensity must be >= 0")
        self.intensity = value

    def set_color(self, c):
        self.color = np.clip(np.asarray(c, dtype=np.float64).reshape(3), 0.0, None)


@dataclass
class Environment:
    """Constant-color or equirectangular-texture dome.

    mode: "none", "constant" or "texture". rotation spins the dome about +z;
    hemisphere_only blacks out everything below the horizon."""

    mode: str = "none"
    color: np.ndarray = field(default_factory=lambda: np.zeros(3))
    texture: object = None
    rotation: float = 0.0
    hemisphere_only: bool = False

    def __post_init__(self):
        if self.mode not in ("none", "constant", "texture"):
            raise RenderError(f"unknown environment mode '{self.mode}'")
        self.color = np.asarray(self.color, dtype=np.float64).reshape(3)
        if self.mode == "texture" and self.texture is None:
            raise RenderError("texture environment requires a texture")


def build_env_tables(texture, hemisphere_only):
    """Luminance CDF tables over an equirectangular texture.

    Returns (marginal row CDF (h,), conditional column CDFs (h, w),
    total weight sum(luminance * sin(theta_row))). Rows fully below the
    horizon are zeroed when hemisphere_only so they are never sampled."""
    px = texture.pixels
    h, w = px.shape[0], px.shape[1]
    lum = (0.2126 * px[:, :, 0] + 0.7152 * px[:, :, 1]
           + 0.0722 * px[:, :, 2]).astype(np.float64)
    row_sin = np.sin(np.pi * (np.arange(h) + 0.5) / h)
    weights = lum * row_sin[:, None]
    if hemisphere_only:
        centers = (np.arange(h) + 0.5) / h
        weights[centers > 0.5] = 0.0
    total = float(weights.sum())
    if total <= 0.0:
        return np.ones(h), np.ones((h, w)), 0.0
    row_sums = weights.sum(axis=1)
    marg = np.cumsum(row_sums) / total
    marg[-1] = 1.0
    cond = np.empty((h, w))
    for y in range(h):
        if row_sums[y] <= 0.0:
            cond[y] = 1.0
        else:
            cond[y] = np.cumsum(weights[y]) / row_sums[y]
            cond[y, -1] = 1.0
    return marg, cond, total


def emitted_radiance(light, uv, facing):
    """intensity * color(uv); zero from the back unless two_sided.

    facing is the cosine (or just its sign) between the view direction
    toward the light and the light's front normal."""
    if facing <= 0.0 and not light.two_sided:
        return np.zeros(3)
    if light.color_texture is not None:
        from .materials import texture_lookup
        return light.intensity * texture_lookup(light.color_texture, uv)[:3]
    return light.intensity * light.color


def randomize_lights(registry, count_range, rng, intensity_range=(10.0, 50.0),
                     distance_range=(2.0, 6.0), size=0.5, prefix="_rand_light"):
    """Create count in [lo, hi] small quad lights behind the active camera.

    Colors and intensities are drawn uniformly from the given ranges; light
    positions p all satisfy dot(p - cam_pos, cam_forward) < 0. Existing
    entities created by a previous call (same prefix) are removed first.
    Returns the created entity names."""
    from . import geometry
    from .mathutils import Transform, look_at_rotation, quat_rotate

    cam = registry.active_camera_entity()
    if cam is None:
        raise RenderError("light randomization requires an active camera")
    cam_tf = registry.resolve(cam.transform_ref)
    cam_pos = cam_tf.translation
    cam_fwd = quat_rotate(cam_tf.rotation, np.array([0.0, 0.0, -1.0]))

    for name in [e for e in registry.entity_names() if e.startswith(prefix)]:
        registry.delete_entity(name, delete_components=True)

    lo, hi = int(count_range[0]), int(count_range[1])
    if lo < 0 or hi < lo:
        raise RenderError("light count range must satisfy 0 <= lo <= hi")
    count = int(rng.integers(lo, hi + 1))
    names = []
    for k in range(count):
        # uniform direction in the half-space behind the camera
        while True:
            d = rng.uniform(-1.0, 1.0, 3)
            n = np.linalg.norm(d)
            if 1e-6 < n <= 1.0:
                d = d / n
                if np.dot(d, cam_fwd) < -1e-3:
                    break
        dist = rng.uniform(distance_range[0], distance_range[1])
        pos = cam_pos + d * dist
        tf = Transform(translation=pos)
        # aim the quad's +z face back at the camera
        try:
            tf.set_rotation(look_at_rotation(pos, cam_pos, np.array([0.0, 0.0, 1.0])))
        except Exception:
            pass
        color = rng.uniform(0.2, 1.0, 3)
        inten = rng.uniform(intensity_range[0], intensity_range[1])
        name = f"{prefix}_{k}"
        t_h = registry.add_component("transform", f"{name}_tfm", tf)
        m_h = registry.add_component("mesh", f"{name}_mesh",
                                     geometry.create_plane((size, size)))
        l_h = registry.add_component("light", f"{name}_light",
                                     Light(intensity=inten, color=color, two_sided=True))
        registry.create_entity(name, transform=t_h, mesh=m_h, light=l_h)
        names.append(name)
    return names
