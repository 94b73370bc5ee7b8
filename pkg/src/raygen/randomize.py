"""Scene randomization between frames: pose jitter inside declared boxes,
material parameter ranges, flying distractor primitives, light re-rolls,
and dome texture selection.

All mutations are a deterministic function of (seed, frame index).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import RenderError, UnknownNameError
from .lights import Environment, randomize_lights
from .materials import PrincipledMaterial, Texture
from .mathutils import Transform, quat_from_axis_angle, quat_mul

DISTRACTOR_PREFIX = "_distractor"

_dome_cache = {}


@dataclass
class PoseJitter:
    entities: list
    aabb: np.ndarray = None            # (2, 3) lo/hi translation box
    euler_degrees: np.ndarray = None   # (2, 3) lo/hi xyz rotation ranges


@dataclass
class MaterialJitter:
    entities: list
    base_color: np.ndarray = None      # (2, 3) lo/hi
    roughness: tuple = None
    metallic: tuple = None
    transmission: tuple = None


@dataclass
class DistractorSpec:
    count: tuple = (0, 0)
    primitives: tuple = ("sphere", "box")
    scale: tuple = (0.1, 0.5)
    aabb: np.ndarray = field(default_factory=lambda: np.array([[-1.0] * 3, [1.0] * 3]))


@dataclass
class LightSpec:
    count: tuple = (2, 6)
    intensity: tuple = (10.0, 50.0)


@dataclass
class DomeSpec:
    files: list = field(default_factory=list)
    hemisphere_only: bool = True


@dataclass
class RandomizationDirectives:
    seed: int = 0
    pose_jitter: list = field(default_factory=list)
    materials: list = field(default_factory=list)
    distractors: DistractorSpec = None
    lights: LightSpec = None
    dome: DomeSpec = None

    def validate(self, registry):
        for rule in self.pose_jitter + self.materials:
            for name in rule.entities:
                if name not in registry.entity_names():
                    raise UnknownNameError(f"randomization references unknown entity '{name}'")

    @staticmethod
    def _check_range(lo, hi, what):
        if np.any(np.asarray(lo) > np.asarray(hi)):
            raise RenderError(f"{what}: range lo must be <= hi")


def _euler_quat(rx, ry, rz):
    qx = quat_from_axis_angle([1.0, 0.0, 0.0], rx)
    qy = quat_from_axis_angle([0.0, 1.0, 0.0], ry)
    qz = quat_from_axis_angle([0.0, 0.0, 1.0], rz)
    return quat_mul(qz, quat_mul(qy, qx))


def _unit_mesh(kind, rng):
    if kind == "sphere":
        return geometry.create_sphere(0.5, 24)
    if kind == "box":
        return geometry.create_box((1.0, 1.0, 1.0))
    if kind == "plane":
        return geometry.create_plane((1.0, 1.0))
    raise RenderError(f"unknown distractor primitive '{kind}'")


def apply_directives(registry, directives, frame_index):
    """Mutate the registry for one frame; deterministic in (seed, frame)."""
    directives.validate(registry)
    rng = np.random.default_rng([int(directives.seed), int(frame_index)])

    for rule in directives.pose_jitter:
        for name in rule.entities:
            ent = registry.get_entity(name)
            if ent.transform_ref is None:
                raise RenderError(f"entity '{name}' has no transform to jitter")
            tf = registry.resolve(ent.transform_ref)
            if rule.aabb is not None:
                lo, hi = np.asarray(rule.aabb[0]), np.asarray(rule.aabb[1])
                RandomizationDirectives._check_range(lo, hi, f"pose jitter for '{name}'")
                tf.set_translation(rng.uniform(lo, hi))
            if rule.euler_degrees is not None:
                lo, hi = np.asarray(rule.euler_degrees[0]), np.asarray(rule.euler_degrees[1])
                RandomizationDirectives._check_range(lo, hi, f"rotation jitter for '{name}'")
                ang = np.radians(rng.uniform(lo, hi))
                tf.set_rotation(_euler_quat(ang[0], ang[1], ang[2]))
            registry.touch(ent.transform_ref)

    for rule in directives.materials:
        for name in rule.entities:
            ent = registry.get_entity(name)
            if ent.material_ref is None:
                raise RenderError(f"entity '{name}' has no material to randomize")
            mat = registry.resolve(ent.material_ref)
            if rule.base_color is not None:
                mat.set_base_color(rng.uniform(rule.base_color[0], rule.base_color[1]))
            if rule.roughness is not None:
                mat.set_roughness(rng.uniform(rule.roughness[0], rule.roughness[1]))
            if rule.metallic is not None:
                mat.set_metallic(rng.uniform(rule.metallic[0], rule.metallic[1]))
            if rule.transmission is not None:
                mat.set_transmission(rng.uniform(rule.transmission[0], rule.transmission[1]))
            registry.touch(ent.material_ref)

    if directives.distractors is not None:
        spec = directives.distractors
        for name in [e for e in registry.entity_names() if e.startswith(DISTRACTOR_PREFIX)]:
            registry.delete_entity(name, delete_components=True)
        lo, hi = int(spec.count[0]), int(spec.count[1])
        RandomizationDirectives._check_range(lo, hi, "distractor count")
        count = int(rng.integers(lo, hi + 1))
        box = np.asarray(spec.aabb, dtype=np.float64)
        for k in range(count):
            kind = spec.primitives[int(rng.integers(0, len(spec.primitives)))]
            mesh = _unit_mesh(kind, rng)
            tf = Transform(translation=rng.uniform(box[0], box[1]),
                           rotation=_euler_quat(*rng.uniform(0.0, 2.0 * np.pi, 3)),
                           scale=np.full(3, rng.uniform(spec.scale[0], spec.scale[1])))
            mat = PrincipledMaterial(base_color=rng.uniform(0.05, 0.95, 3),
                                     roughness=rng.uniform(0.05, 1.0),
                                     metallic=float(rng.integers(0, 2)))
            name = f"{DISTRACTOR_PREFIX}_{frame_index}_{k}"
            t_h = registry.add_component("transform", f"{name}_tfm", tf)
            m_h = registry.add_component("mesh", f"{name}_mesh", mesh)
            a_h = registry.add_component("material", f"{name}_mat", mat)
            registry.create_entity(name, transform=t_h, mesh=m_h, material=a_h)

    if directives.lights is not None:
        spec = directives.lights
        randomize_lights(registry, spec.count, rng, intensity_range=spec.intensity)

    if directives.dome is not None and directives.dome.files:
        files = directives.dome.files
        pick = files[int(rng.integers(0, len(files)))]
        tex = _dome_cache.get(pick)
        if tex is None:
            tex = Texture.from_file(pick)
            _dome_cache[pick] = tex
        registry.set_environment(Environment(
            mode="texture", texture=tex,
            rotation=float(rng.uniform(0.0, 2.0 * np.pi)),
            hemisphere_only=directives.dome.hemisphere_only))
    return registry
