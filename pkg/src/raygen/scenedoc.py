"""JSON scene documents: parsing into a registry plus render settings, and
serializing a registry back out.

A document is one JSON object with optional top-level sections: "textures",
"meshes", "materials", "lights", "volumes", "transforms", "cameras",
"entities", "camera_entity", "environment", "randomization" and "render".
Cross references are by component name. File paths are resolved against the
document's directory.

Parsing is strict or lenient about unknown keys: strict raises, lenient
records a warning per key and continues. Errors name the JSON path of the
offending value. Components built from a document remember their source
stanza so serializing a parsed scene reproduces it; components created in
code are serialized from their current state (meshes as raw arrays).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .camera import Camera
from .errors import SceneFormatError
from .integrator import RenderConfig
from .lights import Environment, Light
from .materials import PrincipledMaterial, Texture
from .mathutils import Transform, look_at_rotation
from .randomize import (
    DistractorSpec,
    DomeSpec,
    LightSpec,
    MaterialJitter,
    PoseJitter,
    RandomizationDirectives,
)
from .registry import Registry
from .volume import VolumeGrid, read_volg

_SECTION_ORDER = ("textures", "meshes", "materials", "lights", "volumes",
                  "transforms", "cameras", "entities", "camera_entity",
                  "environment", "randomization", "render")

_ENTITY_KEYS = ("name", "transform", "mesh", "material", "light", "camera", "volume")


@dataclass
class SceneDocument:
    """Result of parsing: a populated registry plus render settings."""

    registry: Registry
    render_config: RenderConfig
    directives: RandomizationDirectives = None
    warnings: list = field(default_factory=list)
    base_dir: str = "."


class _Ctx:
    def __init__(self, strict, base_dir):
        self.strict = strict
        self.base_dir = base_dir
        self.warnings = []

    def unknown(self, path, keys):
        for k in keys:
            msg = f"unknown key '{k}' at {path}"
            if self.strict:
                raise SceneFormatError(msg)
            self.warnings.append(msg)

    def path(self, p):
        candidate = os.path.join(self.base_dir, p)
        return candidate if os.path.exists(candidate) else p


def _need(obj, key, path, types=None):
    if key not in obj:
        raise SceneFormatError(f"missing required key '{key}' at {path}")
    val = obj[key]
    if types is not None and not isinstance(val, types):
        raise SceneFormatError(
            f"{path}.{key}: expected {getattr(types, '__name__', types)}, "
            f"got {type(val).__name__}")
    return val


def _opt(obj, key, default=None):
    return obj[key] if key in obj else default


def _vec3(val, path):
    try:
        arr = np.asarray(val, dtype=np.float64).reshape(3)
    except (ValueError, TypeError):
        raise SceneFormatError(f"{path}: expected a 3-vector") from None
    return arr


def _range2(val, path):
    try:
        lo, hi = float(val[0]), float(val[1])
    except (ValueError, TypeError, IndexError):
        raise SceneFormatError(f"{path}: expected [lo, hi]") from None
    return (lo, hi)


def _check_keys(obj, allowed, path, ctx):
    if not isinstance(obj, dict):
        raise SceneFormatError(f"{path}: expected an object")
    extra = [k for k in obj if k not in allowed]
    if extra:
        ctx.unknown(path, extra)


def _section(doc, key, path="$"):
    val = doc.get(key, [])
    if not isinstance(val, list):
        raise SceneFormatError(f"{path}.{key}: expected an array")
    return val


# --- per-kind parsers -------------------------------------------------------

def _parse_texture(item, path, ctx):
    _check_keys(item, ("name", "file", "constant", "pixels"), path, ctx)
    if "file" in item:
        tex = Texture.from_file(ctx.path(_need(item, "file", path, str)))
    elif "constant" in item:
        c = _vec3(item["constant"], f"{path}.constant")
        tex = Texture(np.broadcast_to(np.asarray(c, np.float32), (1, 1, 3)).copy())
    elif "pixels" in item:
        try:
            px = np.asarray(item["pixels"], dtype=np.float32)
        except (ValueError, TypeError):
            raise SceneFormatError(f"{path}.pixels: expected nested arrays") from None
        tex = Texture(px)
    else:
        raise SceneFormatError(f"{path}: texture needs 'file', 'constant' or 'pixels'")
    return tex


def _parse_mesh(item, path, ctx):
    kind = _need(item, "type", path, str)
    if kind == "sphere":
        _check_keys(item, ("name", "type", "radius", "segments"), path, ctx)
        return geometry.create_sphere(float(_opt(item, "radius", 1.0)),
                                      int(_opt(item, "segments", 32)))
    if kind == "box":
        _check_keys(item, ("name", "type", "size"), path, ctx)
        return geometry.create_box(tuple(_vec3(_opt(item, "size", (1, 1, 1)),
                                               f"{path}.size")))
    if kind == "plane":
        _check_keys(item, ("name", "type", "size"), path, ctx)
        size = _opt(item, "size", (1.0, 1.0))
        try:
            sx, sy = float(size[0]), float(size[1])
        except (ValueError, TypeError, IndexError):
            raise SceneFormatError(f"{path}.size: expected [sx, sy]") from None
        return geometry.create_plane((sx, sy))
    if kind == "obj":
        _check_keys(item, ("name", "type", "file"), path, ctx)
        return geometry.load_obj(ctx.path(_need(item, "file", path, str)))
    if kind == "arrays":
        _check_keys(item, ("name", "type", "positions", "indices", "normals", "uvs"),
                    path, ctx)
        try:
            return geometry.mesh_from_arrays(
                _need(item, "positions", path), _need(item, "indices", path),
                normals=_opt(item, "normals"), uvs=_opt(item, "uvs"))
        except (ValueError, TypeError) as exc:
            raise SceneFormatError(f"{path}: bad mesh arrays: {exc}") from None
    raise SceneFormatError(f"{path}.type: unknown mesh type '{kind}'")


_MAT_TEX_SLOTS = ("base_color_texture", "roughness_texture", "metallic_texture",
                  "transmission_texture", "normal_map")


def _parse_material(item, path, ctx, textures):
    allowed = ("name", "base_color", "roughness", "metallic", "transmission",
               "ior") + _MAT_TEX_SLOTS
    _check_keys(item, allowed, path, ctx)
    kwargs = {}
    if "base_color" in item:
        kwargs["base_color"] = _vec3(item["base_color"], f"{path}.base_color")
    for key in ("roughness", "metallic", "transmission", "ior"):
        if key in item:
            try:
                kwargs[key] = float(item[key])
            except (ValueError, TypeError):
                raise SceneFormatError(f"{path}.{key}: expected a number") from None
    for slot in _MAT_TEX_SLOTS:
        if slot in item:
            ref = _need(item, slot, path, str)
            if ref not in textures:
                raise SceneFormatError(
                    f"{path}.{slot}: unknown texture '{ref}'")
            kwargs[slot] = textures[ref]
    return PrincipledMaterial(**kwargs)


def _parse_light(item, path, ctx, textures):
    _check_keys(item, ("name", "intensity", "color", "two_sided", "color_texture"),
                path, ctx)
    tex = None
    if "color_texture" in item:
        ref = _need(item, "color_texture", path, str)
        if ref not in textures:
            raise SceneFormatError(f"{path}.color_texture: unknown texture '{ref}'")
        tex = textures[ref]
    return Light(intensity=float(_opt(item, "intensity", 1.0)),
                 color=_vec3(_opt(item, "color", (1, 1, 1)), f"{path}.color"),
                 two_sided=bool(_opt(item, "two_sided", False)),
                 color_texture=tex)


def _parse_volume(item, path, ctx):
    _check_keys(item, ("name", "file", "dims", "density", "sigma_t", "albedo", "g"),
                path, ctx)
    sigma_t = float(_opt(item, "sigma_t", 1.0))
    albedo = _vec3(_opt(item, "albedo", (1, 1, 1)), f"{path}.albedo")
    g = float(_opt(item, "g", 0.0))
    if "file" in item:
        return read_volg(ctx.path(_need(item, "file", path, str)),
                         sigma_t=sigma_t, albedo=albedo, g=g)
    dims = _need(item, "dims", path)
    density = np.asarray(_need(item, "density", path), dtype=np.float64)
    try:
        return VolumeGrid(tuple(int(d) for d in dims), density.reshape(-1),
                          sigma_t=sigma_t, albedo=albedo, g=g)
    except (ValueError, TypeError) as exc:
        raise SceneFormatError(f"{path}: bad volume grid: {exc}") from None


def _parse_transform(item, path, ctx):
    _check_keys(item, ("name", "translation", "rotation", "scale", "look_at"),
                path, ctx)
    t = _vec3(_opt(item, "translation", (0, 0, 0)), f"{path}.translation")
    s = _opt(item, "scale", (1.0, 1.0, 1.0))
    if isinstance(s, (int, float)):
        s = (s, s, s)
    s = _vec3(s, f"{path}.scale")
    if "look_at" in item and "rotation" in item:
        raise SceneFormatError(f"{path}: 'rotation' and 'look_at' are exclusive")
    if "look_at" in item:
        la = item["look_at"]
        _check_keys(la, ("eye", "at", "up"), f"{path}.look_at", ctx)
        eye = _vec3(_opt(la, "eye", t), f"{path}.look_at.eye")
        q = look_at_rotation(eye, _vec3(_need(la, "at", f"{path}.look_at"),
                                        f"{path}.look_at.at"),
                             _vec3(_opt(la, "up", (0, 0, 1)), f"{path}.look_at.up"))
        if "eye" in la:
            t = eye
    elif "rotation" in item:
        try:
            q = np.asarray(item["rotation"], dtype=np.float64).reshape(4)
        except (ValueError, TypeError):
            raise SceneFormatError(
                f"{path}.rotation: expected a wxyz quaternion") from None
    else:
        q = np.array([1.0, 0.0, 0.0, 0.0])
    return Transform(translation=t, rotation=q, scale=s)


def _parse_camera(item, path, ctx):
    _check_keys(item, ("name", "fov_y", "fov_y_degrees", "aspect", "aperture",
                       "focus_distance", "near", "far"), path, ctx)
    kwargs = {}
    if "fov_y" in item:
        kwargs["field_of_view_y"] = float(item["fov_y"])
    elif "fov_y_degrees" in item:
        kwargs["field_of_view_y"] = math.radians(float(item["fov_y_degrees"]))
    for src, dst in (("aspect", "aspect"), ("aperture", "aperture_radius"),
                     ("focus_distance", "focus_distance"), ("near", "near"),
                     ("far", "far")):
        if src in item:
            kwargs[dst] = float(item[src])
    return Camera(**kwargs)


def _parse_environment(item, path, ctx, textures):
    _check_keys(item, ("mode", "color", "texture", "rotation", "hemisphere_only"),
                path, ctx)
    mode = _need(item, "mode", path, str)
    tex = None
    if "texture" in item:
        ref = _need(item, "texture", path, str)
        if ref not in textures:
            raise SceneFormatError(f"{path}.texture: unknown texture '{ref}'")
        tex = textures[ref]
    try:
        return Environment(mode=mode,
                           color=_vec3(_opt(item, "color", (0, 0, 0)), f"{path}.color"),
                           texture=tex,
                           rotation=float(_opt(item, "rotation", 0.0)),
                           hemisphere_only=bool(_opt(item, "hemisphere_only", False)))
    except Exception as exc:
        raise SceneFormatError(f"{path}: {exc}") from None


def _parse_randomization(item, path, ctx):
    _check_keys(item, ("seed", "pose_jitter", "materials", "distractors",
                       "lights", "dome"), path, ctx)
    directives = RandomizationDirectives(seed=int(_opt(item, "seed", 0)))
    for i, rule in enumerate(_opt(item, "pose_jitter", [])):
        p = f"{path}.pose_jitter[{i}]"
        _check_keys(rule, ("entities", "aabb", "euler_degrees"), p, ctx)
        jitter = PoseJitter(entities=list(_need(rule, "entities", p, list)))
        if "aabb" in rule:
            jitter.aabb = np.asarray(rule["aabb"], dtype=np.float64).reshape(2, 3)
        if "euler_degrees" in rule:
            jitter.euler_degrees = np.asarray(
                rule["euler_degrees"], dtype=np.float64).reshape(2, 3)
        directives.pose_jitter.append(jitter)
    for i, rule in enumerate(_opt(item, "materials", [])):
        p = f"{path}.materials[{i}]"
        _check_keys(rule, ("entities", "base_color", "roughness", "metallic",
                           "transmission"), p, ctx)
        mj = MaterialJitter(entities=list(_need(rule, "entities", p, list)))
        if "base_color" in rule:
            mj.base_color = np.asarray(rule["base_color"],
                                       dtype=np.float64).reshape(2, 3)
        for key in ("roughness", "metallic", "transmission"):
            if key in rule:
                setattr(mj, key, _range2(rule[key], f"{p}.{key}"))
        directives.materials.append(mj)
    if "distractors" in item:
        d = item["distractors"]
        p = f"{path}.distractors"
        _check_keys(d, ("count", "primitives", "scale", "aabb"), p, ctx)
        spec = DistractorSpec()
        if "count" in d:
            spec.count = tuple(int(v) for v in d["count"])
        if "primitives" in d:
            spec.primitives = tuple(d["primitives"])
        if "scale" in d:
            spec.scale = _range2(d["scale"], f"{p}.scale")
        if "aabb" in d:
            spec.aabb = np.asarray(d["aabb"], dtype=np.float64).reshape(2, 3)
        directives.distractors = spec
    if "lights" in item:
        d = item["lights"]
        p = f"{path}.lights"
        _check_keys(d, ("count", "intensity"), p, ctx)
        spec = LightSpec()
        if "count" in d:
            spec.count = tuple(int(v) for v in d["count"])
        if "intensity" in d:
            spec.intensity = _range2(d["intensity"], f"{p}.intensity")
        directives.lights = spec
    if "dome" in item:
        d = item["dome"]
        p = f"{path}.dome"
        _check_keys(d, ("files", "hemisphere_only"), p, ctx)
        directives.dome = DomeSpec(
            files=[ctx.path(f) for f in _need(d, "files", p, list)],
            hemisphere_only=bool(_opt(d, "hemisphere_only", True)))
    return directives


def _parse_render(item, path, ctx):
    _check_keys(item, ("width", "height", "spp", "max_depth", "seed", "clamp"),
                path, ctx)
    kwargs = {}
    for src, dst in (("width", "width"), ("height", "height"),
                     ("spp", "samples_per_pixel"), ("max_depth", "max_depth"),
                     ("seed", "seed")):
        if src in item:
            try:
                kwargs[dst] = int(item[src])
            except (ValueError, TypeError):
                raise SceneFormatError(f"{path}.{src}: expected an integer") from None
    if "clamp" in item:
        kwargs["clamp_radiance"] = (None if item["clamp"] is None
                                    else float(item["clamp"]))
    try:
        return RenderConfig(**kwargs)
    except Exception as exc:
        raise SceneFormatError(f"{path}: {exc}") from None


# --- top level --------------------------------------------------------------

_KIND_PARSERS = {
    "textures": ("texture", _parse_texture),
    "meshes": ("mesh", _parse_mesh),
    "volumes": ("volume", _parse_volume),
    "transforms": ("transform", _parse_transform),
    "cameras": ("camera", _parse_camera),
}


def parse_scene(text, strict=False, base_dir="."):
    """Build a registry and render settings from JSON text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SceneFormatError("$: scene document must be a JSON object")
    ctx = _Ctx(strict, base_dir)
    ctx.unknown("$", [k for k in doc if k not in _SECTION_ORDER])

    registry = Registry()
    textures = {}

    def add_all(section, kind, fn, **extra):
        for i, item in enumerate(_section(doc, section)):
            path = f"$.{section}[{i}]"
            if not isinstance(item, dict):
                raise SceneFormatError(f"{path}: expected an object")
            name = _need(item, "name", path, str)
            try:
                obj = fn(item, path, ctx, **extra)
            except SceneFormatError:
                raise
            except Exception as exc:
                raise SceneFormatError(f"{path}: {exc}") from None
            obj.doc_spec = {k: item[k] for k in item}
            if kind == "texture":
                textures[name] = obj
            registry.add_component(kind, name, obj)

    add_all("textures", "texture", lambda i, p, c: _parse_texture(i, p, c))
    add_all("meshes", "mesh", lambda i, p, c: _parse_mesh(i, p, c))
    add_all("materials", "material",
            lambda i, p, c: _parse_material(i, p, c, textures))
    add_all("lights", "light", lambda i, p, c: _parse_light(i, p, c, textures))
    add_all("volumes", "volume", lambda i, p, c: _parse_volume(i, p, c))
    add_all("transforms", "transform", lambda i, p, c: _parse_transform(i, p, c))
    add_all("cameras", "camera", lambda i, p, c: _parse_camera(i, p, c))

    for i, item in enumerate(_section(doc, "entities")):
        path = f"$.entities[{i}]"
        _check_keys(item, _ENTITY_KEYS, path, ctx)
        name = _need(item, "name", path, str)
        refs = {}
        for kind in ("transform", "mesh", "material", "light", "camera", "volume"):
            if kind in item:
                ref = _need(item, kind, path, str)
                try:
                    refs[kind] = registry.get_component(kind, ref)
                except Exception:
                    raise SceneFormatError(
                        f"{path}.{kind}: unknown {kind} '{ref}'") from None
        try:
            registry.create_entity(name, **refs)
        except Exception as exc:
            raise SceneFormatError(f"{path}: {exc}") from None

    if "environment" in doc:
        registry.set_environment(
            _parse_environment(doc["environment"], "$.environment", ctx, textures))
        registry.environment.doc_spec = dict(doc["environment"])

    if "camera_entity" in doc:
        ref = doc["camera_entity"]
        if not isinstance(ref, str):
            raise SceneFormatError("$.camera_entity: expected an entity name")
        try:
            registry.set_camera_entity(ref)
        except Exception:
            raise SceneFormatError(
                f"$.camera_entity: unknown or camera-less entity '{ref}'") from None

    directives = None
    if "randomization" in doc:
        directives = _parse_randomization(doc["randomization"],
                                          "$.randomization", ctx)
        directives.validate(registry)

    config = (_parse_render(doc["render"], "$.render", ctx)
              if "render" in doc else RenderConfig())

    return SceneDocument(registry=registry, render_config=config,
                         directives=directives, warnings=ctx.warnings,
                         base_dir=base_dir)


def load_scene(path, strict=False):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_scene(text, strict=strict, base_dir=os.path.dirname(
        os.path.abspath(path)))


# --- serialization ----------------------------------------------------------

def _listify(arr):
    return np.asarray(arr, dtype=np.float64).tolist()


def _spec_or(obj, fallback):
    spec = getattr(obj, "doc_spec", None)
    return dict(spec) if spec is not None else fallback()


def _serialize_texture(name, tex):
    def fallback():
        if tex.source != "<raw>":
            return {"file": tex.source}
        return {"pixels": tex.pixels.tolist()}
    item = _spec_or(tex, fallback)
    item["name"] = name
    return item


def _serialize_mesh(name, mesh):
    def fallback():
        item = {"type": "arrays",
                "positions": _listify(mesh.positions),
                "indices": np.asarray(mesh.indices).tolist(),
                "normals": _listify(mesh.normals)}
        if mesh.has_uvs:
            item["uvs"] = _listify(mesh.uvs)
        return item
    item = _spec_or(mesh, fallback)
    item["name"] = name
    return item


def _tex_name_map(registry):
    return {id(registry.resolve(registry.get_component("texture", n))): n
            for n in registry.component_names("texture")}


def _serialize_material(name, mat, tex_names):
    item = {"name": name, "base_color": _listify(mat.base_color),
            "roughness": mat.roughness, "metallic": mat.metallic,
            "transmission": mat.transmission, "ior": mat.ior}
    for slot in _MAT_TEX_SLOTS:
        tex = getattr(mat, slot)
        if tex is not None:
            item[slot] = tex_names[id(tex)]
    return item


def _serialize_light(name, light, tex_names):
    item = {"name": name, "intensity": light.intensity,
            "color": _listify(light.color), "two_sided": light.two_sided}
    if light.color_texture is not None:
        item["color_texture"] = tex_names[id(light.color_texture)]
    return item


def _serialize_volume(name, vol):
    def fallback():
        return {"dims": [int(d) for d in vol.dims],
                "density": vol.density.tolist()}
    item = _spec_or(vol, fallback)
    item["name"] = name
    item.setdefault("sigma_t", vol.sigma_t)
    item.setdefault("albedo", _listify(vol.albedo))
    item.setdefault("g", vol.g)
    return item


def _serialize_transform(name, tf):
    return {"name": name, "translation": _listify(tf.translation),
            "rotation": _listify(tf.rotation), "scale": _listify(tf.scale)}


def _serialize_camera(name, cam):
    # radians, not degrees: the degree conversion does not round-trip in
    # floating point, and serialized scenes must re-render byte-identically
    return {"name": name, "fov_y": cam.field_of_view_y,
            "aspect": cam.aspect, "aperture": cam.aperture_radius,
            "focus_distance": cam.focus_distance, "near": cam.near,
            "far": cam.far}


def _serialize_directives(d):
    item = {"seed": d.seed}
    if d.pose_jitter:
        item["pose_jitter"] = []
        for rule in d.pose_jitter:
            r = {"entities": list(rule.entities)}
            if rule.aabb is not None:
                r["aabb"] = _listify(rule.aabb)
            if rule.euler_degrees is not None:
                r["euler_degrees"] = _listify(rule.euler_degrees)
            item["pose_jitter"].append(r)
    if d.materials:
        item["materials"] = []
        for rule in d.materials:
            r = {"entities": list(rule.entities)}
            if rule.base_color is not None:
                r["base_color"] = _listify(rule.base_color)
            for key in ("roughness", "metallic", "transmission"):
                rng = getattr(rule, key)
                if rng is not None:
                    r[key] = [rng[0], rng[1]]
            item["materials"].append(r)
    if d.distractors is not None:
        item["distractors"] = {"count": [int(v) for v in d.distractors.count],
                               "primitives": list(d.distractors.primitives),
                               "scale": list(d.distractors.scale),
                               "aabb": _listify(d.distractors.aabb)}
    if d.lights is not None:
        item["lights"] = {"count": [int(v) for v in d.lights.count],
                          "intensity": list(d.lights.intensity)}
    if d.dome is not None:
        item["dome"] = {"files": list(d.dome.files),
                        "hemisphere_only": d.dome.hemisphere_only}
    return item


def serialize_scene(registry, render_config=None, directives=None):
    """Registry (plus optional render settings) back to canonical JSON text.

    Output is deterministic: sections in a fixed order, components sorted by
    name, keys sorted inside each object.
    """
    tex_names = _tex_name_map(registry)
    doc = {}

    sections = (
        ("textures", "texture", lambda n, o: _serialize_texture(n, o)),
        ("meshes", "mesh", lambda n, o: _serialize_mesh(n, o)),
        ("materials", "material",
         lambda n, o: _serialize_material(n, o, tex_names)),
        ("lights", "light", lambda n, o: _serialize_light(n, o, tex_names)),
        ("volumes", "volume", lambda n, o: _serialize_volume(n, o)),
        ("transforms", "transform", lambda n, o: _serialize_transform(n, o)),
        ("cameras", "camera", lambda n, o: _serialize_camera(n, o)),
    )
    for section, kind, fn in sections:
        names = sorted(registry.component_names(kind))
        if names:
            doc[section] = [fn(n, registry.resolve(registry.get_component(kind, n)))
                            for n in names]

    entities = []
    for name in sorted(registry.entity_names()):
        ent = registry.get_entity(name)
        item = {"name": name}
        for kind in ("transform", "mesh", "material", "light", "camera", "volume"):
            ref = getattr(ent, f"{kind}_ref")
            if ref is not None:
                item[kind] = ref.name
        entities.append(item)
    if entities:
        doc["entities"] = entities

    active = registry.active_camera_entity()
    if active is not None:
        doc["camera_entity"] = active.name

    env = registry.environment
    if env is not None and env.mode != "none":
        spec = getattr(env, "doc_spec", None)
        if spec is not None:
            doc["environment"] = dict(spec)
        else:
            item = {"mode": env.mode, "rotation": env.rotation,
                    "hemisphere_only": env.hemisphere_only}
            if env.mode == "constant":
                item["color"] = _listify(env.color)
            else:
                item["texture"] = tex_names[id(env.texture)]
            doc["environment"] = item

    if directives is not None:
        doc["randomization"] = _serialize_directives(directives)

    if render_config is not None:
        doc["render"] = {"width": render_config.width,
                         "height": render_config.height,
                         "spp": render_config.samples_per_pixel,
                         "max_depth": render_config.max_depth,
                         "seed": render_config.seed,
                         "clamp": render_config.clamp_radiance}

    ordered = {k: doc[k] for k in _SECTION_ORDER if k in doc}
    return json.dumps(ordered, indent=2, sort_keys=True) + "\n"
