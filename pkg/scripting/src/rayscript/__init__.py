"""Procedural scene scripting on top of the raygen renderer.

The module keeps one implicit scene between initialize() and deinitialize()
and exposes flat namespaces for building it by name:

    import rayscript
    rayscript.initialize()
    cam = rayscript.entity.create(
        name="cam",
        transform=rayscript.transform.create("c_tfm"),
        camera=rayscript.camera.create("c_cam"))
    cam.get_transform().look_at(eye=[3, 3, 3], at=[0, 0, 0], up=[0, 0, 1])
    rayscript.set_camera_entity(cam)
    rayscript.render_to_file(width=512, height=512,
                             samples_per_pixel=1024, file_path="image.png")
    rayscript.deinitialize()

All validation lives in the core registry; this layer only translates names
to handles and surfaces core exceptions unchanged, so stale references fail
with catchable errors rather than undefined behavior.
"""

import os

from raygen import (
    Camera,
    Environment,
    Light,
    PrincipledMaterial,
    RenderConfig,
    Registry,
    Texture,
    Transform,
    VolumeGrid,
    create_box,
    create_plane,
    create_sphere,
    load_obj,
    mesh_from_arrays,
    read_volg,
    render,
    render_aovs,
)
from raygen.errors import NoActiveCameraError, RenderError
from raygen.imgio import write_hdr, write_pfm, write_png
from raygen.scenedoc import serialize_scene

__all__ = [
    "NotInitializedError", "ScriptError", "initialize", "deinitialize",
    "is_initialized", "entity", "transform", "camera", "mesh", "material",
    "light", "texture", "volume", "set_camera_entity", "set_environment",
    "render_to_file", "render_aovs_to_files", "export_scene",
]


class ScriptError(RenderError):
    """Raised for scripting-level misuse (lifecycle, missing camera, ...)."""


class NotInitializedError(ScriptError):
    """A scene call was made before initialize() or after deinitialize()."""


_registry = None


def initialize():
    """Start a fresh empty scene."""
    global _registry
    _registry = Registry()


def deinitialize():
    """Drop the scene and every component in it. Calling it again is a no-op."""
    global _registry
    _registry = None


def is_initialized():
    return _registry is not None


def _reg():
    if _registry is None:
        raise NotInitializedError(
            "no active scene: call rayscript.initialize() first")
    return _registry


class ComponentRef:
    """Named reference to one scene component.

    Attribute access resolves through the registry on every call, so using a
    reference after the component was deleted raises the registry's error
    instead of silently touching a stale object."""

    def __init__(self, kind, name):
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "name", name)

    def _handle(self):
        return _reg().get_component(self.kind, self.name)

    def _obj(self):
        return _reg().resolve(self._handle())

    def __getattr__(self, attr):
        return getattr(self._obj(), attr)

    def remove(self):
        reg = _reg()
        reg.delete_component(reg.get_component(self.kind, self.name))

    def __repr__(self):
        return f"ComponentRef({self.kind}={self.name!r})"


class _Namespace:
    """create/get front end for one component kind."""

    def __init__(self, kind, factory):
        self._kind = kind
        self._factory = factory

    def create(self, name, **kwargs):
        _reg().add_component(self._kind, name, self._factory(**kwargs))
        return ComponentRef(self._kind, name)

    def get(self, name):
        _reg().get_component(self._kind, name)  # existence check
        return ComponentRef(self._kind, name)


class _MeshNamespace(_Namespace):
    def __init__(self):
        super().__init__("mesh", None)

    def _add(self, name, mesh):
        _reg().add_component("mesh", name, mesh)
        return ComponentRef("mesh", name)

    def create_sphere(self, name, radius=1.0, segments=32):
        return self._add(name, create_sphere(radius, segments))

    def create_box(self, name, size=(1.0, 1.0, 1.0)):
        return self._add(name, create_box(tuple(size)))

    def create_plane(self, name, size=(1.0, 1.0)):
        return self._add(name, create_plane(tuple(size)))

    def create_from_file(self, name, file_path):
        return self._add(name, load_obj(file_path))

    def create_from_data(self, name, positions, indices, normals=None,
                         uvs=None):
        return self._add(name, mesh_from_arrays(positions, indices,
                                                normals=normals, uvs=uvs))


class _TextureNamespace(_Namespace):
    def __init__(self):
        super().__init__("texture", None)

    def create_from_file(self, name, file_path):
        _reg().add_component("texture", name, Texture.from_file(file_path))
        return ComponentRef("texture", name)

    def create_from_data(self, name, pixels):
        _reg().add_component("texture", name, Texture(pixels))
        return ComponentRef("texture", name)


class _VolumeNamespace(_Namespace):
    def __init__(self):
        super().__init__("volume", VolumeGrid)

    def create_from_file(self, name, file_path, **kwargs):
        _reg().add_component("volume", name, read_volg(file_path, **kwargs))
        return ComponentRef("volume", name)

    def create(self, name, dims, density, **kwargs):
        _reg().add_component("volume", name,
                             VolumeGrid(tuple(dims), density, **kwargs))
        return ComponentRef("volume", name)


class EntityRef:
    """Named reference to one entity; component getters hand back refs."""

    def __init__(self, name):
        self.name = name

    def _entity(self):
        return _reg().get_entity(self.name)

    def _component(self, kind):
        handle = getattr(self._entity(), f"{kind}_ref")
        if handle is None:
            raise ScriptError(f"entity '{self.name}' has no {kind}")
        return ComponentRef(kind, handle.name)

    def get_transform(self):
        return self._component("transform")

    def get_mesh(self):
        return self._component("mesh")

    def get_material(self):
        return self._component("material")

    def get_light(self):
        return self._component("light")

    def get_camera(self):
        return self._component("camera")

    def get_volume(self):
        return self._component("volume")

    def remove(self, remove_components=False):
        _reg().delete_entity(self.name, delete_components=remove_components)

    def __repr__(self):
        return f"EntityRef({self.name!r})"


class _EntityNamespace:
    def create(self, name, **components):
        refs = {}
        for kind, ref in components.items():
            if ref is None:
                continue
            refs[kind] = _reg().get_component(ref.kind, ref.name)
        _reg().create_entity(name, **refs)
        return EntityRef(name)

    def get(self, name):
        _reg().get_entity(name)
        return EntityRef(name)


transform = _Namespace("transform", Transform)
camera = _Namespace("camera", Camera)
material = _Namespace("material", PrincipledMaterial)
light = _Namespace("light", Light)
mesh = _MeshNamespace()
texture = _TextureNamespace()
volume = _VolumeNamespace()
entity = _EntityNamespace()


def set_camera_entity(ent):
    """Make the given entity (or entity name) the active camera."""
    name = ent.name if isinstance(ent, EntityRef) else str(ent)
    _reg().set_camera_entity(name)


def set_environment(mode="constant", color=(1.0, 1.0, 1.0), texture=None,
                    rotation=0.0, hemisphere_only=False):
    tex = texture._obj() if isinstance(texture, ComponentRef) else texture
    _reg().set_environment(Environment(mode=mode, color=color, texture=tex,
                                       rotation=rotation,
                                       hemisphere_only=hemisphere_only))


def _snapshot():
    try:
        return _reg().take_snapshot()
    except NoActiveCameraError:
        raise ScriptError(
            "no active camera: call set_camera_entity() before rendering"
        ) from None


def _write_image(buffer, file_path):
    ext = os.path.splitext(file_path)[1].lower()
    if ext == ".png":
        write_png(buffer, file_path)
    elif ext == ".pfm":
        write_pfm(buffer, file_path)
    elif ext == ".hdr":
        write_hdr(buffer, file_path)
    else:
        raise ScriptError(f"unsupported image extension '{ext}'")


def render_to_file(width, height, samples_per_pixel, file_path, seed=0):
    """Render the current scene and write it to file_path.

    Output bytes match the command line renderer run on the scene written by
    export_scene() with the same size, sample count, and seed."""
    snap = _snapshot()
    config = RenderConfig(width=width, height=height,
                          samples_per_pixel=samples_per_pixel, seed=seed)
    _write_image(render(snap, config).resolve(), file_path)


def render_aovs_to_files(width, height, file_paths, samples_per_pixel=1,
                         seed=0):
    """Write annotation layers; file_paths maps layer name to .pfm path."""
    snap = _snapshot()
    config = RenderConfig(width=width, height=height,
                          samples_per_pixel=samples_per_pixel, seed=seed)
    layers = tuple(file_paths)
    aovs = render_aovs(snap, config, layers=layers)
    for name, path in file_paths.items():
        write_pfm(getattr(aovs, name), path)


def export_scene(file_path, width=None, height=None, samples_per_pixel=None,
                 seed=0):
    """Write the scene as a JSON document the command line renderer accepts.

    Pass width/height/samples_per_pixel to embed render settings, so the
    exported file re-renders byte-identically to render_to_file."""
    config = None
    if width is not None:
        config = RenderConfig(width=width, height=height,
                              samples_per_pixel=samples_per_pixel, seed=seed)
    text = serialize_scene(_reg(), render_config=config)
    with open(file_path, "w", encoding="utf-8") as fh:
        fh.write(text)
