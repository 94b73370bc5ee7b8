"""Entity-component scene model: named components, runtime mutation,
component reuse across entities, and immutable snapshots for rendering.

All mutation happens on one logical control thread; snapshots are plain
data and safe to hand to any number of render workers.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import (
    ComponentConflictError,
    ComponentInUseError,
    DanglingHandleError,
    DuplicateNameError,
    NoActiveCameraError,
    UnknownNameError,
)

COMPONENT_KINDS = ("transform", "mesh", "material", "light", "camera", "volume", "texture")
# kinds that can be bound to an entity slot (textures are referenced by
# materials/lights/environment instead)
ENTITY_SLOTS = ("transform", "mesh", "material", "light", "camera", "volume")


@dataclass(frozen=True)
class ComponentHandle:
    kind: str
    name: str
    uid: int


class _Record:
    __slots__ = ("kind", "name", "obj", "uid", "generation", "bound_count")

    def __init__(self, kind, name, obj, uid):
        self.kind = kind
        self.name = name
        self.obj = obj
        self.uid = uid
        self.generation = 0
        self.bound_count = 0


class Entity:
    def __init__(self, name, eid):
        self.name = name
        self.id = eid
        self.refs = {kind: None for kind in ENTITY_SLOTS}

    def __repr__(self):
        bound = [k for k, v in self.refs.items() if v is not None]
        return f"Entity(name={self.name!r}, id={self.id}, components={bound})"

    @property
    def transform_ref(self):
        return self.refs["transform"]

    @property
    def mesh_ref(self):
        return self.refs["mesh"]

    @property
    def material_ref(self):
        return self.refs["material"]

    @property
    def light_ref(self):
        return self.refs["light"]

    @property
    def camera_ref(self):
        return self.refs["camera"]

    @property
    def volume_ref(self):
        return self.refs["volume"]


def _trs_key(translation, rotation, scale):
    return np.concatenate([np.asarray(translation, dtype=np.float64),
                           np.asarray(rotation, dtype=np.float64),
                           np.asarray(scale, dtype=np.float64)])


@dataclass
class MaterialState:
    """Material parameters frozen at snapshot time (textures are immutable
    and shared by reference)."""

    scalars: np.ndarray  # [r, g, b, roughness, metallic, transmission, ior]
    base_color_texture: object = None
    roughness_texture: object = None
    metallic_texture: object = None
    transmission_texture: object = None
    normal_map: object = None


@dataclass
class LightState:
    intensity: float
    color: np.ndarray
    two_sided: bool
    color_texture: object = None


@dataclass
class InstanceRecord:
    entity_id: int
    entity_name: str
    mesh: object = None
    material: MaterialState = None
    light: LightState = None
    volume: object = None
    trs0: np.ndarray = None  # shutter-open key: [t(3), q(wxyz), s(3)]
    trs1: np.ndarray = None  # shutter-close key
    moving: bool = False


@dataclass
class CameraState:
    camera: object
    trs0: np.ndarray
    trs1: np.ndarray
    entity_name: str = ""


@dataclass
class RenderSnapshot:
    sequence: int
    instances: list
    camera: CameraState
    environment: object


class Registry:
    """Single-owner scene registry. Component names are unique per kind and
    entity names unique among entities; entity ids are never reused."""

    def __init__(self):
        self._components = {kind: {} for kind in COMPONENT_KINDS}
        self._entities = {}
        self._next_entity_id = 0
        self._next_uid = 0
        self._sequence = 0
        self._active_camera = None
        self._seen_transforms = set()
        self.environment = None

    # -- components --------------------------------------------------------

    def add_component(self, kind, name, obj):
        if kind not in COMPONENT_KINDS:
            raise UnknownNameError(f"unknown component kind '{kind}'")
        table = self._components[kind]
        if name in table:
            raise DuplicateNameError(f"{kind} '{name}' already exists")
        uid = self._next_uid
        self._next_uid += 1
        table[name] = _Record(kind, name, obj, uid)
        return ComponentHandle(kind, name, uid)

    def get_component(self, kind, name):
        rec = self._record(kind, name)
        return ComponentHandle(kind, name, rec.uid)

    def _record(self, kind, name):
        if kind not in COMPONENT_KINDS:
            raise UnknownNameError(f"unknown component kind '{kind}'")
        rec = self._components[kind].get(name)
        if rec is None:
            raise UnknownNameError(f"no {kind} named '{name}'")
        return rec

    def _resolve_record(self, handle):
        rec = self._components.get(handle.kind, {}).get(handle.name)
        if rec is None or rec.uid != handle.uid:
            raise DanglingHandleError(
                f"{handle.kind} handle '{handle.name}' no longer resolves")
        return rec

    def resolve(self, handle):
        return self._resolve_record(handle).obj

    def touch(self, handle):
        """Record a mutation of the component behind this handle."""
        rec = self._resolve_record(handle)
        rec.generation += 1
        return rec.generation

    def generation_of(self, handle):
        return self._resolve_record(handle).generation

    def delete_component(self, handle):
        rec = self._resolve_record(handle)
        if rec.bound_count > 0:
            raise ComponentInUseError(
                f"{handle.kind} '{handle.name}' is bound to {rec.bound_count} entity slot(s)")
        del self._components[handle.kind][handle.name]

    def component_names(self, kind):
        return sorted(self._components[kind])

    # -- entities ----------------------------------------------------------

    def create_entity(self, name, transform=None, mesh=None, material=None,
                      light=None, camera=None, volume=None):
        if name in self._entities:
            raise DuplicateNameError(f"entity '{name}' already exists")
        if mesh is not None and volume is not None:
            raise ComponentConflictError(
                f"entity '{name}': mesh and volume are mutually exclusive")
        handles = {"transform": transform, "mesh": mesh, "material": material,
                   "light": light, "camera": camera, "volume": volume}
        records = {}
        for kind, handle in handles.items():
            if handle is None:
                continue
            if handle.kind != kind:
                raise ComponentConflictError(
                    f"entity '{name}': {handle.kind} handle given for the {kind} slot")
            records[kind] = self._resolve_record(handle)
        ent = Entity(name, self._next_entity_id)
        self._next_entity_id += 1
        for kind, handle in handles.items():
            if handle is not None:
                ent.refs[kind] = handle
                records[kind].bound_count += 1
        self._entities[name] = ent
        return ent

    def get_entity(self, name):
        ent = self._entities.get(name)
        if ent is None:
            raise UnknownNameError(f"no entity named '{name}'")
        return ent

    def entity_names(self):
        return sorted(self._entities)

    def entities(self):
        return sorted(self._entities.values(), key=lambda e: e.id)

    def attach_component(self, entity, kind, handle):
        ent = entity if isinstance(entity, Entity) else self.get_entity(entity)
        if kind not in ENTITY_SLOTS:
            raise UnknownNameError(f"entities have no '{kind}' slot")
        if handle.kind != kind:
            raise ComponentConflictError(
                f"cannot attach a {handle.kind} handle to the {kind} slot")
        if kind == "mesh" and ent.refs["volume"] is not None:
            raise ComponentConflictError(
                f"entity '{ent.name}' holds a volume; mesh is exclusive with it")
        if kind == "volume" and ent.refs["mesh"] is not None:
            raise ComponentConflictError(
                f"entity '{ent.name}' holds a mesh; volume is exclusive with it")
        rec = self._resolve_record(handle)
        old = ent.refs[kind]
        if old is not None:
            self._resolve_record(old).bound_count -= 1
        ent.refs[kind] = handle
        rec.bound_count += 1
        return ent

    def detach_component(self, entity, kind):
        ent = entity if isinstance(entity, Entity) else self.get_entity(entity)
        if kind not in ENTITY_SLOTS:
            raise UnknownNameError(f"entities have no '{kind}' slot")
        old = ent.refs[kind]
        if old is not None:
            self._resolve_record(old).bound_count -= 1
            ent.refs[kind] = None
        return ent

    def delete_entity(self, name, delete_components=False):
        ent = self.get_entity(name)
        for kind in ENTITY_SLOTS:
            if ent.refs[kind] is not None:
                handle = ent.refs[kind]
                self._resolve_record(handle).bound_count -= 1
                ent.refs[kind] = None
                if delete_components:
                    rec = self._components[handle.kind].get(handle.name)
                    if rec is not None and rec.uid == handle.uid and rec.bound_count == 0:
                        del self._components[handle.kind][handle.name]
        if self._active_camera == name:
            self._active_camera = None
        del self._entities[name]

    # -- camera / environment ---------------------------------------------

    def set_camera_entity(self, entity):
        ent = entity if isinstance(entity, Entity) else self.get_entity(entity)
        if ent.refs["camera"] is None or ent.refs["transform"] is None:
            raise NoActiveCameraError(
                f"entity '{ent.name}' needs transform and camera components to be "
                "the active camera")
        self._active_camera = ent.name

    def active_camera_entity(self):
        if self._active_camera is None:
            return None
        return self._entities.get(self._active_camera)

    def set_environment(self, environment):
        self.environment = environment

    # -- snapshots ---------------------------------------------------------

    def _is_renderable(self, ent):
        has = {k: ent.refs[k] is not None for k in ENTITY_SLOTS}
        if not has["transform"]:
            return False
        if has["volume"]:
            return True
        if has["mesh"] and (has["material"] or has["light"]):
            return True
        return False

    def take_snapshot(self):
        """Freeze the renderable scene state.

        The shutter-open key of every instance is the transform state at the
        previous snapshot; transforms seen for the first time contribute no
        motion. After the snapshot is taken every transform's previous key
        is advanced to its current state."""
        cam_ent = self.active_camera_entity()
        if cam_ent is None:
            raise NoActiveCameraError("take_snapshot requires an active camera entity "
                                      "(set_camera_entity)")
        # first-seen transforms: previous key snaps to the current state
        for rec in self._components["transform"].values():
            if rec.uid not in self._seen_transforms:
                rec.obj.commit_prev()
                self._seen_transforms.add(rec.uid)

        instances = []
        for ent in self.entities():
            if not self._is_renderable(ent):
                continue
            tf = self.resolve(ent.refs["transform"])
            trs0 = _trs_key(tf.prev_translation, tf.prev_rotation, tf.prev_scale)
            trs1 = _trs_key(tf.translation, tf.rotation, tf.scale)
            mat_state = None
            if ent.refs["material"] is not None:
                m = self.resolve(ent.refs["material"])
                mat_state = MaterialState(
                    scalars=m.scalars(),
                    base_color_texture=m.base_color_texture,
                    roughness_texture=m.roughness_texture,
                    metallic_texture=m.metallic_texture,
                    transmission_texture=m.transmission_texture,
                    normal_map=m.normal_map)
            light_state = None
            if ent.refs["light"] is not None and ent.refs["mesh"] is not None:
                li = self.resolve(ent.refs["light"])
                light_state = LightState(intensity=li.intensity,
                                         color=li.color.copy(),
                                         two_sided=li.two_sided,
                                         color_texture=li.color_texture)
            instances.append(InstanceRecord(
                entity_id=ent.id,
                entity_name=ent.name,
                mesh=self.resolve(ent.refs["mesh"]) if ent.refs["mesh"] else None,
                material=mat_state,
                light=light_state,
                volume=self.resolve(ent.refs["volume"]) if ent.refs["volume"] else None,
                trs0=trs0,
                trs1=trs1,
                moving=not np.array_equal(trs0, trs1)))

        cam_tf = self.resolve(cam_ent.refs["transform"])
        cam_state = CameraState(
            camera=dataclasses.replace(self.resolve(cam_ent.refs["camera"])),
            trs0=_trs_key(cam_tf.prev_translation, cam_tf.prev_rotation, cam_tf.prev_scale),
            trs1=_trs_key(cam_tf.translation, cam_tf.rotation, cam_tf.scale),
            entity_name=cam_ent.name)

        env = self.environment
        if env is not None:
            env = dataclasses.replace(env, color=env.color.copy())
        snap = RenderSnapshot(sequence=self._sequence, instances=instances,
                              camera=cam_state, environment=env)
        self._sequence += 1
        for rec in self._components["transform"].values():
            rec.obj.commit_prev()
        return snap
