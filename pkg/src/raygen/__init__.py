"""raygen: headless CPU path tracer for synthetic image generation with
pixel-exact ground-truth annotation layers.

The package is organized as an entity-component scene model (registry),
compiled per snapshot into flat arrays (scenedata) that drive numba
kernels for path tracing (integrator) and annotation passes (aov).
"""

from .camera import Camera, camera_matrices, generate_ray
from .errors import RenderError
from .geometry import (
    Mesh,
    build_blas,
    create_box,
    create_plane,
    create_sphere,
    load_obj,
    mesh_from_arrays,
)
from .integrator import Framebuffer, RenderConfig, compile_scene, mis_power_heuristic, render
from .lights import Environment, Light, randomize_lights
from .materials import PrincipledMaterial, Texture
from .mathutils import Ray, Transform
from .registry import ComponentHandle, Entity, Registry, RenderSnapshot
from .aov import AOVSet, extract_boxes, render_aovs
from .scenedata import CompiledScene, Hit
from .volume import VolumeGrid, read_volg, volume_from_array, write_volg

__version__ = "0.1.0"

__all__ = [
    "AOVSet", "Camera", "CompiledScene", "ComponentHandle", "Entity",
    "Environment", "Framebuffer", "Hit", "Light", "Mesh",
    "PrincipledMaterial", "Ray", "Registry", "RenderConfig", "RenderError",
    "RenderSnapshot", "Texture", "Transform", "VolumeGrid", "build_blas",
    "camera_matrices", "compile_scene", "create_box", "create_plane",
    "create_sphere", "extract_boxes", "generate_ray", "load_obj",
    "mesh_from_arrays", "mis_power_heuristic", "randomize_lights",
    "read_volg", "render", "render_aovs", "volume_from_array", "write_volg",
]
