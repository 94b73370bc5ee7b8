"""Surface appearance: textures and the four-lobe principled material
(diffuse, glossy dielectric coat, metal, glass) with evaluate/sample/pdf
wrappers over the compiled kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import imgio
from .errors import RenderError
from .kernels import (
    bsdf_eval,
    bsdf_sample,
    make_frame,
    shading_frame,
    tex_lookup,
)


@dataclass
class Texture:
    """Row-major RGBA float pixels in linear light, repeat addressing."""

    pixels: np.ndarray
    source: str = "<raw>"

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float32)
        if px.ndim == 2:
            px = np.repeat(px[:, :, None], 3, axis=2)
        if px.ndim != 3 or px.shape[2] not in (3, 4):
            raise RenderError("texture pixels must be (h, w, 3|4)")
        if px.shape[2] == 3:
            px = np.concatenate([px, np.ones(px.shape[:2] + (1,), np.float32)], axis=2)
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise RenderError("texture must be at least 1x1")
        if not np.all(np.isfinite(px)):
            raise RenderError("texture pixels must be finite")
        self.pixels = np.ascontiguousarray(px)

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @classmethod
    def from_file(cls, path):
        """PNG is decoded sRGB -> linear; PFM and HDR are taken as linear."""
        p = str(path).lower()
        if p.endswith(".png"):
            return cls(imgio.read_png(path), source=str(path))
        if p.endswith(".pfm"):
            data = imgio.read_pfm(path)
            return cls(np.asarray(data, dtype=np.float32), source=str(path))
        if p.endswith(".hdr"):
            return cls(imgio.read_hdr(path).astype(np.float32), source=str(path))
        raise RenderError(f"unsupported texture format: {path}")


def texture_lookup(texture, uv):
    """Bilinear RGBA fetch with repeat wrapping."""
    info = np.array([[0, texture.width, texture.height]], dtype=np.int64)
    out = np.empty(4)
    tex_lookup(info, texture.pixels.reshape(-1), 0, float(uv[0]), float(uv[1]), out)
    return out


def _clamp01(x):
    return min(max(float(x), 0.0), 1.0)


class PrincipledMaterial:
    """Base color / roughness / metallic / transmission / ior, each scalar
    parameter optionally driven by a texture (red channel for scalars).

    metallic = 1 takes precedence over transmission. Scalars are clamped to
    their valid range when set, not when read.
    """

    def __init__(self, base_color=(0.8, 0.8, 0.8), roughness=0.5, metallic=0.0,
                 transmission=0.0, ior=1.45, base_color_texture=None,
                 roughness_texture=None, metallic_texture=None,
                 transmission_texture=None, normal_map=None):
        self.set_base_color(base_color)
        self.set_roughness(roughness)
        self.set_metallic(metallic)
        self.set_transmission(transmission)
        self.set_ior(ior)
        self.base_color_texture = base_color_texture
        self.roughness_texture = roughness_texture
        self.metallic_texture = metallic_texture
        self.transmission_texture = transmission_texture
        self.normal_map = normal_map

    def set_base_color(self, c):
        c = np.asarray(c, dtype=np.float64).reshape(3)
        self.base_color = np.clip(c, 0.0, 1.0)

    def set_roughness(self, r):
        self.roughness = _clamp01(r)

    def set_metallic(self, m):
        self.metallic = _clamp01(m)

    def set_transmission(self, t):
        self.transmission = _clamp01(t)

    def set_ior(self, ior):
        self.ior = max(float(ior), 1.0)

    def scalars(self):
        return np.array([self.base_color[0], self.base_color[1], self.base_color[2],
                         self.roughness, self.metallic, self.transmission, self.ior])


@dataclass
class BsdfSample:
    wi: np.ndarray
    weight: np.ndarray
    pdf: float
    is_specular: bool


def resolve_params(material, uv):
    """Constants pass through; textured parameters are sampled at uv.

    Returns a dict with base_color, roughness, metallic, transmission, ior."""
    out = {
        "base_color": material.base_color.copy(),
        "roughness": material.roughness,
        "metallic": material.metallic,
        "transmission": material.transmission,
        "ior": material.ior,
    }
    if material.base_color_texture is not None:
        out["base_color"] = np.clip(texture_lookup(material.base_color_texture, uv)[:3], 0.0, 1.0)
    if material.roughness_texture is not None:
        out["roughness"] = _clamp01(texture_lookup(material.roughness_texture, uv)[0])
    if material.metallic_texture is not None:
        out["metallic"] = _clamp01(texture_lookup(material.metallic_texture, uv)[0])
    if material.transmission_texture is not None:
        out["transmission"] = _clamp01(texture_lookup(material.transmission_texture, uv)[0])
    return out


def _to_local(frame_t, frame_b, frame_n, v):
    return np.array([np.dot(v, frame_t), np.dot(v, frame_b), np.dot(v, frame_n)])


def _frame_axes(normal):
    n = np.asarray(normal, dtype=np.float64)
    t0x, t0y, t0z, t1x, t1y, t1z = make_frame(n[0], n[1], n[2])
    return np.array([t0x, t0y, t0z]), np.array([t1x, t1y, t1z]), n


def eval_bsdf(params, wo, wi, normal, eta_outside=1.0):
    """(f RGB, pdf) for world directions wo (toward viewer) and wi.

    ``params`` is a resolved dict from resolve_params. The shading frame is
    built around ``normal``; eta is the relative index on the wo side."""
    t, b, n = _frame_axes(normal)
    lo = _to_local(t, b, n, np.asarray(wo, dtype=np.float64))
    li = _to_local(t, b, n, np.asarray(wi, dtype=np.float64))
    c = params["base_color"]
    ior = params["ior"]
    eta_rel = ior / eta_outside if lo[2] > 0.0 else eta_outside / ior
    if lo[2] < 0.0:
        # flip the frame so wo is in the upper hemisphere
        lo = -lo
        li = -li
    fr, fg, fb, pdf = bsdf_eval(c[0], c[1], c[2], params["roughness"],
                                params["metallic"], params["transmission"],
                                ior, eta_rel,
                                lo[0], lo[1], lo[2], li[0], li[1], li[2])
    return np.array([fr, fg, fb]), pdf


def sample_bsdf(params, wo, normal, rng_state, eta_outside=1.0):
    """Draw an incident direction; returns BsdfSample or None on rejection.

    rng_state is a one-element uint64 array advanced in place."""
    t, b, n = _frame_axes(normal)
    lo = _to_local(t, b, n, np.asarray(wo, dtype=np.float64))
    flip = lo[2] < 0.0
    if flip:
        lo = -lo
    c = params["base_color"]
    ior = params["ior"]
    eta_rel = ior / eta_outside if not flip else eta_outside / ior
    out = np.empty(8)
    ok = bsdf_sample(c[0], c[1], c[2], params["roughness"], params["metallic"],
                     params["transmission"], ior, eta_rel,
                     lo[0], lo[1], lo[2], rng_state, out)
    if not ok:
        return None
    li = out[:3].copy()
    if flip:
        li = -li
    wi = li[0] * t + li[1] * b + li[2] * n
    return BsdfSample(wi=wi, weight=out[3:6].copy(), pdf=float(out[6]),
                      is_specular=bool(out[7] != 0.0))


def apply_normal_map(material, geometric_normal, tangent, bitangent, uv):
    """Perturb the shading normal by the material's tangent-space normal map.

    Falls back to the unperturbed normal when no map is set. The tangent
    basis must come from the triangle's uv parameterization."""
    n = np.asarray(geometric_normal, dtype=np.float64)
    if material.normal_map is None:
        return n
    texel = texture_lookup(material.normal_map, uv)
    m = 2.0 * texel[:3] - 1.0
    out = m[0] * np.asarray(tangent) + m[1] * np.asarray(bitangent) + m[2] * n
    ln = np.linalg.norm(out)
    if ln < 1e-12:
        return n
    return out / ln
