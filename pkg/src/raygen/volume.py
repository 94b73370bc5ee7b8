"""Dense voxel media: grid construction, trilinear lookup, tracking-based
transmittance/free-flight sampling, the Henyey-Greenstein phase function,
and the VOLG raw grid file format."""

from __future__ import annotations

import struct

import numpy as np

from .errors import RenderError
from .kernels import hg_pdf, hg_sample, vol_density, vol_sample_distance, vol_transmittance

VOLG_MAGIC = b"VOLG"


class VolumeGrid:
    """Scalar density on a dense (nx, ny, nz) grid filling the local unit
    cube; the entity transform maps that cube into the world.

    sigma_t scales density into extinction per world unit, albedo splits
    collisions into scattering vs absorption, g shapes the phase function."""

    def __init__(self, dims, density, sigma_t=1.0, albedo=(1.0, 1.0, 1.0), g=0.0):
        nx, ny, nz = (int(d) for d in dims)
        if nx < 1 or ny < 1 or nz < 1:
            raise RenderError("volume dims must be positive")
        density = np.asarray(density, dtype=np.float64).reshape(-1)
        if density.size != nx * ny * nz:
            raise RenderError(f"density length {density.size} does not match "
                              f"dims {nx}x{ny}x{nz}")
        if not np.all(np.isfinite(density)):
            raise RenderError("density values must be finite")
        if np.any(density < 0.0):
            raise RenderError("density values must be >= 0")
        if sigma_t <= 0.0:
            raise RenderError("sigma_t must be > 0")
        if not -1.0 < g < 1.0:
            raise RenderError("phase g must be in (-1, 1)")
        self.dims = (nx, ny, nz)
        # x-fastest layout: index = (z * ny + y) * nx + x
        self.density = np.ascontiguousarray(density)
        self.sigma_t = float(sigma_t)
        self.albedo = np.clip(np.asarray(albedo, dtype=np.float64).reshape(3), 0.0, 1.0)
        self.g = float(g)
        self.max_density = float(density.max())
        self.min_density = float(density.min())

    def _info(self):
        nx, ny, nz = self.dims
        return np.array([[0, nx, ny, nz]], dtype=np.int64)


def volume_from_array(dims, density, sigma_t=1.0, albedo=(1.0, 1.0, 1.0), g=0.0):
    return VolumeGrid(dims, density, sigma_t=sigma_t, albedo=albedo, g=g)


def density_at(grid, point):
    """Trilinear density at a local point; zero outside [0,1]^3."""
    p = np.asarray(point, dtype=np.float64)
    return float(vol_density(grid._info(), grid.density, 0, p[0], p[1], p[2]))


def transmittance(grid, p0, p1, rng_state):
    """Ratio-tracking estimate of exp(-integral of sigma_t * density) along
    the local-space segment p0 -> p1. rng_state: uint64[1], advanced."""
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    d = p1 - p0
    length = float(np.linalg.norm(d))
    if length < 1e-12:
        return 1.0
    d = d / length
    return float(vol_transmittance(grid._info(), grid.density, 0,
                                   grid.sigma_t, grid.max_density,
                                   grid.min_density,
                                   p0[0], p0[1], p0[2], d[0], d[1], d[2],
                                   0.0, length, rng_state))


def sample_scatter(grid, origin, direction, t0, t1, rng_state):
    """Delta-tracking free flight along a local-space ray segment.

    Returns (t, event) with event "scatter" or "absorb", or None when the
    ray escapes the segment without a real collision."""
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    t = vol_sample_distance(grid._info(), grid.density, 0,
                            grid.sigma_t, grid.max_density,
                            o[0], o[1], o[2], d[0], d[1], d[2],
                            float(t0), float(t1), rng_state)
    if t < 0.0:
        return None
    from .kernels import rand_f
    p_scatter = float(grid.albedo.mean())
    event = "scatter" if rand_f(rng_state) < p_scatter else "absorb"
    return float(t), event


def sample_phase(g, wo, rng_state):
    """Henyey-Greenstein direction around the propagation direction -wo.

    Returns (wi, pdf)."""
    wo = np.asarray(wo, dtype=np.float64)
    out = np.empty(4)
    hg_sample(float(g), wo[0], wo[1], wo[2], rng_state, out)
    return out[:3].copy(), float(out[3])


def phase_pdf(g, wo, wi):
    wo = np.asarray(wo, dtype=np.float64)
    wi = np.asarray(wi, dtype=np.float64)
    return float(hg_pdf(float(g), float(np.dot(-wo, wi))))


def write_volg(grid, path):
    """16-byte header (magic, nx, ny, nz as u32 LE) + float32 densities."""
    nx, ny, nz = grid.dims
    with open(path, "wb") as fh:
        fh.write(VOLG_MAGIC)
        fh.write(struct.pack("<III", nx, ny, nz))
        fh.write(grid.density.astype("<f4").tobytes())


def read_volg(path, sigma_t=1.0, albedo=(1.0, 1.0, 1.0), g=0.0):
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) != 16 or head[:4] != VOLG_MAGIC:
            raise RenderError(f"{path}: not a VOLG file (bad header at byte 0)")
        nx, ny, nz = struct.unpack("<III", head[4:])
        data = np.frombuffer(fh.read(), dtype="<f4")
        if data.size != nx * ny * nz:
            raise RenderError(f"{path}: expected {nx * ny * nz} voxels, "
                              f"found {data.size}")
    return VolumeGrid((nx, ny, nz), data.astype(np.float64),
                      sigma_t=sigma_t, albedo=albedo, g=g)
