"""Render driver: configuration, framebuffer accumulation, and the
tile-parallel execution of the path tracing kernel.

Determinism contract: per-pixel sample streams are derived from
(seed, pixel index, sample index), so the accumulated image is bitwise
independent of worker count and tile order.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import RenderError
from .kernels_render import mis_power, render_kernel, trace_path
from .scenedata import CompiledScene

WORKERS_ENV = "RAYGEN_WORKERS"


@dataclass
class RenderConfig:
    width: int = 512
    height: int = 512
    samples_per_pixel: int = 64
    max_depth: int = 8
    seed: int = 0
    clamp_radiance: float | None = 50.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise RenderError("image dimensions must be >= 1")
        if self.samples_per_pixel < 1:
            raise RenderError("samples_per_pixel must be >= 1")
        if self.max_depth < 1:
            raise RenderError("max_depth must be >= 1")


@dataclass
class Framebuffer:
    accum: np.ndarray     # (h, w, 3) summed radiance
    counts: np.ndarray    # (h, w) accepted sample counts
    dropped: int = 0      # non-finite samples discarded

    @property
    def width(self):
        return self.accum.shape[1]

    @property
    def height(self):
        return self.accum.shape[0]

    def resolve(self):
        """Mean radiance per pixel (zero where no sample survived)."""
        c = np.maximum(self.counts, 1)[:, :, None]
        return self.accum / c


def mis_power_heuristic(pdf_a, pdf_b):
    """Power heuristic with beta = 2."""
    return float(mis_power(float(pdf_a), float(pdf_b)))


def _apply_worker_env():
    value = os.environ.get(WORKERS_ENV)
    if value:
        import numba
        n = max(1, int(value))
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def compile_scene(snapshot, config):
    return CompiledScene(snapshot, config.width, config.height)


def trace(compiled, ray, config, rng_state):
    """Radiance along one ray (Python-level wrapper around the path kernel)."""
    hit_f = np.empty(16)
    hit_i = np.empty(4, np.int64)
    ts = np.empty(128, np.int32)
    bs = np.empty(128, np.int32)
    tm = np.empty((4, 4))
    ti = np.empty((4, 4))
    out3 = np.empty(3)
    clamp = 0.0 if config.clamp_radiance is None else float(config.clamp_radiance)
    o, d = ray.origin, ray.direction
    trace_path(compiled.arrays, o[0], o[1], o[2], d[0], d[1], d[2], ray.time,
               config.max_depth, clamp, rng_state, hit_f, hit_i, ts, bs, tm, ti, out3)
    return out3.copy()


def render(snapshot, config, compiled=None):
    """Path-trace the snapshot; returns a Framebuffer.

    Pass a prebuilt CompiledScene to reuse it across beauty/AOV passes."""
    _apply_worker_env()
    if compiled is None:
        compiled = compile_scene(snapshot, config)
    w, h = config.width, config.height
    accum = np.zeros((h, w, 3))
    counts = np.zeros((h, w), np.int64)
    ntiles = ((w + 31) // 32) * ((h + 31) // 32)
    dropped = np.zeros(ntiles, np.int64)
    clamp = 0.0 if config.clamp_radiance is None else float(config.clamp_radiance)
    render_kernel(compiled.arrays, w, h, config.samples_per_pixel,
                  config.max_depth, np.uint64(config.seed), clamp,
                  accum, counts, dropped)
    if not np.all(np.isfinite(accum)):
        raise RenderError("render produced non-finite accumulator values")
    return Framebuffer(accum=accum, counts=counts, dropped=int(dropped.sum()))
