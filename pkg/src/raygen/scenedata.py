"""Flattening of a RenderSnapshot into the array tuple consumed by the
compiled kernels, plus Python-level ray queries and the exhaustive
intersection oracle used to validate the BVH path.

Compiled scene tuple layout (index: contents):
  0 tlas_bounds (Nt,6) f8      1 tlas_meta (Nt,3) i32    2 tlas_prims i32
  3 inst_mesh i32              4 inst_entity i32          5 inst_material i32
  6 inst_light i32             7 inst_volume i32          8 inst_moving u8
  9 inst_matrix (Ni,4,4) f8   10 inst_inverse (Ni,4,4)   11 inst_trs0 (Ni,10)
 12 inst_trs1 (Ni,10)         13 mesh_root i32           14 blas_bounds (Nn,6)
 15 blas_meta (Nn,3) i32      16 tri_v (Np,9) f8         17 tri_n (Np,9) f8
 18 tri_uv (Np,6) f8          19 tri_id i32              20 mesh_prim_range (Nm,2) i32
 21 mat_scalars (Nmat,7) f8   22 mat_tex (Nmat,5) i32    23 tex_info (Ntex,3) i64
 24 tex_data f32              25 light_scalars (Nl,5) f8 26 light_tex i32
 27 li_inst i32               28 li_range (Nl,2) i64     29 li_cdf f8
 30 li_area f8                31 env_info f8[8]          32 env_tex i64 scalar
 33 env_marg (h,) f8          34 env_cond (h,w) f8       35 vol_info (Nv,4) i64
 36 vol_scalars (Nv,7) f8     37 vol_data f8             38 scene_diag float
 39 cam_c2w0 (4,4) f8         40 cam_c2w1 (4,4) f8       41 li_tri_v (Nlt,9) f8
 42 li_tri_uv (Nlt,6) f8      43 inst_li i32             44 vol_inst_list i32
 45 cam_params f8[4]
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np
from numba import njit

from .geometry import build_blas, build_bvh_over_aabbs
from .kernels import _fill_hit, _inst_inverse, _tri_test, intersect_scene, occluded_scene
from .lights import build_env_tables
from .mathutils import trs_matrix, affine_inverse

# BLAS results are reused across snapshots for unchanged mesh objects.
_blas_strong = {}


def _blas_for(mesh):
    key = id(mesh)
    hit = _blas_strong.get(key)
    if hit is not None and hit[0]() is mesh:
        return hit[1]
    blas = build_blas(mesh)
    _blas_strong[key] = (weakref.ref(mesh), blas)
    if len(_blas_strong) > 256:
        dead = [k for k, v in _blas_strong.items() if v[0]() is None]
        for k in dead:
            del _blas_strong[k]
    return blas


def _trs_to_matrix(trs):
    return trs_matrix(trs[0:3], trs[3:7], trs[7:10])


def _aabb_of_matrix(lo, hi, m):
    """World AABB of a local box under an affine matrix (corner transform)."""
    corners = np.array([[x, y, z] for x in (lo[0], hi[0])
                        for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    world = corners @ m[:3, :3].T + m[:3, 3]
    return world.min(axis=0), world.max(axis=0)


@dataclass
class Hit:
    t: float
    instance: int
    triangle: int
    bary_u: float
    bary_v: float
    geometric_normal: np.ndarray
    shading_normal: np.ndarray
    uv: np.ndarray
    position: np.ndarray
    entity_id: int


class CompiledScene:
    """Immutable array form of one snapshot at a given output resolution."""

    def __init__(self, snapshot, width, height):
        self.snapshot = snapshot
        self.width = int(width)
        self.height = int(height)
        self.arrays = _flatten(snapshot, self.width, self.height)
        self.entity_boxes = _entity_local_boxes(snapshot)

    # -- ray queries -------------------------------------------------------

    def _buffers(self):
        return (np.empty(16), np.empty(4, np.int64), np.empty(128, np.int32),
                np.empty(128, np.int32), np.empty((4, 4)), np.empty((4, 4)))

    def _hit_from(self, hit_f, hit_i):
        return Hit(t=float(hit_f[0]), instance=int(hit_i[0]), triangle=int(hit_i[1]),
                   bary_u=float(hit_f[1]), bary_v=float(hit_f[2]),
                   geometric_normal=hit_f[3:6].copy(),
                   shading_normal=hit_f[6:9].copy(),
                   uv=hit_f[9:11].copy(), position=hit_f[11:14].copy(),
                   entity_id=int(hit_i[2]))

    def intersect(self, ray):
        hit_f, hit_i, ts, bs, tm, ti = self._buffers()
        o, d = ray.origin, ray.direction
        ok = intersect_scene(self.arrays, o[0], o[1], o[2], d[0], d[1], d[2],
                             ray.t_min, ray.t_max, ray.time,
                             hit_f, hit_i, ts, bs, tm, ti)
        return self._hit_from(hit_f, hit_i) if ok else None

    def occluded(self, p0, p1, time=1.0):
        hit_f, hit_i, ts, bs, tm, ti = self._buffers()
        p0 = np.asarray(p0, dtype=np.float64)
        p1 = np.asarray(p1, dtype=np.float64)
        return bool(occluded_scene(self.arrays, p0[0], p0[1], p0[2],
                                   p1[0], p1[1], p1[2], float(time),
                                   hit_f, hit_i, ts, bs, tm, ti))

    def brute_force_intersect(self, ray):
        """Exhaustive loop over every instance and triangle; shares only the
        primitive test and tie-break rule with the accelerated path."""
        hit_f, hit_i, ts, bs, tm, ti = self._buffers()
        o, d = ray.origin, ray.direction
        ok = _brute_force(self.arrays, o[0], o[1], o[2], d[0], d[1], d[2],
                          ray.t_min, ray.t_max, ray.time, hit_f, hit_i, tm, ti)
        return self._hit_from(hit_f, hit_i) if ok else None


@njit(cache=True)
def _brute_force(scn, ox, oy, oz, dx, dy, dz, tmin, tmax, time, hit_f, hit_i,
                 tmp_m, tmp_inv):
    n_inst = scn[3].shape[0]
    best_t = tmax
    best_inst = np.int64(2147483647)
    best_tri = np.int64(2147483647)
    best_prim = np.int64(-1)
    best_u = 0.0
    best_v = 0.0
    tv = scn[16]
    tri_id = scn[19]
    for inst in range(n_inst):
        if scn[7][inst] >= 0:
            continue
        inv = _inst_inverse(scn, inst, time, tmp_m, tmp_inv)
        lox = inv[0, 0] * ox + inv[0, 1] * oy + inv[0, 2] * oz + inv[0, 3]
        loy = inv[1, 0] * ox + inv[1, 1] * oy + inv[1, 2] * oz + inv[1, 3]
        loz = inv[2, 0] * ox + inv[2, 1] * oy + inv[2, 2] * oz + inv[2, 3]
        ldx = inv[0, 0] * dx + inv[0, 1] * dy + inv[0, 2] * dz
        ldy = inv[1, 0] * dx + inv[1, 1] * dy + inv[1, 2] * dz
        ldz = inv[2, 0] * dx + inv[2, 1] * dy + inv[2, 2] * dz
        mesh = scn[3][inst]
        first = scn[20][mesh, 0]
        count = scn[20][mesh, 1]
        for p in range(first, first + count):
            ok, t, u, v = _tri_test(tv, p, lox, loy, loz, ldx, ldy, ldz, tmin, best_t)
            if ok:
                tid = tri_id[p]
                if (t < best_t or (t == best_t and
                                   (inst < best_inst or (inst == best_inst and tid < best_tri)))):
                    best_t = t
                    best_inst = np.int64(inst)
                    best_tri = np.int64(tid)
                    best_prim = np.int64(p)
                    best_u = u
                    best_v = v
    if best_prim < 0:
        return False
    _fill_hit(scn, ox, oy, oz, dx, dy, dz, time, best_t, best_inst, best_tri,
              best_prim, best_u, best_v, hit_f, hit_i, tmp_m, tmp_inv)
    return True


def _entity_local_boxes(snapshot):
    """entity id -> (mesh local AABB lo, hi, instance index) for box export."""
    out = {}
    for k, inst in enumerate(snapshot.instances):
        if inst.mesh is not None:
            lo, hi = inst.mesh.local_aabb()
            out[inst.entity_id] = (lo, hi, k)
    return out


def _flatten(snapshot, width, height):
    instances = snapshot.instances
    n_inst = len(instances)

    # -- meshes and their BVHs, concatenated with global offsets -----------
    mesh_ids = {}
    meshes = []
    for inst in instances:
        if inst.mesh is not None and id(inst.mesh) not in mesh_ids:
            mesh_ids[id(inst.mesh)] = len(meshes)
            meshes.append(inst.mesh)

    node_chunks, tri_v_chunks, tri_n_chunks, tri_uv_chunks, tri_id_chunks = [], [], [], [], []
    mesh_root = np.zeros(max(len(meshes), 1), np.int32)
    mesh_prim_range = np.zeros((max(len(meshes), 1), 2), np.int32)
    node_off = 0
    prim_off = 0
    meta_chunks = []
    for m, mesh in enumerate(meshes):
        blas = _blas_for(mesh)
        meta = blas.meta.copy()
        leaf = meta[:, 2] == 1
        meta[leaf, 0] += prim_off
        meta[~leaf, 0] += node_off
        meta[~leaf, 1] += node_off
        mesh_root[m] = node_off
        mesh_prim_range[m] = (prim_off, len(blas.prim_order))
        node_chunks.append(blas.bounds)
        meta_chunks.append(meta)
        tris = mesh.indices[blas.prim_order]
        tri_v_chunks.append(mesh.positions[tris].reshape(-1, 9))
        tri_n_chunks.append(mesh.normals[tris].reshape(-1, 9))
        tri_uv_chunks.append(mesh.uvs[tris].reshape(-1, 6))
        tri_id_chunks.append(blas.prim_order.astype(np.int32))
        node_off += len(meta)
        prim_off += len(blas.prim_order)

    def cat(chunks, empty_shape, dtype):
        if chunks:
            return np.ascontiguousarray(np.concatenate(chunks, axis=0), dtype=dtype)
        return np.zeros(empty_shape, dtype)

    blas_bounds = cat(node_chunks, (0, 6), np.float64)
    blas_meta = cat(meta_chunks, (0, 3), np.int32)
    tri_v = cat(tri_v_chunks, (0, 9), np.float64)
    tri_n = cat(tri_n_chunks, (0, 9), np.float64)
    tri_uv = cat(tri_uv_chunks, (0, 6), np.float64)
    tri_id = cat(tri_id_chunks, (0,), np.int32)

    # -- textures ----------------------------------------------------------
    tex_ids = {}
    tex_list = []

    def tex_index(tex):
        if tex is None:
            return -1
        if id(tex) not in tex_ids:
            tex_ids[id(tex)] = len(tex_list)
            tex_list.append(tex)
        return tex_ids[id(tex)]

    # -- per-instance tables ----------------------------------------------
    inst_mesh = np.full(n_inst, -1, np.int32)
    inst_entity = np.zeros(n_inst, np.int32)
    inst_material = np.full(n_inst, -1, np.int32)
    inst_light = np.full(n_inst, -1, np.int32)
    inst_volume = np.full(n_inst, -1, np.int32)
    inst_moving = np.zeros(n_inst, np.uint8)
    inst_matrix = np.zeros((max(n_inst, 1), 4, 4))
    inst_inverse = np.zeros((max(n_inst, 1), 4, 4))
    inst_trs0 = np.zeros((max(n_inst, 1), 10))
    inst_trs1 = np.zeros((max(n_inst, 1), 10))

    mat_rows = []
    mat_tex_rows = []
    light_rows = []
    light_tex_rows = []
    vol_rows = []
    vol_info_rows = []
    vol_data_chunks = []
    vol_inst_list = []
    li_inst = []
    inst_li = np.full(max(n_inst, 1), -1, np.int32)

    scene_lo = np.full(3, np.inf)
    scene_hi = np.full(3, -np.inf)
    tlas_lo = []
    tlas_hi = []
    tlas_ids = []

    vol_data_off = 0
    for k, inst in enumerate(instances):
        inst_entity[k] = inst.entity_id
        inst_moving[k] = 1 if inst.moving else 0
        inst_trs0[k] = inst.trs0
        inst_trs1[k] = inst.trs1
        m1 = _trs_to_matrix(inst.trs1)
        inst_matrix[k] = m1
        inst_inverse[k] = affine_inverse(m1)
        if inst.mesh is not None:
            inst_mesh[k] = mesh_ids[id(inst.mesh)]
            lo_l, hi_l = inst.mesh.local_aabb()
        else:
            lo_l, hi_l = np.zeros(3), np.ones(3)
        lo0, hi0 = _aabb_of_matrix(lo_l, hi_l, _trs_to_matrix(inst.trs0))
        lo1, hi1 = _aabb_of_matrix(lo_l, hi_l, m1)
        lo = np.minimum(lo0, lo1)
        hi = np.maximum(hi0, hi1)
        scene_lo = np.minimum(scene_lo, lo)
        scene_hi = np.maximum(scene_hi, hi)
        if inst.volume is not None:
            inst_volume[k] = len(vol_rows)
            g = inst.volume
            nx, ny, nz = g.dims
            vol_info_rows.append((vol_data_off, nx, ny, nz))
            vol_rows.append((g.sigma_t, g.albedo[0], g.albedo[1], g.albedo[2],
                             g.g, g.max_density, g.min_density))
            vol_data_chunks.append(g.density)
            vol_data_off += g.density.size
            vol_inst_list.append(k)
        else:
            tlas_lo.append(lo)
            tlas_hi.append(hi)
            tlas_ids.append(k)
        if inst.material is not None:
            inst_material[k] = len(mat_rows)
            ms = inst.material
            mat_rows.append(ms.scalars)
            mat_tex_rows.append((tex_index(ms.base_color_texture),
                                 tex_index(ms.roughness_texture),
                                 tex_index(ms.metallic_texture),
                                 tex_index(ms.transmission_texture),
                                 tex_index(ms.normal_map)))
        if inst.light is not None:
            inst_light[k] = len(light_rows)
            ls = inst.light
            light_rows.append((ls.intensity, ls.color[0], ls.color[1], ls.color[2],
                               1.0 if ls.two_sided else 0.0))
            light_tex_rows.append(tex_index(ls.color_texture))
            inst_li[k] = len(li_inst)
            li_inst.append(k)

    # -- emissive geometry in world space at shutter close -----------------
    li_range = np.zeros((max(len(li_inst), 1), 2), np.int64)
    li_area = np.zeros(max(len(li_inst), 1))
    li_cdf_chunks = []
    li_tri_v_chunks = []
    li_tri_uv_chunks = []
    lt_off = 0
    for li, k in enumerate(li_inst):
        inst = instances[k]
        mesh = inst.mesh
        m1 = inst_matrix[k]
        world = mesh.positions @ m1[:3, :3].T + m1[:3, 3]
        tris = world[mesh.indices]
        if len(tris) == 0:
            # keep the per-light arrays aligned even for a degenerate mesh
            tris = np.zeros((1, 3, 3))
        e1 = tris[:, 1] - tris[:, 0]
        e2 = tris[:, 2] - tris[:, 0]
        areas = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
        total = float(areas.sum())
        cdf = np.cumsum(areas)
        cdf = cdf / cdf[-1] if total > 0.0 else np.linspace(1.0 / len(areas), 1.0, len(areas))
        cdf[-1] = 1.0
        li_range[li] = (lt_off, len(areas))
        li_area[li] = total
        li_cdf_chunks.append(cdf)
        li_tri_v_chunks.append(tris.reshape(-1, 9))
        uvt = mesh.uvs[mesh.indices].reshape(-1, 6)
        li_tri_uv_chunks.append(uvt if len(uvt) == len(tris) else np.zeros((len(tris), 6)))
        lt_off += len(areas)
    li_cdf = cat(li_cdf_chunks, (0,), np.float64)
    li_tri_v = cat(li_tri_v_chunks, (0, 9), np.float64)
    li_tri_uv = cat(li_tri_uv_chunks, (0, 6), np.float64)

    # -- environment -------------------------------------------------------
    env = snapshot.environment
    env_info = np.zeros(8)
    env_tex = -1
    env_marg = np.ones(1)
    env_cond = np.ones((1, 1))
    if env is not None and env.mode != "none":
        env_info[4] = env.rotation
        env_info[5] = 1.0 if env.hemisphere_only else 0.0
        if env.mode == "constant":
            env_info[0] = 1.0
            env_info[1:4] = env.color
        else:
            env_info[0] = 2.0
            env_info[7] = 1.0  # texture domes join the NEE strategy set
            env_tex = tex_index(env.texture)
            marg, cond, total = build_env_tables(env.texture, env.hemisphere_only)
            env_marg = marg
            env_cond = cond
            env_info[6] = total

    # -- texture atlas -----------------------------------------------------
    tex_info = np.zeros((max(len(tex_list), 1), 3), np.int64)
    tex_chunks = []
    off = 0
    for i, tex in enumerate(tex_list):
        tex_info[i] = (off, tex.width, tex.height)
        tex_chunks.append(tex.pixels.reshape(-1))
        off += tex.pixels.size
    tex_data = cat(tex_chunks, (0,), np.float32)

    # -- top-level BVH over surface instances ------------------------------
    if tlas_ids:
        order_ids = np.asarray(tlas_ids, np.int32)
        tb, tm, torder = build_bvh_over_aabbs(np.asarray(tlas_lo), np.asarray(tlas_hi))
        tlas_bounds = tb
        tlas_meta = tm
        tlas_prims = order_ids[torder]
    else:
        tlas_bounds = np.zeros((0, 6))
        tlas_meta = np.zeros((0, 3), np.int32)
        tlas_prims = np.zeros(0, np.int32)

    diag = float(np.linalg.norm(scene_hi - scene_lo)) if n_inst else 1.0
    if not math.isfinite(diag) or diag <= 0.0:
        diag = 1.0

    cam = snapshot.camera
    c2w0 = _trs_to_matrix(cam.trs0)
    c2w1 = _trs_to_matrix(cam.trs1)
    cam_params = np.array([cam.camera.field_of_view_y, width / height,
                           cam.camera.aperture_radius, cam.camera.focus_distance])

    def rows(data, ncol, dtype):
        if data:
            return np.ascontiguousarray(np.asarray(data, dtype=dtype).reshape(-1, ncol))
        return np.zeros((0, ncol), dtype)

    return (
        np.ascontiguousarray(tlas_bounds),                       # 0
        np.ascontiguousarray(tlas_meta),                         # 1
        np.ascontiguousarray(tlas_prims),                        # 2
        inst_mesh,                                               # 3
        inst_entity,                                             # 4
        inst_material,                                           # 5
        inst_light,                                              # 6
        inst_volume,                                             # 7
        inst_moving,                                             # 8
        inst_matrix,                                             # 9
        inst_inverse,                                            # 10
        inst_trs0,                                               # 11
        inst_trs1,                                               # 12
        mesh_root,                                               # 13
        blas_bounds,                                             # 14
        blas_meta,                                               # 15
        tri_v,                                                   # 16
        tri_n,                                                   # 17
        tri_uv,                                                  # 18
        tri_id,                                                  # 19
        mesh_prim_range,                                         # 20
        rows(mat_rows, 7, np.float64),                           # 21
        rows(mat_tex_rows, 5, np.int32),                         # 22
        tex_info,                                                # 23
        tex_data,                                                # 24
        rows(light_rows, 5, np.float64),                         # 25
        np.asarray(light_tex_rows, np.int32) if light_tex_rows else np.zeros(0, np.int32),  # 26
        np.asarray(li_inst, np.int32) if li_inst else np.zeros(0, np.int32),  # 27
        li_range,                                                # 28
        li_cdf,                                                  # 29
        li_area,                                                 # 30
        env_info,                                                # 31
        np.int64(env_tex),                                       # 32
        np.ascontiguousarray(env_marg),                          # 33
        np.ascontiguousarray(env_cond),                          # 34
        rows(vol_info_rows, 4, np.int64),                        # 35
        rows(vol_rows, 7, np.float64),                           # 36
        cat(vol_data_chunks, (0,), np.float64),                  # 37
        diag,                                                    # 38
        np.ascontiguousarray(c2w0),                              # 39
        np.ascontiguousarray(c2w1),                              # 40
        li_tri_v,                                                # 41
        li_tri_uv,                                               # 42
        inst_li,                                                 # 43
        np.asarray(vol_inst_list, np.int32) if vol_inst_list else np.zeros(0, np.int32),  # 44
        cam_params,                                              # 45
    )
