"""Numba-compiled rendering core.

Everything here operates on the flattened array form of a scene snapshot (see
scenedata.CompiledScene) so the hot path never touches Python objects. All
functions are deterministic given the counter-based RNG stream; per-sample
streams are derived from (seed, pixel index, sample index) so images are
bitwise independent of thread count and tile order.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

# Hit buffer layout (float part):
# 0 t, 1 bary u, 2 bary v, 3:6 geometric normal, 6:9 shading normal,
# 9:11 uv, 11:14 world hit position.
# Int part: 0 instance, 1 triangle id, 2 entity id, 3 global primitive slot.

DELTA_ALPHA = 1e-7          # GGX alpha below this is treated as a delta lobe
SHADOW_EPS_SCALE = 1e-4     # shadow/secondary origin offset, times scene diagonal
RR_START_DEPTH = 3
RR_MIN_SURVIVAL = 0.05
FLOW_INVALID = 1e9

F64 = np.float64


# ---------------------------------------------------------------------------
# Counter-based RNG (splitmix64 over a per-sample stream)

@njit(cache=True, inline="always")
def _mix64(z):
    z = np.uint64(z)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def rng_init(st, seed, pixel_index, sample_index):
    a = _mix64(np.uint64(seed) + np.uint64(0x9E3779B97F4A7C15))
    b = _mix64(a ^ _mix64(np.uint64(pixel_index) + np.uint64(0x632BE59BD9B4E019)))
    st[0] = _mix64(b ^ _mix64(np.uint64(sample_index) + np.uint64(0xD6E8FEB86659FD93)))


@njit(cache=True, inline="always")
def rand_f(st):
    st[0] = st[0] + np.uint64(0x9E3779B97F4A7C15)
    z = _mix64(st[0])
    return float(z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


# ---------------------------------------------------------------------------
# Small vector helpers (scalars in, scalars out)

@njit(cache=True, inline="always")
def _dot(ax, ay, az, bx, by, bz):
    return ax * bx + ay * by + az * bz


@njit(cache=True, inline="always")
def _cross(ax, ay, az, bx, by, bz):
    return ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx


@njit(cache=True, inline="always")
def _norm3(x, y, z):
    n = math.sqrt(x * x + y * y + z * z)
    if n == 0.0:
        return 0.0, 0.0, 1.0
    return x / n, y / n, z / n


@njit(cache=True, inline="always")
def _luminance(r, g, b):
    return 0.2126 * r + 0.7152 * g + 0.0722 * b


@njit(cache=True)
def make_frame(nx, ny, nz):
    """Orthonormal basis around n (Duff et al. branchless form)."""
    s = 1.0 if nz >= 0.0 else -1.0
    a = -1.0 / (s + nz)
    b = nx * ny * a
    t0x, t0y, t0z = 1.0 + s * nx * nx * a, s * b, -s * nx
    t1x, t1y, t1z = b, s + ny * ny * a, -ny
    return t0x, t0y, t0z, t1x, t1y, t1z


# ---------------------------------------------------------------------------
# Instance transforms (two TRS keys, slerp/lerp at shutter time)

@njit(cache=True)
def _trs_at(trs0, trs1, s, out_m, out_inv):
    """Compose world matrix + inverse at shutter parameter s from two keys."""
    tx = (1.0 - s) * trs0[0] + s * trs1[0]
    ty = (1.0 - s) * trs0[1] + s * trs1[1]
    tz = (1.0 - s) * trs0[2] + s * trs1[2]
    # slerp, shortest arc
    aw, ax, ay, az = trs0[3], trs0[4], trs0[5], trs0[6]
    bw, bx, by, bz = trs1[3], trs1[4], trs1[5], trs1[6]
    d = aw * bw + ax * bx + ay * by + az * bz
    if d < 0.0:
        bw, bx, by, bz = -bw, -bx, -by, -bz
        d = -d
    if d > 0.9995:
        qw = aw + s * (bw - aw)
        qx = ax + s * (bx - ax)
        qy = ay + s * (by - ay)
        qz = az + s * (bz - az)
    else:
        th = math.acos(min(max(d, -1.0), 1.0))
        sl = math.sin(th)
        wa = math.sin((1.0 - s) * th) / sl
        wb = math.sin(s * th) / sl
        qw = wa * aw + wb * bw
        qx = wa * ax + wb * bx
        qy = wa * ay + wb * by
        qz = wa * az + wb * bz
    qn = math.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
    qw, qx, qy, qz = qw / qn, qx / qn, qy / qn, qz / qn
    sx = (1.0 - s) * trs0[7] + s * trs1[7]
    sy = (1.0 - s) * trs0[8] + s * trs1[8]
    sz = (1.0 - s) * trs0[9] + s * trs1[9]
    # rotation matrix
    r00 = 1.0 - 2.0 * (qy * qy + qz * qz)
    r01 = 2.0 * (qx * qy - qw * qz)
    r02 = 2.0 * (qx * qz + qw * qy)
    r10 = 2.0 * (qx * qy + qw * qz)
    r11 = 1.0 - 2.0 * (qx * qx + qz * qz)
    r12 = 2.0 * (qy * qz - qw * qx)
    r20 = 2.0 * (qx * qz - qw * qy)
    r21 = 2.0 * (qy * qz + qw * qx)
    r22 = 1.0 - 2.0 * (qx * qx + qy * qy)
    out_m[0, 0] = r00 * sx; out_m[0, 1] = r01 * sy; out_m[0, 2] = r02 * sz; out_m[0, 3] = tx
    out_m[1, 0] = r10 * sx; out_m[1, 1] = r11 * sy; out_m[1, 2] = r12 * sz; out_m[1, 3] = ty
    out_m[2, 0] = r20 * sx; out_m[2, 1] = r21 * sy; out_m[2, 2] = r22 * sz; out_m[2, 3] = tz
    out_m[3, 0] = 0.0; out_m[3, 1] = 0.0; out_m[3, 2] = 0.0; out_m[3, 3] = 1.0
    # inverse = S^-1 R^T T^-1
    isx, isy, isz = 1.0 / sx, 1.0 / sy, 1.0 / sz
    out_inv[0, 0] = r00 * isx; out_inv[0, 1] = r10 * isx; out_inv[0, 2] = r20 * isx
    out_inv[1, 0] = r01 * isy; out_inv[1, 1] = r11 * isy; out_inv[1, 2] = r21 * isy
    out_inv[2, 0] = r02 * isz; out_inv[2, 1] = r12 * isz; out_inv[2, 2] = r22 * isz
    out_inv[0, 3] = -(out_inv[0, 0] * tx + out_inv[0, 1] * ty + out_inv[0, 2] * tz)
    out_inv[1, 3] = -(out_inv[1, 0] * tx + out_inv[1, 1] * ty + out_inv[1, 2] * tz)
    out_inv[2, 3] = -(out_inv[2, 0] * tx + out_inv[2, 1] * ty + out_inv[2, 2] * tz)
    out_inv[3, 0] = 0.0; out_inv[3, 1] = 0.0; out_inv[3, 2] = 0.0; out_inv[3, 3] = 1.0


@njit(cache=True, inline="always")
def _inst_inverse(scn, inst, time, tmp_m, tmp_inv):
    """Returns the world->local matrix for an instance at shutter time."""
    if scn[8][inst] == 0:
        return scn[10][inst]
    _trs_at(scn[11][inst], scn[12][inst], time, tmp_m, tmp_inv)
    return tmp_inv


@njit(cache=True, inline="always")
def _inst_matrix(scn, inst, time, tmp_m, tmp_inv):
    if scn[8][inst] == 0:
        return scn[9][inst]
    _trs_at(scn[11][inst], scn[12][inst], time, tmp_m, tmp_inv)
    return tmp_m


# ---------------------------------------------------------------------------
# Ray / AABB / triangle intersection

@njit(cache=True, inline="always")
def _aabb_hit(bounds, i, ox, oy, oz, idx, idy, idz, tmin, tmax):
    t0 = (bounds[i, 0] - ox) * idx
    t1 = (bounds[i, 3] - ox) * idx
    if t0 > t1:
        t0, t1 = t1, t0
    lo = t0 if t0 > tmin else tmin
    hi = t1 if t1 < tmax else tmax
    t0 = (bounds[i, 1] - oy) * idy
    t1 = (bounds[i, 4] - oy) * idy
    if t0 > t1:
        t0, t1 = t1, t0
    if t0 > lo:
        lo = t0
    if t1 < hi:
        hi = t1
    t0 = (bounds[i, 2] - oz) * idz
    t1 = (bounds[i, 5] - oz) * idz
    if t0 > t1:
        t0, t1 = t1, t0
    if t0 > lo:
        lo = t0
    if t1 < hi:
        hi = t1
    return lo <= hi


@njit(cache=True, inline="always")
def _tri_test(tv, p, ox, oy, oz, dx, dy, dz, tmin, tmax):
    """Moller-Trumbore, two-sided. Returns (hit, t, u, v)."""
    e1x = tv[p, 3] - tv[p, 0]
    e1y = tv[p, 4] - tv[p, 1]
    e1z = tv[p, 5] - tv[p, 2]
    e2x = tv[p, 6] - tv[p, 0]
    e2y = tv[p, 7] - tv[p, 1]
    e2z = tv[p, 8] - tv[p, 2]
    px, py, pz = _cross(dx, dy, dz, e2x, e2y, e2z)
    det = e1x * px + e1y * py + e1z * pz
    if abs(det) < 1e-300:
        return False, 0.0, 0.0, 0.0
    inv = 1.0 / det
    tx = ox - tv[p, 0]
    ty = oy - tv[p, 1]
    tz = oz - tv[p, 2]
    u = (tx * px + ty * py + tz * pz) * inv
    if u < 0.0 or u > 1.0:
        return False, 0.0, 0.0, 0.0
    qx, qy, qz = _cross(tx, ty, tz, e1x, e1y, e1z)
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return False, 0.0, 0.0, 0.0
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    if t < tmin or t > tmax:
        return False, 0.0, 0.0, 0.0
    return True, t, u, v


@njit(cache=True)
def _blas_traverse(scn, mesh_id, inst, ox, oy, oz, dx, dy, dz, tmin,
                   best_t, best_inst, best_tri, best_prim, best_u, best_v, stack):
    """Traverse one mesh BVH with a local-space ray. Returns updated best."""
    blas_bounds = scn[14]
    blas_meta = scn[15]
    tv = scn[16]
    tri_id = scn[19]
    idx = 1.0 / dx if dx != 0.0 else math.inf
    idy = 1.0 / dy if dy != 0.0 else math.inf
    idz = 1.0 / dz if dz != 0.0 else math.inf
    sp = 0
    stack[sp] = scn[13][mesh_id]
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if not _aabb_hit(blas_bounds, node, ox, oy, oz, idx, idy, idz, tmin, best_t):
            continue
        if blas_meta[node, 2] == 1:
            first = blas_meta[node, 0]
            count = blas_meta[node, 1]
            for p in range(first, first + count):
                ok, t, u, v = _tri_test(tv, p, ox, oy, oz, dx, dy, dz, tmin, best_t)
                if ok:
                    tid = tri_id[p]
                    if (t < best_t or (t == best_t and
                                       (inst < best_inst or (inst == best_inst and tid < best_tri)))):
                        best_t = t
                        best_inst = inst
                        best_tri = tid
                        best_prim = p
                        best_u = u
                        best_v = v
        else:
            stack[sp] = blas_meta[node, 0]
            sp += 1
            stack[sp] = blas_meta[node, 1]
            sp += 1
    return best_t, best_inst, best_tri, best_prim, best_u, best_v


@njit(cache=True)
def _fill_hit(scn, ox, oy, oz, dx, dy, dz, time, best_t, best_inst, best_tri,
              best_prim, best_u, best_v, hit_f, hit_i, tmp_m, tmp_inv):
    tv = scn[16]
    tn = scn[17]
    tuv = scn[18]
    p = best_prim
    u = best_u
    v = best_v
    w = 1.0 - u - v
    inv = _inst_inverse(scn, best_inst, time, tmp_m, tmp_inv)
    # local geometric normal
    e1x = tv[p, 3] - tv[p, 0]; e1y = tv[p, 4] - tv[p, 1]; e1z = tv[p, 5] - tv[p, 2]
    e2x = tv[p, 6] - tv[p, 0]; e2y = tv[p, 7] - tv[p, 1]; e2z = tv[p, 8] - tv[p, 2]
    ngx, ngy, ngz = _cross(e1x, e1y, e1z, e2x, e2y, e2z)
    # world normals via inverse-transpose (rows of inv are columns of inv^T)
    wnx = inv[0, 0] * ngx + inv[1, 0] * ngy + inv[2, 0] * ngz
    wny = inv[0, 1] * ngx + inv[1, 1] * ngy + inv[2, 1] * ngz
    wnz = inv[0, 2] * ngx + inv[1, 2] * ngy + inv[2, 2] * ngz
    wnx, wny, wnz = _norm3(wnx, wny, wnz)
    nsx = w * tn[p, 0] + u * tn[p, 3] + v * tn[p, 6]
    nsy = w * tn[p, 1] + u * tn[p, 4] + v * tn[p, 7]
    nsz = w * tn[p, 2] + u * tn[p, 5] + v * tn[p, 8]
    snx = inv[0, 0] * nsx + inv[1, 0] * nsy + inv[2, 0] * nsz
    sny = inv[0, 1] * nsx + inv[1, 1] * nsy + inv[2, 1] * nsz
    snz = inv[0, 2] * nsx + inv[1, 2] * nsy + inv[2, 2] * nsz
    sn = math.sqrt(snx * snx + sny * sny + snz * snz)
    if sn < 1e-20:
        snx, sny, snz = wnx, wny, wnz
    else:
        snx, sny, snz = snx / sn, sny / sn, snz / sn
    hit_f[0] = best_t
    hit_f[1] = u
    hit_f[2] = v
    hit_f[3] = wnx; hit_f[4] = wny; hit_f[5] = wnz
    hit_f[6] = snx; hit_f[7] = sny; hit_f[8] = snz
    hit_f[9] = w * tuv[p, 0] + u * tuv[p, 2] + v * tuv[p, 4]
    hit_f[10] = w * tuv[p, 1] + u * tuv[p, 3] + v * tuv[p, 5]
    hit_f[11] = ox + best_t * dx
    hit_f[12] = oy + best_t * dy
    hit_f[13] = oz + best_t * dz
    hit_i[0] = best_inst
    hit_i[1] = best_tri
    hit_i[2] = scn[4][best_inst]
    hit_i[3] = best_prim


@njit(cache=True)
def intersect_scene(scn, ox, oy, oz, dx, dy, dz, tmin, tmax, time,
                    hit_f, hit_i, tstack, bstack, tmp_m, tmp_inv):
    """Nearest surface hit through the two-level BVH. Returns True on hit."""
    tlas_bounds = scn[0]
    tlas_meta = scn[1]
    tlas_prims = scn[2]
    if tlas_meta.shape[0] == 0:
        return False
    idx = 1.0 / dx if dx != 0.0 else math.inf
    idy = 1.0 / dy if dy != 0.0 else math.inf
    idz = 1.0 / dz if dz != 0.0 else math.inf
    best_t = tmax
    best_inst = np.int64(2147483647)
    best_tri = np.int64(2147483647)
    best_prim = np.int64(-1)
    best_u = 0.0
    best_v = 0.0
    sp = 0
    tstack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = tstack[sp]
        if not _aabb_hit(tlas_bounds, node, ox, oy, oz, idx, idy, idz, tmin, best_t):
            continue
        if tlas_meta[node, 2] == 1:
            first = tlas_meta[node, 0]
            count = tlas_meta[node, 1]
            for k in range(first, first + count):
                inst = np.int64(tlas_prims[k])
                if scn[7][inst] >= 0:
                    continue  # volume instances are handled by the medium code
                inv = _inst_inverse(scn, inst, time, tmp_m, tmp_inv)
                lox = inv[0, 0] * ox + inv[0, 1] * oy + inv[0, 2] * oz + inv[0, 3]
                loy = inv[1, 0] * ox + inv[1, 1] * oy + inv[1, 2] * oz + inv[1, 3]
                loz = inv[2, 0] * ox + inv[2, 1] * oy + inv[2, 2] * oz + inv[2, 3]
                ldx = inv[0, 0] * dx + inv[0, 1] * dy + inv[0, 2] * dz
                ldy = inv[1, 0] * dx + inv[1, 1] * dy + inv[1, 2] * dz
                ldz = inv[2, 0] * dx + inv[2, 1] * dy + inv[2, 2] * dz
                best_t, best_inst, best_tri, best_prim, best_u, best_v = _blas_traverse(
                    scn, scn[3][inst], inst, lox, loy, loz, ldx, ldy, ldz, tmin,
                    best_t, best_inst, best_tri, best_prim, best_u, best_v, bstack)
        else:
            tstack[sp] = tlas_meta[node, 0]
            sp += 1
            tstack[sp] = tlas_meta[node, 1]
            sp += 1
    if best_prim < 0:
        return False
    _fill_hit(scn, ox, oy, oz, dx, dy, dz, time, best_t, best_inst, best_tri,
              best_prim, best_u, best_v, hit_f, hit_i, tmp_m, tmp_inv)
    return True


@njit(cache=True)
def occluded_scene(scn, p0x, p0y, p0z, p1x, p1y, p1z, time,
                   hit_f, hit_i, tstack, bstack, tmp_m, tmp_inv):
    """Any-hit test between two (already epsilon-offset) points."""
    dx = p1x - p0x
    dy = p1y - p0y
    dz = p1z - p0z
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    if dist < 1e-12:
        return False
    dx, dy, dz = dx / dist, dy / dist, dz / dist
    return intersect_scene(scn, p0x, p0y, p0z, dx, dy, dz, 0.0, dist, time,
                           hit_f, hit_i, tstack, bstack, tmp_m, tmp_inv)


# ---------------------------------------------------------------------------
# Textures

@njit(cache=True)
def tex_lookup(tex_info, tex_data, tex, u, v, out4):
    """Bilinear fetch with repeat wrapping, texel-center convention."""
    off = tex_info[tex, 0]
    w = tex_info[tex, 1]
    h = tex_info[tex, 2]
    fu = u * w - 0.5
    fv = v * h - 0.5
    x0 = int(math.floor(fu))
    y0 = int(math.floor(fv))
    ax = fu - x0
    ay = fv - y0
    for c in range(4):
        out4[c] = 0.0
    for j in range(2):
        yy = (y0 + j) % h
        if yy < 0:
            yy += h
        wy = ay if j == 1 else 1.0 - ay
        for i in range(2):
            xx = (x0 + i) % w
            if xx < 0:
                xx += w
            wx = ax if i == 1 else 1.0 - ax
            base = off + (yy * w + xx) * 4
            wgt = wx * wy
            out4[0] += wgt * tex_data[base]
            out4[1] += wgt * tex_data[base + 1]
            out4[2] += wgt * tex_data[base + 2]
            out4[3] += wgt * tex_data[base + 3]


@njit(cache=True)
def resolve_material(scn, mat, u, v, out):
    """Resolved parameters: out = [cr, cg, cb, roughness, metallic,
    transmission, ior]. Texture-driven parameters are sampled at (u, v)."""
    ms = scn[21]
    mt = scn[22]
    tex_info = scn[23]
    tex_data = scn[24]
    tmp = np.empty(4)
    out[0] = ms[mat, 0]
    out[1] = ms[mat, 1]
    out[2] = ms[mat, 2]
    if mt[mat, 0] >= 0:
        tex_lookup(tex_info, tex_data, mt[mat, 0], u, v, tmp)
        out[0] = tmp[0]
        out[1] = tmp[1]
        out[2] = tmp[2]
    out[3] = ms[mat, 3]
    if mt[mat, 1] >= 0:
        tex_lookup(tex_info, tex_data, mt[mat, 1], u, v, tmp)
        out[3] = tmp[0]
    out[4] = ms[mat, 4]
    if mt[mat, 2] >= 0:
        tex_lookup(tex_info, tex_data, mt[mat, 2], u, v, tmp)
        out[4] = tmp[0]
    out[5] = ms[mat, 5]
    if mt[mat, 3] >= 0:
        tex_lookup(tex_info, tex_data, mt[mat, 3], u, v, tmp)
        out[5] = tmp[0]
    out[6] = ms[mat, 6]
    for k in range(6):
        if k < 3:
            if out[k] < 0.0:
                out[k] = 0.0
            elif out[k] > 1.0:
                out[k] = 1.0
    for k in range(3, 6):
        if out[k] < 0.0:
            out[k] = 0.0
        elif out[k] > 1.0:
            out[k] = 1.0


@njit(cache=True)
def shading_frame(scn, mat, ngx, ngy, ngz, nsx, nsy, nsz, prim, u, v, frame):
    """World-space shading frame (t, b, n) with optional normal mapping.

    frame receives 9 floats: tangent, bitangent, normal. Falls back to the
    unperturbed shading normal when the uv-derived tangent is degenerate."""
    nmap = scn[22][mat, 4] if mat >= 0 else -1
    nx, ny, nz = nsx, nsy, nsz
    if nmap >= 0 and prim >= 0:
        tv = scn[16]
        tuv = scn[18]
        p = prim
        e1x = tv[p, 3] - tv[p, 0]; e1y = tv[p, 4] - tv[p, 1]; e1z = tv[p, 5] - tv[p, 2]
        e2x = tv[p, 6] - tv[p, 0]; e2y = tv[p, 7] - tv[p, 1]; e2z = tv[p, 8] - tv[p, 2]
        du1 = tuv[p, 2] - tuv[p, 0]
        dv1 = tuv[p, 3] - tuv[p, 1]
        du2 = tuv[p, 4] - tuv[p, 0]
        dv2 = tuv[p, 5] - tuv[p, 1]
        det = du1 * dv2 - du2 * dv1
        if abs(det) > 1e-12:
            inv = 1.0 / det
            tx = inv * (dv2 * e1x - dv1 * e2x)
            ty = inv * (dv2 * e1y - dv1 * e2y)
            tz = inv * (dv2 * e1z - dv1 * e2z)
            # Gram-Schmidt against the shading normal
            d = tx * nx + ty * ny + tz * nz
            tx -= d * nx
            ty -= d * ny
            tz -= d * nz
            tl = math.sqrt(tx * tx + ty * ty + tz * tz)
            if tl > 1e-12:
                tx, ty, tz = tx / tl, ty / tl, tz / tl
                bx, by, bz = _cross(nx, ny, nz, tx, ty, tz)
                tmp = np.empty(4)
                tex_lookup(scn[23], scn[24], nmap, u, v, tmp)
                mx = 2.0 * tmp[0] - 1.0
                my = 2.0 * tmp[1] - 1.0
                mz = 2.0 * tmp[2] - 1.0
                nx2 = mx * tx + my * bx + mz * nx
                ny2 = mx * ty + my * by + mz * ny
                nz2 = mx * tz + my * bz + mz * nz
                nx, ny, nz = _norm3(nx2, ny2, nz2)
    t0x, t0y, t0z, t1x, t1y, t1z = make_frame(nx, ny, nz)
    frame[0] = t0x; frame[1] = t0y; frame[2] = t0z
    frame[3] = t1x; frame[4] = t1y; frame[5] = t1z
    frame[6] = nx; frame[7] = ny; frame[8] = nz


# ---------------------------------------------------------------------------
# Principled BSDF subset: diffuse + GGX coat + conductor + dielectric glass

@njit(cache=True, inline="always")
def _schlick(f0, c):
    m = 1.0 - c
    if m < 0.0:
        m = 0.0
    m2 = m * m
    return f0 + (1.0 - f0) * m2 * m2 * m


@njit(cache=True, inline="always")
def _fresnel_dielectric(ci, eta_rel):
    """Schlick Fresnel with TIR handling; eta_rel = n_transmitted/n_incident."""
    f0 = ((eta_rel - 1.0) / (eta_rel + 1.0))
    f0 = f0 * f0
    if eta_rel < 1.0:
        s2 = (1.0 - ci * ci) / (eta_rel * eta_rel)
        if s2 >= 1.0:
            return 1.0
        return _schlick(f0, math.sqrt(1.0 - s2))
    return _schlick(f0, ci)


@njit(cache=True, inline="always")
def _ggx_d(alpha, hz):
    if hz <= 0.0:
        return 0.0
    a2 = alpha * alpha
    d = hz * hz * (a2 - 1.0) + 1.0
    return a2 / (math.pi * d * d)


@njit(cache=True, inline="always")
def _ggx_g1(alpha, cz):
    if cz <= 0.0:
        return 0.0
    a2 = alpha * alpha
    return 2.0 * cz / (cz + math.sqrt(a2 + (1.0 - a2) * cz * cz))


@njit(cache=True)
def bsdf_lobe_probs(cr, cg, cb, rough, metal, trans, ior):
    """Lobe selection probabilities (diffuse, coat, metal, glass)."""
    s = 1.0 - rough
    f0 = ((ior - 1.0) / (ior + 1.0)) ** 2
    favg = f0 + (1.0 - f0) / 21.0
    lum = _luminance(cr, cg, cb)
    wp = (1.0 - metal) * (1.0 - trans)
    wt = (1.0 - metal) * trans
    a_d = wp * lum * (1.0 - s * favg)
    a_c = wp * s * favg
    a_m = metal * (lum + (1.0 - lum) / 21.0)
    a_g = wt
    tot = a_d + a_c + a_m + a_g
    if tot <= 0.0:
        return 0.0, 0.0, 0.0, 0.0
    return a_d / tot, a_c / tot, a_m / tot, a_g / tot


@njit(cache=True)
def bsdf_eval(cr, cg, cb, rough, metal, trans, ior, eta_rel,
              wox, woy, woz, wix, wiy, wiz):
    """(f_r, f_g, f_b, pdf) in the local frame; woz > 0 is required.

    Delta lobes contribute nothing here (unreachable by light sampling);
    eta_rel is n_transmitted/n_incident on the wo side of the surface."""
    if woz <= 0.0:
        return 0.0, 0.0, 0.0, 0.0
    alpha = rough * rough
    s = 1.0 - rough
    f0 = ((ior - 1.0) / (ior + 1.0)) ** 2
    favg = f0 + (1.0 - f0) / 21.0
    wp = (1.0 - metal) * (1.0 - trans)
    wt = (1.0 - metal) * trans
    p_d, p_c, p_m, p_g = bsdf_lobe_probs(cr, cg, cb, rough, metal, trans, ior)
    fr = 0.0
    fg = 0.0
    fb = 0.0
    pdf = 0.0
    if wiz > 0.0:
        # diffuse with reciprocal Fresnel coupling to the coat
        if wp > 0.0:
            kd = (1.0 - s * _schlick(f0, wiz)) * (1.0 - s * _schlick(f0, woz)) / (1.0 - s * favg)
            d = wp * kd / math.pi
            fr += d * cr
            fg += d * cg
            fb += d * cb
        pdf += p_d * wiz / math.pi
        if alpha > DELTA_ALPHA:
            hx = wox + wix
            hy = woy + wiy
            hz_ = woz + wiz
            hx, hy, hz = _norm3(hx, hy, hz_)
            ch = wox * hx + woy * hy + woz * hz
            if ch > 0.0 and hz > 0.0:
                dd = _ggx_d(alpha, hz)
                gg = _ggx_g1(alpha, woz) * _ggx_g1(alpha, wiz)
                spec = dd * gg / (4.0 * woz * wiz)
                if wp > 0.0 and s > 0.0:
                    fc = s * wp * _schlick(f0, ch) * spec
                    fr += fc
                    fg += fc
                    fb += fc
                if metal > 0.0:
                    fr += metal * spec * _schlick(cr, ch)
                    fg += metal * spec * _schlick(cg, ch)
                    fb += metal * spec * _schlick(cb, ch)
                pdf_h = dd * hz / (4.0 * ch)
                pdf += (p_c + p_m) * pdf_h
                if wt > 0.0:
                    fdi = _fresnel_dielectric(ch, eta_rel)
                    g = wt * fdi * spec
                    fr += g * cr
                    fg += g * cg
                    fb += g * cb
                    pdf += p_g * fdi * pdf_h
    else:
        # transmission through the rough glass lobe (Walter et al.)
        if wt > 0.0 and alpha > DELTA_ALPHA:
            hx = wox + eta_rel * wix
            hy = woy + eta_rel * wiy
            hz_ = woz + eta_rel * wiz
            hx, hy, hz = _norm3(hx, hy, hz_)
            if hz < 0.0:
                hx, hy, hz = -hx, -hy, -hz
            ch_o = wox * hx + woy * hy + woz * hz
            ch_i = wix * hx + wiy * hy + wiz * hz
            if ch_o > 0.0 and ch_i < 0.0:
                fdi = _fresnel_dielectric(ch_o, eta_rel)
                dd = _ggx_d(alpha, hz)
                gg = _ggx_g1(alpha, woz) * _ggx_g1(alpha, -wiz)
                denom = ch_o + eta_rel * ch_i
                if abs(denom) > 1e-12:
                    common = (abs(ch_i) * ch_o / (abs(wiz) * woz)
                              * (1.0 - fdi) * gg * dd / (denom * denom))
                    g = wt * common
                    fr += g * cr
                    fg += g * cg
                    fb += g * cb
                    pdf_h = dd * hz
                    jac = abs(ch_i) * eta_rel * eta_rel / (denom * denom)
                    pdf += p_g * (1.0 - fdi) * pdf_h * jac
    return fr, fg, fb, pdf


@njit(cache=True)
def bsdf_sample(cr, cg, cb, rough, metal, trans, ior, eta_rel,
                wox, woy, woz, st, out):
    """Sample a direction. out = [wix, wiy, wiz, wr, wg, wb, pdf, specular].

    weight = f * |cos| / pdf; delta lobes report pdf 1 and specular = 1.
    Returns False for rejected (zero-contribution) samples."""
    if woz <= 0.0:
        return False
    alpha = rough * rough
    p_d, p_c, p_m, p_g = bsdf_lobe_probs(cr, cg, cb, rough, metal, trans, ior)
    tot = p_d + p_c + p_m + p_g
    if tot <= 0.0:
        return False
    u = rand_f(st)
    delta = alpha <= DELTA_ALPHA
    if u < p_d:
        # cosine-weighted hemisphere
        r1 = rand_f(st)
        r2 = rand_f(st)
        r = math.sqrt(r1)
        phi = 2.0 * math.pi * r2
        wix = r * math.cos(phi)
        wiy = r * math.sin(phi)
        wiz = math.sqrt(max(1.0 - r1, 0.0))
        if wiz <= 0.0:
            return False
    else:
        glass = u >= p_d + p_c + p_m
        if delta:
            hx, hy, hz = 0.0, 0.0, 1.0
        else:
            r1 = rand_f(st)
            r2 = rand_f(st)
            c2 = (1.0 - r1) / (1.0 + (alpha * alpha - 1.0) * r1)
            hz = math.sqrt(max(c2, 0.0))
            sh = math.sqrt(max(1.0 - c2, 0.0))
            phi = 2.0 * math.pi * r2
            hx = sh * math.cos(phi)
            hy = sh * math.sin(phi)
        ch = wox * hx + woy * hy + woz * hz
        if ch <= 0.0:
            return False
        if glass:
            fdi = _fresnel_dielectric(ch, eta_rel)
            if rand_f(st) < fdi:
                wix = 2.0 * ch * hx - wox
                wiy = 2.0 * ch * hy - woy
                wiz = 2.0 * ch * hz - woz
                if wiz <= 0.0:
                    return False
            else:
                inv_eta = 1.0 / eta_rel
                s2 = inv_eta * inv_eta * (1.0 - ch * ch)
                if s2 >= 1.0:
                    return False
                ct = math.sqrt(1.0 - s2)
                wix = -wox * inv_eta + (inv_eta * ch - ct) * hx
                wiy = -woy * inv_eta + (inv_eta * ch - ct) * hy
                wiz = -woz * inv_eta + (inv_eta * ch - ct) * hz
                wix, wiy, wiz = _norm3(wix, wiy, wiz)
                if wiz >= 0.0:
                    return False
        else:
            wix = 2.0 * ch * hx - wox
            wiy = 2.0 * ch * hy - woy
            wiz = 2.0 * ch * hz - woz
            if wiz <= 0.0:
                return False
        if delta:
            # delta lobes: conventional pdf of 1, weight carries everything
            if glass:
                fdi = _fresnel_dielectric(woz, eta_rel)
                sel = fdi if wiz > 0.0 else 1.0 - fdi
                wr = cr / p_g
                wg = cg / p_g
                wb = cb / p_g
                # selection of reflect/refract cancels the Fresnel factor;
                # fold lobe weight and picking probability only
                wt_lobe = (1.0 - metal) * trans
                wr *= wt_lobe; wg *= wt_lobe; wb *= wt_lobe
            elif u < p_d + p_c:
                f = _schlick(((ior - 1.0) / (ior + 1.0)) ** 2, woz)
                s = 1.0 - rough
                wp = (1.0 - metal) * (1.0 - trans)
                wr = wp * s * f / p_c
                wg = wr
                wb = wr
            else:
                wr = metal * _schlick(cr, woz) / p_m
                wg = metal * _schlick(cg, woz) / p_m
                wb = metal * _schlick(cb, woz) / p_m
            out[0] = wix; out[1] = wiy; out[2] = wiz
            out[3] = wr; out[4] = wg; out[5] = wb
            out[6] = 1.0
            out[7] = 1.0
            return True
    # non-delta: shared eval guarantees sample/eval consistency
    fr, fg, fb, pdf = bsdf_eval(cr, cg, cb, rough, metal, trans, ior, eta_rel,
                                wox, woy, woz, wix, wiy, wiz)
    if pdf <= 0.0:
        return False
    ac = abs(wiz) / pdf
    out[0] = wix; out[1] = wiy; out[2] = wiz
    out[3] = fr * ac; out[4] = fg * ac; out[5] = fb * ac
    out[6] = pdf
    out[7] = 0.0
    return True


# ---------------------------------------------------------------------------
# Environment

@njit(cache=True)
def env_radiance(env_info, tex_info, tex_data, env_tex, env_marg, env_cond,
                 dx, dy, dz, out3):
    mode = int(env_info[0])
    out3[0] = 0.0
    out3[1] = 0.0
    out3[2] = 0.0
    if mode == 0:
        return
    if env_info[5] != 0.0 and dz < 0.0:
        return
    if mode == 1:
        out3[0] = env_info[1]
        out3[1] = env_info[2]
        out3[2] = env_info[3]
        return
    phi = math.atan2(dy, dx) - env_info[4]
    u = phi / (2.0 * math.pi)
    u = u - math.floor(u)
    theta = math.acos(min(max(dz, -1.0), 1.0))
    v = theta / math.pi
    tmp = np.empty(4)
    # clamp v to the row-center range so bilinear never wraps across poles
    h = tex_info[env_tex, 2]
    vmin = 0.5 / h
    if v < vmin:
        v = vmin
    elif v > 1.0 - vmin:
        v = 1.0 - vmin
    tex_lookup(tex_info, tex_data, env_tex, u, v, tmp)
    out3[0] = tmp[0]
    out3[1] = tmp[1]
    out3[2] = tmp[2]


@njit(cache=True)
def env_pdf(env_info, tex_info, tex_data, env_tex, dx, dy, dz):
    """Solid-angle pdf that env_sample assigns to this direction."""
    mode = int(env_info[0])
    if mode == 0:
        return 0.0
    if mode == 1 or env_info[6] <= 0.0:
        return 1.0 / (4.0 * math.pi)
    if env_info[5] != 0.0 and dz < 0.0:
        return 0.0
    w = tex_info[env_tex, 1]
    h = tex_info[env_tex, 2]
    phi = math.atan2(dy, dx) - env_info[4]
    u = phi / (2.0 * math.pi)
    u = u - math.floor(u)
    theta = math.acos(min(max(dz, -1.0), 1.0))
    v = theta / math.pi
    x = min(int(u * w), w - 1)
    y = min(int(v * h), h - 1)
    base = tex_info[env_tex, 0] + (y * w + x) * 4
    lum = _luminance(tex_data[base], tex_data[base + 1], tex_data[base + 2])
    row_sin = math.sin(math.pi * (y + 0.5) / h)
    share = lum * row_sin / env_info[6]
    st = math.sin(theta)
    if st < 1e-9:
        st = 1e-9
    return share * w * h / (2.0 * math.pi * math.pi * st)


@njit(cache=True)
def env_sample(env_info, tex_info, tex_data, env_tex, env_marg, env_cond, st, out):
    """Importance-sample the environment. out = [wx, wy, wz, Lr, Lg, Lb, pdf]."""
    mode = int(env_info[0])
    if mode == 0:
        out[6] = 0.0
        return
    if mode == 1 or env_info[6] <= 0.0:
        # uniform sphere
        z = 1.0 - 2.0 * rand_f(st)
        r = math.sqrt(max(1.0 - z * z, 0.0))
        phi = 2.0 * math.pi * rand_f(st)
        out[0] = r * math.cos(phi)
        out[1] = r * math.sin(phi)
        out[2] = z
        env_radiance(env_info, tex_info, tex_data, env_tex, env_marg, env_cond,
                     out[0], out[1], out[2], out[3:6])
        out[6] = 1.0 / (4.0 * math.pi)
        return
    w = tex_info[env_tex, 1]
    h = tex_info[env_tex, 2]
    u1 = rand_f(st)
    u2 = rand_f(st)
    # binary search the row marginal
    lo = 0
    hi = h - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if env_marg[mid] < u1:
            lo = mid + 1
        else:
            hi = mid
    y = lo
    lo = 0
    hi = w - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if env_cond[y, mid] < u2:
            lo = mid + 1
        else:
            hi = mid
    x = lo
    uu = (x + rand_f(st)) / w
    vv = (y + rand_f(st)) / h
    theta = math.pi * vv
    phi = 2.0 * math.pi * uu + env_info[4]
    sth = math.sin(theta)
    out[0] = sth * math.cos(phi)
    out[1] = sth * math.sin(phi)
    out[2] = math.cos(theta)
    env_radiance(env_info, tex_info, tex_data, env_tex, env_marg, env_cond,
                 out[0], out[1], out[2], out[3:6])
    base = tex_info[env_tex, 0] + (y * w + x) * 4
    lum = _luminance(tex_data[base], tex_data[base + 1], tex_data[base + 2])
    row_sin = math.sin(math.pi * (y + 0.5) / h)
    share = lum * row_sin / env_info[6]
    if sth < 1e-9:
        sth = 1e-9
    out[6] = share * w * h / (2.0 * math.pi * math.pi * sth)


# ---------------------------------------------------------------------------
# Lights (next event estimation)

@njit(cache=True)
def light_emitted(scn, light_id, u, v, facing, out3):
    """Emitted radiance; facing is dot(view_dir, light normal) sign."""
    ls = scn[25]
    lt = scn[26]
    out3[0] = 0.0
    out3[1] = 0.0
    out3[2] = 0.0
    if facing <= 0.0 and ls[light_id, 4] == 0.0:
        return
    inten = ls[light_id, 0]
    if lt[light_id] >= 0:
        tmp = np.empty(4)
        tex_lookup(scn[23], scn[24], lt[light_id], u, v, tmp)
        out3[0] = inten * tmp[0]
        out3[1] = inten * tmp[1]
        out3[2] = inten * tmp[2]
    else:
        out3[0] = inten * ls[light_id, 1]
        out3[1] = inten * ls[light_id, 2]
        out3[2] = inten * ls[light_id, 3]


@njit(cache=True)
def light_pdf_for_hit(scn, inst, px, py, pz, hx, hy, hz, lnx, lny, lnz):
    """Solid-angle pdf of NEE sampling the surface point hit at h from p."""
    li = int(scn[43][inst])
    if li < 0:
        return 0.0
    n_strategies = scn[27].shape[0] + (1 if scn[31][7] != 0.0 else 0)
    if n_strategies == 0:
        return 0.0
    dx = hx - px
    dy = hy - py
    dz = hz - pz
    d2 = dx * dx + dy * dy + dz * dz
    dist = math.sqrt(d2)
    if dist < 1e-12:
        return 0.0
    cosl = abs((dx * lnx + dy * lny + dz * lnz) / dist)
    if cosl < 1e-9:
        return 0.0
    area = scn[30][li]
    if area <= 0.0:
        return 0.0
    return d2 / (area * cosl) / n_strategies


@njit(cache=True)
def sample_light_nee(scn, px, py, pz, st, out):
    """Pick a light (or the environment) and sample a direction toward it.

    out = [wx, wy, wz, Lr, Lg, Lb, pdf, dist, light_inst]; pdf is in solid
    angle with the uniform picking probability folded in. dist is inf for
    the environment; light_inst is -1 for it. pdf 0 means nothing to sample."""
    n_lights = scn[27].shape[0]
    # constant domes are left to BSDF sampling (zero variance for diffuse);
    # only importance-sampled texture domes join the NEE strategy set
    has_env = 1 if scn[31][7] != 0.0 else 0
    n = n_lights + has_env
    out[6] = 0.0
    out[8] = -1.0
    if n == 0:
        return
    pick = int(rand_f(st) * n)
    if pick >= n:
        pick = n - 1
    if pick == n_lights:
        # environment strategy
        tmp = np.empty(7)
        env_sample(scn[31], scn[23], scn[24], np.int64(scn[32]), scn[33], scn[34], st, tmp)
        if tmp[6] <= 0.0:
            return
        out[0] = tmp[0]; out[1] = tmp[1]; out[2] = tmp[2]
        out[3] = tmp[3]; out[4] = tmp[4]; out[5] = tmp[5]
        out[6] = tmp[6] / n
        out[7] = math.inf
        out[8] = -1.0
        return
    li = pick
    rng_lo = scn[28][li, 0]
    cnt = scn[28][li, 1]
    u1 = rand_f(st)
    lo = 0
    hi = cnt - 1
    cdf = scn[29]
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[rng_lo + mid] < u1:
            lo = mid + 1
        else:
            hi = mid
    tri = rng_lo + lo
    ltv = scn[41]
    ltuv = scn[42]
    r1 = math.sqrt(rand_f(st))
    r2 = rand_f(st)
    b0 = 1.0 - r1
    b1 = r1 * (1.0 - r2)
    b2 = r1 * r2
    sx = b0 * ltv[tri, 0] + b1 * ltv[tri, 3] + b2 * ltv[tri, 6]
    sy = b0 * ltv[tri, 1] + b1 * ltv[tri, 4] + b2 * ltv[tri, 7]
    sz = b0 * ltv[tri, 2] + b1 * ltv[tri, 5] + b2 * ltv[tri, 8]
    e1x = ltv[tri, 3] - ltv[tri, 0]; e1y = ltv[tri, 4] - ltv[tri, 1]; e1z = ltv[tri, 5] - ltv[tri, 2]
    e2x = ltv[tri, 6] - ltv[tri, 0]; e2y = ltv[tri, 7] - ltv[tri, 1]; e2z = ltv[tri, 8] - ltv[tri, 2]
    lnx, lny, lnz = _cross(e1x, e1y, e1z, e2x, e2y, e2z)
    lnx, lny, lnz = _norm3(lnx, lny, lnz)
    dx = sx - px
    dy = sy - py
    dz = sz - pz
    d2 = dx * dx + dy * dy + dz * dz
    dist = math.sqrt(d2)
    if dist < 1e-9:
        return
    dx, dy, dz = dx / dist, dy / dist, dz / dist
    cosl = -(dx * lnx + dy * lny + dz * lnz)
    inst = int(scn[27][li])
    light_id = int(scn[6][inst])
    su = b0 * ltuv[tri, 0] + b1 * ltuv[tri, 2] + b2 * ltuv[tri, 4]
    sv = b0 * ltuv[tri, 1] + b1 * ltuv[tri, 3] + b2 * ltuv[tri, 5]
    rad = np.empty(3)
    light_emitted(scn, light_id, su, sv, cosl, rad)
    acl = abs(cosl)
    if acl < 1e-9:
        return
    area = scn[30][li]
    out[0] = dx; out[1] = dy; out[2] = dz
    out[3] = rad[0]; out[4] = rad[1]; out[5] = rad[2]
    out[6] = d2 / (area * acl) / n
    out[7] = dist
    out[8] = float(inst)


# ---------------------------------------------------------------------------
# Volumes: trilinear density, ratio/delta tracking, Henyey-Greenstein phase

@njit(cache=True)
def vol_density(vol_info, vol_data, vid, lx, ly, lz):
    """Trilinear density in grid-local [0,1]^3; zero outside the cube."""
    if lx < 0.0 or lx > 1.0 or ly < 0.0 or ly > 1.0 or lz < 0.0 or lz > 1.0:
        return 0.0
    off = vol_info[vid, 0]
    nx = vol_info[vid, 1]
    ny = vol_info[vid, 2]
    nz = vol_info[vid, 3]
    fx = lx * nx - 0.5
    fy = ly * ny - 0.5
    fz = lz * nz - 0.5
    x0 = int(math.floor(fx))
    y0 = int(math.floor(fy))
    z0 = int(math.floor(fz))
    ax = fx - x0
    ay = fy - y0
    az = fz - z0
    acc = 0.0
    for k in range(2):
        zz = z0 + k
        if zz < 0:
            zz = 0
        elif zz >= nz:
            zz = nz - 1
        wz = az if k == 1 else 1.0 - az
        for j in range(2):
            yy = y0 + j
            if yy < 0:
                yy = 0
            elif yy >= ny:
                yy = ny - 1
            wy = ay if j == 1 else 1.0 - ay
            for i in range(2):
                xx = x0 + i
                if xx < 0:
                    xx = 0
                elif xx >= nx:
                    xx = nx - 1
                wx = ax if i == 1 else 1.0 - ax
                acc += wx * wy * wz * vol_data[off + (zz * ny + yy) * nx + xx]
    return acc


@njit(cache=True)
def vol_transmittance(vol_info, vol_data, vid, sigma_t, max_density,
                      min_density, ox, oy, oz, dx, dy, dz, t0, t1, st):
    """Residual ratio tracking along [t0, t1] (local coords).

    The extinction floor sigma_t * min_density is integrated analytically;
    only the residual above it is tracked stochastically. A homogeneous
    medium therefore returns the exact exponential with zero variance."""
    if t1 <= t0:
        return 1.0
    control = sigma_t * min_density
    tr = math.exp(-control * (t1 - t0))
    majorant = sigma_t * max_density - control
    if majorant <= 0.0:
        return tr
    t = t0
    while True:
        t -= math.log(1.0 - rand_f(st)) / majorant
        if t >= t1:
            return tr
        dens = vol_density(vol_info, vol_data, vid, ox + t * dx, oy + t * dy, oz + t * dz)
        tr *= 1.0 - (sigma_t * dens - control) / majorant
        if tr <= 0.0:
            return 0.0


@njit(cache=True)
def vol_sample_distance(vol_info, vol_data, vid, sigma_t, max_density,
                        ox, oy, oz, dx, dy, dz, t0, t1, st):
    """Delta tracking: first real collision in [t0, t1], or -1.0 for none."""
    majorant = sigma_t * max_density
    if majorant <= 0.0 or t1 <= t0:
        return -1.0
    t = t0
    while True:
        t -= math.log(1.0 - rand_f(st)) / majorant
        if t >= t1:
            return -1.0
        dens = vol_density(vol_info, vol_data, vid, ox + t * dx, oy + t * dy, oz + t * dz)
        if rand_f(st) < sigma_t * dens / majorant:
            return t


@njit(cache=True, inline="always")
def hg_pdf(g, cos_theta):
    d = 1.0 + g * g - 2.0 * g * cos_theta
    if d < 1e-12:
        d = 1e-12
    return (1.0 - g * g) / (4.0 * math.pi * d * math.sqrt(d))


@njit(cache=True)
def hg_sample(g, wox, woy, woz, st, out):
    """Sample a Henyey-Greenstein direction around -wo (forward scattering
    convention: cos measured against the propagation direction)."""
    u1 = rand_f(st)
    u2 = rand_f(st)
    if abs(g) < 1e-3:
        ct = 1.0 - 2.0 * u1
    else:
        sq = (1.0 - g * g) / (1.0 + g - 2.0 * g * u1)
        ct = (1.0 + g * g - sq * sq) / (2.0 * g)
    sti = math.sqrt(max(1.0 - ct * ct, 0.0))
    phi = 2.0 * math.pi * u2
    # propagation direction is -wo
    fx, fy, fz = -wox, -woy, -woz
    t0x, t0y, t0z, t1x, t1y, t1z = make_frame(fx, fy, fz)
    out[0] = sti * math.cos(phi) * t0x + sti * math.sin(phi) * t1x + ct * fx
    out[1] = sti * math.cos(phi) * t0y + sti * math.sin(phi) * t1y + ct * fy
    out[2] = sti * math.cos(phi) * t0z + sti * math.sin(phi) * t1z + ct * fz
    out[3] = hg_pdf(g, ct)


@njit(cache=True, inline="always")
def _ray_box_01(ox, oy, oz, dx, dy, dz, tmin, tmax):
    """Clip a local-space ray to the [0,1]^3 cube."""
    lo = tmin
    hi = tmax
    for axis in range(3):
        if axis == 0:
            o, d = ox, dx
        elif axis == 1:
            o, d = oy, dy
        else:
            o, d = oz, dz
        if d == 0.0:
            if o < 0.0 or o > 1.0:
                return 1.0, 0.0
            continue
        inv = 1.0 / d
        t0 = (0.0 - o) * inv
        t1 = (1.0 - o) * inv
        if t0 > t1:
            t0, t1 = t1, t0
        if t0 > lo:
            lo = t0
        if t1 < hi:
            hi = t1
    return lo, hi


@njit(cache=True)
def scene_transmittance(scn, px, py, pz, qx, qy, qz, st, tmp_m, tmp_inv, time):
    """Transmittance through all volume instances between two points."""
    nvol = scn[44].shape[0]
    if nvol == 0:
        return 1.0
    dx = qx - px
    dy = qy - py
    dz = qz - pz
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    if dist < 1e-12:
        return 1.0
    dx, dy, dz = dx / dist, dy / dist, dz / dist
    tr = 1.0
    for k in range(nvol):
        inst = int(scn[44][k])
        vid = int(scn[7][inst])
        inv = _inst_inverse(scn, inst, time, tmp_m, tmp_inv)
        lox = inv[0, 0] * px + inv[0, 1] * py + inv[0, 2] * pz + inv[0, 3]
        loy = inv[1, 0] * px + inv[1, 1] * py + inv[1, 2] * pz + inv[1, 3]
        loz = inv[2, 0] * px + inv[2, 1] * py + inv[2, 2] * pz + inv[2, 3]
        ldx = inv[0, 0] * dx + inv[0, 1] * dy + inv[0, 2] * dz
        ldy = inv[1, 0] * dx + inv[1, 1] * dy + inv[1, 2] * dz
        ldz = inv[2, 0] * dx + inv[2, 1] * dy + inv[2, 2] * dz
        scale = math.sqrt(ldx * ldx + ldy * ldy + ldz * ldz)
        if scale < 1e-12:
            continue
        ldx, ldy, ldz = ldx / scale, ldy / scale, ldz / scale
        t0, t1 = _ray_box_01(lox, loy, loz, ldx, ldy, ldz, 0.0, dist * scale)
        if t1 <= t0:
            continue
        vs = scn[36]
        tr *= vol_transmittance(scn[35], scn[37], vid, vs[vid, 0] / scale, vs[vid, 5],
                                vs[vid, 6], lox, loy, loz, ldx, ldy, ldz, t0, t1, st)
        if tr <= 0.0:
            return 0.0
    return tr
