"""Path tracing and annotation kernels over the compiled scene tuple."""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from .kernels import (
    DELTA_ALPHA,
    FLOW_INVALID,
    RR_MIN_SURVIVAL,
    RR_START_DEPTH,
    SHADOW_EPS_SCALE,
    _luminance,
    bsdf_eval,
    bsdf_lobe_probs,
    bsdf_sample,
    env_pdf,
    env_radiance,
    hg_pdf,
    hg_sample,
    intersect_scene,
    light_emitted,
    light_pdf_for_hit,
    occluded_scene,
    rand_f,
    resolve_material,
    rng_init,
    sample_light_nee,
    scene_transmittance,
    shading_frame,
    vol_sample_distance,
    _inst_inverse,
    _inst_matrix,
    _norm3,
    _ray_box_01,
)

TILE = 32


@njit(cache=True, inline="always")
def mis_power(pdf_a, pdf_b):
    a2 = pdf_a * pdf_a
    b2 = pdf_b * pdf_b
    d = a2 + b2
    if d <= 0.0:
        return 0.0
    return a2 / d


@njit(cache=True)
def gen_camera_ray(cam_params, c2w, width, height, px, py, lu, lv, out6):
    """Pinhole/thin-lens ray through raster position (px, py) in pixels."""
    fov_y = cam_params[0]
    aspect = cam_params[1]
    aperture = cam_params[2]
    focus = cam_params[3]
    tan_half = math.tan(0.5 * fov_y)
    u = (px / width) * 2.0 - 1.0
    v = (py / height) * 2.0 - 1.0
    dx = u * tan_half * aspect
    dy = -v * tan_half
    dz = -1.0
    ox = 0.0
    oy = 0.0
    oz = 0.0
    if aperture > 0.0:
        # focal-plane point for the pinhole direction
        fx = dx * focus
        fy = dy * focus
        fz = dz * focus
        r = aperture * math.sqrt(lu)
        phi = 2.0 * math.pi * lv
        ox = r * math.cos(phi)
        oy = r * math.sin(phi)
        dx = fx - ox
        dy = fy - oy
        dz = fz - oz
    dx, dy, dz = _norm3(dx, dy, dz)
    wx = c2w[0, 0] * ox + c2w[0, 1] * oy + c2w[0, 2] * oz + c2w[0, 3]
    wy = c2w[1, 0] * ox + c2w[1, 1] * oy + c2w[1, 2] * oz + c2w[1, 3]
    wz = c2w[2, 0] * ox + c2w[2, 1] * oy + c2w[2, 2] * oz + c2w[2, 3]
    wdx = c2w[0, 0] * dx + c2w[0, 1] * dy + c2w[0, 2] * dz
    wdy = c2w[1, 0] * dx + c2w[1, 1] * dy + c2w[1, 2] * dz
    wdz = c2w[2, 0] * dx + c2w[2, 1] * dy + c2w[2, 2] * dz
    out6[0] = wx
    out6[1] = wy
    out6[2] = wz
    out6[3] = wdx
    out6[4] = wdy
    out6[5] = wdz


@njit(cache=True)
def _nearest_volume_event(scn, ox, oy, oz, dx, dy, dz, tmin, tmax, time,
                          st, tmp_m, tmp_inv):
    """Earliest delta-tracking collision across volume instances.

    Returns (t, volume_instance) with t < 0 when no collision occurs."""
    vol_list = scn[44]
    best_t = -1.0
    best_inst = -1
    for k in range(vol_list.shape[0]):
        inst = int(vol_list[k])
        vid = int(scn[7][inst])
        inv = _inst_inverse(scn, inst, time, tmp_m, tmp_inv)
        lox = inv[0, 0] * ox + inv[0, 1] * oy + inv[0, 2] * oz + inv[0, 3]
        loy = inv[1, 0] * ox + inv[1, 1] * oy + inv[1, 2] * oz + inv[1, 3]
        loz = inv[2, 0] * ox + inv[2, 1] * oy + inv[2, 2] * oz + inv[2, 3]
        ldx = inv[0, 0] * dx + inv[0, 1] * dy + inv[0, 2] * dz
        ldy = inv[1, 0] * dx + inv[1, 1] * dy + inv[1, 2] * dz
        ldz = inv[2, 0] * dx + inv[2, 1] * dy + inv[2, 2] * dz
        scale = math.sqrt(ldx * ldx + ldy * ldy + ldz * ldz)
        if scale < 1e-12:
            continue
        ldx, ldy, ldz = ldx / scale, ldy / scale, ldz / scale
        hi = tmax * scale if tmax != math.inf else math.inf
        t0, t1 = _ray_box_01(lox, loy, loz, ldx, ldy, ldz, tmin * scale, hi)
        if t1 <= t0:
            continue
        vs = scn[36]
        tl = vol_sample_distance(scn[35], scn[37], vid, vs[vid, 0] / scale, vs[vid, 5],
                                 lox, loy, loz, ldx, ldy, ldz, t0, t1, st)
        if tl >= 0.0:
            tw = tl / scale
            if best_t < 0.0 or tw < best_t:
                best_t = tw
                best_inst = inst
    return best_t, best_inst


@njit(cache=True)
def trace_path(scn, ox, oy, oz, dx, dy, dz, time, max_depth, clamp_value, st,
               hit_f, hit_i, tstack, bstack, tmp_m, tmp_inv, out3):
    """One full path; adds nothing to out3 beyond this sample's radiance."""
    thr_r = 1.0
    thr_g = 1.0
    thr_b = 1.0
    out3[0] = 0.0
    out3[1] = 0.0
    out3[2] = 0.0
    prev_pdf = 0.0
    prev_specular = True
    eps = SHADOW_EPS_SCALE * scn[38]
    nee = np.empty(9)
    samp = np.empty(8)
    par = np.empty(7)
    frame = np.empty(9)
    rad = np.empty(3)
    hg_out = np.empty(4)
    n_lights = scn[27].shape[0]
    has_env = 1 if scn[31][7] != 0.0 else 0
    n_strategies = n_lights + has_env
    depth = 0
    tmin = 0.0
    while True:
        hit = intersect_scene(scn, ox, oy, oz, dx, dy, dz, tmin, math.inf, time,
                              hit_f, hit_i, tstack, bstack, tmp_m, tmp_inv)
        t_limit = hit_f[0] if hit else math.inf
        if scn[44].shape[0] > 0:
            vt, vinst = _nearest_volume_event(scn, ox, oy, oz, dx, dy, dz, tmin,
                                              t_limit, time, st, tmp_m, tmp_inv)
        else:
            vt = -1.0
            vinst = -1
        if vt >= 0.0 and vt < t_limit:
            # medium interaction
            vid = int(scn[7][vinst])
            vs = scn[36]
            alb_r = vs[vid, 1]
            alb_g = vs[vid, 2]
            alb_b = vs[vid, 3]
            g = vs[vid, 4]
            p_scatter = (alb_r + alb_g + alb_b) / 3.0
            if p_scatter <= 0.0 or rand_f(st) >= p_scatter:
                break  # absorbed
            thr_r *= alb_r / p_scatter
            thr_g *= alb_g / p_scatter
            thr_b *= alb_b / p_scatter
            px = ox + vt * dx
            py = oy + vt * dy
            pz = oz + vt * dz
            # next event estimation from the scattering point
            if n_strategies > 0:
                sample_light_nee(scn, px, py, pz, st, nee)
                if nee[6] > 0.0:
                    wx, wy, wz = nee[0], nee[1], nee[2]
                    # phase measured against propagation (+d): cos = d.w
                    ph = hg_pdf(g, dx * wx + dy * wy + dz * wz)
                    if ph > 0.0:
                        dist = nee[7]
                        if dist == math.inf:
                            far = 1e16
                        else:
                            far = dist - eps
                        qx = px + wx * far
                        qy = py + wy * far
                        qz = pz + wz * far
                        blocked = occluded_scene(scn, px, py, pz, qx, qy, qz, time,
                                                 hit_f, hit_i, tstack, bstack, tmp_m, tmp_inv)
                        if not blocked:
                            tr = scene_transmittance(scn, px, py, pz, qx, qy, qz,
                                                     st, tmp_m, tmp_inv, time)
                            w = mis_power(nee[6], ph)
                            k = ph * tr * w / nee[6]
                            cr = thr_r * nee[3] * k
                            cg = thr_g * nee[4] * k
                            cb = thr_b * nee[5] * k
                            if depth >= 1 and clamp_value > 0.0:
                                cr = min(cr, clamp_value)
                                cg = min(cg, clamp_value)
                                cb = min(cb, clamp_value)
                            out3[0] += cr
                            out3[1] += cg
                            out3[2] += cb
            hg_sample(g, -dx, -dy, -dz, st, hg_out)
            ox, oy, oz = px, py, pz
            dx, dy, dz = hg_out[0], hg_out[1], hg_out[2]
            prev_pdf = hg_out[3]
            prev_specular = False
            tmin = 0.0
            depth += 1
        elif not hit:
            env_radiance(scn[31], scn[23], scn[24], np.int64(scn[32]), scn[33],
                         scn[34], dx, dy, dz, rad)
            if rad[0] > 0.0 or rad[1] > 0.0 or rad[2] > 0.0:
                if prev_specular or has_env == 0:
                    # NEE never samples this environment; no double counting
                    w = 1.0
                else:
                    pl = env_pdf(scn[31], scn[23], scn[24], np.int64(scn[32]),
                                 dx, dy, dz) / n_strategies
                    w = mis_power(prev_pdf, pl)
                cr = thr_r * rad[0] * w
                cg = thr_g * rad[1] * w
                cb = thr_b * rad[2] * w
                if depth >= 2 and clamp_value > 0.0:
                    cr = min(cr, clamp_value)
                    cg = min(cg, clamp_value)
                    cb = min(cb, clamp_value)
                out3[0] += cr
                out3[1] += cg
                out3[2] += cb
            break
        else:
            inst = hit_i[0]
            px = hit_f[11]
            py = hit_f[12]
            pz = hit_f[13]
            ngx, ngy, ngz = hit_f[3], hit_f[4], hit_f[5]
            facing = -(dx * ngx + dy * ngy + dz * ngz)
            light_id = scn[6][inst]
            if light_id >= 0:
                light_emitted(scn, light_id, hit_f[9], hit_f[10], facing, rad)
                if rad[0] > 0.0 or rad[1] > 0.0 or rad[2] > 0.0:
                    if prev_specular:
                        w = 1.0
                    else:
                        pl = light_pdf_for_hit(scn, inst, ox, oy, oz,
                                               px, py, pz, ngx, ngy, ngz)
                        w = mis_power(prev_pdf, pl)
                    cr = thr_r * rad[0] * w
                    cg = thr_g * rad[1] * w
                    cb = thr_b * rad[2] * w
                    if depth >= 2 and clamp_value > 0.0:
                        cr = min(cr, clamp_value)
                        cg = min(cg, clamp_value)
                        cb = min(cb, clamp_value)
                    out3[0] += cr
                    out3[1] += cg
                    out3[2] += cb
            mat = scn[5][inst]
            if mat < 0:
                break  # emissive-only surface absorbs the path
            resolve_material(scn, mat, hit_f[9], hit_f[10], par)
            cr_, cg_, cb_ = par[0], par[1], par[2]
            rough = par[3]
            metal = par[4]
            trans = par[5]
            ior = par[6]
            eta_rel = ior if facing > 0.0 else 1.0 / ior
            # flip normals toward wo
            if facing < 0.0:
                ngx, ngy, ngz = -ngx, -ngy, -ngz
            nsx, nsy, nsz = hit_f[6], hit_f[7], hit_f[8]
            if dx * nsx + dy * nsy + dz * nsz > 0.0:
                nsx, nsy, nsz = -nsx, -nsy, -nsz
            shading_frame(scn, mat, ngx, ngy, ngz, nsx, nsy, nsz,
                          hit_i[3], hit_f[9], hit_f[10], frame)
            # wo in local frame
            wox = -(dx * frame[0] + dy * frame[1] + dz * frame[2])
            woy = -(dx * frame[3] + dy * frame[4] + dz * frame[5])
            woz = -(dx * frame[6] + dy * frame[7] + dz * frame[8])
            if woz <= 0.0:
                woz = 1e-9
            # next event estimation (skipped for purely delta materials)
            alpha_m = rough * rough
            has_nondelta = alpha_m > DELTA_ALPHA or (1.0 - metal) * (1.0 - trans) > 0.0
            if n_strategies > 0 and has_nondelta:
                sample_light_nee(scn, px, py, pz, st, nee)
                if nee[6] > 0.0:
                    wx, wy, wz = nee[0], nee[1], nee[2]
                    wix = wx * frame[0] + wy * frame[1] + wz * frame[2]
                    wiy = wx * frame[3] + wy * frame[4] + wz * frame[5]
                    wiz = wx * frame[6] + wy * frame[7] + wz * frame[8]
                    fr, fg, fb, pdf_b = bsdf_eval(cr_, cg_, cb_, rough, metal, trans,
                                                  ior, eta_rel, wox, woy, woz,
                                                  wix, wiy, wiz)
                    if fr > 0.0 or fg > 0.0 or fb > 0.0:
                        side = 1.0 if (wx * ngx + wy * ngy + wz * ngz) > 0.0 else -1.0
                        sx = px + side * eps * ngx
                        sy = py + side * eps * ngy
                        sz = pz + side * eps * ngz
                        dist = nee[7]
                        far = 1e16 if dist == math.inf else dist - 2.0 * eps
                        qx = sx + wx * far
                        qy = sy + wy * far
                        qz = sz + wz * far
                        blocked = occluded_scene(scn, sx, sy, sz, qx, qy, qz, time,
                                                 hit_f, hit_i, tstack, bstack,
                                                 tmp_m, tmp_inv)
                        if not blocked:
                            tr = scene_transmittance(scn, sx, sy, sz, qx, qy, qz,
                                                     st, tmp_m, tmp_inv, time)
                            w = mis_power(nee[6], pdf_b)
                            k = abs(wiz) * tr * w / nee[6]
                            ccr = thr_r * fr * nee[3] * k
                            ccg = thr_g * fg * nee[4] * k
                            ccb = thr_b * fb * nee[5] * k
                            if depth >= 1 and clamp_value > 0.0:
                                ccr = min(ccr, clamp_value)
                                ccg = min(ccg, clamp_value)
                                ccb = min(ccb, clamp_value)
                            out3[0] += ccr
                            out3[1] += ccg
                            out3[2] += ccb
            # continuation
            ok = bsdf_sample(cr_, cg_, cb_, rough, metal, trans, ior, eta_rel,
                             wox, woy, woz, st, samp)
            if not ok:
                break
            lx, ly, lz = samp[0], samp[1], samp[2]
            wx = lx * frame[0] + ly * frame[3] + lz * frame[6]
            wy = lx * frame[1] + ly * frame[4] + lz * frame[7]
            wz = lx * frame[2] + ly * frame[5] + lz * frame[8]
            thr_r *= samp[3]
            thr_g *= samp[4]
            thr_b *= samp[5]
            prev_specular = samp[7] != 0.0
            prev_pdf = samp[6]
            side = 1.0 if (wx * ngx + wy * ngy + wz * ngz) > 0.0 else -1.0
            ox = px + side * eps * ngx
            oy = py + side * eps * ngy
            oz = pz + side * eps * ngz
            dx, dy, dz = wx, wy, wz
            tmin = 0.0
            depth += 1
        if depth >= max_depth:
            break
        if depth >= RR_START_DEPTH:
            mx = max(thr_r, max(thr_g, thr_b))
            survival = min(1.0, mx)
            if survival < RR_MIN_SURVIVAL:
                survival = RR_MIN_SURVIVAL
            if rand_f(st) >= survival:
                break
            thr_r /= survival
            thr_g /= survival
            thr_b /= survival
        if not (math.isfinite(thr_r) and math.isfinite(thr_g) and math.isfinite(thr_b)):
            break
    return 0


@njit(cache=True, parallel=True)
def render_kernel(scn, width, height, spp, max_depth, seed, clamp_value,
                  accum, counts, dropped):
    ntx = (width + TILE - 1) // TILE
    nty = (height + TILE - 1) // TILE
    for tile in prange(ntx * nty):
        ty = tile // ntx
        tx = tile % ntx
        st = np.empty(1, np.uint64)
        hit_f = np.empty(16)
        hit_i = np.empty(4, np.int64)
        tstack = np.empty(128, np.int32)
        bstack = np.empty(128, np.int32)
        tmp_m = np.empty((4, 4))
        tmp_inv = np.empty((4, 4))
        ray = np.empty(6)
        out3 = np.empty(3)
        for y in range(ty * TILE, min((ty + 1) * TILE, height)):
            for x in range(tx * TILE, min((tx + 1) * TILE, width)):
                pix = y * width + x
                ar = 0.0
                ag = 0.0
                ab = 0.0
                n_ok = 0
                for s in range(spp):
                    rng_init(st, seed, pix, s)
                    jx = rand_f(st)
                    jy = rand_f(st)
                    lu = rand_f(st)
                    lv = rand_f(st)
                    time = rand_f(st)
                    gen_camera_ray(scn[45], scn[40], width, height,
                                   x + jx, y + jy, lu, lv, ray)
                    trace_path(scn, ray[0], ray[1], ray[2], ray[3], ray[4], ray[5],
                               time, max_depth, clamp_value, st, hit_f, hit_i,
                               tstack, bstack, tmp_m, tmp_inv, out3)
                    if (math.isfinite(out3[0]) and math.isfinite(out3[1])
                            and math.isfinite(out3[2])):
                        ar += out3[0]
                        ag += out3[1]
                        ab += out3[2]
                        n_ok += 1
                    else:
                        dropped[tile] += 1
                accum[y, x, 0] += ar
                accum[y, x, 1] += ag
                accum[y, x, 2] += ab
                counts[y, x] += n_ok


@njit(cache=True, parallel=True)
def aov_kernel(scn, width, height, w2c0, intrinsics,
               depth_l, normal_l, seg_l, uv_l, flow_l, albedo_l, position_l):
    """Single deterministic center-of-pixel pass at shutter close.

    intrinsics = [fx, fy, cx, cy]."""
    fx = intrinsics[0]
    fy = intrinsics[1]
    cx = intrinsics[2]
    cy = intrinsics[3]
    inst_moving = scn[8]
    cam_static = True
    for r in range(4):
        for c in range(4):
            if scn[39][r, c] != scn[40][r, c]:
                cam_static = False
    for y in prange(height):
        hit_f = np.empty(16)
        hit_i = np.empty(4, np.int64)
        tstack = np.empty(128, np.int32)
        bstack = np.empty(128, np.int32)
        tmp_m = np.empty((4, 4))
        tmp_inv = np.empty((4, 4))
        ray = np.empty(6)
        par = np.empty(7)
        frame = np.empty(9)
        for x in range(width):
            gen_camera_ray_pinhole(scn[45], scn[40], width, height,
                                   x + 0.5, y + 0.5, ray)
            ok = intersect_scene(scn, ray[0], ray[1], ray[2], ray[3], ray[4], ray[5],
                                 0.0, math.inf, 1.0, hit_f, hit_i,
                                 tstack, bstack, tmp_m, tmp_inv)
            if not ok:
                depth_l[y, x] = math.inf
                normal_l[y, x, 0] = 0.0
                normal_l[y, x, 1] = 0.0
                normal_l[y, x, 2] = 0.0
                seg_l[y, x] = -1
                uv_l[y, x, 0] = 0.0
                uv_l[y, x, 1] = 0.0
                flow_l[y, x, 0] = FLOW_INVALID
                flow_l[y, x, 1] = -FLOW_INVALID
                albedo_l[y, x, 0] = 0.0
                albedo_l[y, x, 1] = 0.0
                albedo_l[y, x, 2] = 0.0
                position_l[y, x, 0] = 0.0
                position_l[y, x, 1] = 0.0
                position_l[y, x, 2] = 0.0
                continue
            inst = hit_i[0]
            depth_l[y, x] = hit_f[0]
            seg_l[y, x] = hit_i[2]
            uv_l[y, x, 0] = hit_f[9]
            uv_l[y, x, 1] = hit_f[10]
            position_l[y, x, 0] = hit_f[11]
            position_l[y, x, 1] = hit_f[12]
            position_l[y, x, 2] = hit_f[13]
            mat = scn[5][inst]
            if mat >= 0:
                resolve_material(scn, mat, hit_f[9], hit_f[10], par)
                albedo_l[y, x, 0] = par[0]
                albedo_l[y, x, 1] = par[1]
                albedo_l[y, x, 2] = par[2]
                shading_frame(scn, mat, hit_f[3], hit_f[4], hit_f[5],
                              hit_f[6], hit_f[7], hit_f[8], hit_i[3],
                              hit_f[9], hit_f[10], frame)
                normal_l[y, x, 0] = frame[6]
                normal_l[y, x, 1] = frame[7]
                normal_l[y, x, 2] = frame[8]
            else:
                albedo_l[y, x, 0] = 0.0
                albedo_l[y, x, 1] = 0.0
                albedo_l[y, x, 2] = 0.0
                normal_l[y, x, 0] = hit_f[6]
                normal_l[y, x, 1] = hit_f[7]
                normal_l[y, x, 2] = hit_f[8]
            # optical flow: object point under the previous transforms,
            # projected through the previous camera pose; nothing moved
            # means the reprojection is an identity, so skip the matrix
            # round trip and its last-ulp rounding
            if cam_static and inst_moving[inst] == 0:
                flow_l[y, x, 0] = 0.0
                flow_l[y, x, 1] = 0.0
                continue
            inv1 = _inst_inverse(scn, inst, 1.0, tmp_m, tmp_inv)
            wxp = hit_f[11]
            wyp = hit_f[12]
            wzp = hit_f[13]
            lx = inv1[0, 0] * wxp + inv1[0, 1] * wyp + inv1[0, 2] * wzp + inv1[0, 3]
            ly = inv1[1, 0] * wxp + inv1[1, 1] * wyp + inv1[1, 2] * wzp + inv1[1, 3]
            lz = inv1[2, 0] * wxp + inv1[2, 1] * wyp + inv1[2, 2] * wzp + inv1[2, 3]
            m0 = _inst_matrix(scn, inst, 0.0, tmp_m, tmp_inv)
            pwx = m0[0, 0] * lx + m0[0, 1] * ly + m0[0, 2] * lz + m0[0, 3]
            pwy = m0[1, 0] * lx + m0[1, 1] * ly + m0[1, 2] * lz + m0[1, 3]
            pwz = m0[2, 0] * lx + m0[2, 1] * ly + m0[2, 2] * lz + m0[2, 3]
            ccx = w2c0[0, 0] * pwx + w2c0[0, 1] * pwy + w2c0[0, 2] * pwz + w2c0[0, 3]
            ccy = w2c0[1, 0] * pwx + w2c0[1, 1] * pwy + w2c0[1, 2] * pwz + w2c0[1, 3]
            ccz = w2c0[2, 0] * pwx + w2c0[2, 1] * pwy + w2c0[2, 2] * pwz + w2c0[2, 3]
            if ccz >= -1e-12:
                flow_l[y, x, 0] = FLOW_INVALID
                flow_l[y, x, 1] = -FLOW_INVALID
            else:
                pu = cx + fx * (ccx / -ccz)
                pv = cy - fy * (ccy / -ccz)
                flow_l[y, x, 0] = (x + 0.5) - pu
                flow_l[y, x, 1] = (y + 0.5) - pv


@njit(cache=True)
def gen_camera_ray_pinhole(cam_params, c2w, width, height, px, py, out6):
    """Center-sample pinhole ray used by the annotation pass."""
    fov_y = cam_params[0]
    aspect = cam_params[1]
    tan_half = math.tan(0.5 * fov_y)
    u = (px / width) * 2.0 - 1.0
    v = (py / height) * 2.0 - 1.0
    dx = u * tan_half * aspect
    dy = -v * tan_half
    dz = -1.0
    dx, dy, dz = _norm3(dx, dy, dz)
    out6[0] = c2w[0, 3]
    out6[1] = c2w[1, 3]
    out6[2] = c2w[2, 3]
    out6[3] = c2w[0, 0] * dx + c2w[0, 1] * dy + c2w[0, 2] * dz
    out6[4] = c2w[1, 0] * dx + c2w[1, 1] * dy + c2w[1, 2] * dz
    out6[5] = c2w[2, 0] * dx + c2w[2, 1] * dy + c2w[2, 2] * dz
