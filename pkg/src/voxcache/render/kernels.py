"""Compiled per-pass kernels for the wavefront loop and the cache probe.

The render stages (ray generation, coordinate computation, sampling,
shading) run as numba kernels over compacted ray arrays, mirroring a
GPU wavefront renderer's kernel-per-pass structure. Every kernel has a
serial and a parallel build; small batches dispatch to the serial one
because thread-pool synchronization would dominate the tail iterations.

The probe kernel fuses native coordinate conversion, stochastic LoD
selection, page-table lookup with LoD fallback, and in-brick trilinear
interpolation; its arithmetic matches the numpy reference path in the
cache module op for op.
"""

from __future__ import annotations

import warnings

import numpy as np

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    import numba
    from numba import njit, prange

# workqueue has the cheapest dispatch for the many small launches here
numba.config.THREADING_LAYER = "workqueue"

_PARALLEL_CUTOVER = 6144

F32_1 = np.float32(1.0)


@njit(cache=True, inline="always")
def _advance_one(
    i, o, d, t_en, t_ex, cursor_f, cursor_k, active, adaptive, skip_empty,
    dt_base, mu_floor, mu_flat, gx, gy, gz, cwx, cwy, cwz,
    out_pos, out_dt, out_tmid, sample_mask, done_mask,
):
    sample_mask[i] = False
    done_mask[i] = False
    if not active[i]:
        return
    ox = o[i, 0]
    oy = o[i, 1]
    oz = o[i, 2]
    dx = d[i, 0]
    dy = d[i, 1]
    dz = d[i, 2]
    end = t_ex[i]
    if adaptive:
        t_c = cursor_f[i]
    else:
        t_c = t_en[i] + (cursor_k[i] + 0.5) * dt_base
    while True:
        if t_c >= end:
            done_mask[i] = True
            return
        px = ox + dx * t_c
        py = oy + dy * t_c
        pz = oz + dz * t_c
        cx = int(px / cwx)
        cy = int(py / cwy)
        cz = int(pz / cwz)
        if cx < 0:
            cx = 0
        elif cx > gx - 1:
            cx = gx - 1
        if cy < 0:
            cy = 0
        elif cy > gy - 1:
            cy = gy - 1
        if cz < 0:
            cz = 0
        elif cz > gz - 1:
            cz = gz - 1
        mu = mu_flat[cx + gx * (cy + gy * cz)]

        if skip_empty and mu <= 0.0:
            # parametric exit of the current (empty) cell
            if dx > 0.0:
                tx = ((cx + 1) * cwx - ox) / dx
            elif dx < 0.0:
                tx = (cx * cwx - ox) / dx
            else:
                tx = np.inf
            if dy > 0.0:
                ty = ((cy + 1) * cwy - oy) / dy
            elif dy < 0.0:
                ty = (cy * cwy - oy) / dy
            else:
                ty = np.inf
            if dz > 0.0:
                tz = ((cz + 1) * cwz - oz) / dz
            elif dz < 0.0:
                tz = (cz * cwz - oz) / dz
            else:
                tz = np.inf
            t_exit_cell = min(tx, min(ty, tz))
            if t_exit_cell < t_c + 1e-9:
                t_exit_cell = t_c + 1e-9
            if adaptive:
                t_c = t_exit_cell + 1e-9
            else:
                jump = int(np.ceil((t_exit_cell - t_en[i]) / dt_base - 0.5))
                if jump < cursor_k[i] + 1:
                    jump = cursor_k[i] + 1
                cursor_k[i] = jump
                t_c = t_en[i] + (jump + 0.5) * dt_base
            continue

        if adaptive:
            base = mu if skip_empty else 1.0
            if base < mu_floor:
                base = mu_floor
            step = dt_base / base
            limit = end - t_c  # dense cells are not chopped at cell faces
            if step > limit:
                step = limit
            if step < 1e-9:
                step = 1e-9
            t_mid = t_c + 0.5 * step
            out_pos[i, 0] = ox + dx * t_mid
            out_pos[i, 1] = oy + dy * t_mid
            out_pos[i, 2] = oz + dz * t_mid
            out_dt[i] = step
            out_tmid[i] = t_mid
            cursor_f[i] = t_c + step
        else:
            out_pos[i, 0] = px
            out_pos[i, 1] = py
            out_pos[i, 2] = pz
            out_dt[i] = dt_base
            out_tmid[i] = t_c
            cursor_k[i] = cursor_k[i] + 1
        sample_mask[i] = True
        return


@njit(cache=True)
def _advance_serial(o, d, t_en, t_ex, cursor_f, cursor_k, active, adaptive, skip_empty,
                    dt_base, mu_floor, mu_flat, gx, gy, gz, cwx, cwy, cwz,
                    out_pos, out_dt, out_tmid, sample_mask, done_mask):
    for i in range(o.shape[0]):
        _advance_one(i, o, d, t_en, t_ex, cursor_f, cursor_k, active, adaptive, skip_empty,
                     dt_base, mu_floor, mu_flat, gx, gy, gz, cwx, cwy, cwz,
                     out_pos, out_dt, out_tmid, sample_mask, done_mask)


@njit(cache=True, parallel=True)
def _advance_parallel(o, d, t_en, t_ex, cursor_f, cursor_k, active, adaptive, skip_empty,
                      dt_base, mu_floor, mu_flat, gx, gy, gz, cwx, cwy, cwz,
                      out_pos, out_dt, out_tmid, sample_mask, done_mask):
    for i in prange(o.shape[0]):
        _advance_one(i, o, d, t_en, t_ex, cursor_f, cursor_k, active, adaptive, skip_empty,
                     dt_base, mu_floor, mu_flat, gx, gy, gz, cwx, cwy, cwz,
                     out_pos, out_dt, out_tmid, sample_mask, done_mask)


def advance_pass(o, *args):
    fn = _advance_parallel if o.shape[0] >= _PARALLEL_CUTOVER else _advance_serial
    fn(o, *args)


@njit(cache=True, inline="always")
def _probe_one(
    i, pos, dist, u, lod_scale, stochastic_mode, vx, vy, vz, max_lod, brick_size,
    table_flat, table_offsets, grids, pool_flat, last_used, frame,
    out_values, out_served, out_req,
):
    b = brick_size
    px = pos[i, 0] * vx - 0.5
    py = pos[i, 1] * vy - 0.5
    pz = pos[i, 2] * vz - 0.5
    if px < 0.0:
        px = 0.0
    elif px > vx - 1.0:
        px = vx - 1.0
    if py < 0.0:
        py = 0.0
    elif py > vy - 1.0:
        py = vy - 1.0
    if pz < 0.0:
        pz = 0.0
    elif pz > vz - 1.0:
        pz = vz - 1.0

    dd = dist[i] * lod_scale
    base_l = int(np.floor(dd))
    frac = dd - base_l
    if stochastic_mode == 0:
        lod = base_l + (1 if u[i] < frac else 0)
    elif stochastic_mode == 1:
        lod = base_l + (1 if u[i] > frac else 0)
    else:
        lod = base_l
    if lod < 0:
        lod = 0
    elif lod > max_lod:
        lod = max_lod
    out_req[i] = lod

    served = -1
    val = np.float32(0.0)
    for level in range(lod, max_lod + 1):
        span = b << level
        ggx = grids[level, 0]
        ggy = grids[level, 1]
        ggz = grids[level, 2]
        ix = int((px + 1.0) // span)
        iy = int((py + 1.0) // span)
        iz = int((pz + 1.0) // span)
        if ix < 0:
            ix = 0
        elif ix > ggx - 1:
            ix = ggx - 1
        if iy < 0:
            iy = 0
        elif iy > ggy - 1:
            iy = ggy - 1
        if iz < 0:
            iz = 0
        elif iz > ggz - 1:
            iz = ggz - 1
        slot = table_flat[table_offsets[level] + ix + ggx * (iy + ggy * iz)]
        if slot < 0:
            continue
        stride = 1 << level
        lx = (px - (ix * span - (1 if ix > 0 else 0))) / stride
        ly = (py - (iy * span - (1 if iy > 0 else 0))) / stride
        lz = (pz - (iz * span - (1 if iz > 0 else 0))) / stride
        if lx < 0.0:
            lx = 0.0
        elif lx > b - 1.0:
            lx = b - 1.0
        if ly < 0.0:
            ly = 0.0
        elif ly > b - 1.0:
            ly = b - 1.0
        if lz < 0.0:
            lz = 0.0
        elif lz > b - 1.0:
            lz = b - 1.0
        x0 = int(lx)
        y0 = int(ly)
        z0 = int(lz)
        if x0 > b - 2:
            x0 = b - 2
        if y0 > b - 2:
            y0 = b - 2
        if z0 > b - 2:
            z0 = b - 2
        fx = np.float32(lx - x0)
        fy = np.float32(ly - y0)
        fz = np.float32(lz - z0)
        hx = F32_1 - fx
        hy = F32_1 - fy
        hz = F32_1 - fz
        base = ((slot * b + z0) * b + y0) * b + x0
        sy = b
        sz = b * b
        c00 = pool_flat[base] * hx + pool_flat[base + 1] * fx
        c10 = pool_flat[base + sy] * hx + pool_flat[base + sy + 1] * fx
        c01 = pool_flat[base + sz] * hx + pool_flat[base + sz + 1] * fx
        c11 = pool_flat[base + sz + sy] * hx + pool_flat[base + sz + sy + 1] * fx
        val = (c00 * hy + c10 * fy) * hz + (c01 * hy + c11 * fy) * fz
        served = level
        # benign race: every writer this frame stores the same stamp
        last_used[slot] = frame
        break
    out_values[i] = val
    out_served[i] = served
    return served - lod  # 0 exact, >0 fallback, <0 miss marker


@njit(cache=True)
def _probe_serial(pos, dist, u, lod_scale, stochastic_mode, vx, vy, vz, max_lod, brick_size,
                  table_flat, table_offsets, grids, pool_flat, last_used, frame,
                  out_values, out_served, out_req):
    exact = 0
    fallback = 0
    miss = 0
    for i in range(pos.shape[0]):
        gap = _probe_one(i, pos, dist, u, lod_scale, stochastic_mode, vx, vy, vz, max_lod, brick_size,
                         table_flat, table_offsets, grids, pool_flat, last_used, frame,
                         out_values, out_served, out_req)
        if gap == 0:
            exact += 1
        elif gap > 0:
            fallback += 1
        else:
            miss += 1
    return exact, fallback, miss


@njit(cache=True, parallel=True)
def _probe_parallel(pos, dist, u, lod_scale, stochastic_mode, vx, vy, vz, max_lod, brick_size,
                    table_flat, table_offsets, grids, pool_flat, last_used, frame,
                    out_values, out_served, out_req):
    exact = 0
    fallback = 0
    miss = 0
    for i in prange(pos.shape[0]):
        gap = _probe_one(i, pos, dist, u, lod_scale, stochastic_mode, vx, vy, vz, max_lod, brick_size,
                         table_flat, table_offsets, grids, pool_flat, last_used, frame,
                         out_values, out_served, out_req)
        if gap == 0:
            exact += 1
        elif gap > 0:
            fallback += 1
        else:
            miss += 1
    return exact, fallback, miss


def probe_pass(pos, *args):
    fn = _probe_parallel if pos.shape[0] >= _PARALLEL_CUTOVER else _probe_serial
    return fn(pos, *args)


@njit(cache=True, inline="always")
def _shade_one(j, rows, values, dt_i, lut, adaptive, dt_base, term_threshold, color, trans, dead_mask):
    i = rows[j]
    v = values[j]
    if v < 0.0:
        v = np.float32(0.0)
    elif v > 1.0:
        v = np.float32(1.0)
    size = lut.shape[0]
    q = v * (size - 1)
    i0 = int(q)
    if i0 > size - 2:
        i0 = size - 2
    f = np.float32(q - i0)
    g = F32_1 - f
    r = lut[i0, 0] * g + lut[i0 + 1, 0] * f
    gg = lut[i0, 1] * g + lut[i0 + 1, 1] * f
    bb = lut[i0, 2] * g + lut[i0 + 1, 2] * f
    a = lut[i0, 3] * g + lut[i0 + 1, 3] * f
    alpha = float(a)
    if adaptive:
        ratio = dt_i[j] / dt_base
        if alpha > 1.0 - 1e-12:
            alpha = 1.0 - 1e-12
        if alpha * ratio < 1e-4:
            alpha = alpha * ratio  # (1-a)^r ~ 1-ra, error < 1e-8 here
        else:
            alpha = 1.0 - (1.0 - alpha) ** ratio
    w = trans[i] * alpha
    color[i, 0] += w * r
    color[i, 1] += w * gg
    color[i, 2] += w * bb
    trans[i] *= 1.0 - alpha
    if trans[i] < term_threshold:
        dead_mask[j] = True


@njit(cache=True)
def _shade_serial(rows, values, dt_i, lut, adaptive, dt_base, term_threshold, color, trans, dead_mask):
    for j in range(rows.shape[0]):
        _shade_one(j, rows, values, dt_i, lut, adaptive, dt_base, term_threshold, color, trans, dead_mask)


@njit(cache=True, parallel=True)
def _shade_parallel(rows, values, dt_i, lut, adaptive, dt_base, term_threshold, color, trans, dead_mask):
    for j in prange(rows.shape[0]):
        _shade_one(j, rows, values, dt_i, lut, adaptive, dt_base, term_threshold, color, trans, dead_mask)


def shade_pass(rows, *args):
    fn = _shade_parallel if rows.shape[0] >= _PARALLEL_CUTOVER else _shade_serial
    fn(rows, *args)


@njit(cache=True, inline="always")
def _raygen_one(i, base_dirs, rot, origin, tan_half_h, tan_half_v, dirs, t0_out, t1_out, keep):
    bx = base_dirs[i, 0] * tan_half_h
    by = base_dirs[i, 1] * tan_half_v
    dx = rot[0, 0] * bx + rot[0, 1] * by + rot[0, 2]
    dy = rot[1, 0] * bx + rot[1, 1] * by + rot[1, 2]
    dz = rot[2, 0] * bx + rot[2, 1] * by + rot[2, 2]
    inv = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
    dx *= inv
    dy *= inv
    dz *= inv
    dirs[i, 0] = dx
    dirs[i, 1] = dy
    dirs[i, 2] = dz

    t_near = -np.inf
    t_far = np.inf
    ok = True
    for a in range(3):
        oa = origin[a]
        da = dx if a == 0 else (dy if a == 1 else dz)
        if da != 0.0:
            ta = (0.0 - oa) / da
            tb = (1.0 - oa) / da
            if ta > tb:
                ta, tb = tb, ta
            if ta > t_near:
                t_near = ta
            if tb < t_far:
                t_far = tb
        elif oa < 0.0 or oa > 1.0:
            ok = False
    if t_near < 0.0:
        t_near = 0.0
    keep[i] = ok and (t_far > t_near)
    t0_out[i] = t_near
    t1_out[i] = t_far


@njit(cache=True)
def _raygen_serial(base_dirs, rot, origin, tan_half_h, tan_half_v, dirs, t0_out, t1_out, keep):
    for i in range(base_dirs.shape[0]):
        _raygen_one(i, base_dirs, rot, origin, tan_half_h, tan_half_v, dirs, t0_out, t1_out, keep)


@njit(cache=True, parallel=True)
def _raygen_parallel(base_dirs, rot, origin, tan_half_h, tan_half_v, dirs, t0_out, t1_out, keep):
    for i in prange(base_dirs.shape[0]):
        _raygen_one(i, base_dirs, rot, origin, tan_half_h, tan_half_v, dirs, t0_out, t1_out, keep)


def raygen_pass(base_dirs, *args):
    fn = _raygen_parallel if base_dirs.shape[0] >= _PARALLEL_CUTOVER else _raygen_serial
    fn(base_dirs, *args)


def warmup():
    """Force JIT compilation of every kernel variant with tiny inputs."""
    for fn in (_advance_serial, _advance_parallel):
        fn(
            np.zeros((1, 3)), np.ones((1, 3)) / np.sqrt(3.0), np.zeros(1), np.ones(1),
            np.zeros(1), np.zeros(1, dtype=np.int64), np.ones(1, dtype=np.bool_),
            True, True, 0.1, 0.0625, np.ones(1, dtype=np.float32), 1, 1, 1, 1.0, 1.0, 1.0,
            np.zeros((1, 3)), np.zeros(1), np.zeros(1), np.zeros(1, dtype=np.bool_), np.zeros(1, dtype=np.bool_),
        )
    for fn in (_probe_serial, _probe_parallel):
        fn(
            np.full((1, 3), 0.5), np.ones(1), np.zeros(1), 1.0, 0, 2.0, 2.0, 2.0, 0, 2,
            np.zeros(1, dtype=np.int32), np.zeros(1, dtype=np.int64), np.ones((1, 3), dtype=np.int64),
            np.zeros(8, dtype=np.float32), np.zeros(1, dtype=np.int64), 0,
            np.zeros(1, dtype=np.float32), np.zeros(1, dtype=np.int8), np.zeros(1, dtype=np.int8),
        )
    for fn in (_shade_serial, _shade_parallel):
        fn(
            np.zeros(1, dtype=np.int64), np.full(1, 0.5, dtype=np.float32), np.full(1, 0.1),
            np.ones((4, 4), dtype=np.float32), True, 0.1, 0.01,
            np.zeros((1, 3)), np.ones(1), np.zeros(1, dtype=np.bool_),
        )
    for fn in (_raygen_serial, _raygen_parallel):
        fn(
            np.zeros((1, 2)), np.eye(3), np.full(3, -2.0), 0.5, 0.5,
            np.zeros((1, 3)), np.zeros(1), np.zeros(1), np.zeros(1, dtype=np.bool_),
        )
