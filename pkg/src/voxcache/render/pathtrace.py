"""Volumetric path tracer using Woodcock delta tracking over macro-cell majorants.

Free flights advance by -ln(1-u)/mu_cell within each macro cell; a
tentative collision is accepted with probability opacity/mu_cell, which
is always <= 1 because the majorant bounds the transfer function over
the cell's value range. Single scattering with one delta-tracked shadow
ray toward a directional light.
"""

from __future__ import annotations

import numpy as np

from ..sampler import splitmix64
from .camera import generate_rays, intersect_aabb
from .scene import Scene

_MAX_WALK = 100_000


def _cell_exit(o, d, cells, cell_w, t_now):
    boundary = (cells + (d > 0)) * cell_w
    with np.errstate(divide="ignore", invalid="ignore"):
        t_cross = np.where(np.abs(d) > 1e-14, (boundary - o) / d, np.inf)
    return np.maximum(t_cross.min(axis=1), t_now + 1e-9)


def trace_free_flight(scene: Scene, origins, directions, t_start, t_end, rng):
    """Delta-track each ray to its first real collision.

    Returns (t_hit, value) with t_hit = +inf for rays that escape; value
    is the field sample at the accepted collision.
    """
    s = scene.settings
    macro = scene.macro
    cell_w = np.asarray(
        [macro.cell_size / scene.dims[0], macro.cell_size / scene.dims[1], macro.cell_size / scene.dims[2]]
    )
    grid_max = np.asarray(macro.grid_dims, dtype=np.int64) - 1

    o = np.asarray(origins, dtype=np.float64)
    d = np.asarray(directions, dtype=np.float64)
    n = o.shape[0]
    t = np.asarray(t_start, dtype=np.float64).copy()
    t_end = np.asarray(t_end, dtype=np.float64)
    t_hit = np.full(n, np.inf)
    v_hit = np.zeros(n, dtype=np.float32)
    walking = t < t_end

    for _ in range(_MAX_WALK):
        rows = np.flatnonzero(walking)
        if rows.size == 0:
            break
        pos = o[rows] + d[rows] * t[rows][:, None]
        outside = ((pos < -1e-12) | (pos > 1.0 + 1e-12)).any(axis=1)
        if outside.any():
            walking[rows[outside]] = False
            rows = rows[~outside]
            if rows.size == 0:
                continue
            pos = pos[~outside]
        cells = np.clip(np.floor(pos / cell_w).astype(np.int64), 0, grid_max)
        mu = macro.majorant_at(cells) * s.pt_density
        cell_exit = _cell_exit(o[rows], d[rows], cells, cell_w, t[rows])
        # a cell exit at (or past) the ray's end means crossing it escapes;
        # the tolerance absorbs the fp sliver between grid edge and box exit
        at_end = cell_exit >= t_end[rows] - 1e-9
        exit_t = np.minimum(cell_exit, t_end[rows])

        empty = mu <= 0.0
        if empty.any():
            esc = empty & at_end
            walking[rows[esc]] = False
            hop = empty & ~at_end
            t[rows[hop]] = exit_t[hop] + 1e-9

        dense = rows[~empty]
        if dense.size:
            xi = rng.random(dense.size)
            t_cand = t[dense] - np.log1p(-xi) / mu[~empty]
            crossed = t_cand >= exit_t[~empty]
            esc = crossed & at_end[~empty]
            walking[dense[esc]] = False
            hop = crossed & ~at_end[~empty]
            t[dense[hop]] = exit_t[~empty][hop] + 1e-9
            settled = dense[~crossed]
            if settled.size:
                t[settled] = t_cand[~crossed]
                values = scene.sampler.sample(o[settled] + d[settled] * t[settled][:, None])
                sigma = scene.tf.opacity(values) * s.pt_density
                accept = rng.random(settled.size) < sigma / (mu[~empty][~crossed])
                hit = settled[accept]
                t_hit[hit] = t[hit]
                v_hit[hit] = values[accept]
                walking[hit] = False

        walking &= t < t_end
    return t_hit, v_hit


def _light_visibility(scene: Scene, points, rng):
    """Binary transmittance estimate along shadow rays toward the light."""
    light = -np.asarray(scene.settings.light_dir, dtype=np.float64)
    light /= np.linalg.norm(light)
    n = points.shape[0]
    dirs = np.broadcast_to(light, (n, 3))
    _, t_far = intersect_aabb(points, dirs)
    t_hit, _ = trace_free_flight(scene, points, dirs, np.full(n, 1e-6), t_far, rng)
    return np.isinf(t_hit).astype(np.float64)


def pathtrace_frame(scene: Scene, frame: int = 0, samples_per_pixel: int = 1, seed: int | None = None) -> np.ndarray:
    """One progressive path-tracing pass; returns (H, W, 4) float32."""
    cam = scene.camera
    s = scene.settings
    scene.sampler.begin_frame(frame, cam.position)
    rng = np.random.default_rng(int(splitmix64(np.uint64((seed if seed is not None else scene.sampler.seed) & 0xFFFFFFFF) ^ np.uint64(frame))))

    bundle = generate_rays(cam)
    n_pixels = cam.width * cam.height
    accum = np.zeros((n_pixels, 3), dtype=np.float64)
    accum += np.asarray(s.background, dtype=np.float64)
    alpha = np.zeros(n_pixels, dtype=np.float64)
    if len(bundle) == 0:
        img = np.concatenate([accum, alpha[:, None]], axis=1).astype(np.float32)
        return img.reshape(cam.height, cam.width, 4)

    total = np.zeros((len(bundle), 3), dtype=np.float64)
    hits_any = np.zeros(len(bundle), dtype=np.float64)
    for _ in range(samples_per_pixel):
        t_hit, v_hit = trace_free_flight(scene, bundle.origins, bundle.directions, bundle.t_enter, bundle.t_exit, rng)
        hit = np.isfinite(t_hit)
        sample_rgb = np.broadcast_to(np.asarray(s.background, dtype=np.float64), (len(bundle), 3)).copy()
        if hit.any():
            rows = np.flatnonzero(hit)
            rgba = scene.tf.eval(v_hit[rows])
            points = bundle.origins[rows] + bundle.directions[rows] * t_hit[rows][:, None]
            vis = _light_visibility(scene, points, rng)
            shade = s.pt_ambient + (1.0 - s.pt_ambient) * vis
            sample_rgb[rows] = rgba[:, :3] * shade[:, None]
            hits_any[rows] += 1.0
        total += sample_rgb
    accum[bundle.pixel_index] = total / samples_per_pixel
    alpha[bundle.pixel_index] = hits_any / samples_per_pixel
    img = np.concatenate([accum, alpha[:, None]], axis=1).astype(np.float32)
    return img.reshape(cam.height, cam.width, 4)
