"""Wavefront ray marcher: three staged kernels over compacted ray arrays.

Each iteration runs a coordinate-computation pass (next sample position
per live ray, skipping zero-majorant macro cells and stretching steps
inside thin ones), one sampler batch over all produced positions, and a
shading pass compositing front to back. Retired rays are scattered to
the image and the arrays physically compacted once enough have died.

With adaptive stepping disabled, samples sit on a fixed t ladder so a
skip-enabled march reproduces the no-skip image exactly: skipped
samples are precisely those whose cell majorant certifies zero opacity.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .camera import generate_rays
from .scene import Scene

_COMPACT_THRESHOLD = 0.7


def raymarch_frame(scene: Scene, frame: int = 0) -> np.ndarray:
    """Render one frame; returns (H, W, 4) float32, alpha = accumulated volume opacity."""
    cam = scene.camera
    s = scene.settings
    sampler = scene.sampler
    sampler.begin_frame(frame, cam.position)

    bundle = generate_rays(cam)
    n_pixels = cam.width * cam.height
    background = np.asarray(s.background, dtype=np.float64)
    out_rgb = np.broadcast_to(background, (n_pixels, 3)).copy()
    out_alpha = np.zeros(n_pixels, dtype=np.float64)
    if len(bundle) == 0:
        img = np.concatenate([out_rgb, out_alpha[:, None]], axis=1).astype(np.float32)
        return img.reshape(cam.height, cam.width, 4)

    dt_base = scene.base_step()
    macro = scene.macro
    vx, vy, vz = scene.dims
    cwx, cwy, cwz = macro.cell_size / vx, macro.cell_size / vy, macro.cell_size / vz
    gx, gy, gz = macro.grid_dims
    mu_flat = np.ascontiguousarray(macro.majorant.ravel())
    lut = scene.tf.lookup_table()
    adaptive = bool(s.adaptive_step)

    pix = bundle.pixel_index.copy()
    o = bundle.origins
    d = bundle.directions
    t_en = bundle.t_enter.copy()
    t_ex = bundle.t_exit.copy()
    m = len(bundle)
    color = np.zeros((m, 3), dtype=np.float64)
    trans = np.ones(m, dtype=np.float64)
    cursor_f = t_en.copy()
    cursor_k = np.zeros(m, dtype=np.int64)
    active = np.ones(m, dtype=np.bool_)
    pos_buf = np.empty((m, 3), dtype=np.float64)
    dt_buf = np.empty(m, dtype=np.float64)
    tmid_buf = np.empty(m, dtype=np.float64)
    sample_mask = np.empty(m, dtype=np.bool_)
    done_mask = np.empty(m, dtype=np.bool_)

    def retire(rows):
        # retired rays keep their state frozen, so flushing is safe any time after death
        out_rgb[pix[rows]] = color[rows] + trans[rows, None] * background
        out_alpha[pix[rows]] = 1.0 - trans[rows]

    for _ in range(s.max_iterations):
        kernels.advance_pass(
            o, d, t_en, t_ex, cursor_f, cursor_k, active,
            adaptive, bool(s.skip_empty), dt_base, s.mu_floor,
            mu_flat, gx, gy, gz, cwx, cwy, cwz,
            pos_buf, dt_buf, tmid_buf, sample_mask, done_mask,
        )
        if done_mask.any():
            active &= ~done_mask

        rows = np.flatnonzero(sample_mask)
        if rows.size:
            # sample distance from the camera equals the ray parameter here
            values = sampler.sample(pos_buf[rows], distances=tmid_buf[rows])
            dead_mask = np.zeros(rows.size, dtype=np.bool_)
            kernels.shade_pass(
                rows, np.ascontiguousarray(values, dtype=np.float32), dt_buf[rows],
                lut, adaptive, dt_base, s.early_termination,
                color, trans, dead_mask,
            )
            if dead_mask.any():
                active[rows[dead_mask]] = False

        live = int(np.count_nonzero(active))
        if live == 0:
            break
        if live < active.shape[0] * _COMPACT_THRESHOLD:
            retire(np.flatnonzero(~active))
            keep = np.flatnonzero(active)
            pix = pix[keep]
            o = np.ascontiguousarray(o[keep])
            d = np.ascontiguousarray(d[keep])
            t_en = t_en[keep]
            t_ex = t_ex[keep]
            color = color[keep]
            trans = trans[keep]
            cursor_f = cursor_f[keep]
            cursor_k = cursor_k[keep]
            active = np.ones(keep.size, dtype=np.bool_)
            pos_buf = np.empty((keep.size, 3), dtype=np.float64)
            dt_buf = np.empty(keep.size, dtype=np.float64)
            tmid_buf = np.empty(keep.size, dtype=np.float64)
            sample_mask = np.empty(keep.size, dtype=np.bool_)
            done_mask = np.empty(keep.size, dtype=np.bool_)

    retire(np.arange(pix.shape[0]))  # flush everything still in the working set

    img = np.concatenate([out_rgb, out_alpha[:, None]], axis=1).astype(np.float32)
    return img.reshape(cam.height, cam.width, 4)
