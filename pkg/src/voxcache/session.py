"""One rendering session: cache, request pump, sampler, and per-frame maintenance.

The frame cycle matches the cache's concurrency contract: render passes
only read; at the frame boundary a single maintenance phase drains miss
reports into the request table, maps completed bricks, dispatches the
next batch to the loader, and ticks the frame counter.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field

from . import macrocell
from .cache import CacheConfig, Mrpd
from .render.camera import Camera
from .render.pathtrace import pathtrace_frame
from .render.raymarch import raymarch_frame
from .render.scene import RenderSettings, Scene
from .render.transfer import TransferFunction
from .sampler import LodPolicy, VolumeSampler
from .scheduler import RequestTable, SchedulerConfig, make_loader


@dataclass
class SessionConfig:
    cached: bool = True
    mode: str = "raymarch"  # raymarch | pathtrace
    loader: str = "thread"  # thread | inline
    cache: CacheConfig = dc_field(default_factory=CacheConfig)
    scheduler: SchedulerConfig = dc_field(default_factory=SchedulerConfig)
    policy: LodPolicy = dc_field(default_factory=LodPolicy)
    settings: RenderSettings = dc_field(default_factory=RenderSettings)
    macro_cell_size: int = 16
    samples_per_pixel: int = 1
    seed: int = 0


@dataclass
class FrameRecord:
    frame: int
    wall_s: float
    fps: float
    samples: int
    true_misses: int
    fallback_hits: int
    exact_hits: int
    occupancy: float
    bricks_loaded: int
    bricks_loaded_total: int
    requests_inflight: int


class RenderSession:
    """Owns the render state for one viewer/bench run."""

    def __init__(self, field_src, tf: TransferFunction, camera: Camera, config: SessionConfig, macro=None):
        self.field = field_src
        self.config = config
        dims = field_src.domain.dims
        self.macro = macro if macro is not None else macrocell.build(field_src, dims, config.macro_cell_size)
        macrocell.update_majorants(self.macro, tf)
        if config.cached:
            self.cache = Mrpd(dims, config.cache)
            self.table = RequestTable(self.cache.layout, config.scheduler)
            self.loader = make_loader(config.loader, self.cache.layout, field_src, self.table)
        else:
            self.cache = None
            self.table = None
            self.loader = None
        self.sampler = VolumeSampler(field_src, dims, cache=self.cache, policy=config.policy, seed=config.seed)
        self.scene = Scene(self.sampler, self.macro, tf, camera, config.settings)
        self.frame = 0
        self.mode = config.mode

    # -- control ----------------------------------------------------------

    def set_camera(self, camera: Camera):
        self.scene = self.scene.with_camera(camera)

    def set_transfer_function(self, tf: TransferFunction):
        macrocell.update_majorants(self.macro, tf)
        self.scene.tf = tf

    def set_lod_scale(self, scale: float):
        self.config.policy.lod_scale = float(scale)

    def set_mode(self, mode: str):
        if mode not in ("raymarch", "pathtrace"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode

    def reset_cache(self):
        """Drop residency and restart the preload schedule."""
        if self.cache is not None:
            self.cache.reset()
            self.table = RequestTable(self.cache.layout, self.config.scheduler)
            if self.loader is not None:
                self.loader.shutdown()
            self.loader = make_loader(self.config.loader, self.cache.layout, self.field, self.table)
        self.frame = 0

    # -- frame cycle --------------------------------------------------------

    def render_frame(self):
        """Render, then run the maintenance phase; returns (image, FrameRecord)."""
        t0 = time.perf_counter()
        if self.mode == "pathtrace":
            img = pathtrace_frame(self.scene, self.frame, self.config.samples_per_pixel)
        else:
            img = raymarch_frame(self.scene, self.frame)
        loaded = self._maintenance()
        wall = time.perf_counter() - t0
        record = FrameRecord(
            frame=self.frame,
            wall_s=wall,
            fps=1.0 / wall if wall > 0 else float("inf"),
            samples=self.sampler.frame_requests,
            true_misses=self.sampler.frame_true_misses,
            fallback_hits=self.sampler.frame_fallback_hits,
            exact_hits=self.cache.stats.exact_hits if self.cache else 0,
            occupancy=self.cache.occupancy() if self.cache else 0.0,
            bricks_loaded=loaded,
            bricks_loaded_total=self.cache.bricks_loaded_total() if self.cache else 0,
            requests_inflight=len(self.loader.in_flight) if self.loader else 0,
        )
        if self.cache is not None:
            self.cache.tick_frame()
        self.frame += 1
        return img, record

    def _maintenance(self) -> int:
        if self.cache is None:
            return 0
        reports = self.cache.drain_miss_reports()
        self.table.report_many(reports, self.frame)
        loaded = 0
        for brick in self.loader.collect():
            if self.cache.insert(brick.key, brick.samples, self.frame) is not None:
                loaded += 1
        self.loader.dispatch(self.frame, self.cache.is_mapped)
        return loaded

    def close(self):
        if self.loader is not None:
            self.loader.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
