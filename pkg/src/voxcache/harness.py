"""Benchmark runs, camera trajectories, and report output."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RenderError
from .render.camera import Camera
from .session import FrameRecord, RenderSession, SessionConfig

CSV_COLUMNS = [
    "frame",
    "wall_ms",
    "fps",
    "samples",
    "true_misses",
    "fallback_hits",
    "exact_hits",
    "occupancy",
    "bricks_loaded",
    "bricks_loaded_total",
    "requests_inflight",
]


class OrbitTrajectory:
    """Azimuthal orbit at fixed elevation: one revolution over `frames` frames."""

    def __init__(self, center, radius: float, frames: int, elevation_deg: float = 20.0, width=256, height=256, fov=45.0, phase: float = 0.0):
        if radius <= 0:
            raise ConfigError("orbit radius must be > 0")
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)
        self.frames = int(frames)
        self.elevation = math.radians(elevation_deg)
        self.width = width
        self.height = height
        self.fov = fov
        self.phase = phase

    def camera_at(self, frame: int) -> Camera:
        azimuth = 2.0 * math.pi * frame / self.frames + self.phase
        ce, se = math.cos(self.elevation), math.sin(self.elevation)
        offset = np.array([ce * math.cos(azimuth), se, ce * math.sin(azimuth)]) * self.radius
        pos = self.center + offset
        return Camera(
            position=tuple(pos),
            target=tuple(self.center),
            up=(0.0, 1.0, 0.0),
            fov_y=self.fov,
            width=self.width,
            height=self.height,
        )


def orbit_trajectory(center, radius: float, frames: int, **kw) -> OrbitTrajectory:
    return OrbitTrajectory(center, radius, frames, **kw)


@dataclass
class BenchReport:
    records: list[FrameRecord]
    summary_window: int
    aborted: bool = False

    @property
    def mean_fps(self) -> float:
        tail = self.records[-self.summary_window :]
        return float(np.mean([r.fps for r in tail])) if tail else 0.0

    def column(self, name: str) -> np.ndarray:
        return np.asarray([getattr(r, name) for r in self.records])

    def frames_to_hit_rate(self, target: float) -> int:
        """First frame where (exact+fallback)/samples reaches the target; -1 if never."""
        for r in self.records:
            if r.samples == 0:
                continue
            rate = (r.samples - r.true_misses) / r.samples
            if rate >= target:
                return r.frame
        return -1

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = CSV_COLUMNS + (["aborted"] if self.aborted else [])
            writer.writerow(header)
            for r in self.records:
                row = [
                    r.frame,
                    f"{r.wall_s * 1000.0:.3f}",
                    f"{r.fps:.3f}",
                    r.samples,
                    r.true_misses,
                    r.fallback_hits,
                    r.exact_hits,
                    f"{r.occupancy:.6f}",
                    r.bricks_loaded,
                    r.bricks_loaded_total,
                    r.requests_inflight,
                ]
                if self.aborted:
                    row.append(1)
                writer.writerow(row)


def bench_run(
    field_src,
    tf,
    trajectory: OrbitTrajectory,
    config: SessionConfig,
    frames: int | None = None,
    summary_window: int = 100,
    macro=None,
    on_frame=None,
) -> BenchReport:
    """Drive a session along a trajectory, recording per-frame metrics.

    A render error aborts the run; the partial report is returned with
    the aborted flag set so its CSV is flagged too.
    """
    frames = frames if frames is not None else trajectory.frames
    records: list[FrameRecord] = []
    aborted = False
    with RenderSession(field_src, tf, trajectory.camera_at(0), config, macro=macro) as session:
        for frame in range(frames):
            session.set_camera(trajectory.camera_at(frame))
            try:
                img, record = session.render_frame()
            except RenderError:
                aborted = True
                break
            records.append(record)
            if on_frame is not None:
                on_frame(frame, img, record)
    return BenchReport(records, summary_window=min(summary_window, max(len(records), 1)), aborted=aborted)
