"""Scene assembly shared by the render pipelines, benches, CLI, and server."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..macrocell import MacroCellGrid
from ..sampler import VolumeSampler
from .camera import Camera
from .transfer import TransferFunction


@dataclass
class RenderSettings:
    base_step_scale: float = 0.5  # in units of one native voxel diagonal
    mu_floor: float = 1.0 / 16.0  # caps adaptive step inflation at 16x
    early_termination: float = 0.01
    background: tuple[float, float, float] = (0.0, 0.0, 0.0)
    skip_empty: bool = True
    adaptive_step: bool = True
    max_iterations: int = 8192
    pt_density: float = 60.0
    pt_ambient: float = 0.2
    light_dir: tuple[float, float, float] = (-0.5, -0.8, -0.3)


@dataclass
class Scene:
    sampler: VolumeSampler
    macro: MacroCellGrid
    tf: TransferFunction
    camera: Camera
    settings: RenderSettings = field(default_factory=RenderSettings)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.sampler.dims

    def base_step(self) -> float:
        vx, vy, vz = self.dims
        voxel_diag = float(np.linalg.norm([1.0 / vx, 1.0 / vy, 1.0 / vz]))
        return self.settings.base_step_scale * voxel_diag

    def with_camera(self, camera: Camera) -> "Scene":
        return replace(self, camera=camera)
