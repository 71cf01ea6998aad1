from .brickmath import BrickKey, BrickLayout, brick_origin, grid_dims, locate_axis, lod_stride, max_lod
from .mrpd import CacheConfig, FrameStats, LookupResult, Mrpd
from .pagetable import UNMAPPED, DirectTable, PagedTable
from .pool import BrickPool, PoolSpec

__all__ = [
    "BrickKey",
    "BrickLayout",
    "BrickPool",
    "CacheConfig",
    "DirectTable",
    "FrameStats",
    "LookupResult",
    "Mrpd",
    "PagedTable",
    "PoolSpec",
    "UNMAPPED",
    "brick_origin",
    "grid_dims",
    "locate_axis",
    "lod_stride",
    "max_lod",
]
