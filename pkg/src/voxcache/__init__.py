"""voxcache: brick-cached volume rendering for slow scalar fields.

A multi-level multi-resolution page-table cache, priority-ranked
asynchronous brick loading, and stochastic level-of-detail selection
accelerate ray marching and path tracing of fields that are expensive
to sample, such as compact neural representations of large volumes.
"""

from .cache import BrickKey, BrickLayout, BrickPool, CacheConfig, Mrpd, PoolSpec
from .errors import (
    ConfigError,
    DomainError,
    IngestionError,
    ModelCorruptError,
    ProtocolError,
    RenderError,
    TrainingDivergedError,
    VoxcacheError,
    WeightFormatError,
)
from .fields import (
    CostModel,
    DelayedField,
    Field,
    FieldDomain,
    ProceduralField,
    RawLatticeField,
    load_raw,
    load_raw_with_descriptor,
    make_procedural,
    wrap_delayed,
)
from .sampler import LodPolicy, VolumeSampler, XorShift32, effective_lod_scale, select_lod

__version__ = "0.1.0"

__all__ = [
    "BrickKey",
    "BrickLayout",
    "BrickPool",
    "CacheConfig",
    "ConfigError",
    "CostModel",
    "DelayedField",
    "DomainError",
    "Field",
    "FieldDomain",
    "IngestionError",
    "LodPolicy",
    "ModelCorruptError",
    "Mrpd",
    "PoolSpec",
    "ProceduralField",
    "ProtocolError",
    "RawLatticeField",
    "RenderError",
    "TrainingDivergedError",
    "VolumeSampler",
    "VoxcacheError",
    "WeightFormatError",
    "XorShift32",
    "effective_lod_scale",
    "load_raw",
    "load_raw_with_descriptor",
    "make_procedural",
    "select_lod",
    "wrap_delayed",
    "__version__",
]
