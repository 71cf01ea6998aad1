"""Scalar field abstraction: procedural, lattice-backed, neural, and latency-wrapped sources.

Every field maps normalized coordinates in [0,1)^3 to values in [0,1].
Fields are immutable after construction, so read-only sampling is safe
from any number of threads.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, IngestionError

_SCALAR_DTYPES = {
    "u8": np.uint8,
    "u16": np.uint16,
    "f32": np.float32,
    "f64": np.float64,
}


@dataclass(frozen=True)
class FieldDomain:
    """Voxel extent and native value range of a data source.

    ``dims`` is (Vx, Vy, Vz); ``value_range`` is the native (vmin, vmax)
    recorded so render-time normalization matches training-time
    normalization exactly.
    """

    dims: tuple[int, int, int]
    value_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if len(self.dims) != 3 or any(int(d) < 1 for d in self.dims):
            raise ConfigError(f"dims must be three counts >= 1, got {self.dims}")
        vmin, vmax = self.value_range
        if not (vmin <= vmax):
            raise ConfigError(f"value_range must satisfy vmin <= vmax, got {self.value_range}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "value_range", (float(vmin), float(vmax)))

    def normalize(self, native):
        """Map native values into [0,1]; a degenerate range maps to 0."""
        vmin, vmax = self.value_range
        if vmax == vmin:
            return np.zeros_like(np.asarray(native, dtype=np.float64))
        return (np.asarray(native, dtype=np.float64) - vmin) / (vmax - vmin)


@dataclass(frozen=True)
class CostModel:
    """Latency model for an expensive source: fixed per-batch plus per-sample cost (seconds)."""

    fixed_per_batch: float
    per_sample: float

    def __post_init__(self):
        if self.fixed_per_batch < 0 or self.per_sample < 0:
            raise ConfigError("cost model durations must be >= 0")

    def duration(self, n_samples: int) -> float:
        return self.fixed_per_batch + n_samples * self.per_sample


def _check_positions(positions) -> np.ndarray:
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim == 1 and pos.size == 3:
        pos = pos.reshape(1, 3)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise DomainError(f"positions must have shape (N, 3), got {pos.shape}")
    if pos.size and ((pos < 0.0).any() or (pos >= 1.0).any()):
        bad = pos[((pos < 0.0) | (pos >= 1.0)).any(axis=1)][0]
        raise DomainError(f"coordinate {tuple(bad)} outside [0,1)^3")
    return pos


class Field:
    """Base scalar field. Subclasses implement ``_evaluate`` on validated coordinates."""

    def __init__(self, domain: FieldDomain):
        self.domain = domain

    def sample_batch(self, positions) -> np.ndarray:
        """Evaluate the field at normalized coordinates (N,3) -> values (N,) in [0,1].

        Out-of-domain coordinates are rejected; clamping is the caller's job.
        """
        pos = _check_positions(positions)
        if pos.shape[0] == 0:
            return np.zeros(0, dtype=np.float32)
        return np.asarray(self._evaluate(pos), dtype=np.float32)

    def _evaluate(self, pos: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample_lattice(self, dims=None) -> np.ndarray:
        """Evaluate at every lattice point (voxel center), returned as (Vz,Vy,Vx)."""
        vx, vy, vz = dims if dims is not None else self.domain.dims
        zs, ys, xs = np.meshgrid(
            (np.arange(vz) + 0.5) / vz,
            (np.arange(vy) + 0.5) / vy,
            (np.arange(vx) + 0.5) / vx,
            indexing="ij",
        )
        pos = np.stack([xs.ravel(), ys.ravel(), zs.ravel()], axis=1)
        out = np.empty(pos.shape[0], dtype=np.float32)
        step = 1 << 20
        for lo in range(0, pos.shape[0], step):
            out[lo : lo + step] = self.sample_batch(pos[lo : lo + step])
        return out.reshape(vz, vy, vx)


class ProceduralField(Field):
    """Analytic field; ``dims`` only declare a nominal lattice resolution."""

    def __init__(self, kind: str, dims, fn):
        super().__init__(FieldDomain(tuple(dims), (0.0, 1.0)))
        self.kind = kind
        self._fn = fn

    def _evaluate(self, pos):
        return np.clip(self._fn(pos), 0.0, 1.0)


def _sphere(pos):
    d = np.linalg.norm(pos - 0.5, axis=1)
    return 1.0 - d


SHELL_PERIOD = 0.125


def _shells(pos):
    d = np.linalg.norm(pos - 0.5, axis=1)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * d / SHELL_PERIOD)


def _marschner_lobb_like(pos, f_m=6.0, alpha=0.25):
    q = 2.0 * pos - 1.0
    r = np.sqrt(q[:, 0] ** 2 + q[:, 1] ** 2)
    rho_r = np.cos(2.0 * np.pi * f_m * np.cos(np.pi * r / 2.0))
    return (1.0 - np.sin(np.pi * q[:, 2] / 2.0) + alpha * (1.0 + rho_r)) / (2.0 * (1.0 + alpha))


_PROCEDURAL_KINDS = {
    "sphere": _sphere,
    "shells": _shells,
    "marschner_lobb_like": _marschner_lobb_like,
}


def make_procedural(kind: str, dims) -> ProceduralField:
    """Build one of the analytic test fields: sphere, shells, marschner_lobb_like."""
    if kind not in _PROCEDURAL_KINDS:
        raise ConfigError(f"unknown procedural kind {kind!r}; expected one of {sorted(_PROCEDURAL_KINDS)}")
    return ProceduralField(kind, dims, _PROCEDURAL_KINDS[kind])


def trilinear_lattice(lattice: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Trilinear interpolation of a (Vz,Vy,Vx) lattice at fractional index coords u=(N,3 as x,y,z).

    Indices are clamped at the boundary, i.e. constant extrapolation in the
    outer half voxel. Shared by lattice fields and the brick cache so the
    two paths agree bit-for-bit on common data.
    """
    vz, vy, vx = lattice.shape
    x = np.clip(u[:, 0], 0.0, vx - 1)
    y = np.clip(u[:, 1], 0.0, vy - 1)
    z = np.clip(u[:, 2], 0.0, vz - 1)
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    z0 = np.floor(z).astype(np.intp)
    x1 = np.minimum(x0 + 1, vx - 1)
    y1 = np.minimum(y0 + 1, vy - 1)
    z1 = np.minimum(z0 + 1, vz - 1)
    fx = x - x0
    fy = y - y0
    fz = z - z0
    c000 = lattice[z0, y0, x0]
    c100 = lattice[z0, y0, x1]
    c010 = lattice[z0, y1, x0]
    c110 = lattice[z0, y1, x1]
    c001 = lattice[z1, y0, x0]
    c101 = lattice[z1, y0, x1]
    c011 = lattice[z1, y1, x0]
    c111 = lattice[z1, y1, x1]
    c00 = c000 + (c100 - c000) * fx
    c10 = c010 + (c110 - c010) * fx
    c01 = c001 + (c101 - c001) * fx
    c11 = c011 + (c111 - c011) * fx
    c0 = c00 + (c10 - c00) * fy
    c1 = c01 + (c11 - c01) * fy
    return c0 + (c1 - c0) * fz


class RawLatticeField(Field):
    """Field backed by an explicit voxel lattice, sampled with trilinear interpolation.

    Lattice points sit at voxel centers: point i lives at normalized
    (i + 0.5) / V, so native coordinate p maps to normalized (p + 0.5) / V.
    """

    def __init__(self, lattice: np.ndarray, domain: FieldDomain):
        vz, vy, vx = lattice.shape
        if (vx, vy, vz) != domain.dims:
            raise ConfigError(f"lattice shape {lattice.shape} (z,y,x) does not match dims {domain.dims}")
        super().__init__(domain)
        self.lattice = np.ascontiguousarray(lattice, dtype=np.float32)
        self.lattice.flags.writeable = False

    def _evaluate(self, pos):
        dims = np.asarray(self.domain.dims, dtype=np.float64)
        u = pos * dims - 0.5
        return trilinear_lattice(self.lattice, u)

    def sample_lattice(self, dims=None):
        if dims is None or tuple(dims) == self.domain.dims:
            return self.lattice
        return super().sample_lattice(dims)


def load_raw(path, dims, scalar_type: str, value_range) -> RawLatticeField:
    """Load a headerless little-endian volume (x-fastest layout) and normalize it.

    The file size must equal Vx*Vy*Vz * sizeof(scalar_type); float inputs
    must be NaN-free.
    """
    if scalar_type not in _SCALAR_DTYPES:
        raise IngestionError(f"unsupported scalar type {scalar_type!r}")
    dtype = np.dtype(_SCALAR_DTYPES[scalar_type]).newbyteorder("<")
    vx, vy, vz = (int(d) for d in dims)
    expected = vx * vy * vz * dtype.itemsize
    data = Path(path).read_bytes()
    if len(data) != expected:
        raise IngestionError(f"{path}: expected {expected} bytes for dims {dims} {scalar_type}, found {len(data)}")
    raw = np.frombuffer(data, dtype=dtype).reshape(vz, vy, vx)
    if np.issubdtype(raw.dtype, np.floating) and not np.isfinite(raw).all():
        raise IngestionError(f"{path}: non-finite values in float input")
    domain = FieldDomain((vx, vy, vz), value_range)
    lattice = np.clip(domain.normalize(raw), 0.0, 1.0).astype(np.float32)
    return RawLatticeField(lattice, domain)


def load_raw_with_descriptor(path, descriptor_path) -> RawLatticeField:
    """Load a raw volume using a sidecar JSON descriptor {dims, type, vmin, vmax}."""
    desc = json.loads(Path(descriptor_path).read_text())
    try:
        dims = desc["dims"]
        scalar_type = desc["type"]
        value_range = (desc["vmin"], desc["vmax"])
    except KeyError as exc:
        raise IngestionError(f"descriptor {descriptor_path} missing key {exc}") from exc
    return load_raw(path, dims, scalar_type, value_range)


class DelayedField(Field):
    """Pass-through wrapper that makes every batch cost what a slow source would.

    The delay is enforced per call against the wall clock, so independent
    callers are not serialized against each other.
    """

    def __init__(self, inner: Field, cost: CostModel):
        super().__init__(inner.domain)
        self.inner = inner
        self.cost = cost

    def sample_batch(self, positions):
        pos = _check_positions(positions)
        deadline = time.perf_counter() + self.cost.duration(pos.shape[0])
        values = self.inner.sample_batch(pos) if pos.shape[0] else np.zeros(0, dtype=np.float32)
        _wait_until(deadline)
        return values


def _wait_until(deadline: float):
    # sleep() for the bulk, spin for the sub-millisecond tail; short waits
    # would otherwise be rounded up by OS timer granularity.
    while True:
        remaining = deadline - time.perf_counter()
        if remaining <= 0:
            return
        if remaining > 0.002:
            time.sleep(remaining - 0.001)
        elif remaining > 0.0002:
            time.sleep(0)


def wrap_delayed(field: Field, cost: CostModel) -> DelayedField:
    """Wrap a field so sampling blocks for at least the modeled inference cost."""
    return DelayedField(field, cost)
