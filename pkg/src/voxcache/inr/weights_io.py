"""Weight file format.

Layout, all little-endian:

    magic   4s   "CINR"
    version u32  (currently 1)
    hlen    u32  length of the JSON config header
    header  hlen bytes of UTF-8 JSON
    params  f32 blocks in header order: grid tables coarsest-first,
            then per MLP layer weight matrix (row-major) and bias
    macro   optional block when the header says so:
            grid_dims 3*u32, cell_size u32, then per-cell f32 (min, max)
            pairs, x-fastest

Truncated or mismatched files raise WeightFormatError; no partial model
is ever returned.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import WeightFormatError
from ..fields import FieldDomain
from ..macrocell import MacroCellGrid
from .encoding import HashGridConfig
from .mlp import MLPConfig
from .model import InrModel

MAGIC = b"CINR"
VERSION = 1


def _header(model: InrModel, has_macro: bool) -> dict:
    return {
        "grid": {
            "levels": model.grid_config.levels,
            "features_per_entry": model.grid_config.features_per_entry,
            "base_resolution": model.grid_config.base_resolution,
            "growth_factor": model.grid_config.growth_factor,
            "table_size": model.grid_config.table_size,
        },
        "mlp": {
            "hidden_width": model.mlp_config.hidden_width,
            "hidden_layers": model.mlp_config.hidden_layers,
            "activation": model.mlp_config.activation,
            "output_activation": model.mlp_config.output_activation,
        },
        "domain": {
            "dims": list(model.domain.dims),
            "vmin": model.domain.value_range[0],
            "vmax": model.domain.value_range[1],
        },
        "params": [list(p.shape) for p in model.parameters()],
        "has_macrocell": has_macro,
    }


def save_weights(model: InrModel, path, macro: MacroCellGrid | None = None):
    header = json.dumps(_header(model, macro is not None)).encode("utf-8")
    chunks = [MAGIC, struct.pack("<II", VERSION, len(header)), header]
    for p in model.parameters():
        chunks.append(np.ascontiguousarray(p, dtype="<f4").tobytes())
    if macro is not None:
        gx, gy, gz = macro.grid_dims
        chunks.append(struct.pack("<IIII", gx, gy, gz, macro.cell_size))
        pairs = np.stack([macro.value_min, macro.value_max], axis=-1)
        chunks.append(np.ascontiguousarray(pairs, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise WeightFormatError(f"truncated file: wanted {n} bytes at offset {self.off}, have {len(self.data)}")
        out = self.data[self.off : self.off + n]
        self.off += n
        return out


def load_weights(path):
    """Returns (model, macro_grid_or_None); raises WeightFormatError on any defect."""
    r = _Reader(Path(path).read_bytes())
    if r.take(4) != MAGIC:
        raise WeightFormatError(f"{path}: bad magic")
    version, hlen = struct.unpack("<II", r.take(8))
    if version != VERSION:
        raise WeightFormatError(f"{path}: unsupported version {version}")
    try:
        header = json.loads(r.take(hlen).decode("utf-8"))
        grid_config = HashGridConfig(**header["grid"])
        mlp_config = MLPConfig(**header["mlp"])
        domain = FieldDomain(tuple(header["domain"]["dims"]), (header["domain"]["vmin"], header["domain"]["vmax"]))
        shapes = [tuple(s) for s in header["params"]]
    except (KeyError, ValueError, TypeError) as exc:
        raise WeightFormatError(f"{path}: malformed header: {exc}") from exc

    model = InrModel(grid_config, mlp_config, domain)
    expected = [p.shape for p in model.parameters()]
    if shapes != expected:
        raise WeightFormatError(f"{path}: parameter shapes {shapes} do not match configs {expected}")
    params = []
    for shape in shapes:
        count = int(np.prod(shape))
        block = np.frombuffer(r.take(count * 4), dtype="<f4").reshape(shape)
        params.append(block.astype(np.float32))
    model.set_parameters(params)

    macro = None
    if header.get("has_macrocell"):
        gx, gy, gz, cell_size = struct.unpack("<IIII", r.take(16))
        cells = gx * gy * gz
        pairs = np.frombuffer(r.take(cells * 8), dtype="<f4").reshape(gz, gy, gx, 2)
        macro = MacroCellGrid(
            cell_size=int(cell_size),
            dims=model.domain.dims,
            grid_dims=(int(gx), int(gy), int(gz)),
            value_min=pairs[..., 0].copy(),
            value_max=pairs[..., 1].copy(),
            majorant=np.ones((gz, gy, gx), dtype=np.float32),
        )
    return model, macro
