"""Trainable neural field: hash-grid encoder + MLP head, usable as a Field."""

from __future__ import annotations

import numpy as np

from ..errors import ModelCorruptError
from ..fields import Field, FieldDomain, _check_positions
from . import encoding, mlp
from .encoding import HashGridConfig
from .mlp import MLPConfig


class InrModel:
    """Parameters plus configs; inference is read-only and thread-safe."""

    def __init__(
        self,
        grid_config: HashGridConfig,
        mlp_config: MLPConfig,
        domain: FieldDomain,
        seed: int = 0,
        dtype=np.float32,
    ):
        self.grid_config = grid_config
        self.mlp_config = mlp_config
        self.domain = domain
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        self.tables = [
            rng.uniform(-1e-4, 1e-4, size=(grid_config.level_entries(l), grid_config.features_per_entry)).astype(
                self.dtype
            )
            for l in range(grid_config.levels)
        ]
        self.weights, self.biases = mlp.init_params(mlp_config, grid_config.output_dim, rng, self.dtype)

    # -- parameter plumbing ------------------------------------------------

    def parameters(self) -> list[np.ndarray]:
        return [*self.tables, *self.weights, *self.biases]

    def parameter_names(self) -> list[str]:
        names = [f"grid{l}" for l in range(len(self.tables))]
        names += [f"w{i}" for i in range(len(self.weights))]
        names += [f"b{i}" for i in range(len(self.biases))]
        return names

    def set_parameters(self, params: list[np.ndarray]):
        nt = len(self.tables)
        nw = len(self.weights)
        self.tables = [np.asarray(p, dtype=self.dtype) for p in params[:nt]]
        self.weights = [np.asarray(p, dtype=self.dtype) for p in params[nt : nt + nw]]
        self.biases = [np.asarray(p, dtype=self.dtype) for p in params[nt + nw :]]

    def all_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.parameters())

    # -- inference ---------------------------------------------------------

    def encode(self, positions) -> np.ndarray:
        pos = _check_positions(positions)
        return encoding.encode(self.grid_config, self.tables, pos)

    def infer_batch(self, positions) -> np.ndarray:
        pos = _check_positions(positions)
        if pos.shape[0] == 0:
            return np.zeros(0, dtype=np.float32)
        feat = encoding.encode(self.grid_config, self.tables, pos)
        y = mlp.forward(self.mlp_config, self.weights, self.biases, feat)
        if not np.isfinite(y).all():
            if not self.all_finite():
                raise ModelCorruptError("model parameters contain non-finite values")
            raise ModelCorruptError("inference produced non-finite outputs")
        return y.astype(np.float32)

    def as_field(self) -> "InrField":
        return InrField(self)


class InrField(Field):
    """Field adapter so the model plugs in wherever a Field is expected."""

    def __init__(self, model: InrModel):
        super().__init__(model.domain)
        self.model = model

    def _evaluate(self, pos):
        return np.clip(self.model.infer_batch(pos), 0.0, 1.0)
