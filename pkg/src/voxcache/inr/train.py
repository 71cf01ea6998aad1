"""Training loop: mean-squared error on uniformly random coordinate batches."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingDivergedError
from . import encoding, mlp
from .model import InrModel

DEFAULT_BATCH_SIZE = 65536


def loss_and_grads(model: InrModel, positions: np.ndarray, targets: np.ndarray):
    """MSE loss and its gradient for every parameter, ordered like model.parameters().

    Non-finite parameters flow through to a non-finite loss, which the
    training loop detects; warnings from that path are suppressed here.
    """
    with np.errstate(invalid="ignore", over="ignore"):
        return _loss_and_grads(model, positions, targets)


def _loss_and_grads(model: InrModel, positions: np.ndarray, targets: np.ndarray):
    feat, enc_cache = encoding.encode(model.grid_config, model.tables, positions, with_cache=True)
    y, z_out, act_cache = mlp.forward(model.mlp_config, model.weights, model.biases, feat, with_cache=True)
    n = positions.shape[0]
    err = y - np.asarray(targets, dtype=np.float64)
    loss = float(np.mean(err**2))
    d_y = 2.0 * err / n
    d_weights, d_biases, d_feat = mlp.backward(model.mlp_config, model.weights, y, z_out, act_cache, d_y)
    table_sizes = [t.shape[0] for t in model.tables]
    d_tables = encoding.encode_backward(model.grid_config, enc_cache, d_feat, table_sizes, model.dtype)
    grads = [*d_tables, *[g.astype(model.dtype) for g in d_weights], *[g.astype(model.dtype) for g in d_biases]]
    return loss, grads


class Sgd:
    def __init__(self, learning_rate: float, clip_norm: float | None = 1.0):
        self.lr = learning_rate
        self.clip_norm = clip_norm

    def step(self, params, grads):
        grads = _maybe_clip(grads, self.clip_norm)
        for p, g in zip(params, grads):
            p -= (self.lr * g).astype(p.dtype)


class Adam:
    def __init__(self, learning_rate: float, beta1=0.9, beta2=0.999, eps=1e-9, clip_norm: float | None = None):
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.clip_norm = clip_norm
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grads):
        grads = _maybe_clip(grads, self.clip_norm)
        if self.m is None:
            self.m = [np.zeros_like(p, dtype=np.float64) for p in params]
            self.v = [np.zeros_like(p, dtype=np.float64) for p in params]
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * np.square(g, dtype=np.float64)
            p -= (self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)).astype(p.dtype)


def _maybe_clip(grads, clip_norm):
    if clip_norm is None:
        return grads
    total = np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads))
    if total <= clip_norm or total == 0.0:
        return grads
    scale = clip_norm / total
    return [g * scale for g in grads]


@dataclass
class TrainResult:
    model: InrModel
    loss_trace: np.ndarray

    @property
    def final_loss(self) -> float:
        return float(self.loss_trace[-1])


def train(
    model: InrModel,
    field_src,
    steps: int,
    batch_size: int = DEFAULT_BATCH_SIZE,
    learning_rate: float = 1e-2,
    optimizer: str = "adam",
    seed: int = 0,
    clip_norm: float | None = None,
) -> TrainResult:
    """Fit the model to the field over uniformly random coordinate batches.

    Returns the per-step loss trace; a non-finite loss aborts with the
    last finite step preserved.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    opt = Adam(learning_rate, clip_norm=clip_norm) if optimizer == "adam" else Sgd(learning_rate, clip_norm=clip_norm)
    rng = np.random.default_rng(seed)
    trace = np.zeros(steps, dtype=np.float64)
    params = model.parameters()
    for step in range(steps):
        pos = rng.random((batch_size, 3))
        targets = field_src.sample_batch(pos)
        loss, grads = loss_and_grads(model, pos, targets)
        if not np.isfinite(loss):
            last = step - 1 if step > 0 else None
            raise TrainingDivergedError(
                f"loss became non-finite at step {step}", last_finite_step=last, loss_trace=trace[:step].copy()
            )
        trace[step] = loss
        if learning_rate != 0.0:
            opt.step(params, grads)
    model.set_parameters(params)
    return TrainResult(model, trace)


def psnr_on_lattice(model: InrModel, field_src, dims=None) -> float:
    """Reconstruction PSNR against the field's lattice, in dB."""
    dims = dims or field_src.domain.dims
    truth = field_src.sample_lattice(dims)
    approx = model.as_field().sample_lattice(dims)
    mse = float(np.mean((truth.astype(np.float64) - approx.astype(np.float64)) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(1.0 / mse)
