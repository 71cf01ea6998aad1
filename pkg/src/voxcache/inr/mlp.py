"""Small fully-connected head on top of the grid encoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class MLPConfig:
    hidden_width: int = 32
    hidden_layers: int = 2
    activation: str = "relu"
    output_activation: str = "sigmoid"  # sigmoid | clamp

    def __post_init__(self):
        if self.hidden_width < 1 or self.hidden_layers < 1:
            raise ConfigError("hidden width and layer count must be >= 1")
        if self.activation != "relu":
            raise ConfigError(f"unsupported activation {self.activation!r}")
        if self.output_activation not in ("sigmoid", "clamp"):
            raise ConfigError(f"unsupported output activation {self.output_activation!r}")


def init_params(config: MLPConfig, input_dim: int, rng: np.random.Generator, dtype=np.float32):
    """Uniform +-1/sqrt(fan_in) weights, zero biases."""
    dims = [input_dim] + [config.hidden_width] * config.hidden_layers + [1]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return weights, biases


def forward(config: MLPConfig, weights, biases, x: np.ndarray, with_cache: bool = False):
    """Returns outputs (N,) in [0,1]; optionally caches activations for backward."""
    a = x
    cache = [a]
    for w, b in zip(weights[:-1], biases[:-1]):
        z = a @ w.T + b
        a = np.maximum(z, 0.0)
        if with_cache:
            cache.append(a)
    z_out = (a @ weights[-1].T + biases[-1])[:, 0]
    if config.output_activation == "sigmoid":
        y = 1.0 / (1.0 + np.exp(-z_out))
    else:
        y = np.clip(z_out, 0.0, 1.0)
    return (y, z_out, cache) if with_cache else y


def backward(config: MLPConfig, weights, y, z_out, cache, d_y: np.ndarray):
    """Gradients of a scalar loss wrt weights, biases, and the input features."""
    if config.output_activation == "sigmoid":
        d_z = d_y * y * (1.0 - y)
    else:
        d_z = d_y * ((z_out > 0.0) & (z_out < 1.0))
    # gradient wrt the output layer's pre-activation, in the weights' dtype
    delta = d_z.astype(weights[0].dtype, copy=False)[:, None]
    d_weights = [None] * len(weights)
    d_biases = [None] * len(weights)
    for layer in range(len(weights) - 1, 0, -1):
        d_weights[layer] = delta.T @ cache[layer]
        d_biases[layer] = delta.sum(axis=0)
        # cache[layer] is this layer's relu input; relu' mask = (output > 0)
        delta = (delta @ weights[layer]) * (cache[layer] > 0.0)
    d_weights[0] = delta.T @ cache[0]
    d_biases[0] = delta.sum(axis=0)
    d_input = delta @ weights[0]
    return d_weights, d_biases, d_input
