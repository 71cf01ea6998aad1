from .encoding import HashGridConfig, encode, interpolation_data, vertex_indices
from .mlp import MLPConfig
from .model import InrField, InrModel
from .train import Adam, Sgd, TrainResult, loss_and_grads, psnr_on_lattice, train
from .weights_io import load_weights, save_weights

__all__ = [
    "Adam",
    "HashGridConfig",
    "InrField",
    "InrModel",
    "MLPConfig",
    "Sgd",
    "TrainResult",
    "encode",
    "interpolation_data",
    "load_weights",
    "loss_and_grads",
    "psnr_on_lattice",
    "save_weights",
    "train",
    "vertex_indices",
]
