"""From-scratch 1D convolutional classifier: layers, model, training."""

from .layers import (Conv1D, Dense, Dropout, InvalidLabelError, MaxPool1D,
                     ShapeMismatchError, StaleCacheError, cross_correlate1d,
                     loss_and_grad, sigmoid, softmax)
from .model import (CorruptModelFileError, Network, NetworkConfig, load_model,
                    predict, predict_batch, read_model_header, save_model)
from .training import (Adam, DivergedLossError, SGD, TrainConfig,
                       TrainHistory, evaluate, read_history, train,
                       write_history)

__all__ = [
    "Adam", "Conv1D", "CorruptModelFileError", "Dense", "DivergedLossError",
    "Dropout", "InvalidLabelError", "MaxPool1D", "Network", "NetworkConfig",
    "SGD", "ShapeMismatchError", "StaleCacheError", "TrainConfig",
    "TrainHistory", "cross_correlate1d", "evaluate", "load_model",
    "loss_and_grad", "predict", "predict_batch", "read_history",
    "read_model_header", "save_model", "sigmoid", "softmax", "train",
    "write_history",
]
