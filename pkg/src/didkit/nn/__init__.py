"""Numpy LSTM classifier: layers, optimizer, checkpoints and training."""

from .adam import Adam
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .lstm import LstmLayerParams, lstm_backward, lstm_forward
from .model import VARIANTS, Model, ModelConfig, init_model
from .train import TrainResult, evaluate_loss, train

__all__ = [
    "Adam", "Checkpoint", "load_checkpoint", "save_checkpoint",
    "LstmLayerParams", "lstm_backward", "lstm_forward",
    "VARIANTS", "Model", "ModelConfig", "init_model",
    "TrainResult", "evaluate_loss", "train",
]
