"""Feature fusion, combined loss and a gradient-checked toy model."""

from .model import (
    BOS,
    DEFAULT_ALPHA,
    DEFAULT_DIM,
    EOS,
    EncodedInstance,
    FusionConfig,
    LossBreakdown,
    ToyModelParams,
    Vocabulary,
    batch_loss,
    decode_nll,
    encode,
    fuse,
    grad,
    instance_loss,
    loss_and_grad,
    total_loss,
)
from .train import EpochLoss, TrainResult, curve_csv, load_checkpoint, save_checkpoint, toy_train

__all__ = [
    "BOS", "DEFAULT_ALPHA", "DEFAULT_DIM", "EOS", "EncodedInstance", "EpochLoss",
    "FusionConfig", "LossBreakdown", "ToyModelParams", "TrainResult", "Vocabulary",
    "batch_loss", "curve_csv", "decode_nll", "encode", "fuse", "grad", "instance_loss",
    "load_checkpoint", "loss_and_grad", "save_checkpoint", "toy_train", "total_loss",
]
