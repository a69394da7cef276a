"""Bitplane-wise training, sequential recovery and evaluation."""

from .bundle import ModelBundle, OracleNetwork
from .config import TrainConfig
from .data import (TrainingPair, augment, apply_augmentation, extract_patches,
                   make_training_pairs)
from .evaluation import evaluate
from .inference import as_quantized, recover, single_shot_recover
from .training import (epoch_means, single_shot_train, single_threaded, train_all,
                       train_bitplane_network)

__all__ = [
    "ModelBundle", "OracleNetwork", "TrainConfig", "TrainingPair", "augment",
    "apply_augmentation", "extract_patches", "make_training_pairs", "evaluate",
    "as_quantized", "recover", "single_shot_recover", "epoch_means",
    "single_shot_train", "single_threaded", "train_all", "train_bitplane_network",
]
