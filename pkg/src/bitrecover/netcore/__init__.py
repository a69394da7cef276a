"""From-scratch network stack: layers, losses, Adam, gradient checks, model files."""

from .adam import AdamState, adam_step
from .gradcheck import GradCheckReport, grad_check, run_suite
from .layers import BatchNorm2d, Conv2d, ReLU, Sigmoid, relu, sigmoid
from .losses import bce_loss, mse_loss
from .network import (BitplaneNetwork, ResidualBlock, expected_parameter_count,
                      network_forward)
from .serialize import load_model, save_model

__all__ = [
    "AdamState", "adam_step", "GradCheckReport", "grad_check", "run_suite",
    "BatchNorm2d", "Conv2d", "ReLU", "Sigmoid", "relu", "sigmoid",
    "bce_loss", "mse_loss", "BitplaneNetwork", "ResidualBlock",
    "expected_parameter_count", "network_forward", "load_model", "save_model",
]
