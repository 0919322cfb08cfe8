"""Conditional measure quantization with Huber-energy kernels and small MLPs."""

from condquant.kernel import KernelParams, huber_energy, huber_energy_grad
from condquant.measures import DiscreteMeasure, distance_squared, distance_squared_grad, empirical
from condquant.net import NetArchitecture, QuantizerNet
from condquant.optim import AdamState, adam_step
from condquant.samplers import additive_gaussian, empirical_joint, multiplicative_gaussian
from condquant.trainer import TrainConfig, TrainReport, batch_loss, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "DiscreteMeasure",
    "KernelParams",
    "NetArchitecture",
    "QuantizerNet",
    "TrainConfig",
    "TrainReport",
    "adam_step",
    "additive_gaussian",
    "batch_loss",
    "distance_squared",
    "distance_squared_grad",
    "empirical",
    "empirical_joint",
    "evaluate",
    "huber_energy",
    "huber_energy_grad",
    "multiplicative_gaussian",
    "train",
]
