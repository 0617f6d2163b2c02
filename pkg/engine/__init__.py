"""Minimal float64 tensor engine with reverse-mode autodiff and an Adam optimizer."""
from engine.tensor import (
    ComputationTape,
    Tensor,
    backward,
    concat,
    get_tape,
    no_grad,
)
from engine.functional import cross_entropy, dropout, gelu, layer_norm, log_softmax, matmul, softmax
from engine.module import Module, Parameter
from engine.optim import Adam, LearningRateSchedule, OptimizerState
from engine.gradcheck import check_gradients

__all__ = [
    "ComputationTape",
    "Tensor",
    "backward",
    "concat",
    "get_tape",
    "no_grad",
    "cross_entropy",
    "dropout",
    "gelu",
    "layer_norm",
    "log_softmax",
    "matmul",
    "softmax",
    "Module",
    "Parameter",
    "Adam",
    "LearningRateSchedule",
    "OptimizerState",
    "check_gradients",
]
