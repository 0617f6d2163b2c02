"""Dense building blocks: linear projection, layer norm, GELU feed-forward."""
from __future__ import annotations

import numpy as np

from engine.functional import dropout, gelu, layer_norm
from engine.module import Module, gaussian, ones, zeros
from engine.tensor import Tensor


class Linear(Module):
    """``x @ W + b`` over the last dimension; W is Gaussian(σ=0.02), b is zero."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, std: float = 0.02):
        self.weight = gaussian(rng, (in_dim, out_dim), std)
        self.bias = zeros((out_dim,))

    def forward(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias


class LayerNorm(Module):
    def __init__(self, width: int, eps: float = 1e-5):
        self.gain = ones((width,))
        self.bias = zeros((width,))
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gain, self.bias, self.eps)


class FeedForward(Module):
    """Two linear layers with GELU in between, width ``d -> hidden -> d``."""

    def __init__(self, width: int, hidden: int, rng: np.random.Generator, dropout_rate: float = 0.0):
        self.fc1 = Linear(width, hidden, rng)
        self.fc2 = Linear(hidden, width, rng)
        self.dropout_rate = dropout_rate
        self.rng = rng

    def forward(self, x: Tensor) -> Tensor:
        hidden = gelu(self.fc1(x))
        hidden = dropout(hidden, self.dropout_rate, self.rng, self.training)
        return self.fc2(hidden)
