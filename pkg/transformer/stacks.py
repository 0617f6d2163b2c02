"""Pre-norm encoder and decoder stacks and positional encodings."""
from __future__ import annotations

from typing import Literal, Optional

import numpy as np

from engine.functional import dropout
from engine.module import Module, gaussian
from engine.tensor import Tensor
from errors import ConfigError, DimensionError
from transformer.attention import AttentionMask, MultiHeadAttention
from transformer.layers import FeedForward, LayerNorm

PositionKind = Literal["learned", "sinusoidal"]


def sinusoidal_table(length: int, width: int) -> np.ndarray:
    """``pe[p, 2i] = sin(p / 10000^(2i/d))``, ``pe[p, 2i+1] = cos(...)``."""
    positions = np.arange(length)[:, None]
    rates = 1.0 / np.power(10000.0, (np.arange(0, width, 2) / width))
    table = np.zeros((length, width))
    table[:, 0::2] = np.sin(positions * rates)
    table[:, 1::2] = np.cos(positions * rates[: width // 2])
    return table


class PositionalEncoding(Module):
    """Learned (seeded Gaussian) or fixed sinusoidal position table of size ``length × width``."""

    def __init__(self, length: int, width: int, rng: np.random.Generator, kind: PositionKind = "learned"):
        if length < 1 or width < 1:
            raise ConfigError(f"position table needs length, width >= 1, got {length}x{width}")
        self.kind = kind
        if kind == "learned":
            self.table = gaussian(rng, (length, width))
        elif kind == "sinusoidal":
            self.fixed = Tensor(sinusoidal_table(length, width))
        else:
            raise ConfigError(f"unknown position encoding kind {kind!r}")

    @property
    def values(self) -> Tensor:
        return self.table if self.kind == "learned" else self.fixed

    def forward(self, x: Tensor) -> Tensor:
        """Add the first ``len(x)`` table rows to ``x``."""
        length = x.shape[0]
        table = self.values
        if length > table.shape[0]:
            raise DimensionError(f"sequence length {length} exceeds position table size {table.shape[0]}")
        return x + table[:length]


def position_encoding(length: int, width: int, kind: PositionKind = "learned",
                      rng: Optional[np.random.Generator] = None) -> Tensor:
    """Return a fresh ``length × width`` position table."""
    return PositionalEncoding(length, width, rng or np.random.default_rng(0), kind).values


class EncoderLayer(Module):
    def __init__(self, width: int, num_heads: int, ff_hidden: int, rng: np.random.Generator,
                 dropout_rate: float = 0.0, eps: float = 1e-5):
        self.attn_norm = LayerNorm(width, eps)
        self.self_attn = MultiHeadAttention(width, num_heads, rng, dropout_rate)
        self.ff_norm = LayerNorm(width, eps)
        self.ff = FeedForward(width, ff_hidden, rng, dropout_rate)
        self.dropout_rate = dropout_rate
        self.rng = rng

    def forward(self, x: Tensor, mask: Optional[AttentionMask] = None) -> Tensor:
        h = self.attn_norm(x)
        x = x + dropout(self.self_attn(h, h, h, mask), self.dropout_rate, self.rng, self.training)
        return x + dropout(self.ff(self.ff_norm(x)), self.dropout_rate, self.rng, self.training)


class DecoderLayer(Module):
    """Masked self-attention, then cross-attention over memory, then feed-forward."""

    def __init__(self, width: int, num_heads: int, ff_hidden: int, rng: np.random.Generator,
                 dropout_rate: float = 0.0, eps: float = 1e-5):
        self.self_norm = LayerNorm(width, eps)
        self.self_attn = MultiHeadAttention(width, num_heads, rng, dropout_rate)
        self.cross_norm = LayerNorm(width, eps)
        self.cross_attn = MultiHeadAttention(width, num_heads, rng, dropout_rate)
        self.ff_norm = LayerNorm(width, eps)
        self.ff = FeedForward(width, ff_hidden, rng, dropout_rate)
        self.dropout_rate = dropout_rate
        self.rng = rng

    def forward(self, targets: Tensor, memory: Tensor, target_mask: Optional[AttentionMask] = None) -> Tensor:
        h = self.self_norm(targets)
        x = targets + dropout(self.self_attn(h, h, h, target_mask), self.dropout_rate, self.rng, self.training)
        h = self.cross_norm(x)
        x = x + dropout(self.cross_attn(h, memory, memory), self.dropout_rate, self.rng, self.training)
        return x + dropout(self.ff(self.ff_norm(x)), self.dropout_rate, self.rng, self.training)


class EncoderStack(Module):
    """
    ``num_layers`` encoder layers with non-shared weights and a final norm.

    With zero layers the stack is the identity.
    """

    def __init__(self, num_layers: int, width: int, num_heads: int, ff_hidden: int,
                 rng: np.random.Generator, dropout_rate: float = 0.0, eps: float = 1e-5):
        self.layers = [EncoderLayer(width, num_heads, ff_hidden, rng, dropout_rate, eps)
                       for _ in range(num_layers)]
        self.final_norm = LayerNorm(width, eps) if num_layers else None

    def forward(self, x: Tensor, mask: Optional[AttentionMask] = None) -> Tensor:
        for layer in self.layers:
            x = layer(x, mask)
        return self.final_norm(x) if self.final_norm is not None else x


class DecoderStack(Module):
    def __init__(self, num_layers: int, width: int, num_heads: int, ff_hidden: int,
                 rng: np.random.Generator, dropout_rate: float = 0.0, eps: float = 1e-5):
        self.layers = [DecoderLayer(width, num_heads, ff_hidden, rng, dropout_rate, eps)
                       for _ in range(num_layers)]
        self.final_norm = LayerNorm(width, eps) if num_layers else None

    def forward(self, targets: Tensor, memory: Tensor, target_mask: AttentionMask) -> Tensor:
        if target_mask.shape != (targets.shape[0], targets.shape[0]):
            raise DimensionError(f"target mask {target_mask.shape} does not fit {targets.shape[0]} targets")
        x = targets
        for layer in self.layers:
            x = layer(x, memory, target_mask)
        return self.final_norm(x) if self.final_norm is not None else x
