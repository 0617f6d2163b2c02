"""
Multi-head scaled dot-product attention and attention masks.

Blocked positions receive an additive ``NEG_INF`` before the max-subtracted
softmax; in float64 ``exp(-1e9)`` underflows to exactly zero, so blocked keys
get exactly zero weight and exactly zero gradient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from engine.functional import dropout, softmax
from engine.module import Module
from engine.tensor import Tensor
from errors import ConfigError, DimensionError, MaskError
from transformer.layers import Linear

NEG_INF = -1e9


@dataclass(frozen=True, eq=False)
class AttentionMask:
    """
    Boolean ``query_len × key_len`` mask; True means the key may be attended.

    Raises:
        MaskError: If some query row has no allowed key.
    """
    allowed: np.ndarray

    def __post_init__(self) -> None:
        allowed = np.asarray(self.allowed, dtype=bool)
        if allowed.ndim != 2:
            raise MaskError(f"attention mask must be 2-D, got shape {allowed.shape}")
        blocked_rows = np.flatnonzero(~allowed.any(axis=1))
        if blocked_rows.size:
            raise MaskError(f"attention mask blocks every key for query rows {blocked_rows.tolist()}")
        object.__setattr__(self, "allowed", allowed)

    @property
    def shape(self) -> tuple[int, int]:
        return self.allowed.shape

    def additive(self) -> np.ndarray:
        return np.where(self.allowed, 0.0, NEG_INF)

    @classmethod
    def all_allowed(cls, query_len: int, key_len: int) -> "AttentionMask":
        return cls(np.ones((query_len, key_len), dtype=bool))

    @classmethod
    def from_key_padding(cls, key_valid: np.ndarray, query_len: int) -> "AttentionMask":
        """Every query sees exactly the keys whose ``key_valid`` bit is set."""
        key_valid = np.asarray(key_valid, dtype=bool)
        return cls(np.broadcast_to(key_valid, (query_len, key_valid.shape[0])).copy())


def build_block_causal_mask(num_frames: int, queries_per_frame: int) -> AttentionMask:
    """
    Frame-level causal mask over ``queries_per_frame · num_frames`` slots.

    Slot i belongs to frame ``i // queries_per_frame`` and may attend slot j
    iff j's frame is not later than its own; a frame's slots see each other.
    """
    if num_frames < 1 or queries_per_frame < 1:
        raise ConfigError(f"need T >= 1 and Q >= 1, got T={num_frames}, Q={queries_per_frame}")
    frames = np.arange(num_frames * queries_per_frame) // queries_per_frame
    return AttentionMask(frames[None, :] <= frames[:, None])


class MultiHeadAttention(Module):
    """
    Multi-head attention with separate query/key/value/output projections.

    The most recent attention weights (``[heads, Lq, Lk]``) are kept in
    ``last_weights`` for inspection.
    """

    def __init__(self, width: int, num_heads: int, rng: np.random.Generator, dropout_rate: float = 0.0):
        if width % num_heads:
            raise ConfigError(f"model width {width} is not divisible by head count {num_heads}")
        self.width = width
        self.num_heads = num_heads
        self.head_dim = width // num_heads
        self.q_proj = Linear(width, width, rng)
        self.k_proj = Linear(width, width, rng)
        self.v_proj = Linear(width, width, rng)
        self.out_proj = Linear(width, width, rng)
        self.dropout_rate = dropout_rate
        self.rng = rng
        self.last_weights: Optional[np.ndarray] = None

    def _split_heads(self, x: Tensor) -> Tensor:
        length = x.shape[0]
        return x.reshape(length, self.num_heads, self.head_dim).transpose(1, 0, 2)

    def forward(self, query: Tensor, key: Tensor, value: Tensor,
                mask: Optional[AttentionMask] = None) -> Tensor:
        q_len, k_len = query.shape[0], key.shape[0]
        if value.shape[0] != k_len:
            raise DimensionError(f"key length {k_len} != value length {value.shape[0]}")
        q = self._split_heads(self.q_proj(query))
        k = self._split_heads(self.k_proj(key))
        v = self._split_heads(self.v_proj(value))
        scores = (q @ k.swapaxes(-1, -2)) * (1.0 / math.sqrt(self.head_dim))
        if mask is not None:
            if mask.shape != (q_len, k_len):
                raise DimensionError(f"mask shape {mask.shape} != attention shape {(q_len, k_len)}")
            scores = scores + mask.additive()
        weights = softmax(scores, axis=-1)
        self.last_weights = weights.data
        weights = dropout(weights, self.dropout_rate, self.rng, self.training)
        context = (weights @ v).transpose(1, 0, 2).reshape(q_len, self.width)
        return self.out_proj(context)

