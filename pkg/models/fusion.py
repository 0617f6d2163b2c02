"""Two-stream co-attention between the question and the hyper-graph, and the answer head."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from config import ModelConfig
from engine.functional import dropout, gelu
from engine.module import Module
from engine.tensor import Tensor, concat
from errors import DimensionError
from transformer.attention import AttentionMask, MultiHeadAttention
from transformer.layers import FeedForward, LayerNorm, Linear


@dataclass(frozen=True, eq=False)
class FusedOutputs:
    question: Tensor
    graph: Tensor

    @property
    def cls(self) -> Tensor:
        return self.question[0:1]

    @property
    def hg(self) -> Tensor:
        return self.graph[0:1]


class CoAttentionLayer(Module):
    """
    Each stream queries the other stream's keys and values, then runs its own
    feed-forward block. Graph positions whose mask bit is 0 are blocked as
    keys for the question stream.
    """

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        width, heads = cfg.width, cfg.num_heads
        self.question_norm = LayerNorm(width)
        self.graph_norm = LayerNorm(width)
        self.question_attn = MultiHeadAttention(width, heads, rng, cfg.dropout)
        self.graph_attn = MultiHeadAttention(width, heads, rng, cfg.dropout)
        self.question_ff_norm = LayerNorm(width)
        self.question_ff = FeedForward(width, cfg.ff_hidden, rng, cfg.dropout)
        self.graph_ff_norm = LayerNorm(width)
        self.graph_ff = FeedForward(width, cfg.ff_hidden, rng, cfg.dropout)
        self.dropout_rate = cfg.dropout
        self.rng = rng

    def _drop(self, x: Tensor) -> Tensor:
        return dropout(x, self.dropout_rate, self.rng, self.training)

    def forward(self, question: Tensor, graph: Tensor, graph_mask: np.ndarray):
        hq, hg = self.question_norm(question), self.graph_norm(graph)
        key_mask = AttentionMask.from_key_padding(graph_mask, question.shape[0])
        question = question + self._drop(self.question_attn(hq, hg, hg, key_mask))
        graph = graph + self._drop(self.graph_attn(hg, hq, hq))
        question = question + self._drop(self.question_ff(self.question_ff_norm(question)))
        graph = graph + self._drop(self.graph_ff(self.graph_ff_norm(graph)))
        return question, graph


class CoAttention(Module):
    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        self.layers = [CoAttentionLayer(cfg, rng) for _ in range(cfg.coattention_layers)]

    def forward(self, question: Tensor, graph: Tensor, graph_mask: np.ndarray) -> FusedOutputs:
        if question.shape[-1] != graph.shape[-1]:
            raise DimensionError(f"stream widths differ: {question.shape} vs {graph.shape}")
        graph_mask = np.asarray(graph_mask, dtype=bool)
        if graph_mask.shape != (graph.shape[0],):
            raise DimensionError(f"graph mask {graph_mask.shape} does not fit {graph.shape[0]} tokens")
        for layer in self.layers:
            question, graph = layer(question, graph, graph_mask)
        return FusedOutputs(question, graph)


class AnswerHead(Module):
    """Concatenated [CLS] and pooled graph token (2d) through Linear, GELU, Linear."""

    def __init__(self, width: int, num_outputs: int, rng: np.random.Generator, std: float = 0.02):
        self.hidden = Linear(2 * width, width, rng, std)
        self.output = Linear(width, num_outputs, rng, std)
        self.num_outputs = num_outputs

    def forward(self, fused: FusedOutputs) -> Tensor:
        pooled = concat([fused.cls, fused.hg], axis=-1)
        return self.output(gelu(self.hidden(pooled))).reshape(self.num_outputs)
