"""
Action and relation query decoders.

Each decoder owns a table of ``Q * T`` learnable queries (row ``t * Q + q``
is slot ``q`` of frame ``t``), decodes them against the video memory in one
pass under the block-causal frame mask, and classifies every slot into
``classes + 1`` outputs where the last one is phi.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Union

import numpy as np

from config import ModelConfig
from engine.functional import gelu, softmax_array
from engine.module import Module, gaussian
from engine.tensor import Tensor
from errors import ConfigError
from transformer.attention import build_block_causal_mask
from transformer.layers import LayerNorm, Linear
from transformer.stacks import DecoderStack

QueryKind = Literal["action", "relation"]


class QuerySet(Module):
    """Learnable ``[Q * T, d]`` query table of one kind."""

    def __init__(self, kind: QueryKind, per_frame: int, num_frames: int, width: int,
                 rng: np.random.Generator, std: float = 0.02):
        if min(per_frame, num_frames, width) < 1:
            raise ConfigError(f"query set needs Q, T, d >= 1, got {per_frame}, {num_frames}, {width}")
        self.kind = kind
        self.per_frame = per_frame
        self.num_frames = num_frames
        self.table = gaussian(rng, (per_frame * num_frames, width), std)

    def row(self, frame: int, slot: int) -> int:
        return frame * self.per_frame + slot

    def forward(self) -> Tensor:
        return self.table


def init_queries(kind: QueryKind, per_frame: int, num_frames: int, width: int,
                 seed: Union[int, np.random.Generator], std: float = 0.02) -> QuerySet:
    """Seeded Gaussian query table; the same seed gives the same table."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return QuerySet(kind, per_frame, num_frames, width, rng, std)


@dataclass(frozen=True, eq=False)
class DecodedQueries:
    kind: QueryKind
    embeddings: Tensor
    logits: Tensor


class PredictionHead(Module):
    """LayerNorm, linear ``d -> d``, GELU, linear ``d -> classes + 1``; applied per row."""

    def __init__(self, width: int, num_classes: int, rng: np.random.Generator, std: float = 0.02):
        if num_classes < 1:
            raise ConfigError(f"prediction head needs at least one class, got {num_classes}")
        self.norm = LayerNorm(width)
        self.hidden = Linear(width, width, rng, std)
        self.classifier = Linear(width, num_classes + 1, rng, std)

    def forward(self, embeddings: Tensor) -> Tensor:
        return self.classifier(gelu(self.hidden(self.norm(embeddings))))


class HyperGraphDecoder(Module):
    def __init__(self, kind: QueryKind, per_frame: int, num_classes: int, cfg: ModelConfig,
                 rng: np.random.Generator):
        self.queries = QuerySet(kind, per_frame, cfg.num_frames, cfg.width, rng, cfg.init_std)
        self.decoder = DecoderStack(cfg.num_layers, cfg.width, cfg.num_heads, cfg.ff_hidden, rng, cfg.dropout)
        self.head = PredictionHead(cfg.width, num_classes, rng, cfg.init_std)
        self.kind = kind
        self.num_classes = num_classes
        self.target_mask = build_block_causal_mask(cfg.num_frames, per_frame)

    @property
    def phi_index(self) -> int:
        return self.num_classes

    def decode_queries(self, memory: Tensor) -> Tensor:
        """Decode all ``Q * T`` queries in one masked pass over the unmasked memory."""
        return self.decoder(self.queries(), memory, self.target_mask)

    def forward(self, memory: Tensor) -> DecodedQueries:
        embeddings = self.decode_queries(memory)
        return DecodedQueries(self.queries.kind, embeddings, self.head(embeddings))


@dataclass(frozen=True)
class SetEntry:
    """One emitted class of a frame; ``raw_count`` counts the slots that predicted it."""
    label: int
    score: float
    raw_count: int


def predict_sets(logits: Union[Tensor, np.ndarray], queries_per_frame: int,
                 phi_index: Optional[int] = None) -> List[List[SetEntry]]:
    """
    Per-frame predicted class sets.

    Every slot emits its argmax class with that class's softmax probability;
    phi emits nothing. Repeated classes within a frame collapse to one entry
    holding the highest score.
    """
    values = logits.data if isinstance(logits, Tensor) else np.asarray(logits, dtype=np.float64)
    phi = values.shape[1] - 1 if phi_index is None else phi_index
    probs = softmax_array(values, axis=-1)
    best = probs.argmax(axis=-1)
    frames: List[List[SetEntry]] = []
    for start in range(0, values.shape[0], queries_per_frame):
        found: Dict[int, List[float]] = {}
        for row in range(start, start + queries_per_frame):
            label = int(best[row])
            if label == phi:
                continue
            found.setdefault(label, []).append(float(probs[row, label]))
        frames.append([SetEntry(label, max(scores), len(scores)) for label, scores in sorted(found.items())])
    return frames
