"""Base class shared by the question and video encoders."""
from abc import abstractmethod
from typing import Any

import numpy as np

from config import ModelConfig
from engine.functional import dropout
from engine.module import Module
from engine.tensor import Tensor
from transformer.stacks import EncoderStack, PositionalEncoding


class TokenEncoder(Module):
    """
    Abstract token-sequence encoder.

    Subclasses turn their raw input into a ``[S, d]`` token matrix in
    ``embed_tokens``; this class adds position encodings, applies dropout and
    runs an ``L``-layer encoder stack with its own weights.
    """

    def __init__(self, cfg: ModelConfig, max_length: int, rng: np.random.Generator):
        """
        Args:
            cfg: Model hyperparameters (width, layers, heads, dropout).
            max_length: Size of the position table.
            rng: Generator used for every initialization and for dropout masks.
        """
        self.positions = PositionalEncoding(max_length, cfg.width, rng, cfg.position_kind)
        self.encoder = EncoderStack(cfg.num_layers, cfg.width, cfg.num_heads, cfg.ff_hidden, rng, cfg.dropout)
        self.dropout_rate = cfg.dropout
        self.rng = rng

    @abstractmethod
    def embed_tokens(self, inputs: Any) -> Tensor:
        """
        Map the encoder's input to token embeddings.

        Returns:
            Tensor of shape ``[S, d]`` without position information.
        """

    def forward(self, inputs: Any) -> Tensor:
        tokens = self.positions(self.embed_tokens(inputs))
        tokens = dropout(tokens, self.dropout_rate, self.rng, self.training)
        return self.encoder(tokens)
