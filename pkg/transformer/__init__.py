"""Transformer building blocks: attention, masks, encoder/decoder stacks, positions."""
from transformer.attention import AttentionMask, MultiHeadAttention, build_block_causal_mask
from transformer.layers import FeedForward, LayerNorm, Linear
from transformer.stacks import (
    DecoderStack,
    EncoderStack,
    PositionalEncoding,
    position_encoding,
    sinusoidal_table,
)

__all__ = [
    "AttentionMask",
    "MultiHeadAttention",
    "build_block_causal_mask",
    "FeedForward",
    "LayerNorm",
    "Linear",
    "DecoderStack",
    "EncoderStack",
    "PositionalEncoding",
    "position_encoding",
    "sinusoidal_table",
]
