"""Backbone-feature adapter and the video encoder with its [VIS] token."""
from __future__ import annotations

import numpy as np

from config import ModelConfig
from engine.module import gaussian
from engine.tensor import Tensor, concat
from errors import ConfigError, DimensionError
from models.base import TokenEncoder
from transformer.layers import Linear


class FeatureAdapter(Linear):
    """
    Temporal average-pool (window 2, stride 2) followed by a per-cell ``d_x -> d`` projection.

    With ``temporal_halving`` off only the projection runs, so ``T' = T``.
    """

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        super().__init__(cfg.feature_dim, cfg.width, rng, cfg.init_std)
        self.temporal_halving = cfg.temporal_halving

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4:
            raise DimensionError(f"features must be [T, h, w, d_x], got {x.shape}")
        if self.temporal_halving:
            frames, h, w, dx = x.shape
            if frames % 2:
                raise ConfigError(f"temporal halving needs an even frame count, got T={frames}")
            x = x.reshape(frames // 2, 2, h, w, dx).mean(axis=1)
        return super().forward(x)


class VideoEncoder(TokenEncoder):
    """Flattens adapted features row-major into ``T'hw`` tokens and prepends [VIS]."""

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        super().__init__(cfg, cfg.video_tokens, rng)
        self.adapter = FeatureAdapter(cfg, rng)
        self.vis_token = gaussian(rng, (1, cfg.width), cfg.init_std)

    def embed_tokens(self, inputs: Tensor) -> Tensor:
        adapted = self.adapter(inputs)
        frames, h, w, width = adapted.shape
        return concat([self.vis_token, adapted.reshape(frames * h * w, width)], axis=0)
