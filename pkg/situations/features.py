"""
Synthetic frozen-backbone stand-in.

Each action and predicate class owns a seeded codebook vector; a frame's
feature at every spatial cell is the sum of its classes' vectors plus
Gaussian noise. With ``d_x`` at least the number of classes the labels are
linearly decodable from noiseless features.
"""
from __future__ import annotations

import functools
import zlib
from dataclasses import dataclass
from typing import Set, Tuple

import numpy as np

from errors import ConfigError, SchemaError
from situations.records import EpisodeFeatures, SituationAnnotation, SituationDataset


@dataclass(frozen=True, eq=False)
class Codebook:
    """Rows ``[0, num_actions)`` are actions, the rest predicates; unit-norm rows."""
    vectors: np.ndarray
    num_actions: int

    @classmethod
    def build(cls, seed: int, num_actions: int, num_predicates: int, feature_dim: int) -> "Codebook":
        total = num_actions + num_predicates
        if feature_dim < total:
            raise ConfigError(
                f"feature_dim {feature_dim} is smaller than the {total} classes it must encode"
            )
        rng = np.random.default_rng(seed)
        vectors = rng.normal(size=(total, feature_dim))
        vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
        return cls(vectors, num_actions)

    @property
    def feature_dim(self) -> int:
        return self.vectors.shape[1]

    def frame_vector(self, actions, relations) -> np.ndarray:
        rows = list(actions) + [self.num_actions + r for r in relations]
        if not rows:
            return np.zeros(self.feature_dim)
        return self.vectors[rows].sum(axis=0)


@functools.lru_cache(maxsize=8)
def cached_codebook(seed: int, num_actions: int, num_predicates: int, feature_dim: int) -> Codebook:
    return Codebook.build(seed, num_actions, num_predicates, feature_dim)


def clip_noise_seed(codebook_seed: int, clip_id: str) -> int:
    return (codebook_seed * 1_000_003 + zlib.crc32(clip_id.encode("utf-8"))) % (2 ** 32)


def feature_provider(annotation: SituationAnnotation, codebook: Codebook, grid: Tuple[int, int],
                     noise_sigma: float = 0.0, seed: int = 0) -> EpisodeFeatures:
    """Synthesize ``[T, h, w, d_x]`` features for one annotated clip."""
    h, w = grid
    frames = np.stack([
        codebook.frame_vector(annotation.actions[t], annotation.relations[t])
        for t in range(annotation.num_frames)
    ])
    features = np.broadcast_to(frames[:, None, None, :], (annotation.num_frames, h, w, codebook.feature_dim)).copy()
    if noise_sigma > 0:
        features += np.random.default_rng(seed).normal(0.0, noise_sigma, size=features.shape)
    return EpisodeFeatures(annotation.clip_id, features)


def decode_frame_labels(frame_features: np.ndarray, codebook: Codebook) -> Tuple[Set[int], Set[int]]:
    """Least-squares multi-hot decode of one frame's ``[h, w, d_x]`` features."""
    mean = frame_features.reshape(-1, codebook.feature_dim).mean(axis=0)
    coeffs, *_ = np.linalg.lstsq(codebook.vectors.T, mean, rcond=None)
    active = np.flatnonzero(coeffs > 0.5)
    actions = {int(i) for i in active if i < codebook.num_actions}
    relations = {int(i) - codebook.num_actions for i in active if i >= codebook.num_actions}
    return actions, relations


def resolve_features(dataset: SituationDataset, clip_id: str, grid: Tuple[int, int],
                     feature_dim: int, noise_sigma: float) -> EpisodeFeatures:
    """
    Return (and cache) the features of a clip, synthesizing them when needed.

    Raises:
        SchemaError: If inline features do not match the configured shape.
    """
    cached = dataset.feature_cache.get(clip_id)
    if cached is not None:
        return cached
    annotation = dataset.annotation(clip_id)
    source = dataset.feature_sources[clip_id]
    if source.inline is not None:
        expected = (annotation.num_frames, grid[0], grid[1], feature_dim)
        if source.inline.shape != expected:
            raise SchemaError(f"clip {clip_id!r}: inline features {source.inline.shape} != {expected}")
        episode = EpisodeFeatures(clip_id, source.inline)
    else:
        codebook = cached_codebook(source.codebook_seed, len(dataset.vocab.actions),
                                  len(dataset.vocab.predicates), feature_dim)
        episode = feature_provider(annotation, codebook, grid, noise_sigma,
                                   clip_noise_seed(source.codebook_seed, clip_id))
    dataset.feature_cache[clip_id] = episode
    return episode
