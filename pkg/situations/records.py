"""In-memory records: annotations, QA samples, episode features and the dataset container."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np

from errors import SchemaError
from situations.vocab import VocabularySet

QAMode = Literal["multiple_choice", "open_ended"]


@dataclass(frozen=True)
class SituationAnnotation:
    """Per-frame ground-truth action and predicate class sets of one clip."""
    clip_id: str
    num_frames: int
    actions: Tuple[Tuple[int, ...], ...]
    relations: Tuple[Tuple[int, ...], ...]

    def frame_actions(self, t: int) -> Tuple[int, ...]:
        return self.actions[t]

    def frame_relations(self, t: int) -> Tuple[int, ...]:
        return self.relations[t]


@dataclass(frozen=True)
class QASample:
    clip_id: str
    question: str
    mode: QAMode
    answer: int
    choices: Optional[Tuple[str, ...]] = None
    category: Optional[str] = None

    @property
    def num_choices(self) -> int:
        return len(self.choices) if self.choices else 0


@dataclass(frozen=True)
class FeatureSource:
    """Either inline features or the seed of the codebook that synthesizes them."""
    inline: Optional[np.ndarray] = None
    codebook_seed: Optional[int] = None


@dataclass(frozen=True)
class EpisodeFeatures:
    clip_id: str
    features: np.ndarray  # [T, h, w, d_x]

    @property
    def num_frames(self) -> int:
        return self.features.shape[0]


@dataclass
class SituationDataset:
    """Vocabularies, annotated clips, their feature sources and QA samples."""
    vocab: VocabularySet
    annotations: Dict[str, SituationAnnotation]
    feature_sources: Dict[str, FeatureSource]
    qa: List[QASample]
    truncated_frames: int = 0
    feature_cache: Dict[str, EpisodeFeatures] = field(default_factory=dict, repr=False)

    @property
    def clip_ids(self) -> List[str]:
        return list(self.annotations)

    def annotation(self, clip_id: str) -> SituationAnnotation:
        try:
            return self.annotations[clip_id]
        except KeyError:
            raise SchemaError(f"unknown clip_id {clip_id!r}") from None
