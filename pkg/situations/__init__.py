"""Vocabularies, dataset ingestion, synthetic situation videos and frame features."""
from situations.vocab import (
    PredicateTriplet,
    Vocabulary,
    VocabularySet,
    build_vocabularies,
    flatten_triplet,
    tokenize,
    unflatten_triplet,
)
from situations.records import EpisodeFeatures, QASample, SituationAnnotation, SituationDataset
from situations.loader import load_dataset, parse_dataset, save_dataset
from situations.features import Codebook, decode_frame_labels, feature_provider, resolve_features
from situations.synth import SYNTH_PRESETS, SynthSpec, TemplateOracle, split_dataset, synth_generate

__all__ = [
    "PredicateTriplet",
    "Vocabulary",
    "VocabularySet",
    "build_vocabularies",
    "flatten_triplet",
    "tokenize",
    "unflatten_triplet",
    "EpisodeFeatures",
    "QASample",
    "SituationAnnotation",
    "SituationDataset",
    "load_dataset",
    "parse_dataset",
    "save_dataset",
    "Codebook",
    "decode_frame_labels",
    "feature_provider",
    "resolve_features",
    "SYNTH_PRESETS",
    "SynthSpec",
    "TemplateOracle",
    "split_dataset",
    "synth_generate",
]
