"""Read and write the JSON dataset format with cross-reference validation."""
from __future__ import annotations

import json
import logging
from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from errors import SchemaError, VocabularyError
from situations.records import FeatureSource, QASample, SituationAnnotation, SituationDataset
from situations.schema import ClipEntry, DatasetFile, FeatureSpec, QAEntry, VocabSection
from situations.vocab import VocabularySet, tokenize
from utils import atomic_write_text

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _check_frames(clip: ClipEntry, field_name: str, frames: List[List[int]], vocab_size: int, kind: str) -> None:
    if len(frames) != clip.T:
        raise SchemaError(f"clip {clip.clip_id!r}: {field_name} has {len(frames)} frames, T={clip.T}")
    unknown = sorted({i for frame in frames for i in frame if not 0 <= i < vocab_size})
    if unknown:
        raise VocabularyError(kind, unknown)
    for t, frame in enumerate(frames):
        if len(set(frame)) != len(frame):
            raise SchemaError(f"clip {clip.clip_id!r}: duplicate {kind} class in frame {t}")


def truncate_frames(frames: Sequence[Sequence[int]], limit: Optional[int],
                    frequency: Counter) -> Tuple[Tuple[Tuple[int, ...], ...], int]:
    """
    Cap every frame set at ``limit`` classes, dropping the least frequent first.

    Ties on frequency drop the larger class index first.

    Returns:
        The truncated frames (each sorted) and how many frames were cut.
    """
    cut = 0
    out = []
    for frame in frames:
        frame = list(frame)
        if limit is not None and len(frame) > limit:
            frame = sorted(frame, key=lambda c: (-frequency[c], c))[:limit]
            cut += 1
        out.append(tuple(sorted(frame)))
    return tuple(out), cut


def _validate_qa(entry: QAEntry, clips: Dict[str, ClipEntry], num_answers: int) -> QASample:
    if entry.clip_id not in clips:
        raise SchemaError(f"QA references unknown clip_id {entry.clip_id!r}")
    if not tokenize(entry.question):
        raise SchemaError(f"clip {entry.clip_id!r}: empty question")
    if entry.mode == "multiple_choice":
        if not entry.choices:
            raise SchemaError(f"clip {entry.clip_id!r}: multiple-choice question without choices")
        if entry.answer >= len(entry.choices):
            raise SchemaError(
                f"clip {entry.clip_id!r}: answer {entry.answer} out of range for {len(entry.choices)} choices"
            )
    else:
        if entry.choices is not None:
            raise SchemaError(f"clip {entry.clip_id!r}: open-ended question must not carry choices")
        if entry.answer >= num_answers:
            raise VocabularyError("answer", [entry.answer])
    return QASample(
        clip_id=entry.clip_id,
        question=entry.question,
        mode=entry.mode,
        answer=entry.answer,
        choices=tuple(entry.choices) if entry.choices is not None else None,
        category=entry.category,
    )


def parse_dataset(raw: dict, max_actions: Optional[int] = None,
                  max_relations: Optional[int] = None) -> SituationDataset:
    """
    Validate a decoded dataset document and build the in-memory dataset.

    Args:
        raw: Decoded JSON object.
        max_actions: Per-frame action set cap N (None keeps everything).
        max_relations: Per-frame predicate set cap M.

    Raises:
        SchemaError: On structural problems, naming the clip.
        VocabularyError: On indices outside their vocabulary.
    """
    try:
        doc = DatasetFile.model_validate(raw)
    except ValidationError as exc:
        raise SchemaError(f"dataset does not match schema: {exc}") from exc

    vocab = VocabularySet.from_lists(doc.vocab.actions, doc.vocab.predicates, doc.vocab.answers, doc.vocab.words)
    clips: Dict[str, ClipEntry] = {}
    for clip in doc.clips:
        if clip.clip_id in clips:
            raise SchemaError(f"duplicate clip_id {clip.clip_id!r}")
        _check_frames(clip, "actions", clip.actions, len(vocab.actions), "action")
        _check_frames(clip, "relations", clip.relations, len(vocab.predicates), "predicate")
        clips[clip.clip_id] = clip

    action_freq = Counter(i for c in doc.clips for frame in c.actions for i in frame)
    relation_freq = Counter(i for c in doc.clips for frame in c.relations for i in frame)

    annotations: Dict[str, SituationAnnotation] = {}
    sources: Dict[str, FeatureSource] = {}
    truncated = 0
    for clip in doc.clips:
        actions, cut_a = truncate_frames(clip.actions, max_actions, action_freq)
        relations, cut_r = truncate_frames(clip.relations, max_relations, relation_freq)
        truncated += cut_a + cut_r
        annotations[clip.clip_id] = SituationAnnotation(clip.clip_id, clip.T, actions, relations)
        sources[clip.clip_id] = _feature_source(clip)
    if truncated:
        logger.warning("truncated %d ground-truth frame sets to the configured set sizes", truncated)

    qa = [_validate_qa(entry, clips, len(vocab.answers)) for entry in doc.qa]
    return SituationDataset(vocab, annotations, sources, qa, truncated_frames=truncated)


def _feature_source(clip: ClipEntry) -> FeatureSource:
    if clip.features.inline is None:
        return FeatureSource(codebook_seed=clip.features.codebook_seed)
    try:
        array = np.asarray(clip.features.inline, dtype=np.float64)
    except ValueError as exc:
        raise SchemaError(f"clip {clip.clip_id!r}: ragged inline features") from exc
    if array.ndim != 4 or array.shape[0] != clip.T:
        raise SchemaError(f"clip {clip.clip_id!r}: inline features shape {array.shape} does not match T={clip.T}")
    if not np.all(np.isfinite(array)):
        raise SchemaError(f"clip {clip.clip_id!r}: inline features contain non-finite values")
    return FeatureSource(inline=array)


def load_dataset(path: PathLike, max_actions: Optional[int] = None,
                 max_relations: Optional[int] = None) -> SituationDataset:
    """Read a dataset file (UTF-8 JSON); see ``parse_dataset``."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"dataset file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return parse_dataset(raw, max_actions, max_relations)


def dataset_to_document(dataset: SituationDataset) -> dict:
    clips = []
    for clip_id, ann in dataset.annotations.items():
        source = dataset.feature_sources[clip_id]
        features = (FeatureSpec(codebook_seed=source.codebook_seed) if source.inline is None
                    else FeatureSpec(inline=source.inline.tolist()))
        clips.append(ClipEntry(
            clip_id=clip_id,
            T=ann.num_frames,
            actions=[list(f) for f in ann.actions],
            relations=[list(f) for f in ann.relations],
            features=features,
        ))
    qa = [QAEntry(
        clip_id=s.clip_id,
        question=s.question,
        mode=s.mode,
        choices=list(s.choices) if s.choices is not None else None,
        answer=s.answer,
        category=s.category,
    ) for s in dataset.qa]
    doc = DatasetFile(vocab=VocabSection(**dataset.vocab.to_dict()), clips=clips, qa=qa)
    return doc.model_dump(exclude_none=True)


def save_dataset(dataset: SituationDataset, path: PathLike) -> Path:
    """Write the dataset as indented UTF-8 JSON; output is byte-stable for equal datasets."""
    text = json.dumps(dataset_to_document(dataset), indent=2, ensure_ascii=False)
    return atomic_write_text(path, text + "\n")
