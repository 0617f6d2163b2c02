"""Per-frame hyper-graph dumps: emitted actions and predicate triplets with scores and duplicate counts."""
from __future__ import annotations

import json
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from errors import SchemaError
from models.hypergraph_decoder import SetEntry
from situations.vocab import VocabularySet, unflatten_triplet
from utils import atomic_write_text

PathLike = Union[str, Path]


class TripletModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    subject: str
    relation: str
    object: str


class DumpEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["action", "relation"]
    label: str
    triplet: Optional[TripletModel] = None
    score: float = Field(ge=0.0, le=1.0)
    raw_count: int = Field(ge=1)


class HyperGraphDump(BaseModel):
    model_config = ConfigDict(extra="forbid")

    clip_id: str
    num_frames: int = Field(ge=1)
    frames: List[List[DumpEntry]]
    mean_duplicates: float = Field(ge=0.0)


def frame_duplicates(entries: Sequence[Union[SetEntry, DumpEntry]]) -> int:
    """Slots beyond the first that predicted an already-emitted class."""
    return sum(e.raw_count - 1 for e in entries)


def build_dump(clip_id: str, action_sets: Optional[List[List[SetEntry]]],
               relation_sets: Optional[List[List[SetEntry]]], vocab: VocabularySet) -> HyperGraphDump:
    """Merge per-frame action and relation sets (either may be absent under an ablation)."""
    num_frames = len(action_sets if action_sets is not None else relation_sets)
    frames: List[List[DumpEntry]] = []
    total_duplicates = 0
    for t in range(num_frames):
        entries: List[DumpEntry] = []
        for e in (action_sets[t] if action_sets is not None else []):
            entries.append(DumpEntry(kind="action", label=vocab.actions.label(e.label),
                                     score=e.score, raw_count=e.raw_count))
        for e in (relation_sets[t] if relation_sets is not None else []):
            label = vocab.predicates.label(e.label)
            t3 = unflatten_triplet(label)
            entries.append(DumpEntry(kind="relation", label=label,
                                     triplet=TripletModel(subject=t3.subject, relation=t3.relation, object=t3.obj),
                                     score=e.score, raw_count=e.raw_count))
        total_duplicates += frame_duplicates(entries)
        frames.append(entries)
    return HyperGraphDump(clip_id=clip_id, num_frames=num_frames, frames=frames,
                          mean_duplicates=total_duplicates / num_frames)


def dump_to_json(dump: HyperGraphDump) -> str:
    return json.dumps(dump.model_dump(mode="json", exclude_none=True), indent=2, sort_keys=True) + "\n"


def write_dump(path: PathLike, dump: HyperGraphDump) -> Path:
    return atomic_write_text(path, dump_to_json(dump))


def read_dump(path: PathLike) -> HyperGraphDump:
    """
    Raises:
        SchemaError: If the file is missing or does not match the dump schema.
    """
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"dump not found: {path}")
    try:
        return HyperGraphDump.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise SchemaError(f"{path}: not a valid hyper-graph dump: {exc}") from exc
