"""
Situation hyper-graph token sequence.

Layout: position 0 is [HG]; then, frame by frame, the frame's N action
tokens followed by its M relation tokens. Each token is its decoded query
embedding plus a token-type embedding ([ACT] or [REL]) plus the embedding of
its frame index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np

from config import ModelConfig
from engine.module import Module, gaussian
from engine.tensor import Tensor, concat
from errors import ContractError, DimensionError
from matching.hungarian import SequenceAssignment
from situations.records import SituationAnnotation

TokenKind = Literal["action", "relation"]
ACT_TYPE = 0
REL_TYPE = 1


@dataclass(frozen=True, eq=False)
class HyperGraphSequence:
    tokens: Tensor
    mask: np.ndarray
    num_frames: int
    actions_per_frame: int
    relations_per_frame: int

    def __len__(self) -> int:
        return self.tokens.shape[0]


def token_index(frame: int, kind: TokenKind, slot: int, actions_per_frame: int,
                relations_per_frame: int, num_frames: int) -> int:
    """
    Sequence position of slot ``slot`` of ``kind`` in frame ``frame``.

    Raises:
        ContractError: If any coordinate is out of range.
    """
    limit = actions_per_frame if kind == "action" else relations_per_frame
    if not 0 <= frame < num_frames or not 0 <= slot < limit:
        raise ContractError(f"no {kind} slot {slot} in frame {frame} (T={num_frames}, Q={limit})")
    offset = slot if kind == "action" else actions_per_frame + slot
    return 1 + frame * (actions_per_frame + relations_per_frame) + offset


def _layout(num_frames: int, n: int, m: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Source row (into ``concat([actions, relations])``), type id and frame id per body position."""
    source, types, frames = [], [], []
    for t in range(num_frames):
        source += [t * n + q for q in range(n)] + [n * num_frames + t * m + q for q in range(m)]
        types += [ACT_TYPE] * n + [REL_TYPE] * m
        frames += [t] * (n + m)
    return np.array(source, dtype=np.int64), np.array(types, dtype=np.int64), np.array(frames, dtype=np.int64)


class HyperGraphEmbedding(Module):
    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        self.hg_token = gaussian(rng, (1, cfg.width), cfg.init_std)
        self.type_table = gaussian(rng, (2, cfg.width), cfg.init_std)
        self.situation_table = gaussian(rng, (cfg.num_frames, cfg.width), cfg.init_std)
        self.num_frames = cfg.num_frames
        self.actions_per_frame = cfg.max_actions if cfg.use_actions else 0
        self.relations_per_frame = cfg.max_relations if cfg.use_relations else 0
        self.source, self.type_ids, self.frame_ids = _layout(
            self.num_frames, self.actions_per_frame, self.relations_per_frame)

    def _check(self, emb: Optional[Tensor], per_frame: int, name: str) -> None:
        expected = per_frame * self.num_frames
        rows = 0 if emb is None else emb.shape[0]
        if rows != expected:
            raise DimensionError(f"{name} embeddings have {rows} rows, layout expects {expected}")

    def assemble(self, action_emb: Optional[Tensor], relation_emb: Optional[Tensor],
                 action_valid: Optional[np.ndarray] = None,
                 relation_valid: Optional[np.ndarray] = None) -> HyperGraphSequence:
        """
        Build the sequence. Validity vectors give the training mask (False
        for slots matched to phi); leaving them out gives the inference mask
        of all ones.

        Raises:
            DimensionError: If the embedding row counts do not fit the layout.
        """
        self._check(action_emb, self.actions_per_frame, "action")
        self._check(relation_emb, self.relations_per_frame, "relation")
        parts = [e for e in (action_emb, relation_emb) if e is not None]
        body = concat(parts, axis=0) if len(parts) > 1 else parts[0]
        body = body[self.source] + self.type_table[self.type_ids] + self.situation_table[self.frame_ids]
        tokens = concat([self.hg_token, body], axis=0)

        valid = []
        if self.actions_per_frame:
            valid.append(np.ones(action_emb.shape[0], dtype=bool)
                         if action_valid is None else np.asarray(action_valid, dtype=bool))
        if self.relations_per_frame:
            valid.append(np.ones(relation_emb.shape[0], dtype=bool)
                         if relation_valid is None else np.asarray(relation_valid, dtype=bool))
        valid = np.concatenate(valid)
        if valid.shape[0] != body.shape[0]:
            raise DimensionError(f"{valid.shape[0]} mask bits for {body.shape[0]} graph tokens")
        mask = np.concatenate([np.ones(1, dtype=bool), valid[self.source]])
        return HyperGraphSequence(tokens, mask, self.num_frames, self.actions_per_frame, self.relations_per_frame)

    def forward(self, action_emb: Optional[Tensor], relation_emb: Optional[Tensor],
                action_assignment: Optional[SequenceAssignment] = None,
                relation_assignment: Optional[SequenceAssignment] = None) -> HyperGraphSequence:
        """Training policy when assignments are given, inference policy otherwise."""
        return self.assemble(
            action_emb, relation_emb,
            None if action_assignment is None else action_assignment.matched,
            None if relation_assignment is None else relation_assignment.matched,
        )


def pad_frames(frames, per_frame: int, phi_index: int) -> np.ndarray:
    """Flatten per-frame class sets to ``T * Q`` ids, each frame sorted and phi-padded."""
    out = []
    for labels in frames:
        labels = sorted(int(c) for c in labels)
        if len(labels) > per_frame:
            raise ContractError(f"{len(labels)} ground-truth classes exceed {per_frame} slots")
        out += labels + [phi_index] * (per_frame - len(labels))
    return np.array(out, dtype=np.int64)


class GroundTruthGraph(Module):
    """
    Label-embedding stand-in for the decoders: the hyper-graph is built from
    the annotation itself (phi-padded), with phi slots masked out.
    """

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        self.action_labels = gaussian(rng, (cfg.num_actions + 1, cfg.width), cfg.init_std)
        self.relation_labels = gaussian(rng, (cfg.num_predicates + 1, cfg.width), cfg.init_std)
        self.num_actions = cfg.num_actions
        self.num_predicates = cfg.num_predicates
        self.max_actions = cfg.max_actions
        self.max_relations = cfg.max_relations

    def forward(self, annotation: SituationAnnotation):
        """
        Returns:
            ``(action_emb, action_valid, relation_emb, relation_valid)``.
        """
        actions = pad_frames(annotation.actions, self.max_actions, self.num_actions)
        relations = pad_frames(annotation.relations, self.max_relations, self.num_predicates)
        return (self.action_labels[actions], actions != self.num_actions,
                self.relation_labels[relations], relations != self.num_predicates)
