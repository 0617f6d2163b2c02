"""
Seeded synthetic situation videos with template questions.

Actions and relationship predicates persist over random-length spans, and
every question's answer is a pure function of the annotation, so the
generator doubles as a ground-truth oracle. ``TemplateOracle`` re-derives
answers from the question text alone.
"""
from __future__ import annotations

import logging
import re
from collections import Counter
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from errors import ConfigError, SchemaError
from situations.records import FeatureSource, QASample, SituationAnnotation, SituationDataset
from situations.vocab import PredicateTriplet, Vocabulary, VocabularySet, build_word_vocabulary, unflatten_triplet

logger = logging.getLogger(__name__)

ACTION_VERBS = ("take", "put down", "open", "close", "hold", "throw", "wash", "tidy up",
                "sit on", "lie on", "eat", "watch")
OBJECTS = ("bottle", "cup", "book", "door", "laptop", "towel", "box", "phone", "pillow",
           "bag", "table", "chair", "shelf", "sofa", "bed", "sandwich", "window", "blanket")
PERSON_RELATIONS = ("holding", "touching", "in front of", "behind", "on the side of",
                    "sitting on", "looking at", "wiping", "carrying", "leaning on")
OBJECT_RELATIONS = ("stands on", "next to", "inside")
OBJECT_SUBJECTS = ("bottle", "cup", "book", "box", "phone")

TEMPLATE_ACTION = "action"
TEMPLATE_INTERACTION = "interaction"
TEMPLATE_SEQUENCE = "sequence"
TEMPLATE_COUNT = "count"

ACTION_RE = re.compile(r"^which action happens in frame (\d+)$")
INTERACTION_RE = re.compile(r"^which relationship holds in frame (\d+)$")
SEQUENCE_RE = re.compile(r"^what does the person do after (.+)$")
COUNT_RE = re.compile(r"^how many (actions|relationships) happen in frame (\d+)$")


class SynthSpec(BaseModel):
    """Shape of a synthetic corpus. ``val_episodes`` are carved from ``episodes``."""
    model_config = ConfigDict(extra="forbid")

    episodes: int = Field(200, ge=1)
    val_episodes: int = Field(0, ge=0)
    num_frames: int = Field(4, ge=1)
    max_actions: int = Field(2, ge=1)
    max_relations: int = Field(3, ge=1)
    num_actions: int = Field(10, ge=1)
    num_predicates: int = Field(12, ge=1)
    num_choices: int = Field(4, ge=1)
    mode: Literal["multiple_choice", "open_ended"] = "multiple_choice"
    questions_per_episode: int = Field(1, ge=1)
    codebook_seed: Optional[int] = None
    clip_prefix: str = "clip"

    def check_feasible(self) -> None:
        """
        Raises:
            ConfigError: If the vocabularies cannot hold the requested sets or distractors.
        """
        if self.num_actions < self.max_actions or self.num_predicates < self.max_relations:
            raise ConfigError("vocabulary sizes must be at least the per-frame set sizes")
        if self.val_episodes >= self.episodes:
            raise ConfigError(f"val_episodes {self.val_episodes} must be below episodes {self.episodes}")
        if self.mode == "multiple_choice":
            if self.num_choices < 2:
                raise ConfigError("multiple-choice questions need at least 2 choices")
            distractors = self.num_choices - 1
            if self.num_actions - self.max_actions < distractors or \
                    self.num_predicates - self.max_relations < distractors:
                raise ConfigError(
                    f"{self.num_choices}-way questions need {distractors} absent labels per frame; "
                    f"enlarge num_actions/num_predicates"
                )
        if self.num_actions > len(action_pool()):
            raise ConfigError(f"at most {len(action_pool())} synthetic actions are available")
        if self.num_predicates > len(predicate_pool()):
            raise ConfigError(f"at most {len(predicate_pool())} synthetic predicates are available")


SYNTH_PRESETS: Dict[str, SynthSpec] = {
    "toy": SynthSpec(episodes=250, val_episodes=50),
    "tiny": SynthSpec(episodes=12, val_episodes=4),
    "open-ended": SynthSpec(episodes=250, val_episodes=50, mode="open_ended"),
}


def action_pool() -> List[str]:
    return [f"{verb} {obj}" for verb in ACTION_VERBS for obj in OBJECTS]


def predicate_pool() -> List[PredicateTriplet]:
    pool = [PredicateTriplet("person", rel, obj) for rel in PERSON_RELATIONS for obj in OBJECTS]
    pool += [PredicateTriplet(subj, rel, obj) for subj in OBJECT_SUBJECTS
             for rel in OBJECT_RELATIONS for obj in OBJECTS if obj != subj]
    return pool


def _timeline(rng: np.random.Generator, num_frames: int, limit: int, vocab_size: int) -> List[Tuple[int, ...]]:
    """Per-frame class sets where classes persist over random spans."""
    frames: List[Tuple[int, ...]] = []
    remaining: Dict[int, int] = {}
    for _ in range(num_frames):
        k = int(rng.integers(1, limit + 1))
        current = [c for c, left in remaining.items() if left > 0][:k]
        if len(current) < k:
            pool = [c for c in range(vocab_size) if c not in current]
            for c in rng.choice(pool, size=k - len(current), replace=False):
                remaining[int(c)] = int(rng.integers(1, num_frames + 1))
                current.append(int(c))
        remaining = {c: remaining[c] - 1 for c in current}
        frames.append(tuple(sorted(current)))
    return frames


class _QuestionWriter:
    """Builds template questions; keeps answer positions and counts balanced."""

    def __init__(self, rng: np.random.Generator, spec: SynthSpec, actions: Vocabulary, predicates: Vocabulary):
        self.rng = rng
        self.spec = spec
        self.actions = actions
        self.predicate_words = [unflatten_triplet(p).words() for p in predicates.labels]
        self._positions: List[int] = []
        self.answer_counts: Counter = Counter()

    def _next_position(self) -> int:
        if not self._positions:
            self._positions = [int(i) for i in self.rng.permutation(self.spec.num_choices)]
        return self._positions.pop()

    def _choices(self, correct: int, absent: Sequence[int], render) -> Tuple[Tuple[str, ...], int]:
        distractors = [int(c) for c in self.rng.choice(absent, size=self.spec.num_choices - 1, replace=False)]
        position = self._next_position()
        ordered = distractors[:position] + [correct] + distractors[position:]
        return tuple(render(c) for c in ordered), position

    def multiple_choice(self, clip_id: str, ann: SituationAnnotation) -> QASample:
        T = ann.num_frames
        templates = [TEMPLATE_ACTION, TEMPLATE_INTERACTION]
        sequences = self._sequence_candidates(ann)
        if sequences:
            templates.append(TEMPLATE_SEQUENCE)
        template = templates[int(self.rng.integers(len(templates)))]
        n_act, n_pred = len(self.actions), len(self.predicate_words)

        if template == TEMPLATE_ACTION:
            t = int(self.rng.integers(T))
            correct = int(self.rng.choice(ann.actions[t]))
            absent = [c for c in range(n_act) if c not in ann.actions[t]]
            choices, answer = self._choices(correct, absent, self.actions.label)
            question = f"which action happens in frame {t}"
        elif template == TEMPLATE_INTERACTION:
            t = int(self.rng.integers(T))
            correct = int(self.rng.choice(ann.relations[t]))
            absent = [c for c in range(n_pred) if c not in ann.relations[t]]
            choices, answer = self._choices(correct, absent, lambda c: self.predicate_words[c])
            question = "which relationship holds in frame {}".format(t)
        else:
            action, nxt = sequences[int(self.rng.integers(len(sequences)))]
            correct = int(self.rng.choice(ann.actions[nxt]))
            absent = [c for c in range(n_act) if c not in ann.actions[nxt] and c != action]
            choices, answer = self._choices(correct, absent, self.actions.label)
            question = f"what does the person do after {self.actions.label(action)}"
        self.answer_counts[answer] += 1
        return QASample(clip_id, question, "multiple_choice", answer, choices, template)

    def _sequence_candidates(self, ann: SituationAnnotation) -> List[Tuple[int, int]]:
        """(action, next frame) pairs where the action ends before the last frame."""
        out = []
        needed = self.spec.num_choices - 1
        for action in sorted({a for frame in ann.actions for a in frame}):
            last = max(t for t, frame in enumerate(ann.actions) if action in frame)
            if last + 1 < ann.num_frames:
                absent = len(self.actions) - len(ann.actions[last + 1]) - 1
                if absent >= needed:
                    out.append((action, last + 1))
        return out

    def open_ended(self, clip_id: str, ann: SituationAnnotation, answers: Vocabulary) -> QASample:
        candidates = []
        for kind, frames in (("actions", ann.actions), ("relationships", ann.relations)):
            for t, frame in enumerate(frames):
                candidates.append((kind, t, answers.lookup(str(len(frame)))))
        least = min(self.answer_counts[c[2]] for c in candidates)
        pool = [c for c in candidates if self.answer_counts[c[2]] == least]
        kind, t, answer = pool[int(self.rng.integers(len(pool)))]
        self.answer_counts[answer] += 1
        return QASample(clip_id, f"how many {kind} happen in frame {t}", "open_ended", answer, None, TEMPLATE_COUNT)


def synth_generate(seed: int, spec: SynthSpec) -> SituationDataset:
    """
    Generate a full synthetic dataset; identical (seed, spec) gives identical output.

    Raises:
        ConfigError: If the spec is infeasible.
    """
    spec.check_feasible()
    rng = np.random.default_rng(seed)

    pool = action_pool()
    actions = sorted(pool[i] for i in rng.choice(len(pool), size=spec.num_actions, replace=False))
    triplets = predicate_pool()
    predicates = sorted(triplets[i].flatten()
                        for i in rng.choice(len(triplets), size=spec.num_predicates, replace=False))
    action_vocab = Vocabulary("action", tuple(actions))
    predicate_vocab = Vocabulary("predicate", tuple(predicates))
    answers = sorted(str(k) for k in range(1, max(spec.max_actions, spec.max_relations) + 1)) \
        if spec.mode == "open_ended" else []
    answer_vocab = Vocabulary("answer", tuple(answers))

    codebook_seed = spec.codebook_seed if spec.codebook_seed is not None else seed
    writer = _QuestionWriter(rng, spec, action_vocab, predicate_vocab)
    annotations: Dict[str, SituationAnnotation] = {}
    sources: Dict[str, FeatureSource] = {}
    qa: List[QASample] = []
    for episode in range(spec.episodes):
        clip_id = f"{spec.clip_prefix}{episode:05d}"
        ann = SituationAnnotation(
            clip_id,
            spec.num_frames,
            tuple(_timeline(rng, spec.num_frames, spec.max_actions, spec.num_actions)),
            tuple(_timeline(rng, spec.num_frames, spec.max_relations, spec.num_predicates)),
        )
        annotations[clip_id] = ann
        sources[clip_id] = FeatureSource(codebook_seed=codebook_seed)
        for _ in range(spec.questions_per_episode):
            if spec.mode == "multiple_choice":
                qa.append(writer.multiple_choice(clip_id, ann))
            else:
                qa.append(writer.open_ended(clip_id, ann, answer_vocab))

    texts = [s.question for s in qa] + [c for s in qa for c in (s.choices or ())]
    vocab = VocabularySet(action_vocab, predicate_vocab, answer_vocab, build_word_vocabulary(texts))
    logger.debug("generated %d episodes, %d questions", spec.episodes, len(qa))
    return SituationDataset(vocab, annotations, sources, qa)


def split_dataset(dataset: SituationDataset, val_episodes: int) -> Tuple[SituationDataset, SituationDataset]:
    """Move the last ``val_episodes`` clips (and their questions) into a second dataset sharing the vocabulary."""
    clip_ids = dataset.clip_ids
    val_ids = set(clip_ids[len(clip_ids) - val_episodes:]) if val_episodes else set()

    def subset(keep) -> SituationDataset:
        return SituationDataset(
            dataset.vocab,
            {c: a for c, a in dataset.annotations.items() if keep(c)},
            {c: s for c, s in dataset.feature_sources.items() if keep(c)},
            [s for s in dataset.qa if keep(s.clip_id)],
        )

    return subset(lambda c: c not in val_ids), subset(lambda c: c in val_ids)


class TemplateOracle:
    """Recomputes a synthetic question's answer from its text and the annotation only."""

    def __init__(self, vocab: VocabularySet):
        self.vocab = vocab
        self.predicate_by_words = {unflatten_triplet(p).words(): i for i, p in enumerate(vocab.predicates.labels)}

    def _single_choice(self, sample: QASample, present, lookup) -> int:
        hits = [i for i, choice in enumerate(sample.choices or ()) if lookup(choice) in present]
        if len(hits) != 1:
            raise SchemaError(f"clip {sample.clip_id!r}: {len(hits)} choices satisfy {sample.question!r}")
        return hits[0]

    def answer(self, ann: SituationAnnotation, sample: QASample) -> int:
        """
        Raises:
            SchemaError: If the question matches no template or is ambiguous.
        """
        text = sample.question
        if m := ACTION_RE.match(text):
            return self._single_choice(sample, ann.actions[int(m.group(1))], self.vocab.actions.lookup)
        if m := INTERACTION_RE.match(text):
            return self._single_choice(sample, ann.relations[int(m.group(1))], self.predicate_by_words.get)
        if m := SEQUENCE_RE.match(text):
            action = self.vocab.actions.lookup(m.group(1))
            last = max(t for t, frame in enumerate(ann.actions) if action in frame)
            return self._single_choice(sample, ann.actions[last + 1], self.vocab.actions.lookup)
        if m := COUNT_RE.match(text):
            frames = ann.actions if m.group(1) == "actions" else ann.relations
            return self.vocab.answers.lookup(str(len(frames[int(m.group(2))])))
        raise SchemaError(f"question {text!r} matches no known template")
