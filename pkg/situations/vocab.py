"""Vocabularies for actions, predicate triplets, answers and question words."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple

from errors import SchemaError, VocabularyError

SEPARATOR = "--"

PAD_TOKEN = "[PAD]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
UNK_TOKEN = "<unk>"
SPECIAL_WORDS = (PAD_TOKEN, CLS_TOKEN, SEP_TOKEN, UNK_TOKEN)

VocabKind = Literal["action", "predicate", "answer", "word"]


@dataclass(frozen=True)
class PredicateTriplet:
    """``<subject, relation, object>``, e.g. ``<person, hold, bottle>``."""
    subject: str
    relation: str
    obj: str

    def flatten(self) -> str:
        return flatten_triplet(self)

    def words(self) -> str:
        """Plain-text rendering used in question choices."""
        return f"{self.subject} {self.relation} {self.obj}"


def flatten_triplet(triplet: PredicateTriplet) -> str:
    """
    Join a triplet into a single class label ``subject--relation--object``.

    Raises:
        SchemaError: If a component is empty, contains the separator or starts
            or ends with a dash, which would merge into the separator.
    """
    parts = (triplet.subject, triplet.relation, triplet.obj)
    for part in parts:
        if not part or SEPARATOR in part or part[0] == "-" or part[-1] == "-":
            raise SchemaError(f"triplet component {part!r} is empty, contains {SEPARATOR!r} or has an edge dash")
    return SEPARATOR.join(parts)


def unflatten_triplet(label: str) -> PredicateTriplet:
    parts = label.split(SEPARATOR)
    if len(parts) != 3 or not all(parts):
        raise SchemaError(f"predicate label {label!r} is not of the form subject{SEPARATOR}relation{SEPARATOR}object")
    triplet = PredicateTriplet(*parts)
    flatten_triplet(triplet)
    return triplet


def tokenize(text: str) -> List[str]:
    """Lowercase whitespace tokenization."""
    return text.lower().split()


@dataclass(frozen=True)
class Vocabulary:
    """
    Ordered, duplicate-free label list with its inverse index.

    Action and predicate vocabularies reserve one extra class, ``phi_index``
    (== number of labels), for "no class".
    """
    kind: VocabKind
    labels: Tuple[str, ...]
    index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        index = {label: i for i, label in enumerate(labels)}
        if len(index) != len(labels):
            dupes = sorted({label for label in labels if labels.count(label) > 1})
            raise SchemaError(f"duplicate {self.kind} labels: {dupes}")
        object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def phi_index(self) -> Optional[int]:
        return len(self.labels) if self.kind in ("action", "predicate") else None

    @property
    def num_classes(self) -> int:
        """Classifier width: labels plus phi where the kind has one."""
        return len(self.labels) + (1 if self.phi_index is not None else 0)

    def lookup(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise VocabularyError(self.kind, [label]) from None

    def encode(self, labels: Iterable[str]) -> List[int]:
        labels = list(labels)
        unknown = [label for label in labels if label not in self.index]
        if unknown:
            raise VocabularyError(self.kind, unknown)
        return [self.index[label] for label in labels]

    def label(self, i: int) -> str:
        if not 0 <= i < len(self.labels):
            raise VocabularyError(self.kind, [i])
        return self.labels[i]

    def word_ids(self, words: Sequence[str]) -> List[int]:
        """Map words to ids, sending unknown words to ``<unk>`` (word vocabularies only)."""
        unk = self.index[UNK_TOKEN]
        return [self.index.get(w, unk) for w in words]


@dataclass(frozen=True)
class VocabularySet:
    actions: Vocabulary
    predicates: Vocabulary
    answers: Vocabulary
    words: Vocabulary

    def to_dict(self) -> Dict[str, List[str]]:
        return {
            "actions": list(self.actions.labels),
            "predicates": list(self.predicates.labels),
            "answers": list(self.answers.labels),
            "words": list(self.words.labels),
        }

    @classmethod
    def from_lists(cls, actions: Sequence[str], predicates: Sequence[str],
                   answers: Sequence[str], words: Sequence[str]) -> "VocabularySet":
        for label in predicates:
            unflatten_triplet(label)
        missing = [w for w in SPECIAL_WORDS if w not in words]
        if missing:
            raise SchemaError(f"word vocabulary lacks special tokens {missing}")
        return cls(
            actions=Vocabulary("action", tuple(actions)),
            predicates=Vocabulary("predicate", tuple(predicates)),
            answers=Vocabulary("answer", tuple(answers)),
            words=Vocabulary("word", tuple(words)),
        )


@dataclass
class LabeledClip:
    """Label-level annotation, before vocabularies exist."""
    clip_id: str
    actions: List[List[str]]
    relations: List[List[PredicateTriplet]]


@dataclass
class LabeledQuestion:
    question: str
    choices: Optional[List[str]] = None
    answer: Optional[str] = None


def build_word_vocabulary(texts: Iterable[str]) -> Vocabulary:
    """Special tokens first, then every observed token in lexicographic order."""
    tokens = sorted({tok for text in texts for tok in tokenize(text)} - set(SPECIAL_WORDS))
    return Vocabulary("word", SPECIAL_WORDS + tuple(tokens))


def build_vocabularies(clips: Sequence[LabeledClip],
                       questions: Sequence[LabeledQuestion] = ()) -> VocabularySet:
    """
    Build all four vocabularies from a label-level corpus.

    Labels are ordered lexicographically. The predicate vocabulary holds only
    triplets that were actually observed.

    Raises:
        SchemaError: If the corpus is empty or two triplets flatten to one label.
    """
    if not clips:
        raise SchemaError("cannot build vocabularies from an empty corpus")
    actions = sorted({a for clip in clips for frame in clip.actions for a in frame})
    triplets = {t for clip in clips for frame in clip.relations for t in frame}
    flattened = {flatten_triplet(t) for t in triplets}
    if len(flattened) != len(triplets):
        raise SchemaError("distinct predicate triplets flatten to the same label")
    answers = sorted({q.answer for q in questions if q.answer is not None and q.choices is None})
    texts = [q.question for q in questions] + [c for q in questions for c in (q.choices or [])]
    return VocabularySet(
        actions=Vocabulary("action", tuple(actions)),
        predicates=Vocabulary("predicate", tuple(sorted(flattened))),
        answers=Vocabulary("answer", tuple(answers)),
        words=build_word_vocabulary(texts),
    )
