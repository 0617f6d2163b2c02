"""Question/answer composition and the question encoder."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from config import ModelConfig, QAModeName
from engine.module import gaussian
from engine.tensor import Tensor
from errors import ConfigError, SchemaError
from models.base import TokenEncoder
from situations.vocab import CLS_TOKEN, SEP_TOKEN, Vocabulary, tokenize


@dataclass(frozen=True, eq=False)
class QuestionSequence:
    """Word tokens of a composed question and their vocabulary ids; ``[CLS]`` is at index 0."""
    tokens: Tuple[str, ...]
    ids: np.ndarray

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def compose_qa(question: str, choices: Optional[Sequence[str]], words: Vocabulary,
               mode: QAModeName = "multiple_choice") -> QuestionSequence:
    """
    Lay out ``[CLS] Q [SEP] A0 [SEP] A1 ...`` (multiple choice) or ``[CLS] Q`` (open ended).

    Unknown words map to ``<unk>``.

    Raises:
        SchemaError: If the question has no words, or an open-ended question carries choices.
        ConfigError: If multiple-choice mode gets no choices.
    """
    q_tokens = tokenize(question)
    if not q_tokens:
        raise SchemaError("empty question")
    tokens = [CLS_TOKEN] + q_tokens
    if mode == "multiple_choice":
        if not choices:
            raise ConfigError("multiple-choice composition needs at least one answer choice")
        for choice in choices:
            tokens += [SEP_TOKEN] + tokenize(choice)
    elif choices:
        raise SchemaError("open-ended questions must not carry answer choices")
    return QuestionSequence(tuple(tokens), np.array(words.word_ids(tokens), dtype=np.int64))


class QuestionEncoder(TokenEncoder):
    """Word embedding table followed by the shared token-encoder template."""

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        if cfg.num_words < 1:
            raise ConfigError("model config has no word vocabulary size")
        super().__init__(cfg, cfg.max_question_len, rng)
        self.word_embedding = gaussian(rng, (cfg.num_words, cfg.width), cfg.init_std)

    def embed_tokens(self, inputs: QuestionSequence) -> Tensor:
        return self.word_embedding[inputs.ids]
