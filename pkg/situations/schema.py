"""Pydantic models for the JSON dataset file; unknown fields are rejected."""
from __future__ import annotations

from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class VocabSection(StrictModel):
    actions: List[str]
    predicates: List[str]
    answers: List[str]
    words: List[str]


class FeatureSpec(StrictModel):
    """Exactly one of ``inline`` ([T][h][w][d_x]) or ``codebook_seed``."""
    inline: Optional[List[List[List[List[float]]]]] = None
    codebook_seed: Optional[int] = None

    @model_validator(mode="after")
    def _exactly_one(self) -> "FeatureSpec":
        if (self.inline is None) == (self.codebook_seed is None):
            raise ValueError("features needs exactly one of 'inline' or 'codebook_seed'")
        return self


class ClipEntry(StrictModel):
    clip_id: str
    T: int = Field(ge=1)
    actions: List[List[int]]
    relations: List[List[int]]
    features: FeatureSpec


class QAEntry(StrictModel):
    clip_id: str
    question: str
    mode: Literal["multiple_choice", "open_ended"]
    choices: Optional[List[str]] = None
    answer: int = Field(ge=0)
    category: Optional[str] = None


class DatasetFile(StrictModel):
    vocab: VocabSection
    clips: List[ClipEntry]
    qa: List[QAEntry]
