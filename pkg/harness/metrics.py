"""VQA accuracy with a per-category breakdown, and frame-level mean average precision."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from errors import ContractError, ReportError

ALL_CATEGORY = "all"
UNCATEGORIZED = "uncategorized"


@dataclass(frozen=True)
class CategoryAccuracy:
    correct: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass(frozen=True)
class AccuracyReport:
    correct: int
    total: int
    per_category: Dict[str, CategoryAccuracy] = field(default_factory=dict)

    @property
    def overall(self) -> float:
        return self.correct / self.total


def vqa_accuracy(predictions: Sequence[int], answers: Sequence[int],
                 categories: Optional[Sequence[Optional[str]]] = None) -> AccuracyReport:
    """
    Overall accuracy plus a breakdown by question category.

    When no sample carries a category the breakdown holds the single key
    ``"all"``; otherwise untagged samples are grouped as ``"uncategorized"``.

    Raises:
        ReportError: If there are no samples.
        ContractError: If the sequences differ in length.
    """
    if not answers:
        raise ReportError("cannot compute accuracy over an empty dataset")
    categories = list(categories) if categories is not None else [None] * len(answers)
    if not len(predictions) == len(answers) == len(categories):
        raise ContractError(f"{len(predictions)} predictions, {len(answers)} answers, {len(categories)} categories")
    tagged = any(c is not None for c in categories)
    buckets: Dict[str, List[int]] = {}
    for pred, gold, cat in zip(predictions, answers, categories):
        key = (cat or UNCATEGORIZED) if tagged else ALL_CATEGORY
        buckets.setdefault(key, [0, 0])
        buckets[key][0] += int(pred == gold)
        buckets[key][1] += 1
    per_category = {k: CategoryAccuracy(*buckets[k]) for k in sorted(buckets)}
    correct = sum(c.correct for c in per_category.values())
    return AccuracyReport(correct, len(answers), per_category)


def average_precision(scores: Sequence[float], hits: Sequence[bool], num_positives: int,
                      variant: str = "all_point") -> float:
    """
    Average precision of a ranked prediction list.

    Args:
        scores: Confidence of each prediction; ranked descending, stable on ties.
        hits: Whether each prediction is a true positive.
        num_positives: Ground-truth instance count for the class.
        variant: ``all_point`` (area under the monotone precision envelope),
            ``non_interpolated`` (mean precision at each hit) or ``eleven_point``.
    """
    if num_positives <= 0:
        raise ReportError("average precision needs at least one ground-truth instance")
    if len(scores) == 0:
        return 0.0
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    ranked = np.asarray(hits, dtype=bool)[order]
    tp = np.cumsum(ranked)
    precision = tp / np.arange(1, len(ranked) + 1)
    recall = tp / num_positives

    if variant == "non_interpolated":
        return float(precision[ranked].sum() / num_positives)
    if variant == "eleven_point":
        points = []
        for r in np.linspace(0.0, 1.0, 11):
            reached = precision[recall >= r - 1e-12]
            points.append(reached.max() if reached.size else 0.0)
        return float(np.mean(points))
    if variant != "all_point":
        raise ContractError(f"unknown average-precision variant {variant!r}")
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    steps = np.diff(np.concatenate([[0.0], recall]))
    return float((steps * envelope).sum())


@dataclass(frozen=True)
class MapResult:
    mean_ap: float
    per_class: Dict[int, float]


def mean_average_precision(predictions: Sequence[Mapping[int, float]], ground_truth: Sequence[Sequence[int]],
                           num_classes: int, variant: str = "all_point") -> MapResult:
    """
    Frame-level mAP over the whole dataset.

    Every (frame, class, score) prediction is ranked within its class against
    per-frame ground-truth membership. Classes without ground truth are left
    out of the mean.

    Args:
        predictions: Per frame, predicted class to score.
        ground_truth: Per frame, ground-truth classes.
        num_classes: Vocabulary size (phi excluded).

    Raises:
        ReportError: If no class has any ground-truth instance.
    """
    if len(predictions) != len(ground_truth):
        raise ContractError(f"{len(predictions)} predicted frames for {len(ground_truth)} annotated frames")
    positives = np.zeros(num_classes, dtype=np.int64)
    for labels in ground_truth:
        for c in set(labels):
            positives[c] += 1
    if not positives.any():
        raise ReportError("no ground-truth instances to compute mAP against")
    scores: Dict[int, List[float]] = {}
    hits: Dict[int, List[bool]] = {}
    for frame_pred, labels in zip(predictions, ground_truth):
        gold = set(labels)
        for c, score in frame_pred.items():
            scores.setdefault(c, []).append(score)
            hits.setdefault(c, []).append(c in gold)
    per_class = {
        c: average_precision(scores.get(c, []), hits.get(c, []), int(positives[c]), variant)
        for c in range(num_classes) if positives[c]
    }
    return MapResult(float(np.mean(list(per_class.values()))), per_class)
