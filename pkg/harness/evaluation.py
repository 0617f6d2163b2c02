"""Inference passes over a dataset: VQA accuracy, per-kind mAP, hyper-graph dumps and the metrics report."""
from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Literal, Optional, Sequence

from config import RunConfig
from engine.tensor import no_grad
from errors import ReportError, SchemaError
from harness.dump import HyperGraphDump, build_dump, frame_duplicates
from harness.metrics import AccuracyReport, MapResult, mean_average_precision, vqa_accuracy
from harness.report import MetricsReport
from models.hypergraph_decoder import SetEntry, predict_sets
from models.pipeline import Example, ForwardOutput, SituationHyperGraphModel
from situations.vocab import VocabularySet

logger = logging.getLogger(__name__)

GraphKind = Literal["action", "relation"]


@contextmanager
def inference(model: SituationHyperGraphModel) -> Iterator[SituationHyperGraphModel]:
    """Eval mode without taping; the previous mode is restored on exit."""
    was_training = model.training
    model.eval()
    try:
        with no_grad():
            yield model
    finally:
        model.train(was_training)


@dataclass
class ClipGraph:
    """Predicted per-frame sets of one clip; a kind is None when the model does not decode it."""
    clip_id: str
    actions: Optional[List[List[SetEntry]]]
    relations: Optional[List[List[SetEntry]]]

    def sets(self, kind: GraphKind) -> Optional[List[List[SetEntry]]]:
        return self.actions if kind == "action" else self.relations


@dataclass
class EvaluationResult:
    accuracy: AccuracyReport
    action_map: Optional[MapResult] = None
    relation_map: Optional[MapResult] = None
    mean_duplicates: Optional[float] = None
    graphs: Dict[str, ClipGraph] = field(default_factory=dict)


def _clip_graph(model: SituationHyperGraphModel, output: ForwardOutput, clip_id: str) -> ClipGraph:
    cfg = model.cfg
    actions = relations = None
    if output.action_logits is not None:
        actions = predict_sets(output.action_logits, cfg.max_actions)
    if output.relation_logits is not None:
        relations = predict_sets(output.relation_logits, cfg.max_relations)
    return ClipGraph(clip_id, actions, relations)


def run_inference(model: SituationHyperGraphModel, examples: Sequence[Example]):
    """Answer predictions for every example, plus the predicted graph of each clip's first example."""
    predictions: List[int] = []
    graphs: Dict[str, ClipGraph] = {}
    with inference(model):
        for example in examples:
            output = model.forward(example, compute_loss=False)
            predictions.append(output.prediction)
            if example.clip_id not in graphs:
                graphs[example.clip_id] = _clip_graph(model, output, example.clip_id)
    return predictions, graphs


def graph_map(graphs: Dict[str, ClipGraph], examples: Sequence[Example], kind: GraphKind,
              num_classes: int, variant: str = "all_point") -> Optional[MapResult]:
    """Frame-level mAP of one kind over the evaluated clips; None when the kind is not decoded."""
    annotations = {e.clip_id: e.annotation for e in examples}
    predicted, truth = [], []
    for clip_id, graph in graphs.items():
        sets = graph.sets(kind)
        if sets is None:
            return None
        ann = annotations[clip_id]
        gold = ann.actions if kind == "action" else ann.relations
        for frame_sets, frame_gold in zip(sets, gold):
            predicted.append({e.label: e.score for e in frame_sets})
            truth.append(frame_gold)
    return mean_average_precision(predicted, truth, num_classes, variant)


def mean_duplicates(graphs: Dict[str, ClipGraph]) -> Optional[float]:
    """Average over all evaluated frames of the within-frame duplicate slots, both kinds together."""
    total, frames = 0, 0
    for graph in graphs.values():
        kinds = [s for s in (graph.actions, graph.relations) if s is not None]
        if not kinds:
            return None
        frames += len(kinds[0])
        total += sum(frame_duplicates(frame) for sets in kinds for frame in sets)
    return total / frames if frames else None


def _safe_map(graphs, examples, kind, num_classes, variant) -> Optional[MapResult]:
    try:
        return graph_map(graphs, examples, kind, num_classes, variant)
    except ReportError as exc:
        logger.warning("%s mAP unavailable: %s", kind, exc)
        return None


def evaluate(model: SituationHyperGraphModel, examples: Sequence[Example],
             map_variant: str = "all_point") -> EvaluationResult:
    """
    Full evaluation pass.

    Raises:
        ReportError: If ``examples`` is empty.
    """
    if not examples:
        raise ReportError("cannot evaluate an empty dataset")
    predictions, graphs = run_inference(model, examples)
    accuracy = vqa_accuracy(predictions, [e.answer for e in examples], [e.category for e in examples])
    cfg = model.cfg
    return EvaluationResult(
        accuracy=accuracy,
        action_map=_safe_map(graphs, examples, "action", cfg.num_actions, map_variant),
        relation_map=_safe_map(graphs, examples, "relation", cfg.num_predicates, map_variant),
        mean_duplicates=mean_duplicates(graphs),
        graphs=graphs,
    )


def evaluate_vqa(model: SituationHyperGraphModel, examples: Sequence[Example]) -> AccuracyReport:
    if not examples:
        raise ReportError("cannot evaluate an empty dataset")
    predictions, _ = run_inference(model, examples)
    return vqa_accuracy(predictions, [e.answer for e in examples], [e.category for e in examples])


def evaluate_map(model: SituationHyperGraphModel, examples: Sequence[Example], kind: GraphKind,
                 variant: str = "all_point") -> MapResult:
    """
    Raises:
        ReportError: If the model does not decode ``kind`` or there is no ground truth.
    """
    _, graphs = run_inference(model, examples)
    num_classes = model.cfg.num_actions if kind == "action" else model.cfg.num_predicates
    result = graph_map(graphs, examples, kind, num_classes, variant)
    if result is None:
        raise ReportError(f"model does not decode {kind} sets")
    return result


def dump_hypergraph(model: SituationHyperGraphModel, examples: Sequence[Example], clip_id: str,
                    vocab: VocabularySet) -> HyperGraphDump:
    """
    Raises:
        SchemaError: If no example belongs to ``clip_id``.
        ReportError: If the model builds its graph from annotations instead of decoding it.
    """
    example = next((e for e in examples if e.clip_id == clip_id), None)
    if example is None:
        raise SchemaError(f"unknown clip_id {clip_id!r}")
    if model.gt_graph is not None:
        raise ReportError("ground-truth graph models have no predicted hyper-graph to dump")
    _, graphs = run_inference(model, [example])
    graph = graphs[clip_id]
    return build_dump(clip_id, graph.actions, graph.relations, vocab)


def build_report(result: EvaluationResult, loss_curve: Sequence[float], config: RunConfig) -> MetricsReport:
    return MetricsReport(
        overall_accuracy=result.accuracy.overall,
        per_category={k: v.accuracy for k, v in result.accuracy.per_category.items()},
        action_map=None if result.action_map is None else result.action_map.mean_ap,
        relation_map=None if result.relation_map is None else result.relation_map.mean_ap,
        loss_curve=[float(x) for x in loss_curve],
        config=config.echo(),
        seed=config.seed,
    )
