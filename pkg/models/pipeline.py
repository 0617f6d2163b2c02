"""End-to-end situation hyper-graph QA model and its per-sample forward pass."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from config import ModelConfig
from engine.functional import cross_entropy, softmax_array
from engine.module import Module
from engine.tensor import Tensor, as_tensor, concat
from errors import ConfigError, ContractError, DimensionError
from matching.hungarian import SequenceAssignment, match_sequence, match_video
from matching.losses import hungarian_loss, total_loss
from models.fusion import AnswerHead, CoAttention, FusedOutputs
from models.hypergraph_decoder import HyperGraphDecoder
from models.hypergraph_embedding import GroundTruthGraph, HyperGraphEmbedding, HyperGraphSequence
from models.question import QuestionEncoder, QuestionSequence, compose_qa
from models.video import VideoEncoder
from situations.features import resolve_features
from situations.records import SituationAnnotation, SituationDataset

MatchScope = Literal["frame", "video"]


@dataclass(frozen=True, eq=False)
class Example:
    """One model input: clip features, its annotation and a composed question."""
    clip_id: str
    features: np.ndarray
    annotation: SituationAnnotation
    question: QuestionSequence
    answer: int
    category: Optional[str] = None


@dataclass(eq=False)
class ForwardOutput:
    answer_logits: Tensor
    graph: HyperGraphSequence
    action_logits: Optional[Tensor] = None
    relation_logits: Optional[Tensor] = None
    action_assignment: Optional[SequenceAssignment] = None
    relation_assignment: Optional[SequenceAssignment] = None
    l_act: Optional[Tensor] = None
    l_rel: Optional[Tensor] = None
    l_vqa: Optional[Tensor] = None
    loss: Optional[Tensor] = None

    @property
    def prediction(self) -> int:
        return int(np.argmax(self.answer_logits.data))


@dataclass(eq=False)
class BatchOutput:
    outputs: List[ForwardOutput]
    loss_sum: Tensor

    @property
    def mean_loss(self) -> Tensor:
        return self.loss_sum / len(self.outputs)


def build_examples(dataset: SituationDataset, cfg: ModelConfig, noise_sigma: float = 0.0) -> List[Example]:
    """
    Compose every QA sample of ``dataset`` into a model input.

    Raises:
        ConfigError: If a sample's mode or choice count disagrees with the model config.
    """
    examples = []
    for sample in dataset.qa:
        if sample.mode != cfg.qa_mode:
            raise ConfigError(f"clip {sample.clip_id!r}: {sample.mode} question for a {cfg.qa_mode} model")
        if cfg.qa_mode == "multiple_choice" and sample.num_choices != cfg.num_choices:
            raise ConfigError(
                f"clip {sample.clip_id!r}: {sample.num_choices} choices, model expects {cfg.num_choices}"
            )
        episode = resolve_features(dataset, sample.clip_id, (cfg.grid_h, cfg.grid_w), cfg.feature_dim, noise_sigma)
        question = compose_qa(sample.question, sample.choices, dataset.vocab.words, cfg.qa_mode)
        examples.append(Example(sample.clip_id, episode.features, dataset.annotation(sample.clip_id),
                                question, sample.answer, sample.category))
    return examples


class SituationHyperGraphModel(Module):
    """
    Video encoder, action and relation decoders, hyper-graph embedding,
    question encoder, co-attention and answer head.

    Both decoders are always built; component ablations simply leave one
    of them out of the loss and the graph sequence.
    """

    def __init__(self, cfg: ModelConfig, seed: int = 0):
        if cfg.num_actions < 1 or cfg.num_predicates < 1:
            raise ConfigError("model config needs action and predicate vocabulary sizes")
        if cfg.answer_classes < 1:
            raise ConfigError(f"{cfg.qa_mode} model needs at least one answer class")
        rng = np.random.default_rng(seed)
        self.cfg = cfg
        self.video = VideoEncoder(cfg, rng)
        self.action_decoder = HyperGraphDecoder("action", cfg.max_actions, cfg.num_actions, cfg, rng)
        self.relation_decoder = HyperGraphDecoder("relation", cfg.max_relations, cfg.num_predicates, cfg, rng)
        self.gt_graph = GroundTruthGraph(cfg, rng) if cfg.gt_graph else None
        self.graph_embedding = HyperGraphEmbedding(cfg, rng)
        self.question_encoder = QuestionEncoder(cfg, rng)
        self.fusion = CoAttention(cfg, rng)
        self.answer_head = AnswerHead(cfg.width, cfg.answer_classes, rng, cfg.init_std)

    # -- stages ----------------------------------------------------------------

    def adapt_features(self, features) -> Tensor:
        return self.video.adapter(as_tensor(features))

    def encode_video(self, features) -> Tensor:
        """``[T, h, w, d_x]`` features to ``[1 + T'hw, d]`` encoded tokens, [VIS] first."""
        return self.video(as_tensor(features))

    def encode_question(self, question: QuestionSequence) -> Tensor:
        return self.question_encoder(question)

    def cross_attend(self, question_states: Tensor, graph: HyperGraphSequence,
                     video_states: Optional[Tensor] = None) -> FusedOutputs:
        """Fuse the question with the stream chosen by ``cfg.fusion``."""
        fusion = self.cfg.fusion
        if fusion == "q_hg":
            return self.fusion(question_states, graph.tokens, graph.mask)
        if video_states is None:
            raise ContractError(f"fusion {fusion!r} needs the encoded video tokens")
        video_mask = np.ones(video_states.shape[0], dtype=bool)
        if fusion == "q_v":
            return self.fusion(question_states, video_states, video_mask)
        return self.fusion(question_states, concat([graph.tokens, video_states], axis=0),
                           np.concatenate([graph.mask, video_mask]))

    def answer_logits(self, fused: FusedOutputs) -> Tensor:
        return self.answer_head(fused)

    def match(self, logits: Tensor, frames: Sequence[Sequence[int]], per_frame: int,
              scope: MatchScope = "frame") -> SequenceAssignment:
        probs = softmax_array(logits.data, axis=-1)
        matcher = match_video if scope == "video" else match_sequence
        return matcher(probs, frames, per_frame, logits.shape[1] - 1)

    # -- forward -----------------------------------------------------------------

    def forward(self, example: Example, match_scope: MatchScope = "frame", phi_weight: float = 1.0,
                compute_loss: bool = True,
                assignments: Optional[Tuple[Optional[SequenceAssignment], Optional[SequenceAssignment]]] = None,
                ) -> ForwardOutput:
        """
        Run one sample end to end.

        In training mode the graph mask comes from the Hungarian assignments;
        in eval mode it is all ones and the answer logits do not depend on the
        annotation. ``assignments`` pins the matchings (used by gradient checks).
        """
        try:
            return self._forward(example, match_scope, phi_weight, compute_loss, assignments)
        except (DimensionError, ContractError) as exc:
            raise type(exc)(f"clip {example.clip_id!r}: {exc}") from exc

    def _forward(self, example, match_scope, phi_weight, compute_loss, assignments) -> ForwardOutput:
        cfg = self.cfg
        memory = self.encode_video(example.features)
        out = ForwardOutput(answer_logits=None, graph=None)
        if self.gt_graph is not None:
            a_emb, a_valid, r_emb, r_valid = self.gt_graph(example.annotation)
            if not cfg.use_actions:
                a_emb = a_valid = None
            if not cfg.use_relations:
                r_emb = r_valid = None
            out.graph = self.graph_embedding.assemble(a_emb, r_emb, a_valid, r_valid)
        else:
            pinned_act, pinned_rel = assignments or (None, None)
            need_match = self.training or compute_loss
            a_emb = r_emb = None
            if cfg.use_actions:
                decoded = self.action_decoder(memory)
                a_emb, out.action_logits = decoded.embeddings, decoded.logits
                if need_match:
                    out.action_assignment = pinned_act or self.match(
                        decoded.logits, example.annotation.actions, cfg.max_actions, match_scope)
                if compute_loss:
                    out.l_act = hungarian_loss(decoded.logits, out.action_assignment, phi_weight)
            if cfg.use_relations:
                decoded = self.relation_decoder(memory)
                r_emb, out.relation_logits = decoded.embeddings, decoded.logits
                if need_match:
                    out.relation_assignment = pinned_rel or self.match(
                        decoded.logits, example.annotation.relations, cfg.max_relations, match_scope)
                if compute_loss:
                    out.l_rel = hungarian_loss(decoded.logits, out.relation_assignment, phi_weight)
            if self.training:
                out.graph = self.graph_embedding(a_emb, r_emb, out.action_assignment, out.relation_assignment)
            else:
                out.graph = self.graph_embedding(a_emb, r_emb)

        fused = self.cross_attend(self.encode_question(example.question), out.graph, memory)
        out.answer_logits = self.answer_logits(fused)
        if compute_loss:
            out.l_vqa = cross_entropy(out.answer_logits, example.answer)
            out.loss = total_loss(out.l_act, out.l_rel, out.l_vqa)
        return out

    def forward_batch(self, examples: Sequence[Example], **kwargs) -> BatchOutput:
        """Per-sample forwards with the losses summed; samples never interact."""
        if not examples:
            raise ContractError("empty batch")
        outputs = [self.forward(example, **kwargs) for example in examples]
        loss_sum = outputs[0].loss
        for output in outputs[1:]:
            loss_sum = loss_sum + output.loss
        return BatchOutput(outputs, loss_sum)
