"""Model components of the situation hyper-graph QA pipeline."""
from models.base import TokenEncoder
from models.question import QuestionEncoder, QuestionSequence, compose_qa
from models.video import FeatureAdapter, VideoEncoder
from models.hypergraph_decoder import (
    DecodedQueries,
    HyperGraphDecoder,
    PredictionHead,
    QuerySet,
    SetEntry,
    init_queries,
    predict_sets,
)
from models.hypergraph_embedding import (
    GroundTruthGraph,
    HyperGraphEmbedding,
    HyperGraphSequence,
    pad_frames,
    token_index,
)
from models.fusion import AnswerHead, CoAttention, CoAttentionLayer, FusedOutputs
from models.pipeline import BatchOutput, Example, ForwardOutput, SituationHyperGraphModel, build_examples

__all__ = [
    "TokenEncoder",
    "QuestionEncoder",
    "QuestionSequence",
    "compose_qa",
    "FeatureAdapter",
    "VideoEncoder",
    "DecodedQueries",
    "HyperGraphDecoder",
    "PredictionHead",
    "QuerySet",
    "SetEntry",
    "init_queries",
    "predict_sets",
    "GroundTruthGraph",
    "HyperGraphEmbedding",
    "HyperGraphSequence",
    "pad_frames",
    "token_index",
    "AnswerHead",
    "CoAttention",
    "CoAttentionLayer",
    "FusedOutputs",
    "BatchOutput",
    "Example",
    "ForwardOutput",
    "SituationHyperGraphModel",
    "build_examples",
]
