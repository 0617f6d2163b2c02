"""Per-frame Hungarian matching and set-prediction losses."""
from matching.hungarian import (
    Assignment,
    CostMatrix,
    SequenceAssignment,
    assignment_cost,
    build_cost_matrix,
    hungarian_match,
    match_sequence,
    match_video,
)
from matching.losses import hungarian_loss, total_loss

__all__ = [
    "Assignment",
    "CostMatrix",
    "SequenceAssignment",
    "assignment_cost",
    "build_cost_matrix",
    "hungarian_match",
    "match_sequence",
    "match_video",
    "hungarian_loss",
    "total_loss",
]
