"""State definitions for the LangGraph training workflow."""
import operator
from typing import Annotated, Literal, Optional, TypedDict

StopReason = Literal["max_epochs", "max_steps", "patience"]


class TrainingState(TypedDict):
    """
    Plain-data state passed between training nodes.

    The model, optimizer and datasets live in ``TrainingContext``; only
    counters and curves travel through the graph so the checkpointer can
    snapshot every super-step.
    """
    # Limits copied from the run config so routing stays a pure function of state
    max_epochs: int
    max_steps: Optional[int]
    patience: int
    eval_every: int

    # Progress
    epoch: int
    step: int
    loss_curve: Annotated[list[float], operator.add]
    val_history: Annotated[list[float], operator.add]

    # Early stopping
    best_accuracy: float
    best_epoch: int
    evaluations_since_best: int
    improved: bool

    stop_reason: Optional[StopReason]
