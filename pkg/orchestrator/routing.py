"""Routing functions for LangGraph conditional edges."""
from typing import Literal, Optional

from orchestrator.state import StopReason, TrainingState

# Route name constants for better maintainability
ROUTE_TRAIN = "train_epoch"
ROUTE_EVALUATE = "evaluate"
ROUTE_CHECKPOINT = "checkpoint"
ROUTE_FINALIZE = "finalize"


def stop_reason(state: TrainingState) -> Optional[StopReason]:
    """
    First exhausted budget, or None while training should go on.

    Checked in order: epoch cap, step cap, early-stopping patience.
    """
    if state["epoch"] >= state["max_epochs"]:
        return "max_epochs"
    max_steps = state.get("max_steps")
    if max_steps is not None and state["step"] >= max_steps:
        return "max_steps"
    if state["evaluations_since_best"] >= state["patience"]:
        return "patience"
    return None


def should_continue(state: TrainingState) -> Literal["train_epoch", "finalize"]:
    return ROUTE_FINALIZE if stop_reason(state) else ROUTE_TRAIN


def should_evaluate(state: TrainingState) -> Literal["evaluate", "train_epoch", "finalize"]:
    """
    Validate every ``eval_every`` epochs, and always before finishing so the
    last stretch of training is never skipped by early stopping.
    """
    if state["epoch"] % state["eval_every"] == 0 or stop_reason(state) in ("max_epochs", "max_steps"):
        return ROUTE_EVALUATE
    return should_continue(state)


def should_checkpoint(state: TrainingState) -> Literal["checkpoint", "train_epoch", "finalize"]:
    if state.get("improved"):
        return ROUTE_CHECKPOINT
    return should_continue(state)
