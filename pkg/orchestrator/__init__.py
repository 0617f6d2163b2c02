"""LangGraph orchestrator package for the training workflow."""
from orchestrator.graph import create_graph
from orchestrator.nodes import TrainingContext, build_context, initial_state
from orchestrator.state import TrainingState
from orchestrator.workflow import TrainingOutcome, run_training

__all__ = [
    "create_graph",
    "TrainingContext",
    "build_context",
    "initial_state",
    "TrainingState",
    "TrainingOutcome",
    "run_training",
]
