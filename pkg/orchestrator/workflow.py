"""Training workflow execution."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from harness.evaluation import EvaluationResult, build_report, evaluate
from harness.preparation import PreparedRun
from harness.report import MetricsReport
from models.pipeline import SituationHyperGraphModel
from orchestrator.graph import create_graph
from orchestrator.langgraph_adapter import LangGraphStreamAdapter
from orchestrator.nodes import build_context, initial_state
from orchestrator.streaming_handler import ProgressHandler

NODE_DISPLAY_NAMES = {
    "initial_evaluation": "Initial evaluation",
    "train_epoch": "Epoch",
    "evaluate": "Validation",
    "checkpoint": "Checkpoint",
    "finalize": "Finalize",
}


@dataclass
class TrainingOutcome:
    model: SituationHyperGraphModel
    report: MetricsReport
    evaluation: EvaluationResult
    final_state: Dict[str, Any]


def run_training(prepared: PreparedRun, checkpoint_path: Optional[Path] = None,
                 quiet: bool = False) -> TrainingOutcome:
    """
    Train with early stopping, then score the restored best model on the validation split.

    This function drives the compiled graph with ``stream_mode="updates"``:
    1. Builds the seed-derived model, optimizer and shuffle stream
    2. Streams node updates through the adapter into the progress handler
    3. Reads the final state from the checkpointer
    4. Evaluates the best parameters and builds the metrics report

    Args:
        prepared: Datasets, examples and the resolved run config
        checkpoint_path: Where to write the best-parameter checkpoint (None skips writing)
        quiet: Suppress per-epoch progress lines

    Returns:
        The trained model, its report and the final workflow state
    """
    cfg = prepared.config
    context = build_context(cfg, prepared.train_examples, prepared.val_examples, checkpoint_path)
    app = create_graph(context)

    config = {
        "configurable": {"thread_id": f"train-seed-{cfg.seed}"},
        "recursion_limit": 3 * cfg.max_epochs + 10,
    }
    handler = ProgressHandler(NODE_DISPLAY_NAMES, quiet=quiet)
    adapter = LangGraphStreamAdapter(handler)
    for event in app.stream(initial_state(cfg), config, stream_mode="updates"):
        adapter.process_event(event)

    final_state = dict(app.get_state(config).values) or handler.get_final_state()
    result = evaluate(context.model, prepared.val_examples, cfg.map_variant)
    report = build_report(result, final_state.get("loss_curve", []), cfg)
    return TrainingOutcome(context.model, report, result, final_state)
