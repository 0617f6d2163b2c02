"""Node implementations for the LangGraph training workflow."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from config import RunConfig
from engine.optim import Adam, LearningRateSchedule
from engine.tensor import backward
from harness.checkpoint import write_checkpoint
from harness.evaluation import evaluate_vqa
from models.pipeline import Example, SituationHyperGraphModel
from orchestrator.routing import stop_reason
from orchestrator.state import TrainingState

logger = logging.getLogger(__name__)


@dataclass
class TrainingContext:
    """Live objects the nodes share; never stored in the graph state."""
    model: SituationHyperGraphModel
    optimizer: Adam
    config: RunConfig
    train_examples: List[Example]
    val_examples: List[Example]
    shuffle_rng: np.random.Generator
    checkpoint_path: Optional[Path] = None
    best_state: Dict[str, np.ndarray] = field(default_factory=dict)


def total_training_steps(cfg: RunConfig, num_examples: int) -> int:
    """Schedule length: the smaller of the epoch budget and ``max_steps``, at least 1."""
    per_epoch = math.ceil(num_examples / cfg.batch_size)
    total = cfg.max_epochs * per_epoch
    if cfg.max_steps is not None:
        total = min(total, cfg.max_steps)
    return max(total, 1)


def build_context(cfg: RunConfig, train_examples: List[Example], val_examples: List[Example],
                  checkpoint_path: Optional[Path] = None) -> TrainingContext:
    """Seed-derived model, optimizer and shuffle stream for one run."""
    model = SituationHyperGraphModel(cfg.model, seed=cfg.seed)
    opt = cfg.optimizer
    schedule = LearningRateSchedule(opt.lr, total_training_steps(cfg, len(train_examples)),
                                    opt.warmup_fraction, opt.schedule)
    optimizer = Adam(model.named_parameters(), schedule, (opt.beta1, opt.beta2), opt.eps,
                     opt.weight_decay, opt.clip_norm)
    return TrainingContext(model, optimizer, cfg, list(train_examples), list(val_examples),
                           np.random.default_rng([cfg.seed, 1]), checkpoint_path)


def initial_state(cfg: RunConfig) -> TrainingState:
    return TrainingState(
        max_epochs=cfg.max_epochs,
        max_steps=cfg.max_steps,
        patience=cfg.patience,
        eval_every=cfg.eval_every,
        epoch=0,
        step=0,
        loss_curve=[],
        val_history=[],
        best_accuracy=-1.0,
        best_epoch=0,
        evaluations_since_best=0,
        improved=False,
        stop_reason=None,
    )


def _validate(context: TrainingContext) -> float:
    return evaluate_vqa(context.model, context.val_examples).overall


def initial_evaluation_node(state: TrainingState, context: TrainingContext) -> Dict[str, Any]:
    """Validation accuracy of the freshly initialized model; it is the first 'best'."""
    accuracy = _validate(context)
    return {
        "val_history": [accuracy],
        "best_accuracy": accuracy,
        "best_epoch": 0,
        "evaluations_since_best": 0,
        "improved": True,
    }


def train_epoch_node(state: TrainingState, context: TrainingContext) -> Dict[str, Any]:
    """
    One shuffled pass over the training examples, stopping early at ``max_steps``.

    Each step minimizes the batch-mean of per-sample total losses.
    """
    cfg = context.config
    model = context.model
    examples = context.train_examples
    order = context.shuffle_rng.permutation(len(examples))
    step = state["step"]
    losses: List[float] = []
    model.train()
    for start in range(0, len(examples), cfg.batch_size):
        if cfg.max_steps is not None and step >= cfg.max_steps:
            break
        batch = [examples[i] for i in order[start:start + cfg.batch_size]]
        loss = model.forward_batch(batch, match_scope=cfg.match_scope, phi_weight=cfg.phi_weight).mean_loss
        # ablated components get no gradient from the loss
        model.zero_grad()
        backward(loss)
        context.optimizer.step()
        step += 1
        losses.append(loss.item())
    return {"epoch": state["epoch"] + 1, "step": step, "loss_curve": losses}


def evaluate_node(state: TrainingState, context: TrainingContext) -> Dict[str, Any]:
    """Validation accuracy; strictly better than the best so far counts as an improvement."""
    accuracy = _validate(context)
    if accuracy > state["best_accuracy"]:
        return {
            "val_history": [accuracy],
            "best_accuracy": accuracy,
            "best_epoch": state["epoch"],
            "evaluations_since_best": 0,
            "improved": True,
        }
    return {
        "val_history": [accuracy],
        "evaluations_since_best": state["evaluations_since_best"] + 1,
        "improved": False,
    }


def _write(context: TrainingContext, state: TrainingState, **meta: Any) -> None:
    if context.checkpoint_path is None:
        return
    write_checkpoint(context.checkpoint_path, context.model, context.config,
                     loss_curve=list(state["loss_curve"]), best_epoch=state["best_epoch"],
                     val_history=list(state["val_history"]), **meta)


def checkpoint_node(state: TrainingState, context: TrainingContext) -> Dict[str, Any]:
    """Snapshot the current (best) parameters in memory and on disk."""
    context.best_state = context.model.state_dict()
    _write(context, state)
    return {"improved": False}


def finalize_node(state: TrainingState, context: TrainingContext) -> Dict[str, Any]:
    """Restore the best-validation parameters and write the final checkpoint."""
    reason = stop_reason(state) or "max_epochs"
    if context.best_state:
        context.model.load_state_dict(context.best_state)
    context.model.eval()
    _write(context, state, stop_reason=reason)
    logger.debug("training stopped (%s) after %d steps; best epoch %d", reason, state["step"], state["best_epoch"])
    return {"stop_reason": reason}
