import numpy as np
import pytest
from rich.console import Console

from config import ModelConfig, OptimizerConfig
from harness.checkpoint import read_checkpoint
from harness.preparation import prepare_run
from harness.report import report_to_json
from models.pipeline import SituationHyperGraphModel
from orchestrator.langgraph_adapter import LangGraphStreamAdapter
from orchestrator.nodes import total_training_steps
from orchestrator.routing import (
    ROUTE_CHECKPOINT,
    ROUTE_EVALUATE,
    ROUTE_FINALIZE,
    ROUTE_TRAIN,
    should_checkpoint,
    should_continue,
    should_evaluate,
    stop_reason,
)
from orchestrator.streaming_handler import ProgressHandler
from orchestrator.workflow import NODE_DISPLAY_NAMES, run_training


def make_state(**overrides):
    state = dict(max_epochs=5, max_steps=None, patience=2, eval_every=1, epoch=1, step=3,
                 loss_curve=[], val_history=[], best_accuracy=0.5, best_epoch=0,
                 evaluations_since_best=0, improved=False, stop_reason=None)
    state.update(overrides)
    return state


class TestRouting:
    def test_stop_reasons_in_priority_order(self):
        assert stop_reason(make_state()) is None
        assert stop_reason(make_state(epoch=5, step=99, max_steps=10, evaluations_since_best=9)) == "max_epochs"
        assert stop_reason(make_state(step=10, max_steps=10, evaluations_since_best=9)) == "max_steps"
        assert stop_reason(make_state(evaluations_since_best=2)) == "patience"

    def test_continue_or_finalize(self):
        assert should_continue(make_state()) == ROUTE_TRAIN
        assert should_continue(make_state(evaluations_since_best=2)) == ROUTE_FINALIZE

    def test_evaluation_cadence(self):
        assert should_evaluate(make_state(eval_every=2, epoch=1)) == ROUTE_TRAIN
        assert should_evaluate(make_state(eval_every=2, epoch=2)) == ROUTE_EVALUATE
        assert should_evaluate(make_state(eval_every=2, epoch=5)) == ROUTE_EVALUATE

    def test_checkpoint_only_on_improvement(self):
        assert should_checkpoint(make_state(improved=True)) == ROUTE_CHECKPOINT
        assert should_checkpoint(make_state()) == ROUTE_TRAIN
        assert should_checkpoint(make_state(improved=False, epoch=5)) == ROUTE_FINALIZE

    def test_schedule_length(self, make_run_config):
        assert total_training_steps(make_run_config(max_epochs=3), 10) == 9
        assert total_training_steps(make_run_config(max_epochs=3, max_steps=4), 10) == 4
        assert total_training_steps(make_run_config(max_epochs=0), 10) == 1


class TestProgress:
    def test_handler_merges_updates(self):
        handler = ProgressHandler(NODE_DISPLAY_NAMES, quiet=True)
        handler.handle_node_end("train_epoch", {"epoch": 1, "step": 2, "loss_curve": [2.0, 1.0]})
        handler.handle_node_end("train_epoch", {"epoch": 2, "step": 4, "loss_curve": [0.5, 0.25]})
        handler.handle_node_end("evaluate", {"val_history": [0.75], "improved": True, "best_accuracy": 0.75})
        state = handler.get_final_state()
        assert state["loss_curve"] == [2.0, 1.0, 0.5, 0.25]
        assert state["epoch"] == 2 and state["best_accuracy"] == 0.75
        assert handler.completed == {"train_epoch": 2, "evaluate": 1}

    def test_handler_prints_progress(self):
        out = Console(record=True, width=120)
        handler = ProgressHandler(NODE_DISPLAY_NAMES, out=out)
        handler.handle_node_end("train_epoch", {"epoch": 1, "step": 2, "loss_curve": [2.0, 1.0]})
        handler.handle_node_end("finalize", {"stop_reason": "patience"})
        handler.handle_node_error("evaluate", ValueError("bad [state]"))
        text = out.export_text()
        assert "Epoch 1: mean loss 1.5000 over 2 steps" in text
        assert "Training stopped: patience" in text
        assert "Validation failed: bad [state]" in text

    def test_adapter_skips_internal_events(self):
        handler = ProgressHandler(NODE_DISPLAY_NAMES, quiet=True)
        adapter = LangGraphStreamAdapter(handler)
        adapter.process_event({"__interrupt__": ()})
        adapter.process_event({"checkpoint": {"improved": False}})
        adapter.process_event({"finalize": None})
        assert adapter.events_seen == 2
        assert handler.get_final_state() == {"improved": False}


class TestTrainingWorkflow:
    def test_zero_epochs_keeps_initial_model(self, make_run_config):
        prepared = prepare_run(make_run_config(max_epochs=0))
        outcome = run_training(prepared, quiet=True)
        state = outcome.final_state
        assert state["stop_reason"] == "max_epochs"
        assert state["step"] == 0 and state["loss_curve"] == []
        assert len(state["val_history"]) == 1
        assert outcome.report.loss_curve == []

    def test_step_budget_stops_mid_epoch(self, make_run_config, tmp_path):
        prepared = prepare_run(make_run_config(batch_size=2, max_epochs=5, max_steps=3))
        checkpoint = tmp_path / "checkpoint.shgc"
        outcome = run_training(prepared, checkpoint, quiet=True)
        state = outcome.final_state
        assert state["stop_reason"] == "max_steps"
        assert state["step"] == 3
        assert len(outcome.report.loss_curve) == 3
        assert all(np.isfinite(outcome.report.loss_curve))
        meta = read_checkpoint(checkpoint).meta
        assert meta["stop_reason"] == "max_steps"

    def test_ablated_decoder_trains_without_gradient(self, make_run_config):
        cfg = make_run_config(batch_size=2, max_steps=2, model=ModelConfig.toy(dropout=0.0, components="action_only"))
        prepared = prepare_run(cfg)
        outcome = run_training(prepared, quiet=True)
        assert outcome.final_state["step"] == 2
        assert all(np.isfinite(outcome.report.loss_curve))
        untouched = SituationHyperGraphModel(prepared.config.model, seed=prepared.config.seed).state_dict()
        trained = outcome.model.state_dict()
        for name, value in trained.items():
            if name.startswith("relation_decoder."):
                np.testing.assert_array_equal(value, untouched[name])

    def test_patience_stops_a_frozen_model(self, make_run_config):
        cfg = make_run_config(max_epochs=20, patience=2, optimizer=OptimizerConfig(lr=0.0))
        outcome = run_training(prepare_run(cfg), quiet=True)
        state = outcome.final_state
        assert state["stop_reason"] == "patience"
        assert state["epoch"] == 2
        assert state["best_epoch"] == 0
        assert len(set(state["val_history"])) == 1

    def test_best_parameters_are_restored(self, make_run_config, tmp_path):
        prepared = prepare_run(make_run_config(max_epochs=3, optimizer=OptimizerConfig(lr=5e-3)))
        checkpoint = tmp_path / "checkpoint.shgc"
        outcome = run_training(prepared, checkpoint, quiet=True)
        saved = read_checkpoint(checkpoint)
        for name, value in outcome.model.state_dict().items():
            np.testing.assert_array_equal(saved.tensors[name], value)
        assert saved.meta["best_epoch"] == outcome.final_state["best_epoch"]
        assert outcome.report.overall_accuracy == pytest.approx(outcome.final_state["best_accuracy"])
        assert outcome.final_state["best_accuracy"] == max(outcome.final_state["val_history"])

    def test_same_seed_same_run(self, make_run_config):
        curves = [run_training(prepare_run(make_run_config(max_epochs=2)), quiet=True).report.loss_curve
                  for _ in range(2)]
        assert curves[0] == curves[1]

    def test_same_seed_same_report_bytes(self, make_run_config):
        reports = [report_to_json(run_training(prepare_run(make_run_config()), quiet=True).report)
                   for _ in range(2)]
        assert reports[0] == reports[1]
