"""Metrics, checkpoints, hyper-graph dumps, reports and dataset preparation."""
from harness.metrics import (
    AccuracyReport,
    CategoryAccuracy,
    MapResult,
    average_precision,
    mean_average_precision,
    vqa_accuracy,
)
from harness.checkpoint import Checkpoint, load_model, read_checkpoint, write_checkpoint
from harness.dump import DumpEntry, HyperGraphDump, build_dump, read_dump, write_dump
from harness.report import MetricsReport, read_report, render_markdown, write_report
from harness.evaluation import (
    EvaluationResult,
    build_report,
    dump_hypergraph,
    evaluate,
    evaluate_map,
    evaluate_vqa,
)
from harness.preparation import PreparedRun, generate_files, prepare_eval, prepare_run

__all__ = [
    "AccuracyReport",
    "CategoryAccuracy",
    "MapResult",
    "average_precision",
    "mean_average_precision",
    "vqa_accuracy",
    "Checkpoint",
    "load_model",
    "read_checkpoint",
    "write_checkpoint",
    "DumpEntry",
    "HyperGraphDump",
    "build_dump",
    "read_dump",
    "write_dump",
    "MetricsReport",
    "read_report",
    "render_markdown",
    "write_report",
    "EvaluationResult",
    "build_report",
    "dump_hypergraph",
    "evaluate",
    "evaluate_map",
    "evaluate_vqa",
    "PreparedRun",
    "generate_files",
    "prepare_eval",
    "prepare_run",
]
