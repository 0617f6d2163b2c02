"""Metrics report: JSON file format and Markdown rendering."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError
from tabulate import tabulate

from errors import SchemaError
from utils import atomic_write_text

PathLike = Union[str, Path]


class MetricsReport(BaseModel):
    """Field names are part of the file format."""
    model_config = ConfigDict(extra="forbid")

    overall_accuracy: float = Field(ge=0.0, le=1.0)
    per_category: Dict[str, float]
    action_map: Optional[float] = Field(None, ge=0.0, le=1.0)
    relation_map: Optional[float] = Field(None, ge=0.0, le=1.0)
    loss_curve: List[float]
    config: Dict[str, Any]
    seed: int


def report_to_json(report: MetricsReport) -> str:
    return json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def write_report(path: PathLike, report: MetricsReport) -> Path:
    return atomic_write_text(path, report_to_json(report))


def read_report(path: PathLike) -> MetricsReport:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"report not found: {path}")
    try:
        return MetricsReport.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise SchemaError(f"{path}: not a valid metrics report: {exc}") from exc


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def render_markdown(report: MetricsReport, title: str = "Metrics report") -> str:
    """GitHub-flavoured Markdown summary of a report."""
    summary = [
        ["overall accuracy", _fmt(report.overall_accuracy)],
        ["action mAP", _fmt(report.action_map)],
        ["relation mAP", _fmt(report.relation_map)],
        ["seed", str(report.seed)],
    ]
    if report.loss_curve:
        summary.append(["first / last train loss", f"{report.loss_curve[0]:.4f} / {report.loss_curve[-1]:.4f}"])
    categories = [[name, _fmt(acc)] for name, acc in report.per_category.items()]
    model = report.config.get("model", {})
    settings = [[k, model[k]] for k in ("width", "num_layers", "num_heads", "num_frames", "max_actions",
                                       "max_relations", "qa_mode", "fusion", "components", "gt_graph")
                if k in model]

    parts = [f"# {title}", "", tabulate(summary, headers=["metric", "value"], tablefmt="github"), "",
             "## Accuracy by category", "", tabulate(categories, headers=["category", "accuracy"], tablefmt="github")]
    if settings:
        parts += ["", "## Model", "", tabulate(settings, headers=["setting", "value"], tablefmt="github")]
    return "\n".join(parts) + "\n"
