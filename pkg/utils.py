"""Utility functions for the console, logging, the outputs folder and atomic file writes."""
from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Union

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

if TYPE_CHECKING:
    from harness.report import MetricsReport

console = Console()

DEFAULT_OUTPUTS_FOLDER = Path(__file__).parent / "outputs"

PathLike = Union[str, Path]


def load_environment() -> None:
    """Read ``.env`` once; values already set in the environment win."""
    load_dotenv(override=False)


def outputs_folder(override: Optional[PathLike] = None) -> Path:
    """
    Folder for run artifacts.

    Priority: explicit ``--out``, then ``SHGVQA_OUTPUTS``, then ``./outputs``
    next to this file.
    """
    if override is not None:
        return Path(override)
    env = os.getenv("SHGVQA_OUTPUTS")
    return Path(env) if env else DEFAULT_OUTPUTS_FOLDER


def quiet_mode() -> bool:
    return os.getenv("SHGVQA_QUIET", "").strip().lower() in ("1", "true", "yes", "on")


def configure_logging(verbose: bool = False) -> None:
    """Route library warnings (and debug output with ``verbose``) through rich."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=verbose, show_path=verbose)],
        force=True,
    )


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """Write to a sibling temp file, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(payload)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)
    return path


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def display_metrics_table(report: "MetricsReport") -> Table:
    """Display a metrics report in a table."""
    table = Table(title="Evaluation Metrics", show_header=True, header_style="bold magenta")
    table.add_column("Metric", style="cyan", no_wrap=True)
    table.add_column("Value", style="green")

    table.add_row("Overall accuracy", f"{report.overall_accuracy:.4f}")
    for category, accuracy in report.per_category.items():
        table.add_row(f"  {category}", f"{accuracy:.4f}")
    table.add_row("Action mAP", "n/a" if report.action_map is None else f"{report.action_map:.4f}")
    table.add_row("Relation mAP", "n/a" if report.relation_map is None else f"{report.relation_map:.4f}")
    if report.loss_curve:
        table.add_row("Final train loss", f"{report.loss_curve[-1]:.4f}")
    table.add_row("Seed", str(report.seed))
    return table
