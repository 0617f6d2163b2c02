"""Framework-agnostic progress display for the training workflow."""
from typing import Any, Dict, Optional

from rich.console import Console
from rich.markup import escape

console = Console()


class ProgressHandler:
    """
    Turns node completions into console progress lines and accumulates the
    state updates they carry.

    Framework-specific adapters convert events from their source to calls on
    this handler.
    """

    def __init__(self, node_display_names: Dict[str, str], quiet: bool = False, out: Optional[Console] = None):
        """
        Args:
            node_display_names: Mapping of node keys to human-readable display names
            quiet: Suppress per-epoch lines (errors are still shown)
            out: Console to print to; defaults to the module console
        """
        self.node_display_names = node_display_names
        self.quiet = quiet
        self.console = out or console
        self.final_state: Dict[str, Any] = {}
        self.completed: Dict[str, int] = {}

    def _print(self, message: str) -> None:
        if not self.quiet:
            self.console.print(message)

    def handle_node_end(self, node_name: str, output: Optional[Dict[str, Any]]) -> None:
        """
        Record a node's state update and report it.

        Args:
            node_name: Name of the node that completed
            output: The partial state the node returned
        """
        output = output or {}
        self.completed[node_name] = self.completed.get(node_name, 0) + 1
        self._merge(output)
        display = self.node_display_names.get(node_name, node_name)

        if node_name == "train_epoch":
            losses = output.get("loss_curve") or []
            mean = sum(losses) / len(losses) if losses else float("nan")
            self._print(f"[yellow]{display} {output.get('epoch')}[/yellow]: "
                        f"mean loss {mean:.4f} over {len(losses)} steps (step {output.get('step')})")
        elif node_name in ("initial_evaluation", "evaluate"):
            accuracy = (output.get("val_history") or [float("nan")])[-1]
            best = self.final_state.get("best_accuracy", accuracy)
            marker = " [green]new best[/green]" if output.get("improved") else ""
            self._print(f"[cyan]{display}[/cyan]: val accuracy {accuracy:.4f} (best {best:.4f}){marker}")
        elif node_name == "finalize":
            self._print(f"[green]✓ Training stopped: {output.get('stop_reason')}[/green]")

    def handle_node_error(self, node_name: str, error: Any) -> None:
        display = self.node_display_names.get(node_name, node_name)
        self.console.print(f"[red]❌ {display} failed: {escape(str(error)[:200])}[/red]")

    def _merge(self, update: Dict[str, Any]) -> None:
        for key, value in update.items():
            if key in ("loss_curve", "val_history"):
                self.final_state[key] = self.final_state.get(key, []) + list(value)
            else:
                self.final_state[key] = value

    def get_final_state(self) -> Dict[str, Any]:
        return self.final_state
