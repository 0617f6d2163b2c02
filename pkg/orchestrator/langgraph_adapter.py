"""LangGraph-specific adapter for converting stream chunks to handler calls."""
from typing import Any, Dict

from orchestrator.streaming_handler import ProgressHandler


class LangGraphStreamAdapter:
    """
    Converts ``stream_mode="updates"`` chunks into ``ProgressHandler`` calls.

    Each chunk maps a node name to the partial state it returned; LangGraph's
    own bookkeeping entries (names starting with ``__``) are skipped.
    """

    def __init__(self, handler: ProgressHandler):
        self.handler = handler
        self.events_seen = 0

    def process_event(self, event: Dict[str, Any]) -> None:
        """
        Args:
            event: ``{node_name: update}`` as yielded by ``app.stream``.
        """
        for node_name, update in event.items():
            if node_name.startswith("__"):
                continue
            self.events_seen += 1
            self.handler.handle_node_end(node_name, update if isinstance(update, dict) else {})

    def process_error(self, node_name: str, error: BaseException) -> None:
        self.handler.handle_node_error(node_name, error)
