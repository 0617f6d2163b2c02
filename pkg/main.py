"""Main entry point for the situation hyper-graph VQA command line."""
import sys

from cli import EXIT_RUNTIME, main
from utils import console, load_environment


def run_application() -> None:
    """Run the CLI with the environment loaded and Ctrl-C handled."""
    load_environment()
    try:
        code = main(sys.argv[1:])
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user.[/yellow]")
        code = EXIT_RUNTIME
    sys.exit(code)


if __name__ == "__main__":
    run_application()
