"""Command-line surface: gen-data, train, eval, dump-graph and report."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, NoReturn, Optional, Sequence

from rich.markup import escape

from config import RunConfig, build_run_config, load_config
from errors import VALIDATION_ERRORS, SHGError
from harness.checkpoint import load_model
from harness.dump import write_dump
from harness.evaluation import build_report, dump_hypergraph, evaluate
from harness.preparation import generate_files, prepare_eval, prepare_run
from harness.report import read_report, render_markdown, write_report
from orchestrator.workflow import run_training
from situations.synth import SYNTH_PRESETS
from utils import atomic_write_text, configure_logging, console, display_metrics_table, outputs_folder, quiet_mode

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

CHECKPOINT_FILE = "checkpoint.shgc"
METRICS_FILE = "metrics.json"


class UsageError(Exception):
    """Raised by the parser instead of exiting, so usage problems map to exit code 1."""


class CLIParser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _common_flags() -> argparse.ArgumentParser:
    common = CLIParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value or JSON run config")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--out", type=Path, help="output folder (default: $SHGVQA_OUTPUTS or ./outputs)")
    common.add_argument("--verbose", action="store_true", help="debug logging and tracebacks")
    return common


def build_parser() -> CLIParser:
    common = _common_flags()
    parser = CLIParser(prog="shgvqa", description="Situation hyper-graph video question answering")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", parents=[common], help="write a synthetic train/val dataset")
    gen.add_argument("--spec", default="toy", choices=sorted(SYNTH_PRESETS), help="synthetic preset")

    train = sub.add_parser("train", parents=[common], help="train with early stopping")
    train.add_argument("--synth", choices=sorted(SYNTH_PRESETS), help="train on a synthetic preset")
    train.add_argument("--train-data", type=Path, help="training dataset file")
    train.add_argument("--val-data", type=Path, help="validation dataset file")

    ev = sub.add_parser("eval", parents=[common], help="score a checkpoint")
    ev.add_argument("--checkpoint", type=Path, required=True)
    ev.add_argument("--data", type=Path, help="dataset file (default: the checkpoint's validation source)")

    dump = sub.add_parser("dump-graph", parents=[common], help="dump one clip's predicted hyper-graph")
    dump.add_argument("--checkpoint", type=Path, required=True)
    dump.add_argument("--clip", required=True, help="clip_id to dump")
    dump.add_argument("--data", type=Path, help="dataset file (default: the checkpoint's validation source)")

    report = sub.add_parser("report", parents=[common], help="render a metrics report as Markdown")
    report.add_argument("--metrics", type=Path, required=True, help="metrics JSON written by train or eval")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file (if any), then command-line overrides."""
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides: Dict[str, object] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "synth", None):
        overrides.update(synth=args.synth, train_path=None, val_path=None)
    if getattr(args, "train_data", None):
        overrides.update(train_path=str(args.train_data), synth=None)
    if getattr(args, "val_data", None):
        overrides["val_path"] = str(args.val_data)
    return build_run_config(overrides, cfg) if overrides else cfg


def cmd_gen_data(args: argparse.Namespace) -> int:
    seed = resolve_config(args).seed
    written = generate_files(args.spec, seed, outputs_folder(args.out))
    for split, path in written.items():
        console.print(f"[green]✓[/green] {split}: {path}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    prepared = prepare_run(cfg)
    out = outputs_folder(args.out)
    checkpoint = out / CHECKPOINT_FILE
    outcome = run_training(prepared, checkpoint, quiet=quiet_mode())
    write_report(out / METRICS_FILE, outcome.report)
    console.print(display_metrics_table(outcome.report))
    console.print(f"[green]✓[/green] checkpoint: {checkpoint}")
    console.print(f"[green]✓[/green] metrics: {out / METRICS_FILE}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    model, cfg, checkpoint = load_model(args.checkpoint)
    _, examples = prepare_eval(cfg, args.data)
    result = evaluate(model, examples, cfg.map_variant)
    report = build_report(result, checkpoint.meta.get("loss_curve", []), cfg)
    path = write_report(outputs_folder(args.out) / METRICS_FILE, report)
    console.print(display_metrics_table(report))
    if result.mean_duplicates is not None:
        console.print(f"mean within-frame duplicates: {result.mean_duplicates:.4f}")
    console.print(f"[green]✓[/green] metrics: {path}")
    return EXIT_OK


def cmd_dump_graph(args: argparse.Namespace) -> int:
    model, cfg, _ = load_model(args.checkpoint)
    dataset, examples = prepare_eval(cfg, args.data)
    dump = dump_hypergraph(model, examples, args.clip, dataset.vocab)
    path = write_dump(outputs_folder(args.out) / f"hypergraph_{args.clip}.json", dump)
    console.print(f"[green]✓[/green] {dump.num_frames} frames, mean duplicates {dump.mean_duplicates:.3f}: {path}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    markdown = render_markdown(read_report(args.metrics))
    if args.out is not None:
        path = atomic_write_text(Path(args.out) / "metrics.md", markdown)
        console.print(f"[green]✓[/green] report: {path}")
    else:
        console.print(markdown, markup=False, highlight=False)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "dump-graph": cmd_dump_graph,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 1 on usage or validation errors, 2 on runtime errors.
    """
    argv: List[str] = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        console.print(f"[red]{escape(str(exc))}[/red]")
        return EXIT_VALIDATION
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    configure_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except VALIDATION_ERRORS as exc:
        console.print(f"[red]Error: {escape(str(exc))}[/red]", markup=True, highlight=False)
        if args.verbose:
            console.print_exception()
        return EXIT_VALIDATION
    except SHGError as exc:
        console.print(f"[red]Error: {escape(str(exc))}[/red]", highlight=False)
        if args.verbose:
            console.print_exception()
        return EXIT_RUNTIME
    except Exception as exc:
        console.print(f"[bold red]Unexpected error: {escape(str(exc))}[/bold red]", highlight=False)
        if args.verbose:
            console.print_exception()
        return EXIT_RUNTIME
