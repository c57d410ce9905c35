"""
Rich logging configuration for console output.
Provides themed logging, progress bars, summary tables and error panels.
"""

import json
import logging
from datetime import datetime
from typing import Any, Dict, Iterable, Optional, Sequence

from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn, TimeRemainingColumn
from rich.table import Table
from rich.theme import Theme
from rich.traceback import install as install_rich_traceback

# Custom theme for the package
custom_theme = Theme({
    "info": "dim cyan",
    "warning": "magenta",
    "error": "bold red",
    "critical": "bold white on red",
    "success": "bold green",
    "solver": "blue",
    "metric": "yellow",
    "experiment": "bright_green",
    "cli": "bright_blue",
})

# Global console instance; stderr keeps stdout free for piping
console = Console(theme=custom_theme, stderr=True)

install_rich_traceback(console=console, show_locals=False)


class RichMetricsFormatter(logging.Formatter):
    """Formatter that tags records with a component name."""

    def format(self, record):
        if not hasattr(record, 'component'):
            record.component = getattr(record, 'name', 'unknown')
        return super().format(record)


def setup_rich_logging(
    level: int = logging.INFO,
    show_time: bool = True,
    show_path: bool = False,
    rich_tracebacks: bool = True
) -> logging.Logger:
    """
    Setup rich logging on the root logger.

    Args:
        level: Logging level (default: INFO)
        show_time: Show timestamp in logs
        show_path: Show file path in logs
        rich_tracebacks: Enable rich traceback formatting

    Returns:
        The package logger
    """
    rich_handler = RichHandler(
        console=console,
        show_time=show_time,
        show_path=show_path,
        rich_tracebacks=rich_tracebacks,
        markup=True
    )
    rich_handler.setFormatter(RichMetricsFormatter(fmt="%(message)s", datefmt="[%X]"))

    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[rich_handler],
        force=True,
    )

    logger = logging.getLogger("dotbench")
    logger.setLevel(level)
    return logger


def log_solve_completed(divergence: str, iterations: int, residual: float, gap: float, duration_s: float):
    """One-line solver summary."""
    console.print(
        f"[solver]Solved[/] [bright_blue]{divergence}[/] "
        f"[dim]iters={iterations} residual={residual:.2e} gap={gap:.2e} {duration_s:.2f}s[/]",
        highlight=False
    )


def log_experiment_row(experiment: str, row: Dict[str, Any]):
    """Print one experiment result row."""
    fields = " ".join(
        f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()
    )
    console.print(f"[experiment]{experiment}[/] [dim]{fields}[/]", highlight=False)


def create_progress_tracker() -> Progress:
    """Create a rich progress tracker for long-running loops."""
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        TimeRemainingColumn(),
        console=console
    )


def log_error_with_context(error: Exception, context: Optional[Dict[str, Any]] = None):
    """Log errors with rich formatting and context."""
    error_panel = Panel(
        f"[bold red]{type(error).__name__}:[/] {str(error)}\n"
        f"[dim]Context:[/] {json.dumps(context or {}, indent=2, default=str)}",
        title="Error",
        border_style="red"
    )
    console.print(error_panel)


def display_summary_table(title: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Table:
    """Render a summary table to the console and return it."""
    table = Table(title=title)
    for i, column in enumerate(columns):
        table.add_column(column, style="cyan" if i == 0 else "magenta", no_wrap=i == 0)
    for row in rows:
        table.add_row(*[f"{v:.6g}" if isinstance(v, float) else str(v) for v in row])
    console.print(table)
    return table


def log_run_started(command: str, out_dir: str):
    """Announce a CLI run."""
    console.print(
        Panel.fit(
            f"[bold green]dotbench {command}[/]\n"
            f"[dim]Output[/] {out_dir}\n"
            f"[dim]Started at[/] {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}",
            border_style="green"
        )
    )


class RichLoggerAdapter(logging.LoggerAdapter):
    """Logger adapter that adds rich markup to plain messages."""

    def __init__(self, logger: logging.Logger, extra: Optional[Dict[str, Any]] = None):
        super().__init__(logger, extra or {})

    def process(self, msg, kwargs):
        style = self.extra.get('style', 'info')
        if not any(marker in str(msg) for marker in ['[', ']']):
            msg = f"[{style}]{msg}[/]"
        return msg, kwargs


def get_logger(name: str = "dotbench", extra: Optional[Dict[str, Any]] = None) -> RichLoggerAdapter:
    """Get a rich logger adapter for a component."""
    return RichLoggerAdapter(logging.getLogger(name), extra)


# Pre-configured loggers for different components
solver_logger = get_logger("dotbench.solver", {"component": "solver", "style": "solver"})
experiment_logger = get_logger("dotbench.experiments", {"component": "experiments", "style": "experiment"})
cli_logger = get_logger("dotbench.cli", {"component": "cli", "style": "cli"})
