"""Monitoring package initialization."""
from dotbench.monitoring.metrics import (
    Timer,
    record_solve,
    setup_metrics,
    track_experiment_task,
    write_metrics,
)

from dotbench.monitoring.logging import (
    cli_logger,
    create_progress_tracker,
    display_summary_table,
    experiment_logger,
    get_logger,
    log_error_with_context,
    log_experiment_row,
    log_run_started,
    log_solve_completed,
    setup_rich_logging,
    solver_logger,
)

__all__ = [
    # Metrics
    'Timer',
    'record_solve',
    'setup_metrics',
    'track_experiment_task',
    'write_metrics',

    # Logging
    'cli_logger',
    'create_progress_tracker',
    'display_summary_table',
    'experiment_logger',
    'get_logger',
    'log_error_with_context',
    'log_experiment_row',
    'log_run_started',
    'log_solve_completed',
    'setup_rich_logging',
    'solver_logger',
]
