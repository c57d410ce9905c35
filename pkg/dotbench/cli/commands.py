"""
Command-line front end.

    dotbench solve --config problem.json --out out/
    dotbench figure --divergence entropic --divergence alpha:2
    dotbench stability | strong-convexity | complexity | intrinsic-demo [--config ...]

Every command writes its artifacts into --out together with metadata.json
(timestamps, versions) and metrics.prom; only those two files differ between
identical runs.
"""
import argparse
import json
import logging
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pydantic
import scipy

from dotbench.core.config import (
    APP_DESCRIPTION,
    APP_NAME,
    APP_VERSION,
    DEFAULTS,
    DEFAULTS_VERSION,
    EXIT_OK,
    LOG_LEVEL,
    default_jobs,
)
from dotbench.core.errors import CertificateError, ConfigError, DotBenchError
from dotbench.experiments.complexity import intrinsic_dimension_demo, sample_complexity_run
from dotbench.experiments.shadow_stability import stability_experiment, strong_convexity_suite
from dotbench.models.schemas import FigurePanel, FigureSummary, RateReport, RunConfig, SolverOptions
from dotbench.monitoring.logging import (
    cli_logger,
    create_progress_tracker,
    display_summary_table,
    log_error_with_context,
    log_run_started,
    log_solve_completed,
    setup_rich_logging,
)
from dotbench.monitoring.metrics import Timer, setup_metrics, write_metrics
from dotbench.ot import divergence as div
from dotbench.ot.measure import Curve, DiscreteMeasure, MarginalTuple, sampler_from_config
from dotbench.ot.solver import ProblemSpec, build_cost, problem_from_config, solve, support_count
from dotbench.utils.serialization import coupling_rows, write_csv, write_json
from dotbench.utils.svg_generation import generate_coupling_heatmap, generate_loglog_plot

COMMANDS = ('solve', 'figure', 'stability', 'strong-convexity', 'complexity', 'intrinsic-demo')


def parse_divergence_flag(text: str) -> Any:
    """'entropic' | 'alpha:A' | 'poly:B' -> config fragment."""
    text = text.strip()
    if text == 'entropic':
        return 'entropic'
    kind, _, value = text.partition(':')
    try:
        if kind == 'alpha':
            return {'alpha': float(value)}
        if kind in ('poly', 'poly_beta'):
            return {'poly_beta': int(value)}
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected entropic, alpha:A or poly:B, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=APP_NAME, description=APP_DESCRIPTION)
    parser.add_argument('command', nargs='?', choices=COMMANDS, help="Command (or the config's \"command\")")
    parser.add_argument('--config', type=Path, help='JSON run configuration')
    parser.add_argument('--out', type=str, help='Output directory')
    parser.add_argument('--seed', type=int, help='Master seed')
    parser.add_argument('--tol', type=float, help='Solver residual tolerance')
    parser.add_argument('--max-iters', type=int, help='Solver sweep limit')
    parser.add_argument('--jobs', type=int, help='Worker count (fallback: DOTBENCH_JOBS)')
    parser.add_argument('--divergence', type=parse_divergence_flag, action='append',
                        help='Figure divergence, repeatable: entropic | alpha:A | poly:B')
    parser.add_argument('--log-level', default=LOG_LEVEL, help='Logging level')
    parser.add_argument('--version', action='version', version=f'{APP_NAME} {APP_VERSION}')
    return parser


def read_config_file(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist", {'path': str(path)})
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                          {'path': str(path), 'line': exc.lineno, 'column': exc.colno})
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def validate_config(data: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except pydantic.ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}", {'errors': exc.error_count()})


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge flag > config file > env > DEFAULTS and validate."""
    data: Dict[str, Any] = read_config_file(args.config) if args.config else {}
    if args.command:
        data['command'] = args.command
    if 'command' not in data:
        raise ConfigError("no command given on the command line or in the config")
    if args.jobs is not None:
        data['jobs'] = args.jobs
    data.setdefault('jobs', default_jobs())
    if args.out is not None:
        data['out_dir'] = args.out
    if args.seed is not None:
        data['seed'] = args.seed
    solver = dict(data.get('solver') or {})
    if args.tol is not None:
        solver['tol'] = args.tol
    if args.max_iters is not None:
        solver['max_iters'] = args.max_iters
    solver.setdefault('jobs', data['jobs'])
    data['solver'] = solver
    if args.divergence:
        figure = dict(data.get('figure') or {})
        figure['divergences'] = args.divergence
        data['figure'] = figure
    return validate_config(data)


def figure_problem(epsilon: float, atoms: int, divergence: Any = 'entropic') -> ProblemSpec:
    """Two uniform marginals on {0, 1/(atoms-1), ..., 1} with c = (x2 - x1)^2."""
    grid = DiscreteMeasure.uniform(np.linspace(0.0, 1.0, atoms))
    marginals = MarginalTuple((grid, grid), 2.0)
    return ProblemSpec(marginals, build_cost(marginals), div.from_config(divergence), epsilon)


def _rate_artifacts(out: Path, stem: str, report: RateReport):
    write_json(out / f'{stem}.json', report)
    rows = [
        {'n': n, 'mean_abs_error': e, 'std_error': s}
        for n, e, s in zip(report.n_values, report.mean_abs_errors, report.std_errors)
    ]
    write_csv(out / f'{stem}.csv', rows)
    (out / f'{stem}.svg').write_text(generate_loglog_plot(
        report.n_values, report.mean_abs_errors, report.slope, report.intercept,
        title=f'{report.label} plug-in error', xlabel='n', ylabel='mean |OT - OT_n|',
    ))
    display_summary_table(
        f'{report.label} rate',
        ['n', 'mean |error|', 'std error'],
        [(n, e, s) for n, e, s in zip(report.n_values, report.mean_abs_errors, report.std_errors)],
    )
    cli_logger.info(
        f"slope {report.slope:.3f} CI [{report.slope_ci[0]:.3f}, {report.slope_ci[1]:.3f}]"
        f"{' (smallest n excluded)' if report.fit_excludes_smallest_n else ''}"
    )


def run_solve(config: RunConfig, out: Path):
    prob = problem_from_config(config.problem)
    with Timer() as timer:
        solution = solve(prob, config.solver)
    log_solve_completed(prob.divergence.label, solution.iterations, solution.residual, solution.gap, timer.elapsed)
    write_json(out / 'solution.json', solution.to_dict())
    write_csv(out / 'coupling.csv', coupling_rows(solution.coupling.mass, solution.coupling.density))


def run_figure(config: RunConfig, out: Path):
    recipe = config.figure
    weight = 1.0 / recipe.epsilon if recipe.inverse_weight else recipe.epsilon
    panels: List[FigurePanel] = []
    with create_progress_tracker() as progress:
        task = progress.add_task('figure panels', total=len(recipe.divergences))
        for fragment in recipe.divergences:
            prob = figure_problem(weight, recipe.atoms, fragment)
            solution = solve(prob, config.solver)
            density = solution.coupling.density
            label = prob.divergence.label
            panels.append(FigurePanel(
                divergence=label,
                support=support_count(solution.coupling, recipe.threshold),
                cells=int(density.size),
                symmetric_error=float(np.abs(density - density.T).max()),
                value=solution.value,
                iterations=solution.iterations,
            ))
            (out / f'figure_{label}.svg').write_text(
                generate_coupling_heatmap(density, title=f'{label}, regularization weight {weight:g}')
            )
            write_csv(out / f'figure_{label}.csv', coupling_rows(solution.coupling.mass, density))
            progress.advance(task)
    summary = FigureSummary(epsilon=recipe.epsilon, regularization_weight=weight, panels=panels)
    write_json(out / 'figure_summary.json', summary)
    display_summary_table(
        'Support sizes', ['divergence', 'support', 'cells', 'symmetry error'],
        [(p.divergence, p.support, p.cells, p.symmetric_error) for p in panels],
    )


def run_stability(config: RunConfig, out: Path):
    prob = problem_from_config(config.problem) if config.problem else figure_problem(1.0, DEFAULTS['figure_atoms'])
    settings = config.stability
    report = stability_experiment(
        prob, settings.perturbation, settings.q, settings.levels, config.seed, config.solver, config.jobs,
    )
    write_json(out / 'stability.json', report)
    write_csv(out / 'stability.csv', report.rows)
    deltas = [r.delta for r in report.rows]
    wqs = [r.wq for r in report.rows]
    keep = [(d, w) for d, w in zip(deltas, wqs) if d > 0 and w > 0]
    intercept = float(np.polyfit(*np.log(np.array(keep).T), 1)[1]) if len(keep) > 1 else None
    (out / 'stability.svg').write_text(generate_loglog_plot(
        deltas, wqs, report.slope, intercept, title='Optimizer stability', xlabel='Delta', ylabel='W_q',
    ))
    display_summary_table(
        'Stability', ['level', 'delta', 'W_q', 'ratio', 'continuity'],
        [(r.level, r.delta, r.wq, r.ratio, 'ok' if r.continuity_ok else 'FAIL') for r in report.rows],
    )
    broken = [r.level for r in report.rows if not r.continuity_ok]
    if broken:
        raise CertificateError("value continuity bound violated", {'levels': broken})


def run_strong_convexity(config: RunConfig, out: Path):
    settings = config.strong_convexity
    rows = strong_convexity_suite(
        settings.divergences, settings.pairs, settings.couplings_per_instance,
        settings.q, settings.epsilon, config.seed, config.solver,
    )
    write_json(out / 'strong_convexity.json', {'rows': rows})
    write_csv(out / 'strong_convexity.csv', rows)
    labels = sorted({r.divergence for r in rows})
    display_summary_table(
        'Strong convexity', ['divergence', 'pairs', 'violations', 'min slack'],
        [(label, sum(r.divergence == label for r in rows),
          sum(not r.ok for r in rows if r.divergence == label),
          min(r.slack for r in rows if r.divergence == label)) for label in labels],
    )
    failed = [r for r in rows if not r.ok]
    if failed:
        raise CertificateError(
            f"strong-convexity inequality violated on {len(failed)} pairs",
            {'first': failed[0].model_dump()},
        )


def _require_bias_ok(reports: List[Optional[RateReport]]):
    stale = [r.label for r in reports if r is not None and not r.bias_ok]
    if stale:
        raise CertificateError("reference discretization bias is not small against the sampling error",
                               {'reports': stale})


def run_complexity(config: RunConfig, out: Path):
    settings = config.complexity
    report = sample_complexity_run(
        sampler_from_config(settings.sampler), settings.divergence, settings.n_values, settings.replications,
        seed=config.seed, epsilon=settings.epsilon, cost_power=settings.cost_power, opts=config.solver,
        jobs=config.jobs, points_per_axis=settings.grid_points_per_axis, require_bias_ok=False,
    )
    _rate_artifacts(out, 'rate', report)
    _require_bias_ok([report])


def run_intrinsic_demo(config: RunConfig, out: Path):
    settings = config.intrinsic_demo
    sampler = sampler_from_config(settings.sampler)
    if not isinstance(sampler, Curve):
        raise ConfigError("intrinsic-demo needs a curve sampler")
    report = intrinsic_dimension_demo(
        sampler, settings.divergence, settings.n_values, settings.replications, seed=config.seed,
        epsilon=settings.epsilon, cost_power=settings.cost_power, opts=config.solver, jobs=config.jobs,
        baseline=settings.baseline, require_bias_ok=False,
    )
    write_json(out / 'intrinsic_demo.json', report)
    _rate_artifacts(out, 'rate_curve', report.curve)
    if report.baseline is not None:
        _rate_artifacts(out, 'rate_baseline', report.baseline)
    _require_bias_ok([report.curve, report.baseline])


HANDLERS: Dict[str, Callable[[RunConfig, Path], None]] = {
    'solve': run_solve,
    'figure': run_figure,
    'stability': run_stability,
    'strong-convexity': run_strong_convexity,
    'complexity': run_complexity,
    'intrinsic-demo': run_intrinsic_demo,
}


def write_metadata(out: Path, config: RunConfig, started: datetime, exit_code: int):
    write_json(out / 'metadata.json', {
        'app': APP_NAME,
        'version': APP_VERSION,
        'defaults_version': DEFAULTS_VERSION,
        'command': config.command,
        'seed': config.seed,
        'jobs': config.jobs,
        'started_at': started.isoformat(),
        'finished_at': datetime.now(timezone.utc).isoformat(),
        'exit_code': exit_code,
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'rng': 'numpy PCG64 seeded by SeedSequence',
        'config': config.model_dump(),
    })


def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}")
    started = datetime.now(timezone.utc)
    setup_metrics()
    log_run_started(config.command, str(out))
    exit_code = EXIT_OK
    try:
        HANDLERS[config.command](config, out)
    except DotBenchError as exc:
        log_error_with_context(exc, exc.context)
        exit_code = exc.exit_code
    finally:
        write_metadata(out, config, started, exit_code)
        write_metrics(out / 'metrics.prom')
    if exit_code == EXIT_OK:
        cli_logger.info(f"[success]{config.command} finished, artifacts in {out}[/]")
    return exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_rich_logging(level=getattr(logging, str(args.log_level).upper(), logging.INFO))
    try:
        config = resolve_config(args)
        return run(config)
    except DotBenchError as exc:
        log_error_with_context(exc, exc.context)
        return exc.exit_code


if __name__ == '__main__':
    sys.exit(main())
