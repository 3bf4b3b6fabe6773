"""
MPPI BENCHMARKS - HARNESS - CLI

Command line entry point: run, verify and forest subcommands.
"""

__all__ = [
    'EXIT_CONFIG',
    'EXIT_IO',
    'EXIT_OK',
    'EXIT_VERIFY',
    'main',
    'parse_args'
]

from typing import List, Optional

import argparse
import os

from MPPI_benchmarks.envs import generate_forest, InfeasibleForestError, save_forest
from MPPI_benchmarks.harness._config import ConfigError, load_config, VERIFY_TASKS
from MPPI_benchmarks.harness._experiment import aggregate_summaries, run_experiment, write_results
from MPPI_benchmarks.harness._verify import SUITES, verify_suite
from MPPI_benchmarks.utils import create_logger, get_logger

EXIT_OK: int = 0
EXIT_VERIFY: int = 1
EXIT_CONFIG: int = 2
EXIT_IO: int = 3

logger = get_logger('cli')


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog='MPPI_benchmarks', description='MPPI benchmark experiments.')
    parser.add_argument('-v', '--verbose', action='store_true', default=False, help='log at DEBUG level.')
    parser.add_argument('--log-file', dest='log_file', default=None, help='also log to this file.')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='run an experiment sweep.')
    run.add_argument('--config', required=True, help='experiment key-value file.')
    run.add_argument('--out', default=None, help='output directory [default: run.output].')
    run.add_argument('--workers', type=int, default=None, help='sweep processes [default: run.workers].')
    run.add_argument('--plot', action='store_true', default=False, help='save the nu-K heat map.')
    run.add_argument('--no-progress', dest='progress', action='store_false', default=True,
                     help='hide the progress bar.')

    verify = sub.add_parser('verify', help='run an oracle suite.')
    verify.add_argument('--suite', required=True, choices=list(SUITES), help='suite to run.')
    verify.add_argument('--seed', type=int, default=0, help='suite seed [default: 0].')

    forest = sub.add_parser('forest', help='generate an obstacle forest.')
    forest.add_argument('--spacing', type=float, required=True, help='mean obstacle spacing (m).')
    forest.add_argument('--seed', type=int, default=0, help='random seed [default: 0].')
    forest.add_argument('--out', required=True, help='output JSON file.')
    forest.add_argument('--size', type=float, default=20.0, help='square side (m) [default: 20].')
    forest.add_argument('--radius', type=float, default=0.5, help='cylinder radius (m) [default: 0.5].')
    return parser.parse_args(argv)


def _report(report) -> int:
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_VERIFY


def _run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if cfg.is_verify:
        return _report(verify_suite(VERIFY_TASKS[cfg.task], seed=cfg.seeds[0]))
    if args.workers is not None and args.workers < 1:
        raise ConfigError('--workers must be at least 1')
    summaries, logs = run_experiment(cfg, workers=args.workers, progress=args.progress, return_logs=True)
    out = cfg.output if args.out is None else args.out
    files = write_results(cfg, summaries, logs if cfg.save_logs else (), out=out, plot=args.plot)
    print(aggregate_summaries(summaries).to_string(index=False))
    for name, path in files.items():
        print(f'{name}: {path}')
    diverged = sum(s.diverged for s in summaries)
    if diverged:
        logger.warning(f'{diverged}/{len(summaries)} runs diverged')
    return EXIT_OK


def _forest(args: argparse.Namespace) -> int:
    try:
        forest = generate_forest(args.spacing, (0.0, args.size, 0.0, args.size), args.seed, radius=args.radius)
    except InfeasibleForestError as e:
        raise ConfigError(str(e))
    save_forest(forest, args.out)
    print(f'{len(forest)} cylinders written to {os.path.abspath(args.out)}')
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """
    Runs the command line. Exit codes: 0 ok, 1 verification failure,
    2 usage or configuration error, 3 file error.

    :param argv: Arguments, sys.argv if None
    :return: Exit code
    """
    args = parse_args(argv)
    create_logger(verbose=args.verbose, logging_filename=args.log_file)
    try:
        if args.command == 'run':
            return _run(args)
        if args.command == 'verify':
            return _report(verify_suite(args.suite, seed=args.seed))
        return _forest(args)
    except ConfigError as e:
        logger.error(f'configuration error: {e}')
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f'file error: {e}')
        return EXIT_IO
