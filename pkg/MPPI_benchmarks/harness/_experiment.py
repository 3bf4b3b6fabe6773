"""
MPPI BENCHMARKS - HARNESS - EXPERIMENT

Runs the (ν, K, seed) sweep of an experiment and writes its tables.
"""

__all__ = [
    'aggregate_summaries',
    'emit_csv',
    'run_cell',
    'run_experiment',
    'RunSummary',
    'summaries_frame',
    'timing_frame',
    'write_results'
]

from dataclasses import asdict, dataclass
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple, Union

import functools
import math
import numpy as np
import os
import pandas as pd
from tqdm import tqdm

from MPPI_benchmarks.control import DdpController, Environment, MppiController, run_task, RunLog
from MPPI_benchmarks.harness._config import ExperimentConfig
from MPPI_benchmarks.utils import file_md5, get_key_hash, get_logger, write_csv
from MPPI_benchmarks.utils.plot import plot_sweep_heatmap

logger = get_logger('experiment')

Cell = Tuple[float, int, int]


@dataclass(frozen=True)
class RunSummary(object):
    """
    Result of one sweep cell. ``completion_time`` is NaN for runs that did not
    finish (DNF) and for tasks without a goal.
    """
    task: str
    algorithm: str
    nu: float
    K: int
    seed: int
    average_cost: float
    completion_time: float
    crashes: int
    diverged: bool
    steps: int
    min_speed: float
    wall_ms: float

    def __post_init__(self) -> None:
        assert math.isnan(self.average_cost) or self.average_cost >= 0, 'average cost must be non-negative'
        assert math.isnan(self.completion_time) or self.completion_time > 0, 'completion time must be positive'

    @property
    def dnf(self) -> bool:
        return math.isnan(self.completion_time)


def _make_controller(cfg: ExperimentConfig, plant, cell: Cell):
    nu, k, seed = cell
    if cfg.algorithm == 'ddp':
        return DdpController(plant, cfg.ddp_config())
    return MppiController(plant, cfg.mppi_config(nu, k, seed))


def run_cell(cfg: ExperimentConfig, cell: Cell) -> Tuple[RunSummary, RunLog]:
    """
    Runs one closed loop. Plant, controller and environment are built from
    scratch, so a cell run alone equals the same cell inside a sweep.

    :param cfg: Configuration
    :param cell: (ν, K, seed)
    :return: Summary and log
    """
    nu, k, seed = cell
    plant = cfg.make_plant()
    controller = _make_controller(cfg, plant, cell)
    env = Environment(plant, cfg.dt, seed=seed)
    try:
        log = run_task(env, controller, cfg.duration, cfg.control_rate, stop_on_complete=cfg.stop_on_complete)
    finally:
        controller.close()
    avg = log.average_cost
    if cfg.cost_cap is not None and not math.isnan(avg):
        avg = min(avg, cfg.cost_cap)
    summary = RunSummary(
        task=cfg.task,
        algorithm=cfg.algorithm,
        nu=float(nu),
        K=int(k),
        seed=int(seed),
        average_cost=avg,
        completion_time=log.completion_time,
        crashes=int(log.crashed),
        diverged=log.diverged,
        steps=log.steps,
        min_speed=log.speed_metric,
        wall_ms=float(np.nanmean(log.wall_ms)) if log.steps else float('nan')
    )
    return summary, log


def _run_cell_mp(index: int, cfg: ExperimentConfig, cells: Sequence[Cell]) -> Tuple[RunSummary, RunLog]:
    return run_cell(cfg, cells[index])


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None, progress: bool = True,
                   return_logs: bool = False) -> Union[List[RunSummary], Tuple[List[RunSummary], List[RunLog]]]:
    """
    Runs every cell of the sweep. Cells are independent and run on a process
    pool; results keep config order.

    :param cfg: Configuration
    :param workers: Processes, the config value if None
    :param progress: Show a progress bar
    :param return_logs: Also return the run logs
    :return: One summary per cell (and the logs)
    """
    assert not cfg.is_verify, f'task {cfg.task} is a verification suite'
    workers = cfg.workers if workers is None else workers
    assert workers >= 1, 'workers must be at least 1'
    cells = cfg.cells()
    logger.info(f'{cfg.task}/{cfg.algorithm}: {len(cells)} cells, {cfg.steps} steps each, {workers} workers')
    fn = functools.partial(_run_cell_mp, cfg=cfg, cells=cells)
    results: List[Tuple[RunSummary, RunLog]] = []
    with logger.print_duration(f'{cfg.task} sweep'):
        if workers == 1:
            for i in tqdm(range(len(cells)), disable=not progress):
                results.append(fn(i))
                _log_cell(results[-1][0])
        else:
            with Pool(processes=min(workers, len(cells))) as pool:
                for r in tqdm(pool.imap(fn, range(len(cells))), total=len(cells), disable=not progress):
                    results.append(r)
                    _log_cell(r[0])
    summaries = [r[0] for r in results]
    if return_logs:
        return summaries, [r[1] for r in results]
    return summaries


def _log_cell(s: RunSummary) -> None:
    flag = ' (diverged)' if s.diverged else ''
    logger.info(f'nu={s.nu:g} K={s.K} seed={s.seed}: average cost {s.average_cost:.4g}{flag}')


def summaries_frame(summaries: Sequence[RunSummary], wall_clock: bool = False) -> 'pd.DataFrame':
    """
    One row per summary. The wall-clock column is left out unless requested.
    """
    cols = [f for f in RunSummary.__dataclass_fields__ if wall_clock or f != 'wall_ms']
    rows = [asdict(s) for s in summaries]
    return pd.DataFrame(rows, columns=cols)


def timing_frame(summaries: Sequence[RunSummary]) -> 'pd.DataFrame':
    return pd.DataFrame({
        'nu': [s.nu for s in summaries],
        'K': [s.K for s in summaries],
        'seed': [s.seed for s in summaries],
        'wall_ms': [s.wall_ms for s in summaries]
    })


def aggregate_summaries(summaries: Sequence[RunSummary]) -> 'pd.DataFrame':
    """
    Mean and standard deviation of the average cost per (ν, K) cell across
    seeds, with crash, divergence and completion counts.
    """
    df = summaries_frame(summaries)
    g = df.groupby(['nu', 'K'], sort=False)
    out = pd.DataFrame({
        'runs': g.size(),
        'cost_mean': g['average_cost'].mean(),
        'cost_std': g['average_cost'].std(ddof=1),
        'crashes': g['crashes'].sum(),
        'diverged': g['diverged'].sum(),
        'completed': g['completion_time'].count(),
        'completion_mean': g['completion_time'].mean(),
        'min_speed_mean': g['min_speed'].mean()
    })
    return out.reset_index()


def emit_csv(data: Union[RunLog, Sequence[RunSummary]], path: str) -> str:
    """
    Writes a run log or a list of summaries as CSV with round-trip exact floats.

    :param data: Run log or summaries
    :param path: Output file
    :return: Path written
    """
    if isinstance(data, RunLog):
        return write_csv(data.to_frame(), path)
    return write_csv(summaries_frame(data), path)


def write_results(
        cfg: ExperimentConfig,
        summaries: Sequence[RunSummary],
        logs: Sequence[RunLog] = (),
        out: Optional[str] = None,
        plot: bool = False
) -> Dict[str, str]:
    """
    Writes summary.csv, aggregate.csv and timing.csv, one CSV per run log when
    given, and the ν-K heat map when ``plot`` is set. The md5 of the summary
    and aggregate tables goes to checksums.md5.

    :param cfg: Configuration
    :param summaries: Summaries
    :param logs: Run logs, same order as the summaries
    :param out: Output folder, the config value if None
    :param plot: Save the heat map
    :return: Written files by name
    """
    out = cfg.output if out is None else out
    os.makedirs(out, exist_ok=True)
    files = {
        'summary': emit_csv(summaries, os.path.join(out, 'summary.csv')),
        'aggregate': write_csv(aggregate_summaries(summaries), os.path.join(out, 'aggregate.csv')),
        'timing': write_csv(timing_frame(summaries), os.path.join(out, 'timing.csv'))
    }
    for s, log in zip(summaries, logs):
        name = get_key_hash(s.task, s.algorithm, s.nu, s.K, s.seed)
        emit_csv(log, os.path.join(out, 'logs', f'{name}.csv'))
    digests = {os.path.basename(files[k]): file_md5(files[k]) for k in ('summary', 'aggregate')}
    files['checksums'] = os.path.join(out, 'checksums.md5')
    with open(files['checksums'], 'w', encoding='utf-8') as f:
        for fname, digest in digests.items():
            f.write(f'{digest}  {fname}\n')
    logger.info_scalars('{key}: md5 {value}', digests)
    if plot and cfg.algorithm == 'mppi':
        agg = aggregate_summaries(summaries)
        grid = np.full((len(cfg.nu), len(cfg.K)), np.nan)
        for _, row in agg.iterrows():
            grid[cfg.nu.index(row['nu']), cfg.K.index(int(row['K']))] = row['cost_mean']
        files['heatmap'] = plot_sweep_heatmap(cfg.nu, cfg.K, grid, os.path.join(out, 'heatmap.png'),
                                              title=f'{cfg.task} MPPI')
    return files
