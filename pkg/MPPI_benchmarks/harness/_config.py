"""
MPPI BENCHMARKS - HARNESS - CONFIG

Experiment configuration, read from flat ``key = value`` files with dotted keys.
"""

__all__ = [
    'ALGORITHMS',
    'ConfigError',
    'ExperimentConfig',
    'load_config',
    'parse_config',
    'VERIFY_TASKS'
]

from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional, Tuple

import os

from MPPI_benchmarks.control import DdpConfig, MppiConfig
from MPPI_benchmarks.envs import make_plant, override_params, Plant, TASKS
from MPPI_benchmarks.utils import load_key_value

ALGORITHMS: Tuple[str, ...] = ('mppi', 'ddp')
VERIFY_TASKS: Dict[str, str] = {'fk-verify': 'fk', 'ratio-verify': 'ratio'}

DEFAULT_SEEDS: int = 10

# Per task defaults: duration (s), cost cap, stop at goal
_TASK_DEFAULTS = {
    'cartpole': (10.0, None, False),
    'racecar': (20.0, 25.0, False),
    'quadrotor': (60.0, None, True)
}

_RUN_KEYS = ('duration', 'horizon', 'control_rate', 'output', 'workers', 'cost_cap', 'save_logs')
_FOREST_KEYS = {'spacing': 'forest_spacing', 'size': 'forest_size', 'seed': 'forest_seed'}

# Fields set by the sweep and the run section
_MPPI_RESERVED = ('K', 'nu', 'N', 'dt', 'master_seed')
_DDP_RESERVED = ('N', 'dt')
_MPPI_VECTORS = ('R', 'u_init', 'u_lo', 'u_hi')


class ConfigError(ValueError):
    """
    Invalid or unknown experiment configuration entry.
    """


@dataclass(frozen=True)
class ExperimentConfig(object):
    """
    One experiment: a task, an algorithm and the (ν, K, seed) sweep.
    Solver and plant overrides keep their raw string values until a cell
    builds its objects.
    """
    task: str
    algorithm: str = 'mppi'
    nu: Tuple[float, ...] = (1.0,)
    K: Tuple[int, ...] = (1000,)
    seeds: Tuple[int, ...] = tuple(range(DEFAULT_SEEDS))
    duration: float = 10.0
    horizon: float = 1.0
    control_rate: float = 50.0
    output: str = 'results'
    workers: int = 1
    cost_cap: Optional[float] = None
    save_logs: bool = False
    stop_on_complete: bool = False
    mppi: Dict[str, str] = field(default_factory=dict)
    ddp: Dict[str, str] = field(default_factory=dict)
    plant: Dict[str, str] = field(default_factory=dict)

    @property
    def is_verify(self) -> bool:
        return self.task in VERIFY_TASKS

    @property
    def dt(self) -> float:
        return 1.0 / self.control_rate

    @property
    def N(self) -> int:
        return int(round(self.horizon * self.control_rate))

    @property
    def steps(self) -> int:
        return int(round(self.duration * self.control_rate))

    def cells(self) -> List[Tuple[float, int, int]]:
        """
        Sweep cells (ν, K, seed) in config order. DDP has one cell per seed with ν = K = 0.
        """
        if self.algorithm == 'ddp':
            return [(0.0, 0, s) for s in self.seeds]
        return [(nu, k, s) for nu in self.nu for k in self.K for s in self.seeds]

    def make_plant(self) -> Plant:
        return make_plant(self.task, self.plant)

    def mppi_config(self, nu: float, K: int, seed: int) -> MppiConfig:
        base = MppiConfig(K=K, N=self.N, dt=self.dt, nu=nu, master_seed=seed)
        return override_params(base, self.mppi)

    def ddp_config(self) -> DdpConfig:
        return override_params(DdpConfig(N=self.N, dt=self.dt), self.ddp)


def _floats(key: str, value: str) -> Tuple[float, ...]:
    try:
        out = tuple(float(w) for w in value.split(',') if w.strip() != '')
    except ValueError:
        raise ConfigError(f'"{key}" must be a comma separated list of numbers, got "{value}"')
    if len(out) == 0:
        raise ConfigError(f'"{key}" must not be empty')
    return out


def _ints(key: str, value: str) -> Tuple[int, ...]:
    out = _floats(key, value)
    if any(v != int(v) for v in out):
        raise ConfigError(f'"{key}" must hold integers, got "{value}"')
    return tuple(int(v) for v in out)


def _number(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f'"{key}" must be a number, got "{value}"')


def _bool(key: str, value: str) -> bool:
    v = value.strip().lower()
    if v not in ('true', 'false', '1', '0', 'yes', 'no'):
        raise ConfigError(f'"{key}" must be a boolean, got "{value}"')
    return v in ('true', '1', 'yes')


def _solver_overrides(section: str, raw: Dict[str, str], cls, reserved) -> Dict[str, object]:
    names = {f.name for f in fields(cls)}
    out: Dict[str, object] = {}
    for k, v in raw.items():
        if k in reserved:
            raise ConfigError(f'"{section}.{k}" is set by the sweep or run section')
        if k not in names:
            raise ConfigError(f'unknown key "{section}.{k}"')
        if section == 'mppi' and k == 'lam':
            out[k] = _number(f'{section}.{k}', v)
        elif section == 'mppi' and k in _MPPI_VECTORS:
            vals = _floats(f'{section}.{k}', v)
            out[k] = vals[0] if len(vals) == 1 and k == 'R' else list(vals)
        else:
            out[k] = v
    return out


def parse_config(data: Dict[str, str]) -> ExperimentConfig:
    """
    Builds and validates an experiment configuration from raw key-value pairs.

    :param data: Raw entries, dotted keys
    :return: Configuration
    """
    data = dict(data)
    task = data.pop('task', None)
    if task is None:
        raise ConfigError('"task" is required')
    if task not in TASKS and task not in VERIFY_TASKS:
        raise ConfigError(f'unknown task "{task}", valid tasks: {", ".join(list(TASKS) + list(VERIFY_TASKS))}')
    algorithm = data.pop('algorithm', 'mppi')
    if algorithm not in ALGORITHMS:
        raise ConfigError(f'unknown algorithm "{algorithm}", valid algorithms: {", ".join(ALGORITHMS)}')

    duration, cost_cap, stop = _TASK_DEFAULTS.get(task, (10.0, None, False))
    kw = {'task': task, 'algorithm': algorithm, 'duration': duration, 'cost_cap': cost_cap,
          'stop_on_complete': stop, 'output': os.path.join('results', f'{task}_{algorithm}')}
    sections: Dict[str, Dict[str, str]] = {'mppi': {}, 'ddp': {}, 'plant': {}}
    for key, value in data.items():
        head, _, tail = key.partition('.')
        if head == 'sweep' and tail == 'nu':
            kw['nu'] = _floats(key, value)
        elif head == 'sweep' and tail == 'K':
            kw['K'] = _ints(key, value)
        elif head == 'sweep' and tail == 'seeds':
            seeds = _ints(key, value)
            kw['seeds'] = tuple(range(seeds[0])) if len(seeds) == 1 else seeds
        elif head == 'run' and tail in _RUN_KEYS:
            if tail == 'output':
                kw['output'] = value
            elif tail == 'save_logs':
                kw['save_logs'] = _bool(key, value)
            elif tail == 'workers':
                kw['workers'] = _ints(key, value)[0]
            elif tail == 'cost_cap':
                kw['cost_cap'] = None if value.lower() in ('none', '') else _number(key, value)
            else:
                kw[tail] = _number(key, value)
        elif head == 'forest' and tail in _FOREST_KEYS:
            if task != 'quadrotor':
                raise ConfigError(f'"{key}" only applies to the quadrotor task')
            sections['plant'][_FOREST_KEYS[tail]] = value
        elif head in sections and tail != '':
            sections[head][tail] = value
        else:
            raise ConfigError(f'unknown key "{key}"')

    kw['mppi'] = _solver_overrides('mppi', sections['mppi'], MppiConfig, _MPPI_RESERVED)
    kw['ddp'] = _solver_overrides('ddp', sections['ddp'], DdpConfig, _DDP_RESERVED)
    kw['plant'] = sections['plant']
    cfg = ExperimentConfig(**kw)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if len(cfg.nu) == 0 or len(cfg.K) == 0 or len(cfg.seeds) == 0:
        raise ConfigError('sweep lists must not be empty')
    if any(s < 0 for s in cfg.seeds):
        raise ConfigError('seeds must be non-negative')
    if not (cfg.control_rate > 0 and cfg.horizon > 0 and cfg.duration > 0):
        raise ConfigError('duration, horizon and control rate must be positive')
    if cfg.duration < cfg.horizon:
        raise ConfigError(f'duration {cfg.duration:g} s is shorter than the horizon {cfg.horizon:g} s')
    if cfg.N < 1:
        raise ConfigError('the horizon holds no control period')
    if cfg.workers < 1:
        raise ConfigError('workers must be at least 1')
    if cfg.cost_cap is not None and not cfg.cost_cap > 0:
        raise ConfigError('cost cap must be positive')
    if cfg.is_verify:
        return
    try:
        cfg.make_plant()
        if cfg.algorithm == 'mppi':
            for nu in cfg.nu:
                for k in cfg.K:
                    cfg.mppi_config(nu, k, cfg.seeds[0])
        else:
            cfg.ddp_config()
    except (AssertionError, KeyError, ValueError) as e:
        raise ConfigError(str(e).strip('"') or 'invalid solver or plant parameter')


def load_config(path: str) -> ExperimentConfig:
    """
    Reads an experiment file.

    :param path: File
    :return: Configuration
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f'config file <{path}> does not exist')
    try:
        data = load_key_value(path)
    except ValueError as e:
        raise ConfigError(str(e))
    return parse_config(data)
