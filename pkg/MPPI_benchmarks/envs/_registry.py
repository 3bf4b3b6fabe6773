"""
MPPI BENCHMARKS - ENVS - REGISTRY

Builds plants by task name with key-value parameter overrides.
"""

__all__ = [
    'make_plant',
    'TASKS'
]

from typing import Dict, Optional

from MPPI_benchmarks.envs._base import override_params, Plant
from MPPI_benchmarks.envs._cartpole import CartPole, CartPoleParams
from MPPI_benchmarks.envs._quadrotor import Quadrotor, QuadrotorParams
from MPPI_benchmarks.envs._racecar import RaceCar, RaceCarParams

TASKS = {
    'cartpole': (CartPole, CartPoleParams),
    'racecar': (RaceCar, RaceCarParams),
    'quadrotor': (Quadrotor, QuadrotorParams)
}


def make_plant(task: str, overrides: Optional[Dict[str, str]] = None) -> Plant:
    """
    Returns the plant of a task.

    :param task: Task name
    :param overrides: Parameter overrides (field name to raw value)
    :return: Plant
    """
    if task not in TASKS:
        raise KeyError(f'unknown task "{task}", valid tasks: {", ".join(TASKS)}')
    cls, params_cls = TASKS[task]
    return cls(override_params(params_cls(), overrides or {}))
