"""
MPPI BENCHMARKS - CONTROL - TASK

Closed-loop simulation of a plant driven by a receding-horizon controller.
"""

__all__ = [
    'ENV_NOISE_TAG',
    'Environment',
    'run_task',
    'RunLog'
]

from dataclasses import dataclass
from typing import Optional, Tuple

import math
import numpy as np
import pandas as pd
import time

from MPPI_benchmarks.core import euler_step, NoiseStream
from MPPI_benchmarks.envs import Plant
from MPPI_benchmarks.utils import clamp, get_logger

# Substream of the run seed reserved for the simulated plant noise
ENV_NOISE_TAG: int = 2 ** 64 - 1

logger = get_logger('task')


class Environment(object):
    """
    Simulated plant. Advances by Euler-Maruyama steps of its own natural
    diffusion, the noise drawn from the environment substream of ``seed``.
    """
    plant: Plant
    dt: float
    seed: int
    noise: bool
    crashed: bool
    diverged: bool
    _stream: NoiseStream
    _x: 'np.ndarray'
    _i: int

    def __init__(self, plant: Plant, dt: float, seed: int = 0, noise: bool = True,
                 x0: Optional['np.ndarray'] = None) -> None:
        """
        Constructor.

        :param plant: Plant
        :param dt: Environment step, one executed control per step
        :param seed: Run seed
        :param noise: Add the plant's natural noise
        :param x0: Initial state, the plant's if None
        """
        assert dt > 0, 'dt must be positive'
        self.plant = plant
        self.dt = float(dt)
        self.seed = int(seed)
        self.noise = noise
        self._stream = NoiseStream(self.seed, plant.p).substream(ENV_NOISE_TAG)
        self._x0 = plant.x0.copy() if x0 is None else plant.check_state(x0).reshape(plant.n).copy()
        self.reset()

    def reset(self) -> 'np.ndarray':
        self._x = self._x0.copy()
        self._i = 0
        self.crashed = False
        self.diverged = False
        return self.state

    @property
    def state(self) -> 'np.ndarray':
        return self._x.copy()

    @property
    def time(self) -> float:
        return self._i * self.dt

    @property
    def steps(self) -> int:
        return self._i

    def step(self, u: 'np.ndarray') -> 'np.ndarray':
        """
        Applies ``u`` (clamped to the plant box) for one step.

        :param u: Control
        :return: New state
        """
        assert not (self.crashed or self.diverged), 'environment stopped, call reset'
        u = clamp(np.asarray(u, dtype=float).reshape(self.plant.m), self.plant.u_lo, self.plant.u_hi)
        if self.noise:
            eps = self._stream.block(1, 1, first_step=self._i)[0, 0]
        else:
            eps = np.zeros(self.plant.p)
        x = euler_step(self.plant, self._x, u, eps, self.dt, self.time)
        self._i += 1
        if not np.all(np.isfinite(x)):
            self.diverged = True
            logger.warning(f'{self.plant.name} state diverged at t={self.time:.3f}s')
            return self.state
        self._x = x
        if self.plant.has_crash and bool(self.plant.crash_check(x)):
            self.crashed = True
        return self.state


@dataclass(frozen=True)
class RunLog(object):
    """
    One row per executed control: time, measured state (as reported by the
    plant), executed control, running cost q of the measured state and
    wall-clock milliseconds spent by the controller. A crashed run ends with
    one more row holding the crashed state and its cost q, crash term
    included, with NaN control and wall-clock fields.
    """
    times: 'np.ndarray'
    states: 'np.ndarray'
    controls: 'np.ndarray'
    running_costs: 'np.ndarray'
    wall_ms: 'np.ndarray'
    state_names: Tuple[str, ...]
    control_names: Tuple[str, ...]
    diverged: bool = False
    crashed: bool = False
    completion_time: float = float('nan')
    speed_metric: float = float('nan')

    @property
    def steps(self) -> int:
        return self.times.shape[0]

    @property
    def average_cost(self) -> float:
        """
        Time average of q over the executed steps, NaN for an empty run.
        """
        if self.steps == 0:
            return float('nan')
        return float(np.mean(self.running_costs))

    @property
    def completed(self) -> bool:
        return not math.isnan(self.completion_time)

    def to_frame(self, wall_clock: bool = True) -> 'pd.DataFrame':
        """
        Table with columns t, state names, control names, running_cost and wall_ms.

        :param wall_clock: Include the wall_ms column
        :return: Dataframe
        """
        data = {'t': self.times}
        for j, name in enumerate(self.state_names):
            data[name] = self.states[:, j]
        for j, name in enumerate(self.control_names):
            data[name] = self.controls[:, j]
        data['running_cost'] = self.running_costs
        if wall_clock:
            data['wall_ms'] = self.wall_ms
        return pd.DataFrame(data)


def run_task(
        env: Environment,
        controller,
        duration: float,
        control_rate: float,
        stop_on_complete: bool = False
) -> RunLog:
    """
    Runs the closed loop for ``duration`` seconds: every 1/control_rate seconds
    the controller is given the measured state, its first control is executed
    and the environment advances one step. The run stops early when the
    environment diverges or crashes, or when the task completes and
    ``stop_on_complete`` is set.

    :param env: Environment, reset before the run
    :param controller: Object with ``mpc_step(x) -> (u, plan)`` and ``dt``
    :param duration: Run length (s)
    :param control_rate: Control frequency (Hz)
    :param stop_on_complete: Stop at the first completion
    :return: Run log
    """
    assert duration > 0 and control_rate > 0, 'duration and control rate must be positive'
    period = 1.0 / control_rate
    assert math.isclose(env.dt, period, rel_tol=1e-12), 'environment step must equal the control period'
    assert math.isclose(controller.dt, period, rel_tol=1e-12), 'controller dt must equal the control period'
    plant = env.plant
    total = int(round(duration * control_rate))
    x = env.reset()

    # One spare row for the crashed state
    times = np.empty(total + 1)
    states = np.empty((total + 1, plant.n))
    controls = np.empty((total + 1, plant.m))
    costs = np.empty(total + 1)
    wall = np.empty(total + 1)
    completion = float('nan')
    rows = 0
    for i in range(total):
        start = time.perf_counter()
        u, _ = controller.mpc_step(x)
        wall[i] = (time.perf_counter() - start) * 1e3
        times[i] = env.time
        states[i] = plant.report_state(x)
        controls[i] = u
        if plant.has_crash:
            costs[i] = float(plant.running_cost(x, np.asarray(env.crashed)))
        else:
            costs[i] = float(plant.running_cost(x))
        rows = i + 1
        x = env.step(u)
        if env.crashed:
            times[rows] = env.time
            states[rows] = plant.report_state(x)
            controls[rows] = np.nan
            costs[rows] = float(plant.running_cost(x, np.asarray(True)))
            wall[rows] = np.nan
            rows += 1
            break
        if env.diverged:
            break
        if math.isnan(completion) and plant.is_complete(x):
            completion = env.time
            if stop_on_complete:
                break

    if env.crashed:
        logger.debug(f'{plant.name} crashed at t={env.time:.3f}s')
    return RunLog(times=times[:rows], states=states[:rows], controls=controls[:rows], running_costs=costs[:rows],
                  wall_ms=wall[:rows], state_names=tuple(plant.state_names), control_names=tuple(plant.control_names),
                  diverged=env.diverged, crashed=env.crashed, completion_time=completion,
                  speed_metric=plant.speed_metric(states[:rows], times[:rows]))
