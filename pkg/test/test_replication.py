"""
MPPI BENCHMARKS - TEST - REPLICATION

Desk-scale sweep trends. Slow, enabled with MPPI_SLOW_TESTS=1.
"""

import dataclasses
import math
import os
import time
import unittest

import numpy as np

from MPPI_benchmarks.control import MppiConfig, MppiController
from MPPI_benchmarks.envs import CartPole
from MPPI_benchmarks.harness import aggregate_summaries, load_config, parse_config, run_experiment

SLOW = os.environ.get('MPPI_SLOW_TESTS', '0') not in ('', '0')
WORKERS = min(8, os.cpu_count() or 1)
CONFIGS = os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'configs')


def _shipped(name: str, **changes):
    cfg = load_config(os.path.join(CONFIGS, name))
    return dataclasses.replace(cfg, workers=WORKERS, **changes)


@unittest.skipUnless(SLOW, 'set MPPI_SLOW_TESTS=1 to run the sweep trends')
class ReplicationTest(unittest.TestCase):

    def test_cartpole_swing_up(self) -> None:
        """
        Test the cart-pole cost against exploration variance and rollouts over ten seeds.
        """
        cfg = parse_config({
            'task': 'cartpole',
            'sweep.nu': '1, 500, 1500',
            'sweep.K': '10, 100, 1000',
            'sweep.seeds': '10',
            'run.duration': '10',
            'run.horizon': '1',
            'run.workers': str(WORKERS)
        })
        summaries, logs = run_experiment(cfg, progress=False, return_logs=True)
        agg = aggregate_summaries(summaries).set_index(['nu', 'K'])
        cost = agg['cost_mean']
        self.assertTrue(np.all(agg['diverged'] == 0))

        # Without extra variance the pole never leaves the bottom
        for k in cfg.K:
            self.assertGreaterEqual(cost[(1.0, k)], 1500.0)

        cp = CartPole()
        for nu in (500.0, 1500.0):
            for k in (100, 1000):
                self.assertLessEqual(cost[(nu, k)], 300.0, msg=f'nu={nu:g} K={k}')
                upright = 0
                for s, log in zip(summaries, logs):
                    if (s.nu, s.K) != (nu, k):
                        continue
                    tail = log.states[log.times >= cfg.duration - 5.0]
                    upright += int(len(tail) > 0 and bool(np.all(cp.upright(tail))))
                self.assertGreaterEqual(upright, 8, msg=f'nu={nu:g} K={k}')

        self.assertLessEqual(cost[(1500.0, 100)], cost[(1500.0, 10)])
        self.assertLessEqual(cost[(1500.0, 1000)], cost[(1500.0, 100)])

    def test_racecar_variance(self) -> None:
        """
        Test extra variance lowers the capped race car cost.
        """
        cfg = _shipped('racecar.cfg', nu=(1.0, 300.0), K=(500,), seeds=(0, 1), duration=8.0)
        cost = aggregate_summaries(run_experiment(cfg, progress=False)).set_index('nu')['cost_mean']
        self.assertLessEqual(cost[300.0], cost[1.0])
        self.assertLessEqual(cost.max(), 25.0)

    def test_racecar_against_ddp(self) -> None:
        """
        Test MPPI keeps a lower cost and a higher corner speed than the iLQG baseline.
        """
        seeds = (0, 1, 2)
        mppi = run_experiment(_shipped('racecar.cfg', nu=(1000.0,), K=(1000,), seeds=seeds), progress=False)
        ddp = run_experiment(_shipped('racecar_ddp.cfg', seeds=seeds), progress=False)

        mppi_cost = float(np.mean([s.average_cost for s in mppi]))
        ddp_cost = float(np.mean([s.average_cost for s in ddp]))
        self.assertLess(mppi_cost, ddp_cost)
        self.assertLessEqual(mppi_cost, 25.0)

        mppi_speed = float(np.mean([s.min_speed for s in mppi]))
        ddp_speed = float(np.mean([s.min_speed for s in ddp]))
        self.assertGreater(mppi_speed, ddp_speed)
        # The baseline brakes hard entering the turns
        self.assertLess(ddp_speed, 7.0)

    def test_quadrotor_forest(self) -> None:
        """
        Test MPPI crosses the forest without crashing and no slower than the iLQG baseline.
        """
        mppi = run_experiment(_shipped('quadrotor.cfg'), progress=False)
        ddp = run_experiment(_shipped('quadrotor_ddp.cfg'), progress=False)
        self.assertEqual(len(mppi), 10)

        clean = [s for s in mppi if s.crashes == 0 and not s.dnf]
        self.assertGreaterEqual(len(clean), 7)

        mppi_done = [s.completion_time for s in mppi if not s.dnf]
        ddp_done = [s.completion_time for s in ddp if not s.dnf]
        if ddp_done:
            self.assertLessEqual(float(np.mean(mppi_done)), float(np.mean(ddp_done)))

    def test_pass_rate(self) -> None:
        """
        Test cart-pole MPPI with 1000 rollouts over 50 steps runs 50 passes per second.
        """
        cp = CartPole()
        controller = MppiController(cp, MppiConfig(K=1000, N=50, dt=0.02, nu=1500.0))
        x = cp.x0.copy()
        try:
            controller.mpc_step(x)
            passes = 50
            start = time.perf_counter()
            for _ in range(passes):
                controller.mpc_step(x)
            rate = passes / (time.perf_counter() - start)
        finally:
            controller.close()
        self.assertFalse(math.isnan(rate))
        self.assertGreaterEqual(rate, 50.0)
