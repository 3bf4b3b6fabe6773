"""
MPPI BENCHMARKS - TEST - MPPI

Test perturbation sampling, rollouts, importance weights and the controller.
"""

import math
import unittest

import numpy as np

from MPPI_benchmarks.control import importance_weights, MppiConfig, MppiController, NoiseAssumptionError, rollout, \
    rollout_batch, sample_perturbations, update_controls
from MPPI_benchmarks.core import ControlSequence, NoiseStream
from MPPI_benchmarks.envs import CartPole, LinearPlant, make_plant


class _FlatCost(LinearPlant):
    """
    Integrator with constant running and terminal costs.
    """

    def __init__(self, q: float, phi: float, **kwargs) -> None:
        super().__init__([[0.0]], [[1.0]], [[0.0]], 1.0, **kwargs)
        self._q = q
        self._phi = phi

    def running_cost(self, x, crashed=None):
        return np.full(np.asarray(x).shape[:-1], self._q)

    def terminal_cost(self, x):
        return np.full(np.asarray(x).shape[:-1], self._phi)


def _zero_plan(steps: int, m: int = 1, dt: float = 0.02) -> ControlSequence:
    return ControlSequence(np.zeros((steps, m)), dt)


class MppiTest(unittest.TestCase):

    def test_perturbation_scale(self) -> None:
        """
        Test δu = √ν ε / √(ρ dt).
        """
        plant = CartPole()
        cfg = MppiConfig(K=8, N=4, dt=1.0, master_seed=3)
        du = sample_perturbations(cfg, plant)
        eps = NoiseStream(3, 1).substream(0).block(8, 4)
        self.assertEqual(du.shape, (8, 4, 1))
        np.testing.assert_allclose(du, 0.01 * eps, rtol=1e-12)
        du100 = sample_perturbations(MppiConfig(K=8, N=4, dt=1.0, nu=100.0, master_seed=3), plant)
        np.testing.assert_allclose(du100, 10.0 * du, rtol=1e-12)

        # Every pass draws fresh noise
        self.assertFalse(np.array_equal(du, sample_perturbations(cfg, plant, pass_index=1)))
        np.testing.assert_array_equal(du, sample_perturbations(cfg, plant, pass_index=0))

    def test_perturbation_variance(self) -> None:
        """
        Test the empirical variance is ν/(ρ dt).
        """
        plant = CartPole()
        cfg = MppiConfig(K=20000, N=50, dt=0.02, nu=150.0)
        du = sample_perturbations(cfg, plant)
        expected = 150.0 / (plant.rho * 0.02)
        self.assertLess(abs(np.var(du) / expected - 1.0), 0.01)

    def test_weights(self) -> None:
        """
        Test the softmax weights.
        """
        np.testing.assert_allclose(importance_weights(np.array([0.0, math.log(3.0)]), 1.0), [0.75, 0.25],
                                   rtol=1e-12)
        np.testing.assert_allclose(importance_weights(np.full(5, 3.0), 0.1), np.full(5, 0.2))
        s = np.random.default_rng(0).uniform(0, 10, (20, 3))
        w = importance_weights(s, 2.0)
        np.testing.assert_allclose(np.sum(w, axis=0), np.ones(3), rtol=1e-12)
        np.testing.assert_allclose(importance_weights(s + 1e4, 2.0), w, rtol=1e-12)
        self.assertRaises(AssertionError, lambda: importance_weights(np.array([0.0, np.inf]), 1.0))

    def test_argmin_dominance(self) -> None:
        """
        Test a vanishing temperature selects the best rollout.
        """
        rng = np.random.default_rng(1)
        s = rng.permutation(np.linspace(0.0, 1.0, 100))
        best = int(np.argmin(s))
        w = importance_weights(s, 1e-8)
        self.assertGreaterEqual(w[best], 1.0 - 1e-6)
        du = rng.standard_normal((100, 1, 1))
        plan = update_controls(_zero_plan(1), du, s[:, None], 1e-8)
        self.assertAlmostEqual(float(plan.controls[0, 0]), float(du[best, 0, 0]), places=6)

    def test_update(self) -> None:
        """
        Test the weighted perturbation average.
        """
        du = np.array([[[1.0]], [[-1.0]]])
        plan = update_controls(_zero_plan(1), du, np.array([[0.0], [math.log(3.0)]]), 1.0)
        self.assertAlmostEqual(float(plan.controls[0, 0]), 0.5, places=12)

        # δu ≡ 0 leaves the plan unchanged, uniform weights give the mean
        base = ControlSequence(np.array([1.0, 2.0]), 0.02)
        same = update_controls(base, np.zeros((4, 2, 1)), np.zeros((4, 2)), 1.0)
        np.testing.assert_array_equal(same.controls, base.controls)
        du = np.arange(8, dtype=float).reshape(4, 2, 1)
        mean = update_controls(base, du, np.ones((4, 2)), 1.0)
        np.testing.assert_allclose(mean.controls[:, 0], [1.0 + 3.0, 2.0 + 4.0])
        clamped = update_controls(base, du, np.ones((4, 2)), 1.0, lo=np.array([-5.0]), hi=np.array([5.0]))
        np.testing.assert_allclose(clamped.controls[:, 0], [4.0, 5.0])

    def test_terminal_only(self) -> None:
        """
        Test zero running cost and φ = 7 give S̃ = 7 at every step.
        """
        plant = _FlatCost(0.0, 7.0)
        batch = rollout_batch(plant, plant, [0.0], _zero_plan(6), np.zeros((3, 6, 1)), MppiConfig(K=3, N=6))
        np.testing.assert_array_equal(batch.costs_to_go, np.full((3, 6), 7.0))

    def test_telescoping(self) -> None:
        """
        Test costs-to-go accumulate the step costs backwards.
        """
        plant = _FlatCost(1.0, 0.0)
        batch = rollout_batch(plant, plant, [0.0], _zero_plan(5), np.zeros((2, 5, 1)), MppiConfig(K=2, N=5))
        np.testing.assert_array_equal(batch.costs_to_go[0], [5.0, 4.0, 3.0, 2.0, 1.0])

        cp = CartPole()
        cfg = MppiConfig(K=64, N=30, nu=500.0, master_seed=2)
        batch = rollout_batch(cp, cp, cp.x0, _zero_plan(30), sample_perturbations(cfg, cp), cfg)
        s = batch.costs_to_go
        np.testing.assert_allclose(s[:, :-1] - s[:, 1:], batch.step_costs[:, :-1], rtol=0,
                                   atol=1e-12 * float(np.max(np.abs(s))))

    def test_cartpole_hanging(self) -> None:
        """
        Test a hanging pole at rest costs 2000 per step.
        """
        cp = CartPole()
        batch = rollout_batch(cp, cp, np.zeros(4), _zero_plan(50), np.zeros((4, 50, 1)), MppiConfig(K=4))
        np.testing.assert_array_equal(batch.costs_to_go[:, 0], np.full(4, 2000.0 * 50))
        costs, states = rollout(cp, cp, np.zeros(4), _zero_plan(50), np.zeros((50, 1)), MppiConfig(K=1))
        self.assertEqual(costs.shape, (50,))
        self.assertEqual(states.shape, (51, 4))
        np.testing.assert_array_equal(states, np.zeros((51, 4)))

    def test_clamped_perturbations(self) -> None:
        """
        Test the effective perturbation is what is left after clamping.
        """
        cp = CartPole()
        du = np.full((1, 3, 1), 50.0)
        batch = rollout_batch(cp, cp, cp.x0, _zero_plan(3), du, MppiConfig(K=1, N=3), lo=cp.u_lo, hi=cp.u_hi)
        np.testing.assert_array_equal(batch.perturbations, np.full((1, 3, 1), 20.0))

    def test_divergence_penalty(self) -> None:
        """
        Test diverged rollouts pay the penalty for every remaining step.
        """
        plant = LinearPlant([[1e200]], [[1.0]], [[1.0]], 1.0)
        cfg = MppiConfig(K=2, N=5, penalty_cost=1e6)
        batch = rollout_batch(plant, plant, [1e200], _zero_plan(5), np.zeros((2, 5, 1)), cfg)
        self.assertTrue(np.all(batch.diverged))
        np.testing.assert_array_equal(batch.costs_to_go[:, 0], np.full(2, 6e6))
        self.assertTrue(np.all(np.isfinite(importance_weights(batch.costs_to_go, 1.0))))

    def test_cost_overflow_penalty(self) -> None:
        """
        Test a finite state whose cost overflows is charged the penalty.
        """
        plant = LinearPlant([[0.0]], [[1.0]], [[1.0]], 1.0)
        cfg = MppiConfig(K=2, N=3, penalty_cost=1e6)
        batch = rollout_batch(plant, plant, [1e160], _zero_plan(3), np.zeros((2, 3, 1)), cfg)
        self.assertTrue(np.all(batch.diverged))
        np.testing.assert_array_equal(batch.step_costs, np.full((2, 3), 1e6))
        np.testing.assert_array_equal(batch.costs_to_go[:, 0], np.full(2, 4e6))
        np.testing.assert_allclose(importance_weights(batch.costs_to_go, 1.0), np.full((2, 3), 0.5))
        plan = update_controls(_zero_plan(3), batch.perturbations, batch.costs_to_go, 1.0)
        np.testing.assert_array_equal(plan.controls, np.zeros((3, 1)))

        # Only the terminal cost overflows
        terminal = _FlatCost(0.0, np.inf)
        batch = rollout_batch(terminal, terminal, [0.0], _zero_plan(3), np.zeros((1, 3, 1)), cfg)
        self.assertTrue(batch.diverged[0])
        np.testing.assert_array_equal(batch.costs_to_go[0], np.full(3, 1e6))

    def test_strict_lambda(self) -> None:
        """
        Test λ = r/ρ is enforced.
        """
        cp = CartPole()
        ctrl = MppiController(cp, MppiConfig(K=4, N=5))
        self.assertAlmostEqual(ctrl.lam, 1.0 / cp.rho, places=15)
        ctrl.close()
        self.assertRaises(NoiseAssumptionError, lambda: MppiController(cp, MppiConfig(K=4, N=5, lam=0.5)))
        loose = MppiController(cp, MppiConfig(K=4, N=5, lam=0.5, strict_lambda=False))
        self.assertEqual(loose.lam, 0.5)
        loose.close()
        plant = LinearPlant(np.zeros((2, 2)), np.eye(2), np.eye(2), np.diag([1.0, 2.0]))
        self.assertRaises(NoiseAssumptionError, lambda: MppiController(plant, MppiConfig(K=4, N=5)))

    def test_shift(self) -> None:
        """
        Test the executed control is the updated u_0 and the plan shifts.
        """
        cp = CartPole()
        cfg = MppiConfig(K=32, N=3, nu=100.0, master_seed=5)
        plan = ControlSequence(np.array([1.0, 2.0, 3.0]), cfg.dt)
        x = np.array([0.0, 0.5, 0.0, 0.0])
        reference = MppiController(cp, cfg, plan=plan)
        updated = reference.optimize(x)
        ctrl = MppiController(cp, cfg, plan=plan)
        u0, shifted = ctrl.mpc_step(x)
        np.testing.assert_array_equal(u0, updated.controls[0])
        np.testing.assert_array_equal(shifted.controls, np.vstack([updated.controls[1:], cp.u_init]))
        self.assertAlmostEqual(shifted.start_time, cfg.dt)
        self.assertEqual(ctrl.passes, 1)
        ctrl.reset()
        self.assertEqual(ctrl.passes, 0)
        np.testing.assert_array_equal(ctrl.plan.controls, plan.controls)
        reference.close()
        ctrl.close()

    def test_determinism(self) -> None:
        """
        Test identical seeds and states give identical controls.
        """
        cp = CartPole()
        cfg = MppiConfig(K=64, N=20, nu=1000.0, master_seed=9)
        a = MppiController(cp, cfg)
        b = MppiController(cp, cfg)
        x = cp.x0
        for _ in range(3):
            ua, _ = a.mpc_step(x)
            ub, _ = b.mpc_step(x)
            np.testing.assert_array_equal(ua, ub)
            x = x + cp.state_derivative(x, ua) * cfg.dt
        a.close()
        b.close()

    def test_worker_independence(self) -> None:
        """
        Test results do not depend on the number of rollout threads.
        """
        cp = CartPole()
        x = np.array([0.1, 0.2, 0.0, 0.0])
        plans = []
        for workers in (1, 3):
            ctrl = MppiController(cp, MppiConfig(K=100, N=15, nu=500.0, iterations=2, workers=workers))
            plans.append(ctrl.optimize(x).controls)
            ctrl.close()
        np.testing.assert_array_equal(plans[0], plans[1])

    def test_crash_freeze(self) -> None:
        """
        Test crashed rollouts of the quadrotor stop moving.
        """
        quad = make_plant('quadrotor')
        x0 = quad.x0.copy()
        x0[2] = 0.05
        cfg = MppiConfig(K=4, N=20, dt=0.02, nu=1.0)
        down = ControlSequence(np.zeros((20, quad.m)), 0.02)
        batch = rollout_batch(quad, quad, x0, down, np.zeros((4, 20, quad.m)), cfg, keep_states=True)
        self.assertTrue(np.all(batch.crashed))
        crash_step = int(np.argmax(quad.crash_check(batch.states[0])))
        np.testing.assert_array_equal(batch.states[0, crash_step:], np.broadcast_to(
            batch.states[0, crash_step], batch.states[0, crash_step:].shape))
