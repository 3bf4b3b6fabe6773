"""
MPPI BENCHMARKS - TEST - DDP

Test the iLQG baseline: linearization, quadratization, backward and forward
passes, regularization and the receding-horizon controller.
"""

import unittest

import numpy as np

from MPPI_benchmarks.control import backward_pass, BackwardPassError, DdpConfig, DdpController, forward_pass, \
    linearize, linearize_trajectory, lqr_gains, NonFiniteJacobianError, quadratize, QuadraticCost, simulate, \
    smooth_cost_adapter, trajectory_cost
from MPPI_benchmarks.envs import CartPole, LinearPlant
from MPPI_benchmarks.harness import verify_lq


def _linear_plant(seed: int = 0, n: int = 3, m: int = 2) -> LinearPlant:
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    return LinearPlant(0.5 * rng.standard_normal((n, n)), rng.standard_normal((n, m)), M @ M.T + np.eye(n),
                       np.diag(rng.uniform(0.5, 2.0, m)), Qf=2.0 * np.eye(n), x0=rng.standard_normal(n))


class DdpTest(unittest.TestCase):

    def test_linearize_linear(self) -> None:
        """
        Test finite differences recover the Euler map of a linear plant.
        """
        plant = _linear_plant()
        A, B = linearize(plant, plant.x0, np.array([0.3, -0.2]), 0.05)
        Ad, Bd = plant.discrete_matrices(0.05)
        np.testing.assert_allclose(A, Ad, atol=1e-6)
        np.testing.assert_allclose(B, Bd, atol=1e-6)

        xs = np.random.default_rng(1).standard_normal((4, 3))
        At, Bt = linearize_trajectory(plant, xs, np.zeros((4, 2)), 0.05)
        self.assertEqual(At.shape, (4, 3, 3))
        self.assertEqual(Bt.shape, (4, 3, 2))
        np.testing.assert_allclose(At, np.broadcast_to(Ad, (4, 3, 3)), atol=1e-6)

    def test_linearize_cartpole(self) -> None:
        """
        Test the control column of the hanging cart-pole.
        """
        cp = CartPole()
        A, B = linearize(cp, np.zeros(4), [0.0], 0.02)
        np.testing.assert_allclose(B[:, 0], [0.0, 0.0, 10.0 * 0.02, -10.0 * 0.02], atol=1e-8)
        self.assertAlmostEqual(A[3, 1], -9.81 * 0.02, places=7)
        self.assertAlmostEqual(A[0, 2], 0.02, places=9)

    def test_non_finite_jacobian(self) -> None:
        """
        Test overflowing dynamics are reported.
        """
        plant = LinearPlant([[1e10]], [[1.0]], [[1.0]], 1.0)
        self.assertRaises(NonFiniteJacobianError, lambda: linearize(plant, [1e300], [0.0], 0.02))

        class _NanCost(QuadraticCost):

            def derivatives(self, xs, us):
                out = list(super().derivatives(xs, us))
                out[0][0, 0] = np.nan
                return tuple(out)

        self.assertRaises(NonFiniteJacobianError,
                          lambda: quadratize(_NanCost(np.eye(1), np.eye(1)), np.zeros((3, 1)), np.zeros((2, 1))))

    def test_quadratic_cost(self) -> None:
        """
        Test analytic derivatives of the quadratic cost.
        """
        cost = QuadraticCost(np.diag([1.0, 2.0]), [[3.0]], Qf=np.diag([4.0, 5.0]))
        xs = np.array([[1.0, 1.0], [2.0, -1.0], [0.5, 0.5]])
        us = np.array([[1.0], [-2.0]])
        lx, lu, lxx, luu, lux = quadratize(cost, xs, us)
        np.testing.assert_array_equal(lx, [[1.0, 2.0], [2.0, -2.0], [2.0, 2.5]])
        np.testing.assert_array_equal(lu, [[3.0], [-6.0]])
        np.testing.assert_array_equal(lxx[-1], np.diag([4.0, 5.0]))
        np.testing.assert_array_equal(luu[0], [[3.0]])
        np.testing.assert_array_equal(lux, np.zeros((2, 1, 2)))
        self.assertEqual(trajectory_cost(cost, xs, us), 1.5 + 1.5 + 3.0 + 6.0 + 0.5 + 0.625)

    def test_smooth_adapter(self) -> None:
        """
        Test finite-difference derivatives of the smooth plant cost.
        """
        cp = CartPole()
        cost = smooth_cost_adapter(cp)
        x = np.array([[0.3, 0.7, -0.4, 1.1], [-1.0, 2.5, 0.2, 0.0]])
        grad, hess = cost.state_derivatives(x)
        p, th, pd, thd = x.T
        s, c = np.sin(th), np.cos(th)
        exact = np.stack([2.0 * p, -1000.0 * (1.0 + c) * s, 2.0 * pd, 2.0 * thd], axis=1)
        np.testing.assert_allclose(grad, exact, rtol=1e-5, atol=1e-5)
        np.testing.assert_allclose(hess[:, 1, 1], 1000.0 * s * s - 1000.0 * (1.0 + c) * c, rtol=1e-3, atol=1e-2)
        np.testing.assert_allclose(hess[:, 0, 0], [2.0, 2.0], atol=1e-2)
        np.testing.assert_allclose(hess[:, 0, 1], [0.0, 0.0], atol=1e-2)
        np.testing.assert_array_equal(cost.R, cp.R)
        self.assertAlmostEqual(float(cost.running(x[0], np.array([2.0]))), float(cp.running_cost(x[0])) + 2.0)

    def test_lqr_gains(self) -> None:
        """
        Test one iteration from a zero plan equals finite-horizon LQR.
        """
        report = verify_lq(instances=10, seed=4)
        self.assertTrue(report.passed, report.lines())
        self.assertLessEqual(report.max_error, 1e-8)

    def test_optimal_cost(self) -> None:
        """
        Test the optimized cost equals ½x0ᵀP0x0.
        """
        plant = _linear_plant(2)
        dt, steps = 0.05, 20
        cost = QuadraticCost(plant.Q, plant.R, plant.Qf)
        ctrl = DdpController(plant, DdpConfig(N=steps, dt=dt, tolerance=1e-14), cost=cost)
        plan = ctrl.optimize(plant.x0)
        xs, us = simulate(plant, plant.x0, plan.controls, dt)
        Ad, Bd = plant.discrete_matrices(dt)
        _, P = lqr_gains(Ad, Bd, plant.Q, plant.R, plant.Qf, steps)
        optimal = 0.5 * float(plant.x0 @ P[0] @ plant.x0)
        self.assertAlmostEqual(trajectory_cost(cost, xs, us), optimal, delta=1e-8 * optimal)
        np.testing.assert_allclose(P[0], P[0].T)

    def test_receding_horizon(self) -> None:
        """
        Test mpc steps on a linear plant apply the first LQR gain.
        """
        plant = _linear_plant(3)
        dt, steps = 0.05, 15
        cost = QuadraticCost(plant.Q, plant.R, plant.Qf)
        Ad, Bd = plant.discrete_matrices(dt)
        K, _ = lqr_gains(Ad, Bd, plant.Q, plant.R, plant.Qf, steps)
        ctrl = DdpController(plant, DdpConfig(N=steps, dt=dt, tolerance=1e-14), cost=cost)
        x = plant.x0.copy()
        for _ in range(4):
            u, plan = ctrl.mpc_step(x)
            np.testing.assert_allclose(u, K[0] @ x, atol=1e-6)
            np.testing.assert_array_equal(plan.controls[-1], plant.u_init)
            x = Ad @ x + Bd @ u

    def test_zero_cost(self) -> None:
        """
        Test a zero cost gives zero gains.
        """
        plant = _linear_plant(4)
        cost = QuadraticCost(np.zeros((3, 3)), np.zeros((2, 2)))
        xs, us = simulate(plant, plant.x0, np.zeros((5, 2)), 0.05)
        A, B = linearize_trajectory(plant, xs[:-1], us, 0.05)
        derivs = quadratize(cost, xs, us)
        self.assertRaises(BackwardPassError, lambda: backward_pass(A, B, derivs, 0.0))
        policy = backward_pass(A, B, derivs, 1e-6, xs, us)
        np.testing.assert_array_equal(policy.k, np.zeros((5, 2)))
        np.testing.assert_array_equal(policy.K, np.zeros((5, 2, 3)))
        self.assertEqual(policy.expected_decrease, 0.0)

    def test_passes(self) -> None:
        """
        Test the predicted decrease and the α = 0 forward pass.
        """
        plant = _linear_plant(5)
        cost = QuadraticCost(plant.Q, plant.R, plant.Qf)
        us0 = np.random.default_rng(5).standard_normal((10, 2))
        xs, us = simulate(plant, plant.x0, us0, 0.05)
        A, B = linearize_trajectory(plant, xs[:-1], us, 0.05)
        policy = backward_pass(A, B, quadratize(cost, xs, us), 0.0, xs, us)
        self.assertGreaterEqual(policy.d1, 0.0)
        self.assertGreaterEqual(policy.expected_decrease, 0.0)
        self.assertEqual(policy.predicted(0.0), 0.0)

        xs0, us_a0, j0 = forward_pass(plant, policy, 0.0, cost, 0.05)
        np.testing.assert_allclose(xs0, xs, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(us_a0, us, rtol=1e-12, atol=1e-12)
        self.assertAlmostEqual(j0, trajectory_cost(cost, xs, us), places=9)

        # A full step realizes the predicted decrease of an exactly quadratic problem
        _, _, j1 = forward_pass(plant, policy, 1.0, cost, 0.05)
        self.assertAlmostEqual(j0 - j1, policy.expected_decrease, delta=1e-6 * max(1.0, policy.expected_decrease))

    def test_regularization_schedule(self) -> None:
        """
        Test the regularization grows from zero until the control Hessian is positive definite.
        """
        plant = LinearPlant([[0.0]], [[1.0]], [[1.0]], 1.0, x0=[1.0])
        cost = QuadraticCost([[1.0]], [[-1.0]], [[1.0]])
        ctrl = DdpController(plant, DdpConfig(N=3, dt=0.1, max_iterations=1), cost=cost)
        ctrl.optimize(plant.x0)
        np.testing.assert_allclose(ctrl.reg_history[:9], [0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0],
                                   rtol=1e-12)

        low = DdpController(plant, DdpConfig(N=3, dt=0.1, max_iterations=1, reg_max=1e-3), cost=cost)
        self.assertRaises(BackwardPassError, lambda: low.optimize(plant.x0))

    def test_config(self) -> None:
        """
        Test configuration checks.
        """
        self.assertRaises(AssertionError, lambda: DdpConfig(line_search=(0.5, 0.25)))
        self.assertRaises(AssertionError, lambda: DdpConfig(line_search=(1.0, 0.25, 0.5)))
        self.assertRaises(AssertionError, lambda: DdpConfig(reg_growth=1.0))
        self.assertEqual(DdpConfig(line_search=[1, 0.5]).line_search, (1.0, 0.5))

    def test_cartpole_smoke(self) -> None:
        """
        Test iLQG on the cart-pole never increases the plan cost.
        """
        cp = CartPole()
        ctrl = DdpController(cp, DdpConfig(N=30, dt=0.02, max_iterations=5))
        before = trajectory_cost(ctrl.cost, *simulate(cp, cp.x0 + [0.0, 0.1, 0.0, 0.0], ctrl.plan.controls, 0.02))
        plan = ctrl.optimize(cp.x0 + [0.0, 0.1, 0.0, 0.0])
        after = trajectory_cost(ctrl.cost, *simulate(cp, cp.x0 + [0.0, 0.1, 0.0, 0.0], plan.controls, 0.02))
        self.assertLessEqual(after, before)
        self.assertTrue(np.all(np.abs(plan.controls) <= 20.0))
        self.assertIsNotNone(ctrl.last_policy)
        ctrl.reset()
        np.testing.assert_array_equal(ctrl.plan.controls, np.zeros((30, 1)))
        ctrl.close()
