"""
MPPI BENCHMARKS - TEST - ENVS

Test the benchmark plants, their costs and the obstacle forests.
"""

import math
import os
import shutil
import tempfile
import unittest

import numpy as np

from MPPI_benchmarks.envs import CartPole, cartpole_dynamics, cartpole_running_cost, CartPoleParams, crash_check, \
    ddp_obstacle_cost, generate_forest, InfeasibleForestError, load_forest, make_plant, ObstacleForest, \
    override_params, Quadrotor, quadrotor_running_cost, RaceCar, racecar_dynamics, racecar_running_cost, \
    save_forest, track_distance


def _forest(centers, radii=0.5) -> ObstacleForest:
    centers = np.array(centers, dtype=float).reshape(-1, 2)
    return ObstacleForest(centers=centers, radii=np.full(centers.shape[0], radii), spacing=float('nan'),
                          bounds=(0.0, 40.0, 0.0, 40.0), start=(1.0, 20.0), goal=(39.0, 20.0))


class EnvsTest(unittest.TestCase):

    def setUp(self) -> None:
        self.tmp = tempfile.mkdtemp()

    def tearDown(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_control_affine(self) -> None:
        """
        Test every plant splits into drift plus control gain times control.
        """
        rng = np.random.default_rng(0)
        for task in ('cartpole', 'racecar', 'quadrotor'):
            plant = make_plant(task)
            x = plant.x0 + 0.1 * rng.standard_normal((5, plant.n))
            u = plant.u_init + 0.1 * rng.standard_normal((5, plant.m))
            g = plant.control_gain(x)
            self.assertEqual(g.shape, (5, plant.n, plant.m))
            self.assertFalse(np.any(g[:, :plant.n_a]), task)
            np.testing.assert_allclose(plant.state_derivative(x, u),
                                       plant.drift(x) + np.einsum('knm,km->kn', g, u), rtol=1e-10, atol=1e-8)
            self.assertTrue(plant.special_case)
            self.assertAlmostEqual(plant.strict_lambda(), float(plant.R[0, 0]) / plant.rho)

    def test_cartpole_cost(self) -> None:
        """
        Test the swing-up cost.
        """
        self.assertEqual(float(cartpole_running_cost([0.0, math.pi, 0.0, 0.0])), 0.0)
        self.assertEqual(float(cartpole_running_cost(np.zeros(4))), 2000.0)
        self.assertAlmostEqual(float(cartpole_running_cost([1.0, math.pi, 2.0, 3.0])), 14.0, places=12)

    def test_cartpole_dynamics(self) -> None:
        """
        Test the pendulum equilibria.
        """
        np.testing.assert_array_equal(cartpole_dynamics(np.zeros(4), [0.0]), np.zeros(4))
        upright = cartpole_dynamics([0.0, math.pi, 0.0, 0.0], [0.0])
        np.testing.assert_allclose(upright, np.zeros(4), atol=1e-14)
        side = cartpole_dynamics([0.0, math.pi / 2, 0.0, 0.0], [0.0])
        self.assertAlmostEqual(float(side[3]), -9.81, places=12)
        pushed = cartpole_dynamics(np.zeros(4), [1.0], CartPoleParams(velocity_gain=5.0))
        self.assertAlmostEqual(float(pushed[2]), 5.0)
        self.assertAlmostEqual(float(pushed[3]), -5.0)

        cp = CartPole()
        self.assertTrue(bool(cp.upright([0.0, math.pi, 0.0, 0.0])))
        self.assertFalse(bool(cp.upright(np.zeros(4))))
        self.assertAlmostEqual(float(cp.report_state([0.0, 2.0 * math.pi + 1.0, 0.0, 0.0])[1]), 1.0, places=12)

    def test_racecar_cost(self) -> None:
        """
        Test the track cost and its symmetry.
        """
        x = np.zeros(8)
        x[0], x[3] = 13.0, 7.0
        self.assertEqual(float(racecar_running_cost(x)), 0.0)
        x[0] = 0.0
        self.assertEqual(float(racecar_running_cost(x)), 100.0)
        x[0], x[3] = 13.0, 0.0
        self.assertEqual(float(racecar_running_cost(x)), 49.0)

        rng = np.random.default_rng(2)
        pts = rng.uniform(-15.0, 15.0, (50, 2))
        np.testing.assert_allclose(track_distance(pts[:, 0], pts[:, 1]), track_distance(-pts[:, 0], pts[:, 1]))
        np.testing.assert_allclose(track_distance(pts[:, 0], pts[:, 1]), track_distance(pts[:, 0], -pts[:, 1]))
        self.assertEqual(float(track_distance(0.0, -6.0)), 0.0)

    def test_racecar_coasting(self) -> None:
        """
        Test straight coasting has no lateral or yaw acceleration.
        """
        x = np.zeros(8)
        x[3] = 5.0
        dx = racecar_dynamics(x, [0.0, 0.0])
        self.assertEqual(float(dx[4]), 0.0)
        self.assertEqual(float(dx[5]), 0.0)
        self.assertLess(float(dx[3]), 0.0)

    def test_racecar_throttle(self) -> None:
        """
        Test full throttle from rest accelerates monotonically until drag balance.
        """
        car = RaceCar()
        x = np.zeros(8)
        dt = 0.02
        speeds = []
        for _ in range(1000):
            x = x + car.state_derivative(x, [0.0, 1.0]) * dt
            speeds.append(x[3])
        speeds = np.array(speeds)
        self.assertTrue(np.all(np.diff(speeds) >= -1e-12))
        self.assertGreater(speeds[-1], 10.0)
        self.assertLess(speeds[-1] - speeds[-50], 0.05)

    def test_racecar_kinematic(self) -> None:
        """
        Test small steering at low speed turns at the kinematic yaw rate.
        """
        car = RaceCar()
        steer = 0.05
        x = np.zeros(8)
        x[3], x[6], x[7] = 3.0, steer, 0.0715
        dt = 0.002
        for _ in range(1500):
            x = x + car.state_derivative(x, [steer, 0.0715]) * dt
        kinematic = x[3] * math.tan(steer) / car.wheelbase
        self.assertLess(abs(x[5] / kinematic - 1.0), 0.1)

    def test_racecar_speed_metric(self) -> None:
        """
        Test the minimum corner speed after the settle time.
        """
        car = RaceCar()
        states = np.zeros((4, 8))
        states[:, 0] = [10.0, 10.0, 0.0, -12.0]
        states[:, 3] = [1.0, 5.0, 0.5, 4.0]
        self.assertEqual(car.speed_metric(states, np.array([1.0, 3.0, 4.0, 5.0])), 4.0)
        self.assertTrue(math.isnan(car.speed_metric(states, np.zeros(4))))

    def test_quadrotor_cost(self) -> None:
        """
        Test the quadrotor cost terms.
        """
        goal = np.array([39.0, 20.0, 2.0])
        x = np.zeros(16)
        x[:3] = goal
        far = _forest([[39.0 + 12.5, 20.0]])
        self.assertAlmostEqual(float(quadrotor_running_cost(x, far, goal, False)), 350.0 * math.exp(-1.0), places=10)
        self.assertAlmostEqual(float(quadrotor_running_cost(x, far, goal, False)), 128.76, places=2)
        empty = _forest(np.zeros((0, 2)))
        self.assertEqual(float(quadrotor_running_cost(x, empty, goal, False)), 0.0)
        self.assertEqual(float(quadrotor_running_cost(x, empty, goal, True)), 1000.0)
        x[2] = 3.0
        x[8] = 0.2
        x[3:6] = [1.0, 2.0, 0.0]
        self.assertAlmostEqual(float(quadrotor_running_cost(x, empty, goal, False)), 150.0 + 50.0 * 0.04 + 5.0)

    def test_ddp_obstacle_cost(self) -> None:
        """
        Test the smooth obstacle penalty.
        """
        x = np.zeros(16)
        x[:2] = [10.0, 10.0]
        self.assertEqual(float(ddp_obstacle_cost(x, _forest([[10.5, 10.0]]))), 2000.0)
        two = _forest([[11.5, 10.0], [10.0, 12.5]])
        self.assertAlmostEqual(float(ddp_obstacle_cost(x, two)), 2000.0 * (math.exp(-0.5) + math.exp(-2.0)),
                               places=9)
        self.assertAlmostEqual(float(ddp_obstacle_cost(x, two)), 1483.7, delta=0.1)
        self.assertEqual(float(ddp_obstacle_cost(x, _forest([[25.5, 10.0]]))), 0.0)
        self.assertEqual(float(ddp_obstacle_cost(x, _forest(np.zeros((0, 2))))), 0.0)

    def test_crash_check(self) -> None:
        """
        Test ground and cylinder contact.
        """
        forest = _forest([[5.0, 5.0]])
        x = np.zeros(16)
        x[:3] = [20.0, 20.0, -0.01]
        self.assertTrue(bool(crash_check(x, forest)))
        x[2] = 2.0
        self.assertFalse(bool(crash_check(x, forest)))
        x[:2] = [5.5, 5.0]
        self.assertTrue(bool(crash_check(x, forest)))
        x[:2] = [5.6, 5.0]
        self.assertFalse(bool(crash_check(x, forest)))

    def test_quadrotor_hover(self) -> None:
        """
        Test the hover speed balances gravity and the start is clear.
        """
        quad = Quadrotor()
        dx = quad.state_derivative(quad.x0, quad.u_init)
        np.testing.assert_allclose(dx, np.zeros(16), atol=1e-9)
        self.assertFalse(bool(quad.crash_check(quad.x0)))
        self.assertFalse(quad.is_complete(quad.x0))
        at_goal = quad.x0.copy()
        at_goal[:3] = quad.goal
        self.assertTrue(quad.is_complete(at_goal))
        self.assertTrue(quad.has_crash)

    def test_forest_generation(self) -> None:
        """
        Test forest density, spacing and determinism.
        """
        forest = generate_forest(4.0, (0.0, 40.0, 0.0, 40.0), seed=3)
        self.assertGreaterEqual(len(forest), 90)
        self.assertLessEqual(len(forest), 110)
        c = forest.centers
        d = np.hypot(c[:, None, 0] - c[None, :, 0], c[:, None, 1] - c[None, :, 1])
        d[np.diag_indices_from(d)] = np.inf
        self.assertGreaterEqual(float(np.min(d)), 0.2 * 4.0)
        np.testing.assert_array_equal(c, generate_forest(4.0, (0.0, 40.0, 0.0, 40.0), seed=3).centers)
        self.assertFalse(np.array_equal(c, generate_forest(4.0, (0.0, 40.0, 0.0, 40.0), seed=4).centers))
        for pt in (forest.start, forest.goal):
            self.assertGreaterEqual(float(forest.nearest_distance(np.array(pt))), 1.5)

    def test_forest_errors(self) -> None:
        """
        Test infeasible layouts.
        """
        self.assertRaises(InfeasibleForestError, lambda: generate_forest(0.0))
        self.assertRaises(InfeasibleForestError, lambda: generate_forest(30.0, (0.0, 20.0, 0.0, 20.0)))
        self.assertRaises(InfeasibleForestError, lambda: generate_forest(4.0, start=(-5.0, 0.0)))

    def test_forest_file(self) -> None:
        """
        Test save and load.
        """
        forest = generate_forest(3.0, seed=8)
        path = save_forest(forest, os.path.join(self.tmp, 'f', 'forest.json'))
        loaded = load_forest(path)
        np.testing.assert_array_equal(loaded.centers, forest.centers)
        np.testing.assert_array_equal(loaded.radii, forest.radii)
        self.assertEqual(loaded.goal, forest.goal)
        self.assertRaises(AssertionError, lambda: load_forest(os.path.join(self.tmp, 'missing.json')))

    def test_registry(self) -> None:
        """
        Test plant construction and overrides.
        """
        self.assertIsInstance(make_plant('cartpole'), CartPole)
        self.assertRaises(KeyError, lambda: make_plant('pendulum'))
        cp = make_plant('cartpole', {'u_max': '5'})
        np.testing.assert_array_equal(cp.u_hi, [5.0])
        self.assertRaises(KeyError, lambda: make_plant('cartpole', {'mass': '1'}))
        quad = make_plant('quadrotor', {'forest_spacing': '6', 'forest_seed': '2'})
        self.assertEqual(quad.forest.spacing, 6.0)
        params = override_params(CartPoleParams(), {'length': 2.0})
        self.assertEqual(params.length, 2.0)
