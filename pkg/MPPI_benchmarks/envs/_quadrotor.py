"""
MPPI BENCHMARKS - ENVS - QUADROTOR

Rigid-body quadrotor with first-order rotor lags flying through an obstacle
forest. Rotor speeds (rpm) form the directly actuated block, the commands are
rotor speed set points.
"""

__all__ = [
    'crash_check',
    'ddp_obstacle_cost',
    'Quadrotor',
    'quadrotor_dynamics',
    'quadrotor_running_cost',
    'QuadrotorParams'
]

from dataclasses import dataclass
from typing import Optional

import math
import numpy as np

from MPPI_benchmarks.envs._base import Plant
from MPPI_benchmarks.envs._forest import generate_forest, ObstacleForest

_POS = slice(0, 3)
_VEL = slice(3, 6)
_PHI, _THETA, _PSI = 6, 7, 8
_RATES = slice(9, 12)
_ROTORS = slice(12, 16)

# Obstacles farther than this from the vehicle are ignored by the smooth cost
PROXIMITY_RADIUS: float = 10.0


@dataclass(frozen=True)
class QuadrotorParams(object):
    mass: float = 0.5  # kg
    gravity: float = 9.81
    arm: float = 0.17  # m
    inertia_xx: float = 2.3e-3
    inertia_yy: float = 2.3e-3
    inertia_zz: float = 4.0e-3
    k_force: float = 6.11e-8  # N/rpm²
    k_moment: float = 1.5e-9  # N m/rpm²
    k_motor: float = 20.0  # 1/s
    drag: float = 0.1  # N s/m
    rpm_min: float = 1200.0
    rpm_max: float = 7800.0
    altitude: float = 2.0
    ground_level: float = 0.0
    goal_radius: float = 1.0
    inv_sqrt_rho: float = 10.0
    r: float = 1e-6
    forest_spacing: float = 4.0
    forest_size: float = 20.0
    forest_seed: int = 0


def crash_check(x: 'np.ndarray', forest: ObstacleForest, ground_level: float = 0.0) -> 'np.ndarray':
    """
    C = 1 iff the vehicle (a point) is at or below the ground or inside or on a cylinder.

    :param x: State (..., 16)
    :param forest: Obstacles
    :param ground_level: Ground height
    :return: Crash indicator
    """
    x = np.asarray(x, dtype=float)
    return (x[..., 2] <= ground_level) | forest.collides(x[..., :2])


def quadrotor_running_cost(
        x: 'np.ndarray',
        forest: ObstacleForest,
        goal: 'np.ndarray',
        crashed: Optional['np.ndarray'] = None
) -> 'np.ndarray':
    """
    q = 2.5(p_x − g_x)² + 2.5(p_y − g_y)² + 150(p_z − g_z)² + 50ψ² + ‖v‖² + 350 exp(−d/12) + 1000 C,
    with d the distance to the closest obstacle surface.

    :param x: State (..., 16)
    :param forest: Obstacles
    :param goal: Desired position (3,)
    :param crashed: Crash indicator, computed from the state if None
    :return: Cost
    """
    x = np.asarray(x, dtype=float)
    if crashed is None:
        crashed = crash_check(x, forest)
    p, v = x[..., _POS], x[..., _VEL]
    d = forest.nearest_distance(x[..., :2])
    return 2.5 * (p[..., 0] - goal[0]) ** 2 + 2.5 * (p[..., 1] - goal[1]) ** 2 + 150.0 * (p[..., 2] - goal[2]) ** 2 \
        + 50.0 * x[..., _PSI] ** 2 + np.sum(v * v, axis=-1) + 350.0 * np.exp(-d / 12.0) \
        + 1000.0 * np.asarray(crashed, dtype=float)


def ddp_obstacle_cost(x: 'np.ndarray', forest: ObstacleForest, proximity: float = PROXIMITY_RADIUS) -> 'np.ndarray':
    """
    2000 Σ_i exp(−d_i²/2) over cylinders whose surface is within ``proximity``,
    with d_i the signed surface distance.

    :param x: State (..., 16)
    :param forest: Obstacles
    :param proximity: Radius of the obstacles considered
    :return: Cost
    """
    x = np.asarray(x, dtype=float)
    if len(forest) == 0:
        return np.zeros(x.shape[:-1])
    d = forest.signed_distances(x[..., :2])
    return 2000.0 * np.sum(np.where(d <= proximity, np.exp(-0.5 * d * d), 0.0), axis=-1)


def quadrotor_dynamics(x: 'np.ndarray', u: 'np.ndarray', params: Optional[QuadrotorParams] = None) -> 'np.ndarray':
    """
    State derivative. Attitude uses Z-X-Y Euler angles (ψ, φ, θ), rotor i
    produces thrust k_f w_i² and moment k_m w_i².

    :param x: State (..., 16) ordered (p, v, φ, θ, ψ, body rates, rotor speeds)
    :param u: Rotor commands (..., 4)
    :param params: Parameters
    :return: State derivative
    """
    pr = QuadrotorParams() if params is None else params
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    phi, theta, psi = x[..., _PHI], x[..., _THETA], x[..., _PSI]
    rates = x[..., _RATES]
    w = x[..., _ROTORS]
    cph, sph = np.cos(phi), np.sin(phi)
    cth, sth = np.cos(theta), np.sin(theta)
    cps, sps = np.cos(psi), np.sin(psi)

    f = pr.k_force * w * w
    mz = pr.k_moment * w * w
    thrust = np.sum(f, axis=-1)
    b3 = np.stack([cps * sth + cth * sph * sps, sps * sth - cps * cth * sph, cph * cth], axis=-1)
    acc = (thrust[..., None] * b3 - pr.drag * x[..., _VEL]) / pr.mass
    acc[..., 2] -= pr.gravity

    inertia = np.array([pr.inertia_xx, pr.inertia_yy, pr.inertia_zz])
    torque = np.stack([
        pr.arm * (f[..., 1] - f[..., 3]),
        pr.arm * (f[..., 2] - f[..., 0]),
        mz[..., 0] - mz[..., 1] + mz[..., 2] - mz[..., 3]
    ], axis=-1)
    rates_dot = (torque - np.cross(rates, rates * inertia)) / inertia

    p, q, r = rates[..., 0], rates[..., 1], rates[..., 2]
    psi_dot = (-sth * p + cth * r) / cph
    euler_dot = np.stack([cth * p + sth * r, q - sph * psi_dot, psi_dot], axis=-1)

    w_dot = pr.k_motor * (u - w)
    return np.concatenate([x[..., _VEL], acc, euler_dot, rates_dot, w_dot], axis=-1)


class Quadrotor(Plant):
    """
    Quadrotor navigating a forest from its start to its goal point at a fixed
    altitude. Crashes are sticky, the crash indicator enters the cost.
    """
    params: QuadrotorParams
    forest: ObstacleForest
    goal: 'np.ndarray'
    hover_rpm: float
    has_crash = True
    name = 'quadrotor'

    def __init__(self, params: Optional[QuadrotorParams] = None, forest: Optional[ObstacleForest] = None) -> None:
        self.params = QuadrotorParams() if params is None else params
        pr = self.params
        assert pr.mass > 0 and pr.k_force > 0 and pr.k_motor > 0 and pr.rpm_min < pr.rpm_max
        if forest is None:
            size = pr.forest_size
            forest = generate_forest(pr.forest_spacing, (0.0, size, 0.0, size), pr.forest_seed)
        self.forest = forest
        self.goal = np.array([forest.goal[0], forest.goal[1], pr.altitude])
        self.hover_rpm = math.sqrt(pr.mass * pr.gravity / (4.0 * pr.k_force))
        assert pr.rpm_min <= self.hover_rpm <= pr.rpm_max, 'hover speed outside the rotor limits'
        x0 = np.zeros(16)
        x0[0], x0[1], x0[2] = forest.start[0], forest.start[1], pr.altitude
        x0[_ROTORS] = self.hover_rpm
        super().__init__(n_a=12, n_c=4, m=4, rho=1.0 / pr.inv_sqrt_rho ** 2, R=pr.r,
                         u_lo=[pr.rpm_min] * 4, u_hi=[pr.rpm_max] * 4, x0=x0, u_init=[self.hover_rpm] * 4,
                         state_names=('p_x', 'p_y', 'p_z', 'v_x', 'v_y', 'v_z', 'roll', 'pitch', 'yaw',
                                      'rate_x', 'rate_y', 'rate_z', 'w_1', 'w_2', 'w_3', 'w_4'),
                         control_names=('w_1_cmd', 'w_2_cmd', 'w_3_cmd', 'w_4_cmd'))

    def drift(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        x = np.asarray(x, dtype=float)
        return quadrotor_dynamics(x, np.zeros(x.shape[:-1] + (4,)), self.params)

    def control_gain(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        x = np.asarray(x, dtype=float)
        g = np.zeros(x.shape[:-1] + (16, 4))
        g[..., 12:, :] = self.params.k_motor * np.eye(4)
        return g

    def state_derivative(self, x: 'np.ndarray', u: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        return quadrotor_dynamics(x, u, self.params)

    def running_cost(self, x: 'np.ndarray', crashed: Optional['np.ndarray'] = None) -> 'np.ndarray':
        return quadrotor_running_cost(x, self.forest, self.goal, crashed)

    def smooth_cost(self, x: 'np.ndarray') -> 'np.ndarray':
        x = np.asarray(x, dtype=float)
        p, v = x[..., _POS], x[..., _VEL]
        g = self.goal
        return 2.5 * (p[..., 0] - g[0]) ** 2 + 2.5 * (p[..., 1] - g[1]) ** 2 + 150.0 * (p[..., 2] - g[2]) ** 2 \
            + 50.0 * x[..., _PSI] ** 2 + np.sum(v * v, axis=-1) + ddp_obstacle_cost(x, self.forest)

    def crash_check(self, x: 'np.ndarray') -> 'np.ndarray':
        return crash_check(x, self.forest, self.params.ground_level)

    def is_complete(self, x: 'np.ndarray') -> bool:
        x = np.asarray(x, dtype=float)
        return bool(math.hypot(x[0] - self.goal[0], x[1] - self.goal[1]) <= self.params.goal_radius)
