"""
MPPI BENCHMARKS - ENVS - RACE CAR

Single-track vehicle with Pacejka lateral tire forces driving an elliptical
track. Steering and throttle actuators are first-order lags, so they form the
directly actuated block.
"""

__all__ = [
    'RaceCar',
    'racecar_dynamics',
    'racecar_running_cost',
    'RaceCarParams',
    'track_distance'
]

from dataclasses import dataclass
from typing import Optional

import numpy as np

from MPPI_benchmarks.envs._base import Plant

# Indices
_X, _Y, _PSI, _VX, _VY, _R, _STEER, _THROTTLE = range(8)


@dataclass(frozen=True)
class RaceCarParams(object):
    mass: float = 21.0  # kg
    inertia_z: float = 1.1  # kg m²
    l_front: float = 0.34  # m, CG to front axle
    l_rear: float = 0.23  # m, CG to rear axle
    tire_b: float = 4.0
    tire_c: float = 1.4
    friction: float = 0.9
    gravity: float = 9.81
    motor_force: float = 120.0  # N at full throttle
    rolling_force: float = 5.0  # N
    drag: float = 0.4  # N s²/m²
    steer_bandwidth: float = 10.0  # 1/s
    throttle_bandwidth: float = 10.0  # 1/s
    slip_speed_min: float = 2.0  # m/s, floor of v_x in slip angles
    track_a: float = 13.0
    track_b: float = 6.0
    target_speed: float = 7.0
    steer_max: float = 0.5
    throttle_min: float = -1.0
    throttle_max: float = 1.0
    inv_sqrt_rho: float = 0.005
    r: float = 1.0


def track_distance(x: 'np.ndarray', y: 'np.ndarray', a: float = 13.0, b: float = 6.0) -> 'np.ndarray':
    """
    d = |(x/a)² + (y/b)² − 1|.
    """
    return np.abs((np.asarray(x) / a) ** 2 + (np.asarray(y) / b) ** 2 - 1.0)


def racecar_running_cost(x: 'np.ndarray', params: Optional[RaceCarParams] = None) -> 'np.ndarray':
    """
    q = 100 d² + (v_x − 7)².

    :param x: State (..., 8)
    :param params: Parameters
    :return: Cost
    """
    if params is None:
        params = RaceCarParams()
    x = np.asarray(x, dtype=float)
    d = track_distance(x[..., _X], x[..., _Y], params.track_a, params.track_b)
    return 100.0 * d ** 2 + (x[..., _VX] - params.target_speed) ** 2


def _pacejka(alpha: 'np.ndarray', b: float, c: float, d: 'np.ndarray') -> 'np.ndarray':
    return d * np.sin(c * np.arctan(b * alpha))


def racecar_dynamics(x: 'np.ndarray', u: 'np.ndarray', params: Optional[RaceCarParams] = None) -> 'np.ndarray':
    """
    State derivative of the single-track model. The rear tire forces are scaled
    into the friction ellipse.

    :param x: State (..., 8) ordered (x, y, ψ, v_x, v_y, r, steer, throttle)
    :param u: Commands (..., 2) ordered (steer, throttle)
    :param params: Parameters
    :return: State derivative
    """
    pr = RaceCarParams() if params is None else params
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    psi, vx, vy, r = x[..., _PSI], x[..., _VX], x[..., _VY], x[..., _R]
    steer, throttle = x[..., _STEER], x[..., _THROTTLE]
    m, lf, lr = pr.mass, pr.l_front, pr.l_rear

    fz_front = m * pr.gravity * lr / (lf + lr)
    fz_rear = m * pr.gravity * lf / (lf + lr)
    vxs = np.maximum(vx, pr.slip_speed_min)
    alpha_f = steer - np.arctan2(vy + lf * r, vxs)
    alpha_r = -np.arctan2(vy - lr * r, vxs)
    fy_f = _pacejka(alpha_f, pr.tire_b, pr.tire_c, pr.friction * fz_front)
    fy_r = _pacejka(alpha_r, pr.tire_b, pr.tire_c, pr.friction * fz_rear)
    fx = pr.motor_force * throttle - pr.rolling_force * np.tanh(vx) - pr.drag * vx * np.abs(vx)

    # Rear axle carries drive and lateral force
    usage = np.hypot(fx, fy_r) / (pr.friction * fz_rear)
    scale = 1.0 / np.maximum(usage, 1.0)
    fx = fx * scale
    fy_r = fy_r * scale

    cos_psi, sin_psi = np.cos(psi), np.sin(psi)
    cos_d, sin_d = np.cos(steer), np.sin(steer)
    return np.stack(np.broadcast_arrays(
        vx * cos_psi - vy * sin_psi,
        vx * sin_psi + vy * cos_psi,
        r,
        (fx - fy_f * sin_d) / m + vy * r,
        (fy_r + fy_f * cos_d) / m - vx * r,
        (fy_f * lf * cos_d - fy_r * lr) / pr.inertia_z,
        pr.steer_bandwidth * (u[..., 0] - steer),
        pr.throttle_bandwidth * (u[..., 1] - throttle)
    ), axis=-1)


class RaceCar(Plant):
    """
    Race car on the 13 x 6 m elliptical track, starting at rest at (0, −6)
    heading counterclockwise.
    """
    params: RaceCarParams
    name = 'racecar'

    def __init__(self, params: Optional[RaceCarParams] = None) -> None:
        self.params = RaceCarParams() if params is None else params
        pr = self.params
        assert pr.mass > 0 and pr.inertia_z > 0 and pr.l_front > 0 and pr.l_rear > 0
        assert pr.steer_bandwidth > 0 and pr.throttle_bandwidth > 0 and pr.slip_speed_min > 0
        x0 = np.zeros(8)
        x0[_Y] = -pr.track_b
        super().__init__(n_a=6, n_c=2, m=2, rho=1.0 / pr.inv_sqrt_rho ** 2, R=pr.r,
                         u_lo=[-pr.steer_max, pr.throttle_min], u_hi=[pr.steer_max, pr.throttle_max], x0=x0,
                         state_names=('x', 'y', 'psi', 'v_x', 'v_y', 'yaw_rate', 'steer', 'throttle'),
                         control_names=('steer_cmd', 'throttle_cmd'))

    @property
    def wheelbase(self) -> float:
        return self.params.l_front + self.params.l_rear

    def drift(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        x = np.asarray(x, dtype=float)
        return racecar_dynamics(x, np.zeros(x.shape[:-1] + (2,)), self.params)

    def control_gain(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        x = np.asarray(x, dtype=float)
        g = np.zeros(x.shape[:-1] + (8, 2))
        g[..., _STEER, 0] = self.params.steer_bandwidth
        g[..., _THROTTLE, 1] = self.params.throttle_bandwidth
        return g

    def state_derivative(self, x: 'np.ndarray', u: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        return racecar_dynamics(x, u, self.params)

    def running_cost(self, x: 'np.ndarray', crashed: Optional['np.ndarray'] = None) -> 'np.ndarray':
        return racecar_running_cost(x, self.params)

    def track_distance(self, x: 'np.ndarray') -> 'np.ndarray':
        x = np.asarray(x, dtype=float)
        return track_distance(x[..., _X], x[..., _Y], self.params.track_a, self.params.track_b)

    def speed_metric(self, states: 'np.ndarray', times: 'np.ndarray', corner_x: float = 9.0,
                     settle_time: float = 2.0) -> float:
        """
        Minimum forward speed inside the high-curvature ends of the track
        (|x| ≥ corner_x) after ``settle_time`` seconds.
        """
        states = np.asarray(states, dtype=float)
        mask = (np.abs(states[:, _X]) >= corner_x) & (np.asarray(times) >= settle_time)
        if not np.any(mask):
            return float('nan')
        return float(np.min(states[mask, _VX]))
