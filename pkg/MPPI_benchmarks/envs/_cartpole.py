"""
MPPI BENCHMARKS - ENVS - CART POLE

Velocity-servoed cart with a pendulum, swing-up task. θ = 0 hangs down.
"""

__all__ = [
    'CartPole',
    'cartpole_dynamics',
    'cartpole_running_cost',
    'CartPoleParams'
]

from dataclasses import dataclass
from typing import Optional

import numpy as np

from MPPI_benchmarks.envs._base import Plant


@dataclass(frozen=True)
class CartPoleParams(object):
    length: float = 1.0
    gravity: float = 9.81
    velocity_gain: float = 10.0
    inv_sqrt_rho: float = 0.01
    r: float = 1.0
    u_max: float = 20.0


def cartpole_running_cost(x: 'np.ndarray') -> 'np.ndarray':
    """
    q = p² + 500(1 + cos θ)² + θ̇² + ṗ².

    :param x: State (..., 4) ordered (p, θ, ṗ, θ̇)
    :return: Cost
    """
    x = np.asarray(x, dtype=float)
    p, theta, p_dot, theta_dot = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    return p ** 2 + 500.0 * (1.0 + np.cos(theta)) ** 2 + theta_dot ** 2 + p_dot ** 2


def cartpole_dynamics(x: 'np.ndarray', u: 'np.ndarray', params: Optional[CartPoleParams] = None) -> 'np.ndarray':
    """
    p̈ = k(u − ṗ), θ̈ = −(g/l) sin θ − (p̈/l) cos θ.

    :param x: State (..., 4) ordered (p, θ, ṗ, θ̇)
    :param u: Desired cart velocity (..., 1)
    :param params: Parameters
    :return: State derivative
    """
    if params is None:
        params = CartPoleParams()
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    theta, p_dot, theta_dot = x[..., 1], x[..., 2], x[..., 3]
    p_ddot = params.velocity_gain * (u[..., 0] - p_dot)
    theta_ddot = -(params.gravity / params.length) * np.sin(theta) - (p_ddot / params.length) * np.cos(theta)
    return np.stack(np.broadcast_arrays(p_dot, theta_dot, p_ddot, theta_ddot), axis=-1)


class CartPole(Plant):
    """
    Cart-pole swing-up. a-block (p, θ), c-block (ṗ, θ̇), one control.
    G_c is 2 x 1, so the special case holds with p = m = 1 but G_c is not square.
    """
    params: CartPoleParams
    name = 'cartpole'

    def __init__(self, params: Optional[CartPoleParams] = None) -> None:
        self.params = CartPoleParams() if params is None else params
        pr = self.params
        assert pr.length > 0 and pr.inv_sqrt_rho > 0 and pr.r > 0 and pr.u_max > 0
        super().__init__(n_a=2, n_c=2, m=1, rho=1.0 / pr.inv_sqrt_rho ** 2, R=pr.r,
                         u_lo=[-pr.u_max], u_hi=[pr.u_max], x0=np.zeros(4),
                         state_names=('p', 'theta', 'p_dot', 'theta_dot'), control_names=('u',))

    def drift(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        x = np.asarray(x, dtype=float)
        return cartpole_dynamics(x, np.zeros(x.shape[:-1] + (1,)), self.params)

    def control_gain(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        x = np.asarray(x, dtype=float)
        k, l = self.params.velocity_gain, self.params.length
        g = np.zeros(x.shape[:-1] + (4, 1))
        g[..., 2, 0] = k
        g[..., 3, 0] = -k * np.cos(x[..., 1]) / l
        return g

    def state_derivative(self, x: 'np.ndarray', u: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        return cartpole_dynamics(x, u, self.params)

    def running_cost(self, x: 'np.ndarray', crashed: Optional['np.ndarray'] = None) -> 'np.ndarray':
        return cartpole_running_cost(x)

    def report_state(self, x: 'np.ndarray') -> 'np.ndarray':
        x = np.array(x, dtype=float)
        # Wrapped to (-π, π]
        x[..., 1] = -np.remainder(-x[..., 1] + np.pi, 2.0 * np.pi) + np.pi
        return x

    def upright(self, x: 'np.ndarray', tol: float = 0.1) -> 'np.ndarray':
        """
        True where |1 + cos θ| < tol.
        """
        return np.abs(1.0 + np.cos(np.asarray(x, dtype=float)[..., 1])) < tol
