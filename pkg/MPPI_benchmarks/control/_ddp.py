"""
MPPI BENCHMARKS - CONTROL - DDP

Receding-horizon iLQG baseline on the Euler-discretized, noise-free plant
x_{i+1} = x_i + (f + G u_i) dt with stage cost l(x_i, u_i) and terminal cost φ.
Dynamics Jacobians come from central finite differences.
"""

__all__ = [
    'backward_pass',
    'BackwardPassError',
    'DdpConfig',
    'DdpController',
    'forward_pass',
    'linearize',
    'linearize_trajectory',
    'LocalPolicy',
    'lqr_gains',
    'NonFiniteJacobianError',
    'quadratize',
    'QuadraticCost',
    'simulate',
    'smooth_cost_adapter',
    'SmoothCost',
    'trajectory_cost'
]

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from MPPI_benchmarks.core import ControlSequence, DiffusionModel
from MPPI_benchmarks.envs import Plant
from MPPI_benchmarks.utils import as_square_matrix, clamp, get_logger

logger = get_logger('ddp')

Derivatives = Tuple['np.ndarray', 'np.ndarray', 'np.ndarray', 'np.ndarray', 'np.ndarray']


class NonFiniteJacobianError(ArithmeticError):
    """
    A finite-difference Jacobian has NaN or infinite entries.
    """


class BackwardPassError(ArithmeticError):
    """
    The regularized control Hessian is not positive definite.
    """


@dataclass(frozen=True)
class DdpConfig(object):
    N: int = 50
    dt: float = 0.02
    max_iterations: int = 10
    reg_init: float = 0.0
    reg_min: float = 1e-6
    reg_max: float = 1e10
    reg_growth: float = 10.0
    line_search: Tuple[float, ...] = (1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625)
    tolerance: float = 1e-7
    fd_step: float = 1e-5
    hessian_step: float = 1e-4

    def __post_init__(self) -> None:
        assert self.N >= 1 and self.dt > 0 and self.max_iterations >= 1
        assert self.reg_init >= 0 and 0 < self.reg_min <= self.reg_max and self.reg_growth > 1
        assert self.tolerance > 0 and self.fd_step > 0 and self.hessian_step > 0
        steps = tuple(float(a) for a in self.line_search)
        assert len(steps) >= 1 and steps[0] == 1.0 and all(0 < a <= 1 for a in steps), \
            'line search steps must lie in (0, 1] and start at 1'
        assert all(steps[i] > steps[i + 1] for i in range(len(steps) - 1)), 'line search steps must be descending'
        object.__setattr__(self, 'line_search', steps)


@dataclass(frozen=True)
class LocalPolicy(object):
    """
    Nominal trajectory with feedforward k (N x m) and feedback K (N x m x n).
    ``expected_decrease`` is the cost reduction predicted for a full step,
    split as d1 α + d2 α² with d1 = −Σ kᵀQu and d2 = −½ Σ kᵀQuu k.
    """
    xs: 'np.ndarray'
    us: 'np.ndarray'
    k: 'np.ndarray'
    K: 'np.ndarray'
    d1: float
    d2: float

    @property
    def expected_decrease(self) -> float:
        return self.d1 + self.d2

    def predicted(self, alpha: float) -> float:
        return alpha * self.d1 + alpha * alpha * self.d2


class QuadraticCost(object):
    """
    l = ½xᵀQx + ½uᵀRu, φ = ½xᵀQ_f x with analytic derivatives.
    """
    Q: 'np.ndarray'
    R: 'np.ndarray'
    Qf: 'np.ndarray'

    def __init__(self, Q, R, Qf=None) -> None:
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        self.Q = Q
        self.R = np.atleast_2d(np.asarray(R, dtype=float))
        self.Qf = Q.copy() if Qf is None else as_square_matrix(Qf, Q.shape[0], 'Qf')

    def running(self, x: 'np.ndarray', u: 'np.ndarray') -> 'np.ndarray':
        return 0.5 * np.einsum('...i,ij,...j->...', x, self.Q, x) + 0.5 * np.einsum('...i,ij,...j->...', u, self.R, u)

    def terminal(self, x: 'np.ndarray') -> 'np.ndarray':
        return 0.5 * np.einsum('...i,ij,...j->...', x, self.Qf, x)

    def derivatives(self, xs: 'np.ndarray', us: 'np.ndarray') -> Derivatives:
        steps, n = us.shape[0], xs.shape[1]
        lx = xs @ self.Q.T
        lx[-1] = self.Qf @ xs[-1]
        lxx = np.broadcast_to(self.Q, (steps + 1, n, n)).copy()
        lxx[-1] = self.Qf
        lu = us @ self.R.T
        luu = np.broadcast_to(self.R, (steps,) + self.R.shape).copy()
        lux = np.zeros((steps, us.shape[1], n))
        return lx, lu, lxx, luu, lux


def _fd_gradient_hessian(fn, xs: 'np.ndarray', grad_step: float, hess_step: float):
    """
    Central finite-difference gradients and Hessians of a vectorized scalar
    function at every row of ``xs``.
    """
    t, n = xs.shape
    eye = np.eye(n)
    h = grad_step * np.maximum(1.0, np.abs(xs))  # (t, n)
    pts = np.concatenate([xs[:, None, :] + h[:, :, None] * eye, xs[:, None, :] - h[:, :, None] * eye], axis=1)
    f = np.asarray(fn(pts.reshape(-1, n)), dtype=float).reshape(t, 2, n)
    grad = (f[:, 0] - f[:, 1]) / (2.0 * h)

    hh = hess_step * np.maximum(1.0, np.abs(xs))
    di = hh[:, :, None] * eye  # (t, n, n), row i is h_i e_i
    ei = di[:, :, None, :]
    ej = di[:, None, :, :]
    base = xs[:, None, None, :]
    quad = np.stack([base + ei + ej, base + ei - ej, base - ei + ej, base - ei - ej], axis=3)  # (t, n, n, 4, n)
    g = np.asarray(fn(quad.reshape(-1, n)), dtype=float).reshape(t, n, n, 4)
    hess = (g[..., 0] - g[..., 1] - g[..., 2] + g[..., 3]) / (4.0 * hh[:, :, None] * hh[:, None, :])
    hess = 0.5 * (hess + np.swapaxes(hess, 1, 2))
    return grad, hess


class SmoothCost(object):
    """
    l = q_smooth(x) + ½uᵀRu, φ from the plant. State derivatives by finite differences.
    """
    plant: Plant
    R: 'np.ndarray'
    grad_step: float
    hess_step: float

    def __init__(self, plant: Plant, R=None, grad_step: float = 1e-6, hess_step: float = 1e-4) -> None:
        self.plant = plant
        self.R = as_square_matrix(plant.R if R is None else R, plant.m, 'R')
        self.grad_step = grad_step
        self.hess_step = hess_step

    def state_cost(self, x: 'np.ndarray') -> 'np.ndarray':
        return self.plant.smooth_cost(x)

    def running(self, x: 'np.ndarray', u: 'np.ndarray') -> 'np.ndarray':
        return self.plant.smooth_cost(x) + 0.5 * np.einsum('...i,ij,...j->...', u, self.R, u)

    def terminal(self, x: 'np.ndarray') -> 'np.ndarray':
        return self.plant.terminal_cost(x)

    def state_derivatives(self, xs: 'np.ndarray') -> Tuple['np.ndarray', 'np.ndarray']:
        """
        Gradient and Hessian of q_smooth at each state.
        """
        return _fd_gradient_hessian(self.plant.smooth_cost, np.atleast_2d(xs), self.grad_step, self.hess_step)

    def derivatives(self, xs: 'np.ndarray', us: 'np.ndarray') -> Derivatives:
        steps, m = us.shape
        lx, lxx = self.state_derivatives(xs[:-1])
        gx, gxx = _fd_gradient_hessian(self.plant.terminal_cost, xs[-1:], self.grad_step, self.hess_step)
        lx = np.concatenate([lx, gx])
        lxx = np.concatenate([lxx, gxx])
        lu = us @ self.R.T
        luu = np.broadcast_to(self.R, (steps, m, m)).copy()
        lux = np.zeros((steps, m, xs.shape[1]))
        return lx, lu, lxx, luu, lux


def smooth_cost_adapter(plant: Plant, R=None) -> SmoothCost:
    """
    Cost of the DDP baseline: the plant's smooth state cost (indicator and
    minimum-distance terms replaced by smooth ones) plus the quadratic control cost.

    :param plant: Plant
    :param R: Control cost, the plant's if None
    :return: Cost with finite-difference derivatives
    """
    return SmoothCost(plant, R)


def quadratize(cost, xs: 'np.ndarray', us: 'np.ndarray') -> Derivatives:
    """
    Cost derivatives (lx, lu, lxx, luu, lux) along a trajectory; index N of lx
    and lxx holds the terminal cost.
    """
    out = cost.derivatives(np.asarray(xs, dtype=float), np.asarray(us, dtype=float))
    for d in out:
        if not np.all(np.isfinite(d)):
            raise NonFiniteJacobianError('cost derivatives are not finite')
    return out


def _step(model: DiffusionModel, x: 'np.ndarray', u: 'np.ndarray', dt: float) -> 'np.ndarray':
    return x + model.state_derivative(x, u) * dt


def linearize_trajectory(
        model: DiffusionModel,
        xs: 'np.ndarray',
        us: 'np.ndarray',
        dt: float,
        step: float = 1e-5
) -> Tuple['np.ndarray', 'np.ndarray']:
    """
    Central finite-difference Jacobians of the discrete step map at every
    (x_i, u_i), with step ``step · max(1, |·|)`` per component.

    :param model: Dynamics
    :param xs: States (T, n)
    :param us: Controls (T, m)
    :param dt: Time step
    :param step: Relative step
    :return: (A (T, n, n), B (T, n, m))
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    us = np.atleast_2d(np.asarray(us, dtype=float))
    t, n = xs.shape
    m = us.shape[1]
    hx = step * np.maximum(1.0, np.abs(xs))
    hu = step * np.maximum(1.0, np.abs(us))
    ex, eu = np.eye(n), np.eye(m)
    x_pts = np.concatenate([
        xs[:, None, :] + hx[:, :, None] * ex, xs[:, None, :] - hx[:, :, None] * ex,
        np.broadcast_to(xs[:, None, :], (t, 2 * m, n))
    ], axis=1)
    u_pts = np.concatenate([
        np.broadcast_to(us[:, None, :], (t, 2 * n, m)),
        us[:, None, :] + hu[:, :, None] * eu, us[:, None, :] - hu[:, :, None] * eu
    ], axis=1)
    with np.errstate(over='ignore', invalid='ignore'):
        f = _step(model, x_pts.reshape(-1, n), u_pts.reshape(-1, m), dt).reshape(t, 2 * (n + m), n)
    A = np.swapaxes((f[:, :n] - f[:, n:2 * n]) / (2.0 * hx[:, None, :]), 1, 2)
    B = np.swapaxes((f[:, 2 * n:2 * n + m] - f[:, 2 * n + m:]) / (2.0 * hu[:, :, None]), 1, 2)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise NonFiniteJacobianError('finite-difference Jacobian has non-finite entries')
    return A, B


def linearize(
        model: DiffusionModel,
        x: 'np.ndarray',
        u: 'np.ndarray',
        dt: float,
        step: float = 1e-5
) -> Tuple['np.ndarray', 'np.ndarray']:
    """
    Jacobians (A, B) of x + (f + G u) dt at one point.
    """
    A, B = linearize_trajectory(model, np.reshape(x, (1, -1)), np.reshape(u, (1, -1)), dt, step)
    return A[0], B[0]


def backward_pass(
        A: 'np.ndarray',
        B: 'np.ndarray',
        derivatives: Derivatives,
        reg: float,
        xs: Optional['np.ndarray'] = None,
        us: Optional['np.ndarray'] = None
) -> LocalPolicy:
    """
    Riccati-style recursion with Quu + reg I.

    :param A: State Jacobians (N, n, n)
    :param B: Control Jacobians (N, n, m)
    :param derivatives: (lx, lu, lxx, luu, lux) from :func:`quadratize`
    :param reg: Control Hessian regularization
    :param xs: Nominal states, stored in the policy
    :param us: Nominal controls, stored in the policy
    :return: Local policy
    """
    lx, lu, lxx, luu, lux = derivatives
    steps, n, m = B.shape
    for d in derivatives:
        if not np.all(np.isfinite(d)):
            raise NonFiniteJacobianError('quadratized cost is not finite')
    k = np.zeros((steps, m))
    K = np.zeros((steps, m, n))
    vx = lx[steps].copy()
    vxx = lxx[steps].copy()
    d1 = d2 = 0.0
    eye = np.eye(m)
    for i in range(steps - 1, -1, -1):
        a, b = A[i], B[i]
        qx = lx[i] + a.T @ vx
        qu = lu[i] + b.T @ vx
        qxx = lxx[i] + a.T @ vxx @ a
        qux = lux[i] + b.T @ vxx @ a
        quu = luu[i] + b.T @ vxx @ b
        quu = 0.5 * (quu + quu.T)
        try:
            factor = scipy.linalg.cho_factor(quu + reg * eye)
        except np.linalg.LinAlgError:
            raise BackwardPassError(f'regularized control Hessian is not positive definite at step {i}')
        k[i] = -scipy.linalg.cho_solve(factor, qu)
        K[i] = -scipy.linalg.cho_solve(factor, qux)
        d1 -= float(k[i] @ qu)
        d2 -= 0.5 * float(k[i] @ quu @ k[i])
        vx = qx + K[i].T @ quu @ k[i] + K[i].T @ qu + qux.T @ k[i]
        vxx = qxx + K[i].T @ quu @ K[i] + K[i].T @ qux + qux.T @ K[i]
        vxx = 0.5 * (vxx + vxx.T)
    return LocalPolicy(xs=xs, us=us, k=k, K=K, d1=d1, d2=d2)


def simulate(
        model: DiffusionModel,
        x0: 'np.ndarray',
        us: 'np.ndarray',
        dt: float,
        lo: Optional['np.ndarray'] = None,
        hi: Optional['np.ndarray'] = None
) -> Tuple['np.ndarray', 'np.ndarray']:
    """
    Noise-free rollout of an open-loop sequence, controls clamped.

    :return: (states (N+1, n), clamped controls (N, m))
    """
    us = np.array(us, dtype=float)
    if lo is not None:
        us = clamp(us, lo, hi)
    xs = np.empty((us.shape[0] + 1, model.n))
    xs[0] = x0
    for i in range(us.shape[0]):
        xs[i + 1] = _step(model, xs[i], us[i], dt)
    return xs, us


def trajectory_cost(cost, xs: 'np.ndarray', us: 'np.ndarray') -> float:
    """
    Σ_i l(x_i, u_i) + φ(x_N).
    """
    return float(np.sum(cost.running(xs[:-1], us)) + cost.terminal(xs[-1]))


def forward_pass(
        model: DiffusionModel,
        policy: LocalPolicy,
        alpha: float,
        cost,
        dt: float,
        lo: Optional['np.ndarray'] = None,
        hi: Optional['np.ndarray'] = None
) -> Tuple['np.ndarray', 'np.ndarray', float]:
    """
    Rollout with u_i = ū_i + α k_i + K_i (x_i − x̄_i), clamped.

    :param model: Dynamics
    :param policy: Local policy with its nominal trajectory
    :param alpha: Step in [0, 1]
    :param cost: Cost
    :param dt: Time step
    :param lo: Lower control limits
    :param hi: Upper control limits
    :return: (states, controls, cost)
    """
    assert 0.0 <= alpha <= 1.0, 'alpha must lie in [0, 1]'
    steps = policy.us.shape[0]
    xs = np.empty_like(policy.xs)
    us = np.empty_like(policy.us)
    xs[0] = policy.xs[0]
    with np.errstate(over='ignore', invalid='ignore'):
        for i in range(steps):
            u = policy.us[i] + alpha * policy.k[i] + policy.K[i] @ (xs[i] - policy.xs[i])
            if lo is not None:
                u = clamp(u, lo, hi)
            us[i] = u
            xs[i + 1] = _step(model, xs[i], u, dt)
        j = trajectory_cost(cost, xs, us)
    if not np.isfinite(j):
        j = np.inf
    return xs, us, j


def lqr_gains(
        A: 'np.ndarray',
        B: 'np.ndarray',
        Q: 'np.ndarray',
        R: 'np.ndarray',
        Qf: 'np.ndarray',
        N: int
) -> Tuple['np.ndarray', 'np.ndarray']:
    """
    Finite-horizon discrete LQR for ½Σ(xᵀQx + uᵀRu) + ½x_NᵀQ_f x_N.

    :return: (gains K_i with u_i = K_i x_i (N, m, n), cost-to-go matrices P_i (N+1, n, n))
    """
    n, m = B.shape
    P = np.empty((N + 1, n, n))
    K = np.empty((N, m, n))
    P[N] = Qf
    for i in range(N - 1, -1, -1):
        p = P[i + 1]
        K[i] = -np.linalg.solve(R + B.T @ p @ B, B.T @ p @ A)
        pi = Q + A.T @ p @ (A + B @ K[i])
        P[i] = 0.5 * (pi + pi.T)
    return K, P


class DdpController(object):
    """
    Receding-horizon iLQG with the same warm start as MPPI: after each period
    the plan is shifted by one step and ``u_init`` is appended.
    """
    cfg: DdpConfig
    plant: Plant
    cost: object
    u_init: 'np.ndarray'
    u_lo: 'np.ndarray'
    u_hi: 'np.ndarray'
    last_policy: Optional[LocalPolicy]
    reg_history: List[float]
    _plan: ControlSequence

    def __init__(self, plant: Plant, cfg: DdpConfig, cost=None, plan: Optional[ControlSequence] = None) -> None:
        """
        Constructor.

        :param plant: Dynamics
        :param cfg: Configuration
        :param cost: Cost with ``running``, ``terminal`` and ``derivatives``, the smooth plant cost if None
        :param plan: Initial plan, ``u_init`` repeated if None
        """
        self.cfg = cfg
        self.plant = plant
        self.cost = smooth_cost_adapter(plant) if cost is None else cost
        self.u_init = plant.u_init.copy()
        self.u_lo = plant.u_lo.copy()
        self.u_hi = plant.u_hi.copy()
        self.last_policy = None
        self.reg_history = []
        self._initial_plan = plan
        self.reset()

    @property
    def dt(self) -> float:
        return self.cfg.dt

    @property
    def plan(self) -> ControlSequence:
        return self._plan

    def reset(self) -> None:
        if self._initial_plan is not None:
            assert self._initial_plan.N == self.cfg.N, 'plan size mismatch'
            self._plan = self._initial_plan.clamped(self.u_lo, self.u_hi)
        else:
            self._plan = ControlSequence(np.tile(self.u_init, (self.cfg.N, 1)), self.cfg.dt)

    def _increase(self, reg: float) -> float:
        return max(reg * self.cfg.reg_growth, self.cfg.reg_min)

    def _decrease(self, reg: float) -> float:
        reg /= self.cfg.reg_growth
        return 0.0 if reg < self.cfg.reg_min else reg

    def optimize(self, x: 'np.ndarray') -> ControlSequence:
        """
        Runs up to ``max_iterations`` iLQG iterations from the current plan.

        :param x: Measured state
        :return: Optimized (unshifted) plan
        """
        cfg = self.cfg
        x = self.plant.check_state(x).reshape(self.plant.n)
        xs, us = simulate(self.plant, x, self._plan.controls, cfg.dt, self.u_lo, self.u_hi)
        j = trajectory_cost(self.cost, xs, us)
        reg = cfg.reg_init
        self.reg_history = [reg]
        for it in range(cfg.max_iterations):
            A, B = linearize_trajectory(self.plant, xs[:-1], us, cfg.dt, cfg.fd_step)
            derivs = quadratize(self.cost, xs, us)
            while True:
                try:
                    policy = backward_pass(A, B, derivs, reg, xs, us)
                    break
                except BackwardPassError:
                    reg = self._increase(reg)
                    self.reg_history.append(reg)
                    if reg > cfg.reg_max:
                        raise BackwardPassError(f'control Hessian not positive definite at regularization {reg:g}')
            self.last_policy = policy
            if policy.expected_decrease < cfg.tolerance:
                break
            accepted = False
            for alpha in cfg.line_search:
                xs_new, us_new, j_new = forward_pass(self.plant, policy, alpha, self.cost, cfg.dt,
                                                     self.u_lo, self.u_hi)
                if j_new < j:
                    accepted = True
                    break
            if accepted:
                improvement = j - j_new
                xs, us, j = xs_new, us_new, j_new
                reg = self._decrease(reg)
                self.reg_history.append(reg)
                if improvement < cfg.tolerance:
                    break
            else:
                reg = self._increase(reg)
                self.reg_history.append(reg)
                logger.debug(f'iteration {it}: line search failed, regularization raised to {reg:g}')
                if reg > cfg.reg_max:
                    break
        self._plan = self._plan.with_controls(us)
        return self._plan

    def mpc_step(self, x: 'np.ndarray') -> Tuple['np.ndarray', ControlSequence]:
        """
        Optimizes, returns u_0 for execution and keeps the shifted plan.

        :param x: Measured state
        :return: (executed control, shifted plan)
        """
        plan = self.optimize(x)
        u0 = plan.controls[0].copy()
        self._plan = plan.shifted(self.u_init)
        return u0, self._plan

    def close(self) -> None:
        pass
