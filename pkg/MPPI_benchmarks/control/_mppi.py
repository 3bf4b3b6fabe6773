"""
MPPI BENCHMARKS - CONTROL - MPPI

Model predictive path integral controller. Each pass samples K perturbed
control sequences, rolls them out, weights every timestep by the softmax of
its own cost-to-go and averages the perturbations into the plan.
"""

__all__ = [
    'importance_weights',
    'MppiConfig',
    'MppiController',
    'NoiseAssumptionError',
    'rollout',
    'rollout_batch',
    'RolloutBatch',
    'sample_perturbations',
    'update_controls'
]

from dataclasses import dataclass
from typing import Any, Optional, Tuple

import functools
import math
import numpy as np

from MPPI_benchmarks.core import ControlSequence, DiffusionModel, NoiseStream, special_case_running_cost
from MPPI_benchmarks.envs import Plant
from MPPI_benchmarks.utils import as_square_matrix, clamp, get_logger, RolloutPool

# Relative tolerance of the λ = r/ρ check
LAMBDA_RTOL: float = 1e-9

logger = get_logger('mppi')


class NoiseAssumptionError(ValueError):
    """
    λ is inconsistent with the noise scale and control cost.
    """


@dataclass(frozen=True)
class MppiConfig(object):
    """
    Controller settings. ``lam`` None means λ = r/ρ; ``R``, ``u_init`` and the
    box limits default to the plant's.
    """
    K: int = 1000
    N: int = 50
    dt: float = 0.02
    lam: Optional[float] = None
    nu: float = 1.0
    R: Optional[Any] = None
    u_init: Optional[Any] = None
    u_lo: Optional[Any] = None
    u_hi: Optional[Any] = None
    penalty_cost: float = 1e6
    master_seed: int = 0
    iterations: int = 1
    workers: int = 1
    strict_lambda: bool = True

    def __post_init__(self) -> None:
        assert self.K >= 1, 'K must be at least 1'
        assert self.N >= 1, 'N must be at least 1'
        assert self.dt > 0, 'dt must be positive'
        assert self.lam is None or self.lam > 0, 'lambda must be positive'
        assert self.nu >= 1, 'nu must be at least 1'
        assert self.penalty_cost > 0 and math.isfinite(self.penalty_cost), 'penalty cost must be positive and finite'
        assert self.iterations >= 1, 'iterations must be at least 1'
        assert self.workers >= 1, 'workers must be at least 1'


@dataclass(frozen=True)
class RolloutBatch(object):
    """
    Result of one pass: effective perturbations (K x N x m), costs-to-go
    (K x N), step costs (K x N), crash and divergence flags (K,), and the
    rollout states (K x N+1 x n) when requested.
    """
    perturbations: 'np.ndarray'
    costs_to_go: 'np.ndarray'
    step_costs: 'np.ndarray'
    crashed: 'np.ndarray'
    diverged: 'np.ndarray'
    states: Optional['np.ndarray'] = None

    @property
    def K(self) -> int:
        return self.costs_to_go.shape[0]


def sample_perturbations(cfg: MppiConfig, model: DiffusionModel, pass_index: int = 0) -> 'np.ndarray':
    """
    δu_{k,i} = √ν ε_{k,i} / (√ρ √dt), ε from the pass's noise stream.

    :param cfg: Configuration
    :param model: Model, supplies ρ and the control dimension
    :param pass_index: Optimization pass counter
    :return: Tensor K x N x m
    """
    assert model.p == model.m, 'control-space sampling needs one noise channel per control'
    stream = NoiseStream(cfg.master_seed, model.m).substream(pass_index)
    eps = stream.block(cfg.K, cfg.N)
    return eps * (math.sqrt(cfg.nu) / math.sqrt(model.rho * cfg.dt))


def _rollout_chunk(
        rng: Tuple[int, int],
        model: DiffusionModel,
        cost_model: Plant,
        x0: 'np.ndarray',
        u: 'np.ndarray',
        du: 'np.ndarray',
        dt: float,
        t0: float,
        R: 'np.ndarray',
        nu: float,
        lo: 'np.ndarray',
        hi: 'np.ndarray',
        penalty_cost: float,
        keep_states: bool
):
    start, end = rng
    count = end - start
    steps = u.shape[0]
    du = du[start:end]
    x = np.broadcast_to(x0, (count, x0.size)).copy()
    du_eff = np.empty_like(du)
    step_cost = np.empty((count, steps))
    crashed = np.zeros(count, dtype=bool)
    diverged = np.zeros(count, dtype=bool)
    track_crash = bool(getattr(cost_model, 'has_crash', False))
    states = np.empty((count, steps + 1, x0.size)) if keep_states else None
    if keep_states:
        states[:, 0] = x
    with np.errstate(over='ignore', invalid='ignore'):
        for i in range(steps):
            v = clamp(u[i] + du[:, i], lo, hi)
            du_eff[:, i] = v - u[i]
            x_next = x + model.state_derivative(x, v, t0 + i * dt) * dt
            diverged |= ~np.all(np.isfinite(x_next), axis=1)
            if track_crash:
                frozen = crashed | diverged
                x_next = np.where(frozen[:, None], x, x_next)
                crashed = crashed | (~diverged & cost_model.crash_check(x_next))
            else:
                x_next = np.where(diverged[:, None], x, x_next)
            q = cost_model.running_cost(x_next, crashed) if track_crash else cost_model.running_cost(x_next)
            q_tilde = special_case_running_cost(q, u[i], du_eff[:, i], R, nu)
            # A finite state may still overflow its cost
            diverged |= ~np.isfinite(q_tilde)
            step_cost[:, i] = np.where(diverged, penalty_cost, q_tilde)
            x = x_next
            if keep_states:
                states[:, i + 1] = x
        terminal = cost_model.terminal_cost(x)
        diverged |= ~np.isfinite(terminal)
        terminal = np.where(diverged, penalty_cost, terminal)
    return du_eff, step_cost, terminal, crashed, diverged, states


def rollout_batch(
        model: DiffusionModel,
        cost_model: Plant,
        x0: 'np.ndarray',
        U: ControlSequence,
        du: 'np.ndarray',
        cfg: MppiConfig,
        R: Optional['np.ndarray'] = None,
        lo: Optional['np.ndarray'] = None,
        hi: Optional['np.ndarray'] = None,
        pool: Optional[RolloutPool] = None,
        keep_states: bool = False
) -> RolloutBatch:
    """
    Simulates all K rollouts x_{i+1} = x_i + (f + G clamp(u_i + δu_i)) dt and
    accumulates q̃_i = q(x_{i+1}) + ((1−ν⁻¹)/2)δuᵀRδu + uᵀRδu + ½uᵀRu, with δu
    the perturbation left after clamping. Crashed rollouts freeze. Rollouts
    whose state or cost stops being finite are flagged diverged, freeze and pay
    ``penalty_cost`` for every remaining step.

    :param model: Dynamics
    :param cost_model: Costs (running, terminal, crash)
    :param x0: Initial state
    :param U: Plan
    :param du: Perturbations K x N x m
    :param cfg: Configuration
    :param R: Control cost, from the configuration or the cost model if None
    :param lo: Lower control limits
    :param hi: Upper control limits
    :param pool: Thread pool, inline if None
    :param keep_states: Store rollout states
    :return: Batch
    """
    x0 = model.check_state(x0).reshape(model.n)
    u = U.controls
    du = np.asarray(du, dtype=float)
    assert du.ndim == 3 and du.shape[1:] == u.shape, f'perturbations must be K x {u.shape[0]} x {u.shape[1]}'
    if R is None:
        R = cost_model.R if cfg.R is None else cfg.R
    R = as_square_matrix(R, model.m, 'R')
    lo = np.full(model.m, -np.inf) if lo is None else np.asarray(lo, dtype=float)
    hi = np.full(model.m, np.inf) if hi is None else np.asarray(hi, dtype=float)
    fn = functools.partial(_rollout_chunk, model=model, cost_model=cost_model, x0=x0, u=u, du=du, dt=U.dt,
                           t0=U.start_time, R=R, nu=cfg.nu, lo=lo, hi=hi, penalty_cost=cfg.penalty_cost,
                           keep_states=keep_states)
    if pool is None:
        parts = [fn((0, du.shape[0]))]
    else:
        parts = pool.map(fn, du.shape[0])
    du_eff = np.concatenate([p[0] for p in parts])
    step_cost = np.concatenate([p[1] for p in parts])
    terminal = np.concatenate([p[2] for p in parts])
    crashed = np.concatenate([p[3] for p in parts])
    diverged = np.concatenate([p[4] for p in parts])
    states = np.concatenate([p[5] for p in parts]) if keep_states else None
    costs_to_go = np.cumsum(step_cost[:, ::-1], axis=1)[:, ::-1] + terminal[:, None]
    return RolloutBatch(perturbations=du_eff, costs_to_go=costs_to_go, step_costs=step_cost, crashed=crashed,
                        diverged=diverged, states=states)


def rollout(
        model: DiffusionModel,
        cost_model: Plant,
        x0: 'np.ndarray',
        U: ControlSequence,
        du_k: 'np.ndarray',
        cfg: MppiConfig,
        lo: Optional['np.ndarray'] = None,
        hi: Optional['np.ndarray'] = None
) -> Tuple['np.ndarray', 'np.ndarray']:
    """
    Single rollout.

    :param model: Dynamics
    :param cost_model: Costs
    :param x0: Initial state
    :param U: Plan
    :param du_k: Perturbations N x m
    :param cfg: Configuration
    :param lo: Lower control limits
    :param hi: Upper control limits
    :return: (costs-to-go (N,), states (N+1, n))
    """
    du_k = np.asarray(du_k, dtype=float).reshape(1, U.N, U.m)
    batch = rollout_batch(model, cost_model, x0, U, du_k, cfg, lo=lo, hi=hi, keep_states=True)
    return batch.costs_to_go[0], batch.states[0]


def importance_weights(costs: 'np.ndarray', lam: float) -> 'np.ndarray':
    """
    Softmax of −S̃/λ over rollouts (axis 0), shifted by the minimum.

    :param costs: Costs-to-go (K,) or (K, N)
    :param lam: Temperature
    :return: Weights, each column sums to 1
    """
    assert lam > 0, 'lambda must be positive'
    s = np.asarray(costs, dtype=float)
    assert np.all(np.isfinite(s)), 'costs-to-go must be finite'
    w = np.exp(-(s - np.min(s, axis=0)) / lam)
    return w / np.sum(w, axis=0)


def update_controls(
        U: ControlSequence,
        du: 'np.ndarray',
        costs_to_go: 'np.ndarray',
        lam: float,
        lo: Optional['np.ndarray'] = None,
        hi: Optional['np.ndarray'] = None
) -> ControlSequence:
    """
    u_i ← u_i + Σ_k w_{i,k} δu_{i,k}, each timestep weighted by its own column, then clamped.

    :param U: Plan
    :param du: Perturbations K x N x m
    :param costs_to_go: Costs-to-go K x N
    :param lam: Temperature
    :param lo: Lower control limits
    :param hi: Upper control limits
    :return: Updated plan
    """
    du = np.asarray(du, dtype=float)
    assert du.shape[1:] == U.controls.shape and costs_to_go.shape == du.shape[:2], 'shapes do not agree'
    w = importance_weights(costs_to_go, lam)
    u = U.controls + np.einsum('kn,knm->nm', w, du)
    if lo is not None or hi is not None:
        u = clamp(u, -np.inf if lo is None else lo, np.inf if hi is None else hi)
    return U.with_controls(u)


class MppiController(object):
    """
    Receding-horizon MPPI. Single owner, one :meth:`mpc_step` at a time.
    """
    cfg: MppiConfig
    plant: Plant
    cost_model: Plant
    lam: float
    R: 'np.ndarray'
    u_init: 'np.ndarray'
    u_lo: 'np.ndarray'
    u_hi: 'np.ndarray'
    last_batch: Optional[RolloutBatch]
    _pass: int
    _plan: ControlSequence
    _pool: RolloutPool

    def __init__(self, plant: Plant, cfg: MppiConfig, cost_model: Optional[Plant] = None,
                 plan: Optional[ControlSequence] = None) -> None:
        """
        Constructor.

        :param plant: Dynamics (and costs if ``cost_model`` is None)
        :param cfg: Configuration
        :param cost_model: Costs
        :param plan: Initial plan, ``u_init`` repeated if None
        """
        self.cfg = cfg
        self.plant = plant
        self.cost_model = plant if cost_model is None else cost_model
        m = plant.m
        self.R = as_square_matrix(plant.R if cfg.R is None else cfg.R, m, 'R')
        self.u_init = np.asarray(plant.u_init if cfg.u_init is None else cfg.u_init, dtype=float).reshape(m)
        self.u_lo = np.asarray(plant.u_lo if cfg.u_lo is None else cfg.u_lo, dtype=float).reshape(m)
        self.u_hi = np.asarray(plant.u_hi if cfg.u_hi is None else cfg.u_hi, dtype=float).reshape(m)
        assert np.all(self.u_lo <= self.u_init) and np.all(self.u_init <= self.u_hi), 'u_init outside the control box'
        self.lam = self._resolve_lambda()
        self._pool = RolloutPool(cfg.workers)
        self.last_batch = None
        self._initial_plan = plan
        self.reset()

    def _resolve_lambda(self) -> float:
        cfg = self.cfg
        r = float(self.R[0, 0])
        isotropic = np.array_equal(self.R, r * np.eye(self.plant.m))
        expected = r / self.plant.rho if isotropic and self.plant.special_case else None
        if cfg.strict_lambda:
            if expected is None:
                raise NoiseAssumptionError('strict lambda needs the diffusion G/√ρ and R = r I')
            if cfg.lam is None:
                return expected
            if abs(cfg.lam - expected) > LAMBDA_RTOL * expected:
                raise NoiseAssumptionError(f'lambda {cfg.lam:g} differs from r/rho = {expected:g}')
            return float(cfg.lam)
        logger.warning('strict lambda is off: the path-integral optimality interpretation is heuristic')
        if cfg.lam is None:
            if expected is None:
                raise NoiseAssumptionError('lambda must be given when R is not isotropic')
            return expected
        return float(cfg.lam)

    @property
    def dt(self) -> float:
        return self.cfg.dt

    @property
    def plan(self) -> ControlSequence:
        return self._plan

    @property
    def passes(self) -> int:
        """
        Number of optimization passes run so far.
        """
        return self._pass

    def reset(self) -> None:
        """
        Restores the initial plan and the pass counter.
        """
        self._pass = 0
        if self._initial_plan is not None:
            assert self._initial_plan.N == self.cfg.N and self._initial_plan.m == self.plant.m, 'plan size mismatch'
            self._plan = self._initial_plan.clamped(self.u_lo, self.u_hi)
        else:
            self._plan = ControlSequence(np.tile(self.u_init, (self.cfg.N, 1)), self.cfg.dt)

    def optimize(self, x: 'np.ndarray', keep_states: bool = False) -> ControlSequence:
        """
        Runs ``iterations`` sample → rollout → update passes on the current plan.

        :param x: Measured state
        :param keep_states: Store rollout states in :attr:`last_batch`
        :return: Updated (unshifted) plan
        """
        for _ in range(self.cfg.iterations):
            du = sample_perturbations(self.cfg, self.plant, self._pass)
            self._pass += 1
            batch = rollout_batch(self.plant, self.cost_model, x, self._plan, du, self.cfg, R=self.R,
                                  lo=self.u_lo, hi=self.u_hi, pool=self._pool, keep_states=keep_states)
            n_div = int(np.count_nonzero(batch.diverged))
            if n_div:
                logger.debug(f'pass {self._pass}: {n_div}/{batch.K} rollouts diverged')
            self._plan = update_controls(self._plan, batch.perturbations, batch.costs_to_go, self.lam,
                                         self.u_lo, self.u_hi)
            self.last_batch = batch
        return self._plan

    def mpc_step(self, x: 'np.ndarray') -> Tuple['np.ndarray', ControlSequence]:
        """
        Optimizes, returns u_0 for execution and keeps the plan shifted by one
        step with ``u_init`` appended.

        :param x: Measured state
        :return: (executed control, shifted plan)
        """
        plan = self.optimize(x)
        u0 = plan.controls[0].copy()
        self._plan = plan.shifted(self.u_init)
        return u0, self._plan

    def close(self) -> None:
        self._pool.close()
