"""
MPPI BENCHMARKS - CORE - FEYNMAN KAC

Monte-Carlo estimate of Ψ = E_p[exp(−S/λ)] under the uncontrolled dynamics,
and the exact discrete value function of the scalar linear-quadratic problem
used to check it.
"""

__all__ = [
    'feynman_kac_estimate',
    'FeynmanKacResult',
    'riccati_value_scalar'
]

from dataclasses import dataclass
from typing import Callable, Tuple

import functools
import math
import numpy as np

from MPPI_benchmarks.core._diffusion import DiffusionModel, euler_step
from MPPI_benchmarks.core._noise import NoiseStream
from MPPI_benchmarks.utils import get_logger, RolloutPool

BatchCost = Callable[['np.ndarray'], 'np.ndarray']

_CHUNK: int = 8192

logger = get_logger('fk')


@dataclass(frozen=True)
class FeynmanKacResult(object):
    """
    Estimate of Ψ with its standard error, plus the implied value −λ log Ψ.
    """
    psi: float
    std_error: float
    value: float
    value_std_error: float
    samples: int
    diverged: int


def _fk_chunk(
        rng: Tuple[int, int],
        model: DiffusionModel,
        state_cost: BatchCost,
        terminal_cost: BatchCost,
        x0: 'np.ndarray',
        steps: int,
        dt: float,
        stream: NoiseStream,
        penalty_cost: float
) -> Tuple['np.ndarray', int]:
    start, end = rng
    count = end - start
    eps = stream.block(np.arange(start, end), steps)
    x = np.broadcast_to(x0, (count, model.n)).copy()
    zero_u = np.zeros((count, model.m))
    s = np.zeros(count)
    dead = np.zeros(count, dtype=bool)
    for i in range(steps):
        s += np.where(dead, penalty_cost, np.asarray(state_cost(x), dtype=float) * dt)
        x_next = euler_step(model, x, zero_u, eps[:, i], dt, i * dt)
        bad = ~np.all(np.isfinite(x_next), axis=1)
        dead |= bad
        x = np.where(dead[:, None], x, x_next)
    s += np.where(dead, penalty_cost, np.asarray(terminal_cost(x), dtype=float))
    return s, int(np.count_nonzero(dead))


def feynman_kac_estimate(
        model: DiffusionModel,
        state_cost: BatchCost,
        terminal_cost: BatchCost,
        lam: float,
        x0: 'np.ndarray',
        horizon: int,
        dt: float,
        K: int,
        master_seed: int = 0,
        penalty_cost: float = 1e6,
        workers: int = 1
) -> FeynmanKacResult:
    """
    Estimates Ψ(x0) = E_p[exp(−S(τ)/λ)], S = φ(x_N) + Σ_i q(x_i) dt, with K
    uncontrolled rollouts (u = 0, A = I). Costs are evaluated on batches of states.

    :param model: Diffusion model
    :param state_cost: Running cost q, vectorized
    :param terminal_cost: Terminal cost φ, vectorized
    :param lam: Temperature λ
    :param x0: Initial state
    :param horizon: Number of steps N
    :param dt: Time step
    :param K: Number of rollouts
    :param master_seed: Noise seed
    :param penalty_cost: Cost charged per remaining step of a diverged rollout
    :param workers: Threads
    :return: Estimate
    """
    assert K >= 1, 'at least one rollout is required'
    assert lam > 0 and dt > 0 and horizon >= 0
    x0 = model.check_state(x0).reshape(model.n)
    stream = NoiseStream(master_seed, model.p)
    fn = functools.partial(_fk_chunk, model=model, state_cost=state_cost, terminal_cost=terminal_cost, x0=x0,
                           steps=horizon, dt=dt, stream=stream, penalty_cost=penalty_cost)
    with RolloutPool(workers) as pool:
        results = pool.map(fn, K, chunk_size=_CHUNK)
    s = np.concatenate([r[0] for r in results])
    diverged = sum(r[1] for r in results)
    if diverged:
        logger.warning(f'{diverged}/{K} uncontrolled rollouts diverged and were charged the penalty cost')

    # Shift by the best rollout, exp(-s_min/λ) is factored back in log space
    s_min = float(np.min(s))
    w = np.exp(-(s - s_min) / lam)
    mean_w = float(np.mean(w))
    se_w = float(np.std(w, ddof=1) / math.sqrt(K)) if K > 1 else 0.0
    log_psi = math.log(mean_w) - s_min / lam
    psi = math.exp(log_psi)
    return FeynmanKacResult(
        psi=psi,
        std_error=se_w * math.exp(-s_min / lam),
        value=-lam * log_psi,
        value_std_error=lam * se_w / mean_w,
        samples=K,
        diverged=diverged
    )


def riccati_value_scalar(
        q: float,
        q_f: float,
        r: float,
        sigma: float,
        dt: float,
        horizon: int,
        x0: float
) -> float:
    """
    Exact value of the scalar problem x_{i+1} = x_i + u_i dt + σ √dt ε_i with
    running cost ½ q x² dt + ½ r u² dt and terminal cost ½ q_f x², in the
    path-integral sense with λ = σ² r:

        P_N = q_f,  P_i = q dt + P_{i+1} / (1 + P_{i+1} dt / r)
        c_N = 0,    c_i = c_{i+1} + (λ/2) log(1 + P_{i+1} dt / r)

    :return: V(x0) = ½ P_0 x0² + c_0
    """
    assert r > 0 and sigma > 0 and dt > 0 and horizon >= 0
    lam = sigma * sigma * r
    p = float(q_f)
    c = 0.0
    for _ in range(horizon):
        g = 1.0 + p * dt / r
        c += 0.5 * lam * math.log(g)
        p = q * dt + p / g
    return 0.5 * p * x0 * x0 + c
