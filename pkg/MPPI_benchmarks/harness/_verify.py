"""
MPPI BENCHMARKS - HARNESS - VERIFY

Oracle suites: likelihood ratio against Gaussian densities, the Feynman-Kac
estimate against the exact scalar value function, and iLQG against LQR.
"""

__all__ = [
    'SUITES',
    'verify_fk',
    'verify_lq',
    'verify_ratio',
    'verify_suite',
    'VerifyCase',
    'VerifyReport'
]

from dataclasses import dataclass, field
from typing import List, Optional

import math
import numpy as np
import scipy.stats

from MPPI_benchmarks.control import DdpConfig, DdpController, lqr_gains, QuadraticCost
from MPPI_benchmarks.core import feynman_kac_estimate, LinearDiffusionModel, log_likelihood_ratio, \
    riccati_value_scalar
from MPPI_benchmarks.envs import LinearPlant
from MPPI_benchmarks.utils import get_logger

logger = get_logger('verify')

RATIO_TOL: float = 1e-8
LQ_TOL: float = 1e-8
FK_SIGMAS: float = 3.0


@dataclass(frozen=True)
class VerifyCase(object):
    """
    One oracle comparison. ``seed`` and ``instance`` rebuild the case.
    """
    suite: str
    seed: int
    instance: int
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance

    def __str__(self) -> str:
        status = 'ok' if self.passed else 'FAIL'
        return f'{self.suite} seed={self.seed} instance={self.instance}: error {self.error:.3e} ' \
               f'(tolerance {self.tolerance:.3e}) {status}'


@dataclass
class VerifyReport(object):
    suite: str
    cases: List[VerifyCase] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return len(self.cases) > 0 and all(c.passed for c in self.cases)

    @property
    def max_error(self) -> float:
        return max((c.error for c in self.cases), default=float('nan'))

    @property
    def first_failure(self) -> Optional[VerifyCase]:
        for c in self.cases:
            if not c.passed:
                return c
        return None

    def lines(self) -> List[str]:
        out = [f'suite {self.suite}: {len(self.cases)} cases, max error {self.max_error:.3e}, '
               f'{"PASS" if self.passed else "FAIL"}']
        fail = self.first_failure
        if fail is not None:
            out.append(f'first failure: {fail}')
        return out


def _ratio_instance(seed: int, instance: int):
    rng = np.random.default_rng([seed, instance])
    n_c = int(rng.integers(1, 4))
    n_a = int(rng.integers(0, 2))
    n = n_a + n_c
    steps = int(rng.integers(1, 6))
    dt = float(rng.uniform(0.05, 1.0))
    F = 0.5 * rng.standard_normal((n, n))
    G = np.zeros((n, n_c))
    G[n_a:] = np.eye(n_c) + 0.3 * rng.standard_normal((n_c, n_c))
    M = rng.standard_normal((n_c, n_c))
    sigma_rate = M @ M.T + 0.5 * np.eye(n_c)
    B = np.zeros((n, n_c))
    B[n_a:] = np.linalg.cholesky(sigma_rate)
    model = LinearDiffusionModel(F, G, B, n_a=n_a)
    u = rng.standard_normal((steps, n_c))
    A = np.eye(n_c) + 0.3 * rng.standard_normal((steps, n_c, n_c))

    # Trajectory drawn from the sampling law
    tau = np.empty((steps + 1, n))
    tau[0] = rng.standard_normal(n)
    bc = B[n_a:]
    for i in range(steps):
        tau[i + 1] = tau[i] + model.state_derivative(tau[i], u[i]) * dt
        tau[i + 1, n_a:] += A[i].T @ bc @ rng.standard_normal(n_c) * math.sqrt(dt)
    return model, u, A, tau, dt


def _ratio_oracle(model: LinearDiffusionModel, u, A, tau, dt) -> float:
    n_a = model.n_a
    total = 0.0
    for i in range(u.shape[0]):
        bc = model.diffusion_c(tau[i])
        sigma = bc @ bc.T * dt
        drift = tau[i] + model.drift(tau[i]) * dt
        shifted = tau[i] + model.state_derivative(tau[i], u[i]) * dt
        total += scipy.stats.multivariate_normal.logpdf(tau[i + 1, n_a:], mean=drift[n_a:], cov=sigma)
        total -= scipy.stats.multivariate_normal.logpdf(tau[i + 1, n_a:], mean=shifted[n_a:],
                                                        cov=A[i].T @ sigma @ A[i])
    return float(total)


def verify_ratio(instances: int = 1000, seed: int = 0) -> VerifyReport:
    """
    Closed-form log likelihood ratio against the difference of Gaussian
    log densities on random small linear instances, error |exp(ours − oracle) − 1|.

    :param instances: Number of random instances
    :param seed: Suite seed
    :return: Report
    """
    report = VerifyReport('ratio')
    for k in range(instances):
        model, u, A, tau, dt = _ratio_instance(seed, k)
        ours = log_likelihood_ratio(model, u, A, tau, dt)
        oracle = _ratio_oracle(model, u, A, tau, dt)
        case = VerifyCase('ratio', seed, k, abs(math.expm1(ours - oracle)), RATIO_TOL)
        if not case.passed:
            logger.error(str(case))
        report.cases.append(case)
    return report


def verify_fk(K: int = 100000, seed: int = 0, q: float = 1.0, q_f: float = 1.0, sigma: float = 1.0,
              r: float = 1.0, dt: float = 0.05, horizon: int = 20, x0: float = 1.0) -> VerifyReport:
    """
    −λ log Ψ̂ of uncontrolled rollouts of dx = u dt + σ dw against the exact
    value function, passing within three standard errors. The error is
    reported in standard errors.

    :return: Report
    """
    model = LinearDiffusionModel([[0.0]], [[1.0]], [[sigma]])
    lam = sigma * sigma * r
    est = feynman_kac_estimate(model, lambda x: 0.5 * q * x[..., 0] ** 2, lambda x: 0.5 * q_f * x[..., 0] ** 2,
                               lam, [x0], horizon, dt, K, master_seed=seed)
    exact = riccati_value_scalar(q, q_f, r, sigma, dt, horizon, x0)
    err = abs(est.value - exact) / est.value_std_error if est.value_std_error > 0 else math.inf
    case = VerifyCase('fk', seed, 0, err, FK_SIGMAS)
    logger.info(f'fk: estimate {est.value:.6f} ± {est.value_std_error:.2e}, exact {exact:.6f}')
    if not case.passed:
        logger.error(str(case))
    return VerifyReport('fk', [case])


def _lq_instance(seed: int, instance: int):
    rng = np.random.default_rng([seed, instance])
    n = int(rng.integers(2, 5))
    m = int(rng.integers(1, 3))
    F = 0.5 * rng.standard_normal((n, n))
    G = rng.standard_normal((n, m))
    M = rng.standard_normal((n, n))
    Q = M @ M.T + 0.1 * np.eye(n)
    R = np.diag(rng.uniform(0.5, 2.0, m))
    plant = LinearPlant(F, G, Q, R, Qf=2.0 * Q, x0=rng.standard_normal(n))
    return plant, float(rng.uniform(0.02, 0.1)), int(rng.integers(5, 30))


def verify_lq(instances: int = 20, seed: int = 0) -> VerifyReport:
    """
    One iLQG iteration from a zero plan against the discrete LQR solution:
    maximum deviation of the controls and the feedback gains.

    :param instances: Number of random instances
    :param seed: Suite seed
    :return: Report
    """
    report = VerifyReport('lq')
    for k in range(instances):
        plant, dt, steps = _lq_instance(seed, k)
        Ad, Bd = plant.discrete_matrices(dt)
        gains, _ = lqr_gains(Ad, Bd, plant.Q, plant.R, plant.Qf, steps)
        x = plant.x0.copy()
        u_lqr = np.empty((steps, plant.m))
        for i in range(steps):
            u_lqr[i] = gains[i] @ x
            x = Ad @ x + Bd @ u_lqr[i]
        ctrl = DdpController(plant, DdpConfig(N=steps, dt=dt, max_iterations=1),
                             cost=QuadraticCost(plant.Q, plant.R, plant.Qf))
        plan = ctrl.optimize(plant.x0)
        err = max(float(np.max(np.abs(plan.controls - u_lqr))),
                  float(np.max(np.abs(ctrl.last_policy.K - gains))))
        case = VerifyCase('lq', seed, k, err, LQ_TOL)
        if not case.passed:
            logger.error(str(case))
        report.cases.append(case)
    return report


SUITES = {
    'ratio': verify_ratio,
    'fk': verify_fk,
    'lq': verify_lq
}


def verify_suite(which: str, seed: int = 0) -> VerifyReport:
    """
    Runs a suite by name.

    :param which: ratio, fk or lq
    :param seed: Suite seed
    :return: Report
    """
    if which not in SUITES:
        raise KeyError(f'unknown suite "{which}", valid suites: {", ".join(SUITES)}')
    with logger.print_duration(f'{which} suite'):
        return SUITES[which](seed=seed)
