"""
MPPI BENCHMARKS - CORE - LIKELIHOOD

Exact densities of discretized diffusion trajectories and the likelihood
ratio between the natural dynamics and a sampling law that shifts the mean by
G u and transforms the noise by A.

Densities are Gaussian in the c-block step x_{i+1}^(c) with covariance
Σ_i = B_c B_cᵀ Δt (natural law) or Λ_i = A_iᵀ Σ_i A_i (sampling law). Written in
terms of z_i = Δx^(c)/Δt − f^(c) the quadratic exponent is −(Δt²/2)(z−μ)ᵀΣ̂⁻¹(z−μ).
"""

__all__ = [
    'augmented_cost_to_go',
    'augmented_running_cost_general',
    'check_trajectory',
    'compute_z_mu',
    'gamma_inverse',
    'h_inverse',
    'InconsistentTrajectoryError',
    'likelihood_terms',
    'LikelihoodTerms',
    'log_likelihood_ratio',
    'q_term',
    'SamplingPolicy',
    'SingularCovarianceError',
    'SingularTransformError',
    'special_case_running_cost',
    'state_cost_to_go',
    'trajectory_log_density'
]

from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import math
import numpy as np

from MPPI_benchmarks.core._diffusion import ControlSequence, DiffusionModel, natural_step_covariance

NumberType = Union[float, int]
MatrixLike = Union[NumberType, 'np.ndarray']
StateCost = Callable[['np.ndarray'], float]

# Maximum a-block residual accepted in a trajectory
A_BLOCK_TOL: float = 1e-9

# Condition number above which a matrix is treated as singular
_COND_LIMIT: float = 1e14


class InconsistentTrajectoryError(ValueError):
    """
    A trajectory violates the deterministic a-block transition.
    """


class SingularCovarianceError(ValueError):
    """
    A step covariance is not invertible.
    """


class SingularTransformError(ValueError):
    """
    A variance transform A is not invertible.
    """


def _as_matrix(value: MatrixLike) -> 'np.ndarray':
    return np.atleast_2d(np.asarray(value, dtype=float))


def _inverse(mat: 'np.ndarray', error: type, what: str) -> 'np.ndarray':
    if not np.all(np.isfinite(mat)) or not np.linalg.cond(mat) <= _COND_LIMIT:
        raise error(f'{what} is singular')
    return np.linalg.inv(mat)


def _per_step(value: MatrixLike, steps: int, size: int, name: str) -> 'np.ndarray':
    """
    Broadcasts a scalar, a matrix or a per-step stack of matrices to (steps, size, size).
    """
    v = np.asarray(value, dtype=float)
    if v.ndim == 0:
        v = v * np.eye(size)
    if v.ndim == 2:
        v = np.broadcast_to(v, (steps, size, size))
    assert v.shape == (steps, size, size), f'{name} must be scalar, {size}x{size} or per step, got {v.shape}'
    return v


@dataclass(frozen=True)
class SamplingPolicy(object):
    """
    Sampling law: mean shift ``controls`` and per-step variance transform ``A``.
    """
    controls: ControlSequence
    A: 'np.ndarray'
    nu: Optional[float] = None

    def __post_init__(self) -> None:
        a = np.asarray(self.A, dtype=float)
        assert a.ndim == 3 and a.shape[0] == self.controls.N and a.shape[1] == a.shape[2], \
            'A must hold one square matrix per step'
        for ai in a:
            if not np.all(np.isfinite(ai)) or not np.linalg.cond(ai) <= _COND_LIMIT:
                raise SingularTransformError('every variance transform must be invertible')
        object.__setattr__(self, 'A', a)

    @classmethod
    def isotropic(cls, controls: ControlSequence, nu: float, n_c: int) -> 'SamplingPolicy':
        """
        Shipped configuration A = √ν I.

        :param controls: Mean shift
        :param nu: Exploration variance multiplier
        :param n_c: Size of the directly actuated block
        :return: Policy
        """
        assert nu >= 1, 'the exploration variance multiplier must be at least 1'
        a = np.broadcast_to(math.sqrt(nu) * np.eye(n_c), (controls.N, n_c, n_c))
        return cls(controls, a, float(nu))


@dataclass(frozen=True)
class LikelihoodTerms(object):
    """
    Per-step quantities of the likelihood ratio, each with leading axis N.
    """
    z: 'np.ndarray'
    mu: 'np.ndarray'
    Sigma: 'np.ndarray'
    Lambda: 'np.ndarray'
    GammaInv: 'np.ndarray'
    Q: 'np.ndarray'
    log_det_A: 'np.ndarray'

    @property
    def N(self) -> int:
        return self.Q.shape[0]


def compute_z_mu(
        model: DiffusionModel,
        x_i: 'np.ndarray',
        x_next: 'np.ndarray',
        u_i: 'np.ndarray',
        dt: float,
        t: float = 0.0
) -> Tuple['np.ndarray', 'np.ndarray']:
    """
    z = (x_next^(c) − x^(c))/dt − f^(c)(x) and μ = G_c(x) u.

    :param model: Diffusion model
    :param x_i: State
    :param x_next: One-step successor
    :param u_i: Control
    :param dt: Time step
    :param t: Time
    :return: (z, mu)
    """
    assert dt > 0, 'dt must be positive'
    x_i = model.check_state(x_i)
    x_next = model.check_state(x_next)
    u_i = model.check_control(u_i)
    n_a = model.n_a
    z = (x_next[..., n_a:] - x_i[..., n_a:]) / dt - model.drift(x_i, t)[..., n_a:]
    mu = np.einsum('...cm,...m->...c', model.control_gain_c(x_i, t), u_i)
    return z, mu


def gamma_inverse(Sigma: MatrixLike, A: MatrixLike) -> 'np.ndarray':
    """
    Γ⁻¹ = Σ⁻¹ − (AᵀΣA)⁻¹. Γ is never formed, it does not exist for A = I.

    :param Sigma: Positive definite covariance
    :param A: Invertible transform
    :return: Symmetric matrix
    """
    sigma = _as_matrix(Sigma)
    a = _as_matrix(A)
    assert sigma.shape == a.shape and sigma.shape[0] == sigma.shape[1], 'Sigma and A must be square and agree'
    if not np.all(np.isfinite(a)) or not np.linalg.cond(a) <= _COND_LIMIT:
        raise SingularTransformError('A is singular')
    sigma_inv = _inverse(sigma, SingularCovarianceError, 'Sigma')
    lambda_inv = _inverse(a.T @ sigma @ a, SingularCovarianceError, 'AᵀΣA')
    g = sigma_inv - lambda_inv
    return 0.5 * (g + g.T)


def _quadratic_q(
        z: 'np.ndarray',
        mu: 'np.ndarray',
        sigma_inv: 'np.ndarray',
        gamma_inv: 'np.ndarray'
) -> 'np.ndarray':
    """
    (z−μ)ᵀΓ⁻¹(z−μ) + 2μᵀΣ⁻¹(z−μ) + μᵀΣ⁻¹μ over leading axes.
    """
    e = z - mu
    return np.einsum('...i,...ij,...j->...', e, gamma_inv, e) \
        + 2.0 * np.einsum('...i,...ij,...j->...', mu, sigma_inv, e) \
        + np.einsum('...i,...ij,...j->...', mu, sigma_inv, mu)


def q_term(z: 'np.ndarray', mu: 'np.ndarray', Sigma: MatrixLike, GammaInv: MatrixLike) -> float:
    """
    Q = (z−μ)ᵀΓ⁻¹(z−μ) + 2μᵀΣ⁻¹(z−μ) + μᵀΣ⁻¹μ.

    :param z: Observed drift-corrected rate
    :param mu: Mean shift G_c u
    :param Sigma: Step covariance
    :param GammaInv: Γ⁻¹
    :return: Q
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = _as_matrix(Sigma)
    gamma_inv = _as_matrix(GammaInv)
    assert z.shape == mu.shape and sigma.shape == gamma_inv.shape == (z.size, z.size), 'shapes do not agree'
    sigma_inv = _inverse(sigma, SingularCovarianceError, 'Sigma')
    return float(_quadratic_q(z, mu, sigma_inv, gamma_inv))


def _controls_array(model: DiffusionModel, u: Union[ControlSequence, 'np.ndarray'], steps: int) -> 'np.ndarray':
    if isinstance(u, ControlSequence):
        u = u.controls
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = np.full((steps, model.m), float(u))
    if u.ndim == 1:
        u = u.reshape(steps, model.m)
    assert u.shape == (steps, model.m), f'controls must have shape ({steps}, {model.m})'
    return u


def check_trajectory(
        model: DiffusionModel,
        u: Union[ControlSequence, 'np.ndarray'],
        tau: 'np.ndarray',
        dt: float,
        t0: float = 0.0
) -> None:
    """
    Checks that every step of a trajectory follows the deterministic a-block
    transition within :data:`A_BLOCK_TOL`.

    :param model: Diffusion model
    :param u: Controls applied along the trajectory
    :param tau: States, shape (N+1, n)
    :param dt: Time step
    :param t0: Start time
    """
    tau = model.check_state(tau)
    assert tau.ndim == 2 and tau.shape[0] >= 2, 'a trajectory needs at least two states'
    steps = tau.shape[0] - 1
    u = _controls_array(model, u, steps)
    n_a = model.n_a
    if n_a == 0:
        return
    for i in range(steps):
        pred = tau[i, :n_a] + model.state_derivative(tau[i], u[i], t0 + i * dt)[:n_a] * dt
        res = float(np.max(np.abs(tau[i + 1, :n_a] - pred)))
        if not res <= A_BLOCK_TOL:
            raise InconsistentTrajectoryError(
                f'inconsistent trajectory: a-block residual {res:.3e} at step {i} exceeds {A_BLOCK_TOL:g}')


def likelihood_terms(
        model: DiffusionModel,
        u: Union[ControlSequence, 'np.ndarray'],
        A: MatrixLike,
        tau: 'np.ndarray',
        dt: float,
        t0: float = 0.0
) -> LikelihoodTerms:
    """
    Computes z_i, μ_i, Σ_i, Λ_i, Γ_i⁻¹ and Q_i along a trajectory.

    :param model: Diffusion model
    :param u: Mean shift controls (N x m)
    :param A: Variance transform, scalar, matrix or one matrix per step
    :param tau: States, shape (N+1, n)
    :param dt: Time step
    :param t0: Start time
    :return: Likelihood terms
    """
    check_trajectory(model, u, tau, dt, t0)
    tau = model.check_state(tau)
    steps = tau.shape[0] - 1
    u = _controls_array(model, u, steps)
    a = _per_step(A, steps, model.n_c, 'A')
    n_c = model.n_c
    z = np.empty((steps, n_c))
    mu = np.empty((steps, n_c))
    sigma = np.empty((steps, n_c, n_c))
    lam = np.empty((steps, n_c, n_c))
    gamma_inv = np.empty((steps, n_c, n_c))
    q = np.empty(steps)
    log_det = np.empty(steps)
    for i in range(steps):
        t = t0 + i * dt
        z[i], mu[i] = compute_z_mu(model, tau[i], tau[i + 1], u[i], dt, t)
        sigma[i] = natural_step_covariance(model, tau[i], t, dt)
        lam[i] = a[i].T @ sigma[i] @ a[i]
        gamma_inv[i] = gamma_inverse(sigma[i], a[i])
        q[i] = q_term(z[i], mu[i], sigma[i], gamma_inv[i])
        sign, log_det[i] = np.linalg.slogdet(a[i])
        if sign == 0:
            raise SingularTransformError(f'A is singular at step {i}')
    return LikelihoodTerms(z=z, mu=mu, Sigma=sigma, Lambda=lam, GammaInv=gamma_inv, Q=q, log_det_A=log_det)


def trajectory_log_density(
        model: DiffusionModel,
        u: Union[ControlSequence, 'np.ndarray'],
        A: MatrixLike,
        tau: 'np.ndarray',
        dt: float,
        t0: float = 0.0
) -> float:
    """
    Log density of a trajectory under the law with mean shift ``u`` and
    transform ``A``; ``u = 0`` and ``A = I`` give the natural law.

    log p = −log Z − (dt²/2) Σ_i (z_i−μ_i)ᵀ Σ̂_i⁻¹ (z_i−μ_i), Z = Π (2π)^{n_c/2} |Σ̂_i|^{1/2}.

    :param model: Diffusion model
    :param u: Mean shift controls (N x m)
    :param A: Variance transform
    :param tau: States, shape (N+1, n)
    :param dt: Time step
    :param t0: Start time
    :return: Log density
    """
    check_trajectory(model, u, tau, dt, t0)
    tau = model.check_state(tau)
    steps = tau.shape[0] - 1
    u = _controls_array(model, u, steps)
    a = _per_step(A, steps, model.n_c, 'A')
    n_c = model.n_c
    total = 0.0
    for i in range(steps):
        t = t0 + i * dt
        z, mu = compute_z_mu(model, tau[i], tau[i + 1], u[i], dt, t)
        sigma = natural_step_covariance(model, tau[i], t, dt)
        cov = a[i].T @ sigma @ a[i]
        sign, log_det = np.linalg.slogdet(cov)
        if sign <= 0:
            raise SingularCovarianceError(f'step covariance is not positive definite at step {i}')
        e = z - mu
        quad = float(e @ _inverse(cov, SingularCovarianceError, 'step covariance') @ e)
        total += -0.5 * (n_c * math.log(2.0 * math.pi) + log_det) - 0.5 * dt * dt * quad
    return total


def log_likelihood_ratio(
        model: DiffusionModel,
        u: Union[ControlSequence, 'np.ndarray'],
        A: MatrixLike,
        tau: 'np.ndarray',
        dt: float,
        t0: float = 0.0
) -> float:
    """
    Log of p(τ)/q(τ) = Π|A_i| exp(−(dt²/2) Σ Q_i) between the natural law p and
    the sampling law q with mean shift ``u`` and transform ``A``.

    :param model: Diffusion model
    :param u: Mean shift controls (N x m)
    :param A: Variance transform
    :param tau: States, shape (N+1, n)
    :param dt: Time step
    :param t0: Start time
    :return: Log ratio
    """
    terms = likelihood_terms(model, u, A, tau, dt, t0)
    return float(np.sum(terms.log_det_A) - 0.5 * dt * dt * np.sum(terms.Q))


def h_inverse(G_c: 'np.ndarray', R: MatrixLike) -> 'np.ndarray':
    """
    H⁻¹ = G_c⁻ᵀ R G_c⁻¹ for H = G_c R⁻¹ G_cᵀ with square invertible G_c.

    :param G_c: Control gain of the directly actuated block
    :param R: Control cost matrix
    :return: H⁻¹
    """
    g = _as_matrix(G_c)
    r = _as_matrix(R)
    assert g.shape[0] == g.shape[1] == r.shape[0], 'H⁻¹ needs a square control gain'
    g_inv = _inverse(g, SingularTransformError, 'G_c')
    h = g_inv.T @ r @ g_inv
    return 0.5 * (h + h.T)


def augmented_running_cost_general(
        q_val: float,
        z: 'np.ndarray',
        mu: 'np.ndarray',
        GammaInvTilde: MatrixLike,
        HInv: MatrixLike,
        lam: float
) -> float:
    """
    q̃ = q + ½(z−μ)ᵀΓ̃⁻¹(z−μ) + μᵀH⁻¹(z−μ) + ½μᵀH⁻¹μ, with Γ̃ = Γ/λ and
    H = Σ/λ for the rate covariance Σ, evaluated as q + (λ/2) Q(Σ⁻¹ = H⁻¹/λ, Γ⁻¹ = Γ̃⁻¹/λ).

    :param q_val: State cost q(x)
    :param z: Drift-corrected rate
    :param mu: Mean shift
    :param GammaInvTilde: Γ̃⁻¹
    :param HInv: H⁻¹
    :param lam: Temperature λ
    :return: q̃
    """
    assert lam > 0, 'lambda must be positive'
    z = np.atleast_1d(np.asarray(z, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma_inv = _as_matrix(HInv) / lam
    gamma_inv = _as_matrix(GammaInvTilde) / lam
    return float(q_val + 0.5 * lam * _quadratic_q(z, mu, sigma_inv, gamma_inv))


def special_case_running_cost(
        q_val: Union[float, 'np.ndarray'],
        u: 'np.ndarray',
        du: 'np.ndarray',
        R: 'np.ndarray',
        nu: float
) -> Union[float, 'np.ndarray']:
    """
    q̃ = q + ((1 − ν⁻¹)/2) δuᵀRδu + uᵀRδu + ½uᵀRu, over any leading axes.

    :param q_val: State cost
    :param u: Controls (..., m)
    :param du: Perturbations (..., m)
    :param R: Control cost matrix (m x m)
    :param nu: Exploration variance multiplier
    :return: q̃
    """
    assert nu > 0, 'nu must be positive'
    r = _as_matrix(R)
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    rdu = du @ r.T
    return q_val + 0.5 * (1.0 - 1.0 / nu) * np.sum(du * rdu, axis=-1) + np.sum(u * rdu, axis=-1) \
        + 0.5 * np.sum(u * (u @ r.T), axis=-1)


def state_cost_to_go(state_cost: StateCost, terminal_cost: StateCost, tau: 'np.ndarray', dt: float) -> float:
    """
    S = φ(x_N) + Σ_i q(x_i) dt.

    :param state_cost: q
    :param terminal_cost: φ
    :param tau: States, shape (N+1, n)
    :param dt: Time step
    :return: S
    """
    tau = np.asarray(tau, dtype=float)
    return float(terminal_cost(tau[-1]) + sum(float(state_cost(x)) for x in tau[:-1]) * dt)


def augmented_cost_to_go(
        model: DiffusionModel,
        state_cost: StateCost,
        terminal_cost: StateCost,
        u: Union[ControlSequence, 'np.ndarray'],
        A: MatrixLike,
        tau: 'np.ndarray',
        dt: float,
        lam: float,
        t0: float = 0.0
) -> float:
    """
    S̃ = φ(x_N) + Σ_i q̃_i dt for a trajectory drawn from the sampling law, with
    H = B_c B_cᵀ/λ and Γ̃⁻¹ = gamma_inverse(H, A). exp(−S̃/λ) equals exp(−S/λ)
    times the likelihood ratio with the Π|A_i| normalizer removed.

    :param model: Diffusion model
    :param state_cost: q
    :param terminal_cost: φ
    :param u: Mean shift controls (N x m)
    :param A: Variance transform
    :param tau: States, shape (N+1, n)
    :param dt: Time step
    :param lam: Temperature λ
    :param t0: Start time
    :return: S̃
    """
    assert lam > 0, 'lambda must be positive'
    check_trajectory(model, u, tau, dt, t0)
    tau = model.check_state(tau)
    steps = tau.shape[0] - 1
    u = _controls_array(model, u, steps)
    a = _per_step(A, steps, model.n_c, 'A')
    total = 0.0
    for i in range(steps):
        t = t0 + i * dt
        z, mu = compute_z_mu(model, tau[i], tau[i + 1], u[i], dt, t)
        h = natural_step_covariance(model, tau[i], t, dt) / (dt * lam)
        h_inv = _inverse(h, SingularCovarianceError, 'H')
        gamma_inv_tilde = gamma_inverse(h, a[i])
        total += augmented_running_cost_general(float(state_cost(tau[i])), z, mu, gamma_inv_tilde, h_inv, lam) * dt
    return float(terminal_cost(tau[-1]) + total)
