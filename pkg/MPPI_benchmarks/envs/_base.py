"""
MPPI BENCHMARKS - ENVS - BASE

Plant base class: a diffusion model with its cost, box limits, crash and
completion semantics.
"""

__all__ = [
    'LinearPlant',
    'override_params',
    'Plant'
]

from dataclasses import fields, is_dataclass, replace
from typing import Any, Dict, Optional, Sequence

import numpy as np

from MPPI_benchmarks.core import DiffusionModel
from MPPI_benchmarks.utils import as_square_matrix


def _cast(value: str, default: Any) -> Any:
    if isinstance(default, bool):
        v = value.strip().lower()
        assert v in ('true', 'false', '1', '0', 'yes', 'no'), f'"{value}" is not a boolean'
        return v in ('true', '1', 'yes')
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if isinstance(default, tuple):
        parts = [w for w in value.split(',') if w.strip() != '']
        return tuple(float(w) for w in parts)
    return value


def override_params(params: Any, overrides: Dict[str, str]) -> Any:
    """
    Returns a copy of a parameter dataclass with string overrides cast to the
    type of each field default.

    :param params: Dataclass instance
    :param overrides: Field name to raw value
    :return: New instance
    """
    assert is_dataclass(params)
    names = {f.name for f in fields(params)}
    changes = {}
    for k, v in overrides.items():
        if k not in names:
            raise KeyError(f'unknown parameter "{k}" for {type(params).__name__}')
        changes[k] = _cast(v, getattr(params, k)) if isinstance(v, str) else v
    return replace(params, **changes)


class Plant(DiffusionModel):
    """
    Benchmark plant. Costs and checks accept a single state or a batch (..., n).
    """
    R: 'np.ndarray'
    u_init: 'np.ndarray'
    u_lo: 'np.ndarray'
    u_hi: 'np.ndarray'
    x0: 'np.ndarray'
    has_crash: bool = False
    name: str = 'plant'

    def __init__(
            self,
            n_a: int,
            n_c: int,
            m: int,
            rho: float,
            R: Any,
            u_lo: Sequence[float],
            u_hi: Sequence[float],
            x0: Sequence[float],
            u_init: Optional[Sequence[float]] = None,
            **kwargs
    ) -> None:
        super().__init__(n_a=n_a, n_c=n_c, m=m, rho=rho, **kwargs)
        self.R = as_square_matrix(R, m, 'R')
        assert np.all(np.linalg.eigvalsh(0.5 * (self.R + self.R.T)) > 0), 'R must be positive definite'
        self.u_lo = np.asarray(u_lo, dtype=float).reshape(m)
        self.u_hi = np.asarray(u_hi, dtype=float).reshape(m)
        assert np.all(self.u_lo <= self.u_hi), 'control box is empty'
        self.u_init = np.zeros(m) if u_init is None else np.asarray(u_init, dtype=float).reshape(m)
        assert np.all(self.u_lo <= self.u_init) and np.all(self.u_init <= self.u_hi), 'u_init outside the control box'
        self.x0 = np.asarray(x0, dtype=float).reshape(self.n)

    def running_cost(self, x: 'np.ndarray', crashed: Optional['np.ndarray'] = None) -> 'np.ndarray':
        """
        State cost q(x). ``crashed`` holds the crash indicator of plants that use it.
        """
        raise NotImplementedError()

    def terminal_cost(self, x: 'np.ndarray') -> 'np.ndarray':
        """
        Terminal cost φ(x), zero by default.
        """
        return np.zeros(np.asarray(x).shape[:-1])

    def smooth_cost(self, x: 'np.ndarray') -> 'np.ndarray':
        """
        Twice differentiable state cost used by the DDP baseline.
        """
        return self.running_cost(x)

    def crash_check(self, x: 'np.ndarray') -> 'np.ndarray':
        """
        Crash indicator C(x).
        """
        return np.zeros(np.asarray(x).shape[:-1], dtype=bool)

    def is_complete(self, x: 'np.ndarray') -> bool:
        """
        True once the task goal is reached.
        """
        return False

    def report_state(self, x: 'np.ndarray') -> 'np.ndarray':
        """
        State as written to logs.
        """
        return np.asarray(x, dtype=float)

    def speed_metric(self, states: 'np.ndarray', times: 'np.ndarray') -> float:
        """
        Task speed figure of a closed-loop run, NaN if the plant defines none.
        """
        return float('nan')

    def strict_lambda(self) -> Optional[float]:
        """
        λ = r/ρ forced by the noise assumption when R = r I, None otherwise.
        """
        r = float(self.R[0, 0])
        if not np.array_equal(self.R, r * np.eye(self.m)):
            return None
        return r / self.rho


class LinearPlant(Plant):
    """
    Linear plant dx = (F x + G u) dt + G/√ρ dw with quadratic state cost ½xᵀQx.
    """
    F: 'np.ndarray'
    G: 'np.ndarray'
    Q: 'np.ndarray'
    Qf: 'np.ndarray'
    name = 'linear'

    def __init__(
            self,
            F: Any,
            G: Any,
            Q: Any,
            R: Any,
            Qf: Optional[Any] = None,
            n_a: int = 0,
            rho: float = 1.0,
            x0: Optional[Sequence[float]] = None,
            u_limit: float = np.inf
    ) -> None:
        F = np.atleast_2d(np.asarray(F, dtype=float))
        G = np.atleast_2d(np.asarray(G, dtype=float))
        n, m = G.shape
        assert F.shape == (n, n), 'F must be n x n'
        assert not np.any(G[:n_a]), 'control gain rows of the indirectly actuated block must be zero'
        super().__init__(n_a=n_a, n_c=n - n_a, m=m, rho=rho, R=R, u_lo=[-u_limit] * m, u_hi=[u_limit] * m,
                         x0=np.zeros(n) if x0 is None else x0)
        self.F = F
        self.G = G
        self.Q = as_square_matrix(Q, n, 'Q')
        self.Qf = self.Q.copy() if Qf is None else as_square_matrix(Qf, n, 'Qf')

    def drift(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        return np.asarray(x, dtype=float) @ self.F.T

    def control_gain(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.G, x.shape[:-1] + self.G.shape)

    def state_derivative(self, x: 'np.ndarray', u: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        return np.asarray(x, dtype=float) @ self.F.T + np.asarray(u, dtype=float) @ self.G.T

    def running_cost(self, x: 'np.ndarray', crashed: Optional['np.ndarray'] = None) -> 'np.ndarray':
        x = np.asarray(x, dtype=float)
        return 0.5 * np.einsum('...i,ij,...j->...', x, self.Q, x)

    def terminal_cost(self, x: 'np.ndarray') -> 'np.ndarray':
        x = np.asarray(x, dtype=float)
        return 0.5 * np.einsum('...i,ij,...j->...', x, self.Qf, x)

    def discrete_matrices(self, dt: float):
        """
        Euler discretization x_{i+1} = A x_i + B u_i.

        :param dt: Time step
        :return: (A, B)
        """
        return np.eye(self.n) + self.F * dt, self.G * dt
