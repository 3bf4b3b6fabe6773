"""
MPPI BENCHMARKS - CORE - DIFFUSION

Controlled diffusions affine in control with a partitioned state, and their
Euler-Maruyama discretization.
"""

__all__ = [
    'ControlSequence',
    'DiffusionModel',
    'DimensionMismatchError',
    'euler_step',
    'LinearDiffusionModel',
    'natural_step_covariance',
    'StateVector'
]

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import math
import numpy as np

ArrayLike = Union[float, Sequence[float], 'np.ndarray']


class DimensionMismatchError(ValueError):
    """
    An array does not agree with the model dimensions.
    """


class DiffusionModel(object):
    """
    dx = f(x, t) dt + G(x, t) u dt + B(x, t) dw.

    The state is ordered ``[a_block, c_block]``: the first ``n_a`` entries are
    indirectly actuated and evolve deterministically, the last ``n_c`` carry the
    control and the noise. Every method accepts a single state of shape (n,) or
    a batch of shape (..., n).

    Subclasses implement :meth:`drift` and :meth:`control_gain`. The default
    :meth:`diffusion` is the special case B = G/√ρ with one noise channel per
    control. :meth:`state_derivative` may be overridden by a closed form as long
    as it equals f + G u.
    """
    n_a: int
    n_c: int
    m: int
    p: int
    rho: float
    state_names: Tuple[str, ...]
    control_names: Tuple[str, ...]

    def __init__(
            self,
            n_a: int,
            n_c: int,
            m: int,
            p: Optional[int] = None,
            rho: float = 1.0,
            state_names: Optional[Sequence[str]] = None,
            control_names: Optional[Sequence[str]] = None
    ) -> None:
        assert n_a >= 0 and n_c >= 1 and m >= 1, 'invalid partition sizes'
        assert rho > 0, 'rho must be positive'
        self.n_a = int(n_a)
        self.n_c = int(n_c)
        self.m = int(m)
        self.p = int(m if p is None else p)
        self.rho = float(rho)
        n = self.n_a + self.n_c
        self.state_names = tuple(state_names) if state_names is not None else tuple(f'x{i}' for i in range(n))
        self.control_names = tuple(control_names) if control_names is not None else tuple(f'u{i}' for i in range(m))
        assert len(self.state_names) == n, 'one name per state component is required'
        assert len(self.control_names) == self.m, 'one name per control component is required'

    @property
    def n(self) -> int:
        """
        Total state dimension.
        """
        return self.n_a + self.n_c

    @property
    def special_case(self) -> bool:
        """
        True if the diffusion is the default G/√ρ.
        """
        return type(self).diffusion is DiffusionModel.diffusion

    def drift(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        """
        f(x, t), shape (..., n).
        """
        raise NotImplementedError()

    def control_gain(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        """
        G(x, t), shape (..., n, m), the first n_a rows are zero.
        """
        raise NotImplementedError()

    def diffusion(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        """
        B(x, t), shape (..., n, p), the first n_a rows are zero.
        """
        assert self.p == self.m, 'the default diffusion needs one noise channel per control'
        return self.control_gain(x, t) / math.sqrt(self.rho)

    def state_derivative(self, x: 'np.ndarray', u: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        """
        f + G u, shape (..., n).
        """
        return self.drift(x, t) + np.einsum('...nm,...m->...n', self.control_gain(x, t), u)

    def check_state(self, x: 'np.ndarray') -> 'np.ndarray':
        """
        Returns ``x`` as a float array after checking its last dimension.
        """
        if isinstance(x, StateVector):
            x = x.values
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.n:
            raise DimensionMismatchError(f'state must have {self.n} components, got shape {x.shape}')
        return x

    def check_control(self, u: ArrayLike) -> 'np.ndarray':
        """
        Returns ``u`` as a float array after checking its last dimension.
        """
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if u.shape[-1] != self.m:
            raise DimensionMismatchError(f'control must have {self.m} components, got shape {u.shape}')
        return u

    def diffusion_c(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        """
        B_c, the directly actuated rows of the diffusion, shape (..., n_c, p).
        """
        return self.diffusion(x, t)[..., self.n_a:, :]

    def control_gain_c(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        """
        G_c, shape (..., n_c, m).
        """
        return self.control_gain(x, t)[..., self.n_a:, :]


class LinearDiffusionModel(DiffusionModel):
    """
    dx = (F x + c) dt + G u dt + B dw with constant matrices.
    """
    _F: 'np.ndarray'
    _c: 'np.ndarray'
    _G: 'np.ndarray'
    _B: Optional['np.ndarray']

    def __init__(
            self,
            F: ArrayLike,
            G: ArrayLike,
            B: Optional[ArrayLike] = None,
            n_a: int = 0,
            offset: Optional[ArrayLike] = None,
            rho: float = 1.0,
            **kwargs
    ) -> None:
        """
        Constructor.

        :param F: Drift matrix (n x n)
        :param G: Control gain (n x m), the first n_a rows must be zero
        :param B: Diffusion (n x p), if None B = G/√ρ
        :param n_a: Size of the indirectly actuated block
        :param offset: Constant drift term
        :param rho: Noise scale of the default diffusion
        """
        F = np.atleast_2d(np.asarray(F, dtype=float))
        G = np.atleast_2d(np.asarray(G, dtype=float))
        n = F.shape[0]
        assert F.shape == (n, n), 'F must be square'
        if G.shape[0] != n:
            raise DimensionMismatchError(f'G must have {n} rows, got {G.shape[0]}')
        assert not np.any(G[:n_a]), 'control gain rows of the indirectly actuated block must be zero'
        p = None
        if B is not None:
            B = np.atleast_2d(np.asarray(B, dtype=float))
            if B.shape[0] != n:
                raise DimensionMismatchError(f'B must have {n} rows, got {B.shape[0]}')
            assert not np.any(B[:n_a]), 'diffusion rows of the indirectly actuated block must be zero'
            p = B.shape[1]
        super().__init__(n_a=n_a, n_c=n - n_a, m=G.shape[1], p=p, rho=rho, **kwargs)
        self._F = F
        self._G = G
        self._B = B
        self._c = np.zeros(n) if offset is None else np.asarray(offset, dtype=float).reshape(n)

    def drift(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        return np.asarray(x, dtype=float) @ self._F.T + self._c

    def control_gain(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self._G, x.shape[:-1] + self._G.shape)

    def diffusion(self, x: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        if self._B is None:
            return super().diffusion(x, t)
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self._B, x.shape[:-1] + self._B.shape)

    @property
    def special_case(self) -> bool:
        return self._B is None

    def state_derivative(self, x: 'np.ndarray', u: 'np.ndarray', t: float = 0.0) -> 'np.ndarray':
        return self.drift(x, t) + np.asarray(u, dtype=float) @ self._G.T


class StateVector(object):
    """
    Immutable partitioned state.
    """
    _values: 'np.ndarray'
    _n_a: int

    def __init__(self, values: ArrayLike, n_a: int) -> None:
        v = np.array(values, dtype=float).reshape(-1)
        assert 0 <= n_a <= v.size, 'invalid partition'
        v.flags.writeable = False
        self._values = v
        self._n_a = int(n_a)

    @classmethod
    def from_blocks(cls, a_block: ArrayLike, c_block: ArrayLike) -> 'StateVector':
        """
        Builds a state from its two blocks.
        """
        a = np.asarray(a_block, dtype=float).reshape(-1)
        c = np.asarray(c_block, dtype=float).reshape(-1)
        return cls(np.concatenate([a, c]), a.size)

    @property
    def values(self) -> 'np.ndarray':
        return self._values

    @property
    def a_block(self) -> 'np.ndarray':
        return self._values[:self._n_a]

    @property
    def c_block(self) -> 'np.ndarray':
        return self._values[self._n_a:]

    @property
    def n(self) -> int:
        return self._values.size

    @property
    def n_a(self) -> int:
        return self._n_a

    @property
    def diverged(self) -> bool:
        """
        True if any component is NaN or infinite.
        """
        return not bool(np.all(np.isfinite(self._values)))

    def __eq__(self, other) -> bool:
        return isinstance(other, StateVector) and self._n_a == other._n_a and \
            np.array_equal(self._values, other._values)

    def __repr__(self) -> str:
        return f'StateVector(a={self.a_block.tolist()}, c={self.c_block.tolist()})'


@dataclass(frozen=True)
class ControlSequence(object):
    """
    Open-loop plan (u_0, ..., u_{N-1}) with time step ``dt``.
    """
    controls: 'np.ndarray'
    dt: float
    start_time: float = 0.0

    def __post_init__(self) -> None:
        u = np.array(self.controls, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        assert u.ndim == 2 and u.shape[0] >= 1, 'a control sequence needs at least one step'
        assert np.all(np.isfinite(u)), 'controls must be finite'
        assert self.dt > 0, 'dt must be positive'
        u.flags.writeable = False
        object.__setattr__(self, 'controls', u)

    @property
    def N(self) -> int:
        return self.controls.shape[0]

    @property
    def m(self) -> int:
        return self.controls.shape[1]

    def with_controls(self, controls: 'np.ndarray') -> 'ControlSequence':
        """
        Same timing, new values.
        """
        return ControlSequence(controls, self.dt, self.start_time)

    def clamped(self, lo: 'np.ndarray', hi: 'np.ndarray') -> 'ControlSequence':
        """
        Returns the sequence clamped to box limits.
        """
        return self.with_controls(np.minimum(np.maximum(self.controls, lo), hi))

    def shifted(self, u_init: ArrayLike) -> 'ControlSequence':
        """
        Drops u_0, appends ``u_init`` and advances the start time by dt.
        """
        u_init = np.asarray(u_init, dtype=float).reshape(1, self.m)
        return ControlSequence(np.concatenate([self.controls[1:], u_init]), self.dt, self.start_time + self.dt)


def euler_step(
        model: DiffusionModel,
        x: Union['StateVector', 'np.ndarray'],
        u: ArrayLike,
        eps: ArrayLike,
        dt: float,
        t: float = 0.0
) -> Union['StateVector', 'np.ndarray']:
    """
    One Euler-Maruyama step x + (f + G u) dt + B ε √dt. Works on batches.
    Only the c-block receives noise, so the a-block advances deterministically.

    :param model: Diffusion model
    :param x: State (StateVector, array (n,) or batch (..., n))
    :param u: Control (..., m)
    :param eps: Standard-normal draw (..., p)
    :param dt: Time step
    :param t: Time
    :return: Next state, a StateVector if ``x`` is one. Check ``diverged`` for non-finite results
    """
    assert dt > 0, 'dt must be positive'
    as_state = isinstance(x, StateVector)
    xv = model.check_state(x)
    u = model.check_control(u)
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if eps.shape[-1] != model.p:
        raise DimensionMismatchError(f'noise must have {model.p} components, got shape {eps.shape}')
    with np.errstate(over='ignore', invalid='ignore'):
        x_next = xv + model.state_derivative(xv, u, t) * dt
        if np.any(eps):
            x_next[..., model.n_a:] += np.einsum('...cp,...p->...c', model.diffusion_c(xv, t), eps) * math.sqrt(dt)
    if as_state:
        return StateVector(x_next, model.n_a)
    return x_next


def natural_step_covariance(
        model: DiffusionModel,
        x: Union['StateVector', 'np.ndarray'],
        t: float,
        dt: float
) -> 'np.ndarray':
    """
    Natural step covariance Σ = B_c B_cᵀ dt.

    :param model: Diffusion model
    :param x: State
    :param t: Time
    :param dt: Time step
    :return: Matrix (n_c x n_c), or a batch of them
    """
    assert dt > 0, 'dt must be positive'
    bc = model.diffusion_c(model.check_state(x), t)
    return np.einsum('...cp,...dp->...cd', bc, bc) * dt
