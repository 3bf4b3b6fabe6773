"""
MPPI BENCHMARKS - CORE - NOISE

Counter-based Gaussian noise on top of numpy's Philox generator. Every draw is
a pure function of (key, rollout, timestep, component), so rollouts may be
evaluated in any order and on any number of workers.
"""

__all__ = [
    'draw_noise',
    'NoiseStream'
]

from dataclasses import dataclass, field
from scipy.special import ndtri
from typing import Sequence, Tuple, Union

import numpy as np

_S11 = np.uint64(11)
_TWO_M53: float = 2.0 ** -53
_UINT64_MAX: int = 2 ** 64 - 1
_WORDS: int = 4  # uint64 outputs per Philox counter value


def _to_unit(bits: 'np.ndarray') -> 'np.ndarray':
    """
    Maps raw words to uniforms in the open interval (0, 1) using the top 53 bits.
    """
    return ((bits >> _S11).astype(np.float64) + 0.5) * _TWO_M53


@dataclass(frozen=True)
class NoiseStream(object):
    """
    Deterministic standard-normal stream of dimension ``dim``.

    The 128-bit Philox key comes from a ``SeedSequence`` of the master seed
    spawned along ``path``. Timestep i is the second counter word and rollout
    k owns the first, so one ``random_raw`` call covers a contiguous range of
    rollouts. Independent streams sharing one master seed are obtained with
    :meth:`substream`, e.g. one per optimization pass.
    """
    master_seed: int
    dim: int
    path: Tuple[int, ...] = ()
    key: Tuple[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        assert 0 <= int(self.master_seed) <= _UINT64_MAX, 'master seed must be a 64-bit unsigned integer'
        assert self.dim >= 1, 'noise dimension must be positive'
        for tag in self.path:
            assert 0 <= int(tag) <= _UINT64_MAX, 'substream tags must be 64-bit unsigned integers'
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=tuple(int(t) for t in self.path))
        object.__setattr__(self, 'key', tuple(int(w) for w in seq.generate_state(2, np.uint64)))

    @property
    def counters_per_draw(self) -> int:
        return -(-self.dim // _WORDS)

    def substream(self, tag: int) -> 'NoiseStream':
        """
        Returns an independent stream derived from this one.

        :param tag: Non-negative tag
        :return: Child stream
        """
        return NoiseStream(self.master_seed, self.dim, self.path + (int(tag),))

    def block(
            self,
            rollouts: Union[int, Sequence[int], 'np.ndarray'],
            steps: int,
            first_step: int = 0
    ) -> 'np.ndarray':
        """
        Draws ε for the given rollout indices and ``steps`` consecutive timesteps.

        :param rollouts: Number of rollouts (indices 0..K-1) or explicit indices
        :param steps: Number of timesteps
        :param first_step: First timestep index
        :return: Array of shape (len(rollouts), steps, dim)
        """
        if isinstance(rollouts, (int, np.integer)):
            rollouts = np.arange(int(rollouts))
        k = np.asarray(rollouts, dtype=np.int64).reshape(-1)
        assert steps >= 0 and first_step >= 0
        out = np.empty((k.size, steps, self.dim))
        if k.size == 0 or steps == 0:
            return out
        assert k.min() >= 0, 'rollout indices must be non-negative'
        lo, span = int(k.min()), int(k.max() - k.min()) + 1
        c = self.counters_per_draw
        key = np.array(self.key, dtype=np.uint64)
        for s in range(steps):
            # Philox increments the counter before each output block
            counter = np.array([lo * c, first_step + s, 0, 0], dtype=np.uint64)
            bits = np.random.Philox(counter=counter, key=key).random_raw(span * c * _WORDS)
            out[:, s] = ndtri(_to_unit(bits.reshape(span, c * _WORDS)[k - lo, :self.dim]))
        return out


def draw_noise(stream: NoiseStream, k: int, i: int) -> 'np.ndarray':
    """
    Returns ε for rollout ``k`` at timestep ``i``.

    :param stream: Noise stream
    :param k: Rollout index
    :param i: Timestep index
    :return: Standard-normal vector of size ``stream.dim``
    """
    assert k >= 0 and i >= 0, 'indices must be non-negative'
    return stream.block([k], 1, first_step=i)[0, 0]
