"""
MPPI BENCHMARKS - UTILS - PARALLEL

Splits rollout batches across a thread pool. Results are gathered in chunk
order, so they never depend on the number of workers.
"""

__all__ = [
    'chunk_ranges',
    'RolloutPool'
]

from multiprocessing.pool import ThreadPool
from typing import Callable, List, Optional, Tuple, TypeVar

T = TypeVar('T')


def chunk_ranges(total: int, chunk_size: int) -> List[Tuple[int, int]]:
    """
    Splits ``range(total)`` into consecutive (start, end) ranges.

    :param total: Number of items
    :param chunk_size: Items per chunk
    :return: Ranges
    """
    assert total >= 0 and chunk_size >= 1
    return [(s, min(s + chunk_size, total)) for s in range(0, total, chunk_size)]


class RolloutPool(object):
    """
    Thread pool over index ranges. With one worker everything runs inline.
    """
    _pool: Optional[ThreadPool]
    _workers: int

    def __init__(self, workers: int = 1) -> None:
        assert workers >= 1, 'at least one worker is required'
        self._workers = int(workers)
        self._pool = None

    @property
    def workers(self) -> int:
        return self._workers

    def map(self, fn: Callable[[Tuple[int, int]], T], total: int, chunk_size: Optional[int] = None) -> List[T]:
        """
        Applies ``fn`` to every chunk of ``range(total)``.

        :param fn: Function of a (start, end) range
        :param total: Number of items
        :param chunk_size: Items per chunk, by default one chunk per worker
        :return: Results in chunk order
        """
        if chunk_size is None:
            chunk_size = max(1, -(-total // self._workers))
        ranges = chunk_ranges(total, chunk_size)
        if self._workers == 1 or len(ranges) <= 1:
            return [fn(r) for r in ranges]
        if self._pool is None:
            self._pool = ThreadPool(processes=self._workers)
        return self._pool.map(fn, ranges)

    def close(self) -> None:
        """
        Stops the worker threads.
        """
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None

    def __enter__(self) -> 'RolloutPool':
        return self

    def __exit__(self, *args) -> None:
        self.close()

    def __getstate__(self):
        state = self.__dict__.copy()
        state['_pool'] = None
        return state
