"""
MPPI BENCHMARKS - UTILS - ARRAY

Array utils.
"""

__all__ = [
    'as_square_matrix',
    'clamp',
    'get_key_hash'
]

from typing import List, Union

import numpy as np

NumberType = Union[float, int]


def get_key_hash(*args) -> str:
    """
    Returns a file-name safe key from values, ``None`` values are skipped.

    :param args: Get data from values
    :return: Key
    """
    key: List[str] = []
    for k in args:
        if isinstance(k, (list, tuple)):
            key.append('|'.join(f'{w:g}' if isinstance(w, float) else str(w) for w in k))
        elif k is None:
            continue
        elif isinstance(k, (float, np.floating)):
            key.append(f'{float(k):g}')
        else:
            key.append(str(k))
    return '_'.join(w.replace('_', '') for w in key)


def clamp(u: 'np.ndarray', lo: 'np.ndarray', hi: 'np.ndarray') -> 'np.ndarray':
    """
    Clamps controls (last axis) to a box.

    :param u: Controls
    :param lo: Lower limits
    :param hi: Upper limits
    :return: Clamped copy
    """
    return np.minimum(np.maximum(u, lo), hi)


def as_square_matrix(value: Union[NumberType, 'np.ndarray', List], size: int, name: str = 'matrix') -> 'np.ndarray':
    """
    Converts a scalar (times identity), a diagonal vector or a matrix into a
    float square matrix.

    :param value: Value
    :param size: Matrix size
    :param name: Name used in assertion messages
    :return: Matrix
    """
    v = np.asarray(value, dtype=float)
    if v.ndim == 0:
        return float(v) * np.eye(size)
    if v.ndim == 1:
        assert v.shape == (size,), f'{name} diagonal must have {size} entries'
        return np.diag(v)
    assert v.shape == (size, size), f'{name} must be {size}x{size}, got {v.shape}'
    return v.copy()
