"""
MPPI BENCHMARKS - UTILS - FILE

File utility functions.
"""

__all__ = [
    'file_md5',
    'load_key_value',
    'read_csv',
    'write_csv'
]

from typing import Dict, List, Union

import hashlib
import os
import pandas as pd

# Shortest format that reproduces any float64 exactly
FLOAT_FORMAT: str = '%.17g'


def file_md5(fname: str, buffer_size: int = 65536) -> str:
    """
    Returns md5 of a file.

    :param fname: File to compute hash
    :param buffer_size: Buffer size in bytes
    :return: File hash
    """
    assert buffer_size > 0
    hash_md5 = hashlib.md5()
    with open(fname, 'rb') as f:
        for chunk in iter(lambda: f.read(buffer_size), b''):
            hash_md5.update(chunk)
    return hash_md5.hexdigest()


def write_csv(data: Union['pd.DataFrame', Dict[str, List]], path: str) -> str:
    """
    Writes a table as CSV with round-trip exact floats. The parent folder is created.

    :param data: Dataframe or dict of columns
    :param path: Output file
    :return: Path written
    """
    if not isinstance(data, pd.DataFrame):
        data = pd.DataFrame(data)
    folder = os.path.dirname(path)
    if folder != '':
        os.makedirs(folder, exist_ok=True)
    data.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return path


def read_csv(path: str) -> 'pd.DataFrame':
    """
    Reads a CSV written by :func:`write_csv` without losing float precision.

    :param path: File
    :return: Dataframe
    """
    assert os.path.isfile(path), f'CSV file <{path}> does not exist'
    return pd.read_csv(path, float_precision='round_trip')


def load_key_value(path: str) -> Dict[str, str]:
    """
    Loads a flat ``key = value`` text file. Lines starting with ``#`` and blank
    lines are skipped, trailing ``#`` comments are removed.

    :param path: File
    :return: Ordered key-value dict (raw strings)
    """
    assert os.path.isfile(path), f'Config file <{path}> does not exist'
    data: Dict[str, str] = {}
    with open(path, 'r', encoding='utf-8') as f:
        for n, line in enumerate(f):
            line = line.split('#', 1)[0].strip()
            if line == '':
                continue
            if '=' not in line:
                raise ValueError(f'line {n + 1} of <{path}> is not a key = value pair: "{line}"')
            k, v = line.split('=', 1)
            k, v = k.strip(), v.strip()
            if k == '':
                raise ValueError(f'line {n + 1} of <{path}> has an empty key')
            if k in data:
                raise ValueError(f'key "{k}" repeated at line {n + 1} of <{path}>')
            data[k] = v
    return data
