"""
MPPI BENCHMARKS - UTILS - LOGGING

Logger class with timing helpers.
"""

__all__ = [
    'create_logger',
    'get_logger',
    'Logger'
]

from contextlib import contextmanager
from typing import Any, Dict, Optional

import logging
import time

_ROOT_NAME: str = 'mppi'
_FORMAT: str = '%(asctime)s %(levelname)s: %(message)s'


class Logger(logging.Logger):
    """
    Logger with duration and scalar reporting.
    """

    @contextmanager
    def print_duration(self, duration_of_what: str, print_start: bool = False):
        """
        Logs the elapsed time of the wrapped block at DEBUG level.

        :param duration_of_what: Block description
        :param print_start: Also log when the block starts
        """
        if print_start:
            self.debug(duration_of_what)
        start = time.perf_counter()
        yield
        duration = time.perf_counter() - start
        self.debug(f'{duration_of_what} complete in {duration:.3f} seconds')

    def info_scalars(self, s: str, scalars_dict: Dict[str, Any], **kwargs) -> None:
        """
        Logs one line per scalar using a format with ``key`` and ``value`` fields.

        :param s: Format string
        :param scalars_dict: Scalars
        :param kwargs: Extra format fields
        """
        for key, value in scalars_dict.items():
            self.info(s.format(key=key, value=value, **kwargs))


# Every logger created below the package root uses the extended class
logging.setLoggerClass(Logger)


def get_logger(name: str = '') -> Logger:
    """
    Returns a child logger of the package root logger.

    :param name: Child name, empty for the root
    :return: Logger
    """
    full = _ROOT_NAME if not name else f'{_ROOT_NAME}.{name}'
    # noinspection PyTypeChecker
    return logging.getLogger(full)


def create_logger(verbose: bool = False, logging_filename: Optional[str] = None) -> Logger:
    """
    Configures the package root logger with a stream and an optional file handler.

    :param verbose: Use DEBUG instead of INFO
    :param logging_filename: Optional log file
    :return: Root logger
    """
    loglevel = logging.DEBUG if verbose else logging.INFO
    logger = get_logger()
    logger.setLevel(loglevel)
    for h in list(logger.handlers):
        logger.removeHandler(h)

    formatter = logging.Formatter(fmt=_FORMAT)

    stream_handler = logging.StreamHandler()
    stream_handler.setLevel(loglevel)
    stream_handler.setFormatter(formatter)
    logger.addHandler(stream_handler)

    if logging_filename:
        file_handler = logging.FileHandler(logging_filename)
        file_handler.setLevel(loglevel)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger
