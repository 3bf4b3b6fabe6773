"""
MPPI BENCHMARKS - UTILS

Utility functions.
"""

from MPPI_benchmarks.utils._array import *
from MPPI_benchmarks.utils._file import *
from MPPI_benchmarks.utils._logging import *
from MPPI_benchmarks.utils._parallel import *
