"""
MPPI BENCHMARKS - UTILS - PLOT

Plot utils.
"""

from MPPI_benchmarks.utils.plot._utils import *
