"""
MPPI BENCHMARKS - CORE

Controlled diffusions, deterministic noise, trajectory likelihoods.
"""

from MPPI_benchmarks.core._diffusion import *
from MPPI_benchmarks.core._feynman_kac import *
from MPPI_benchmarks.core._likelihood import *
from MPPI_benchmarks.core._noise import *
