"""
MPPI BENCHMARKS - ENVS

Benchmark plants, costs and obstacle forests.
"""

from MPPI_benchmarks.envs._base import *
from MPPI_benchmarks.envs._cartpole import *
from MPPI_benchmarks.envs._forest import *
from MPPI_benchmarks.envs._quadrotor import *
from MPPI_benchmarks.envs._racecar import *
from MPPI_benchmarks.envs._registry import *
