"""
MPPI BENCHMARKS - CONTROL

Receding-horizon controllers and the closed-loop runner.
"""

from MPPI_benchmarks.control._ddp import *
from MPPI_benchmarks.control._mppi import *
from MPPI_benchmarks.control._task import *
