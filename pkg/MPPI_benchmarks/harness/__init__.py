"""
MPPI BENCHMARKS - HARNESS

Experiment configuration, sweeps, oracle suites and the command line.
"""

from MPPI_benchmarks.harness._cli import *
from MPPI_benchmarks.harness._config import *
from MPPI_benchmarks.harness._experiment import *
from MPPI_benchmarks.harness._verify import *
