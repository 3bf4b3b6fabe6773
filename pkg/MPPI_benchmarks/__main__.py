"""
MPPI BENCHMARKS - MAIN

python -m MPPI_benchmarks run|verify|forest ...
"""

import sys

from MPPI_benchmarks.harness import main

if __name__ == '__main__':
    sys.exit(main())
