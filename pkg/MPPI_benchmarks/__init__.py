"""
MPPI BENCHMARKS

Model predictive path integral control with generalized importance sampling,
benchmark plants and an iLQG baseline.
"""

# Basic information
__author__ = 'Pablo Pizarro R.'
__description__ = 'Model predictive path integral control benchmarks with generalized importance sampling'
__keywords__ = ['mppi', 'path integral', 'importance sampling', 'model predictive control', 'ddp', 'ilqg',
                'stochastic optimal control', 'cart-pole', 'race car', 'quadrotor']
__email__ = 'pablo@ppizarror.com'
__version__ = '1.0.0'

# URL
__url__ = 'https://github.com/MLSTRUCT/MPPI_benchmarks'
__url_bug_tracker__ = 'https://github.com/MLSTRUCT/MPPI_benchmarks/issues'
__url_documentation__ = 'https://github.com/MLSTRUCT/MPPI_benchmarks'
__url_source_code__ = 'https://github.com/MLSTRUCT/MPPI_benchmarks'
