"""
MPPI-benchmarks - SETUP

Setup distribution.
"""

# Library imports
import MPPI_benchmarks
from setuptools import setup, find_packages

# Load readme
with open('README.rst') as f:
    long_description = f.read()

# Load requirements
requirements = [
    'matplotlib >= 3.5.3',
    'numpy >= 1.21.0',
    'pandas >= 1.5.0',
    'scipy >= 1.7.0',
    'tqdm >= 4.64.0'
]

# Setup library
setup(
    author=MPPI_benchmarks.__author__,
    author_email=MPPI_benchmarks.__email__,
    classifiers=[
        'Natural Language :: English',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python',
        'Topic :: Scientific/Engineering',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Topic :: Scientific/Engineering :: Physics'
    ],
    description=MPPI_benchmarks.__description__,
    entry_points={
        'console_scripts': ['mppi-benchmarks = MPPI_benchmarks.harness:main']
    },
    long_description=long_description,
    include_package_data=True,
    install_requires=requirements,
    extras_require={
        'test': ['nose2[coverage_plugin]', 'pytest']
    },
    keywords=MPPI_benchmarks.__keywords__,
    name='MPPI-benchmarks',
    packages=find_packages(exclude=[
        '.idea',
        '.ipynb_checkpoints',
        'test'
    ]),
    platforms=['any'],
    project_urls={
        'Bug Tracker': MPPI_benchmarks.__url_bug_tracker__,
        'Documentation': MPPI_benchmarks.__url_documentation__,
        'Source Code': MPPI_benchmarks.__url_source_code__
    },
    python_requires='>=3.8',
    url=MPPI_benchmarks.__url__,
    version=MPPI_benchmarks.__version__
)
