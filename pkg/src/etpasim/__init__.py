"""Top-level etpasim package: simulation and analysis of entangled two-photon
absorption transmission experiments. Caps the BLAS/OpenMP thread count at 4
by default so process-pool sweeps do not oversubscribe the machine. Does not
override user-set environment variables."""

import os

_DEFAULT_NUM_THREADS = "4"

for _var in ("OMP_NUM_THREADS", "MKL_NUM_THREADS", "OPENBLAS_NUM_THREADS"):
    os.environ.setdefault(_var, _DEFAULT_NUM_THREADS)

try:
    from etpasim._version import __version__
except ImportError:
    __version__ = "0.0.0"
