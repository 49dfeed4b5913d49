"""hdtest: kernel and distance based two-sample / independence testing lab."""

__version__ = "0.1.0"

from .exceptions import (
    ConfigError,
    DataShapeError,
    DegenerateDataError,
    HDTestError,
    InsufficientSamplesError,
    NumericalError,
    PairingError,
)
from .kernels import BandwidthRule, KernelSpec, median_heuristic
from .stats import (
    StatisticSpec,
    dcor2,
    dcov2,
    energy_two_sample,
    hsic,
    mmd2_biased,
    mmd2_unbiased,
    udcor2,
    udcov2,
)
from .permutation import PermutationConfig, PermutationResult, permutation_test

__all__ = [
    "__version__",
    "HDTestError",
    "DataShapeError",
    "PairingError",
    "DegenerateDataError",
    "InsufficientSamplesError",
    "ConfigError",
    "NumericalError",
    "KernelSpec",
    "BandwidthRule",
    "median_heuristic",
    "StatisticSpec",
    "mmd2_biased",
    "mmd2_unbiased",
    "energy_two_sample",
    "dcov2",
    "dcor2",
    "udcov2",
    "udcor2",
    "hsic",
    "PermutationConfig",
    "PermutationResult",
    "permutation_test",
]
