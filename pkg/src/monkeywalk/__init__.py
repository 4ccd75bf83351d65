"""Monte Carlo and closed-form limit theory for monkey walks with steep memory kernels."""

from .kernel import MemoryKernel
from .model import Model, make_model
from .process import brownian_drift, lattice_walk
from .runlen import RunLengthDistribution, deterministic, exponential, gamma_dist, geometric, uniform
from .theory import centering, predict, sigma_n

__version__ = "0.1.0"

__all__ = [
    "MemoryKernel",
    "Model",
    "RunLengthDistribution",
    "brownian_drift",
    "centering",
    "deterministic",
    "exponential",
    "gamma_dist",
    "geometric",
    "lattice_walk",
    "make_model",
    "predict",
    "sigma_n",
    "uniform",
]
