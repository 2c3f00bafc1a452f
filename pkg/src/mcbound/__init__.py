"""Explicit convergence bounds for Markov chains built from iterated random maps.

Modules:

``rng``         counter-based reproducible random streams
``ifs``         random map systems; forward, backward and coupled simulation
``metrics``     empirical and density-based Wasserstein-1 and TV distances
``drift``       drift functions, partition operators and their Q-matrices
``gibbs``       the Normal Gibbs sampler: constants, bound curves, kernel checks
``logistic``    random logistic maps: kernel, TV conversion constant, rate checks
``cli``         the ``mcbound`` command
"""

__version__ = "0.1.0"

from .rng import RngStream  # noqa: E402
from .ifs import RandomMapSystem, Trajectory  # noqa: E402
from .gibbs import GibbsModel, reference_case  # noqa: E402
from .logistic import LogisticModel  # noqa: E402

__all__ = ["RngStream", "RandomMapSystem", "Trajectory", "GibbsModel", "reference_case",
           "LogisticModel", "__version__"]
