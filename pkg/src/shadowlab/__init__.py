"""shadowlab: a desk-scale laboratory for tracking properties of linear dynamics.

Finite-dimensional complex operators, approximate trajectories with
quantified defects, exact and rescaled-orbit tracking witnesses, certified
divergence bounds, and orbit-density analytics, with a CLI front end.

Heavy inner loops run on a compiled kernel when available (see
``shadowlab.kernels.backend_name``); a pure numpy fallback is always present.
"""

__version__ = "0.1.0"

from . import operators
from . import trajectories
from . import spectral
from . import solvers
from . import density
from .kernels import backend_name

__all__ = [
    "operators",
    "trajectories",
    "spectral",
    "solvers",
    "density",
    "backend_name",
    "__version__",
]
