"""Degenerate reaction-diffusion laboratory.

Sharp and classical travelling waves, stationary solutions and free-boundary
simulations for ``u_t = [A(u)]_xx + f(u)`` with degenerate ``A`` and a
multistable ``f``.
"""

__version__ = "0.1.0"

from .errors import DegwaveError
from .nonlinearity import DiffusionSpec, PressureMaps, ReactionSpec

__all__ = ["DegwaveError", "DiffusionSpec", "PressureMaps", "ReactionSpec", "__version__"]
