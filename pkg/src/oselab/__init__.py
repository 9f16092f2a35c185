"""Numerical laboratory for Hölder continuity of Oseledets subspaces.

Modules: grassmann (subspaces and distances), cocycle (linear cocycles),
oseledets (spectra, filtrations and splittings), regular_blocks (uniform
Oseledets estimates), bounds (distance estimates and their verifiers),
systems (bundled examples), sweeps (randomized estimate checks) and
harness (experiment driver).
"""

__version__ = "0.1.0"

from .cocycle import CocycleSystem, holder_iterate_constant, iterate, verify_iterate_holder
from .grassmann import Subspace, orthonormalize, subspace_distance
from .oseledets import Spectrum, lyapunov_spectrum, splitting
from .reports import BoundReport
from .systems import SystemSpec, make_system

__all__ = [
    "BoundReport",
    "CocycleSystem",
    "Spectrum",
    "Subspace",
    "SystemSpec",
    "holder_iterate_constant",
    "iterate",
    "lyapunov_spectrum",
    "make_system",
    "orthonormalize",
    "splitting",
    "subspace_distance",
    "verify_iterate_holder",
    "__version__",
]
