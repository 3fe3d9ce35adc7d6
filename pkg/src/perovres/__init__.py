"""Subwavelength resonances of coupled dispersive resonators.

Submodules: ``material`` (permittivity model), ``specfun`` (Bessel/Hankel
functions and kernels), ``coupling`` (pairings of the layer operators),
``spectrum`` (resonance matrix and root finding), ``inverse`` (three-disk
design) and ``cli``.
"""

from .coupling import Configuration, CouplingSet, Disk, QuadratureOptions, build_coupling_set
from .errors import PerovresError
from .inverse import DesignTargets, design_family
from .material import Material
from .spectrum import (
    MullerOptions,
    ResonanceMatrixSpec,
    det_resonances,
    single_particle_resonance,
    three_particle_frequencies,
    two_particle_resonances,
)

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "CouplingSet",
    "Disk",
    "QuadratureOptions",
    "build_coupling_set",
    "PerovresError",
    "DesignTargets",
    "design_family",
    "Material",
    "MullerOptions",
    "ResonanceMatrixSpec",
    "det_resonances",
    "single_particle_resonance",
    "three_particle_frequencies",
    "two_particle_resonances",
]
