"""gupsim: GUP-modified dispersion, wave-packet broadening and a generalized
Klein-Gordon solver, with numerical cross-checks of the closed forms."""
from .dispersion import DispersionModel
from .errors import (
    ConfigInvalid,
    DegenerateFit,
    DispersionSingularity,
    GridCoverage,
    GupsimError,
    NegativeRadicand,
    NonPositiveWavelength,
    StabilityViolation,
    TailLeak,
    UnstableModes,
)
from .gkg import GKGParams, GKGState
from .kernels import BACKEND as KERNEL_BACKEND
from .packet import GaussianPacketSpec, QuadraticPropagator
from .spectral import EvolutionSeries, FieldSnapshot, KGrid, PacketStats

__version__ = "0.1.0"

__all__ = [
    "DispersionModel",
    "GaussianPacketSpec",
    "QuadraticPropagator",
    "KGrid",
    "FieldSnapshot",
    "PacketStats",
    "EvolutionSeries",
    "GKGParams",
    "GKGState",
    "KERNEL_BACKEND",
    "GupsimError",
    "ConfigInvalid",
    "DegenerateFit",
    "DispersionSingularity",
    "GridCoverage",
    "NegativeRadicand",
    "NonPositiveWavelength",
    "StabilityViolation",
    "TailLeak",
    "UnstableModes",
]
