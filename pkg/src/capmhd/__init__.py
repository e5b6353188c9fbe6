"""capmhd: two-phase incompressible MHD with surface tension at desk scale.

Spectral Galerkin velocity and magnetic fields on a periodic cell, a
Lagrangian interface carried by the characteristic flow map, an atomic
varifold lift of the interface measure, windowed fixed-point solution of the
coupled system, and a ledger certifying the generalized energy inequality.
"""

from .basis import (
    Basis,
    BasisMode,
    SpectralField,
    enumerate_modes,
    evaluate,
    evaluate_gradient,
    gram_matrix,
    make_basis,
    project_L2,
)
from .config import RunConfig
from .energy import EnergyLedger, check_inequality, initial_energy
from .flowmap import ParticleCloud, SpectralTrajectory, SteadyField, advance, backtrace, jacobian
from .galerkin import FluidParams, GalerkinState, apply_N, fixed_point_window, run
from .interface import (
    InitialPhase,
    InterfaceMesh,
    PhaseViscosity,
    advect,
    curvature_pairing,
    enclosed_volume,
    indicator,
    mesh_initial,
    normals,
    perimeter,
)
from .varifold import Varifold, coupling_residual, first_variation, lift

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "BasisMode",
    "SpectralField",
    "enumerate_modes",
    "evaluate",
    "evaluate_gradient",
    "gram_matrix",
    "make_basis",
    "project_L2",
    "RunConfig",
    "EnergyLedger",
    "check_inequality",
    "initial_energy",
    "ParticleCloud",
    "SpectralTrajectory",
    "SteadyField",
    "advance",
    "backtrace",
    "jacobian",
    "FluidParams",
    "GalerkinState",
    "apply_N",
    "fixed_point_window",
    "run",
    "InitialPhase",
    "InterfaceMesh",
    "PhaseViscosity",
    "advect",
    "curvature_pairing",
    "enclosed_volume",
    "indicator",
    "mesh_initial",
    "normals",
    "perimeter",
    "Varifold",
    "coupling_residual",
    "first_variation",
    "lift",
    "__version__",
]
