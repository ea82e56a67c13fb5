"""Radial Rydberg wavepackets with de Broglie-Bohm and classical trajectories.

The layers build on each other: :mod:`.grid` and :mod:`.basis` give
hydrogenic radial eigenstates, :mod:`.packet` superposes them into a
time-dependent field, :mod:`.pilot` integrates guidance trajectories in that
field and :mod:`.kepler` supplies the classical reference motion.
:mod:`.scenarios` and :mod:`.cli` turn configurations into data files.
"""

__version__ = "0.1.0"

from .basis import Basis, Eigenstate, EigenstateError, build_basis, compute_eigenstate, eigen_energy
from .grid import GridError, RadialGrid, build_grid
from .kepler import ClassicalError, integrate_classical, radial_period, turning_points
from .packet import (
    CoefficientSet,
    PulseModel,
    Wavefield,
    WavefieldSnapshot,
    autocorrelation,
    classical_period,
    gaussian_coefficients,
    revival_time,
    snapshot_density,
)
from .pilot import (
    Ensemble,
    IntegratorConfig,
    Trajectory,
    equivariance_distance,
    integrate_trajectory,
    quantile_transport,
    run_ensemble,
    sample_positions,
    velocity_field,
)

__all__ = [
    "Basis",
    "ClassicalError",
    "CoefficientSet",
    "Eigenstate",
    "EigenstateError",
    "Ensemble",
    "GridError",
    "IntegratorConfig",
    "PulseModel",
    "RadialGrid",
    "Trajectory",
    "Wavefield",
    "WavefieldSnapshot",
    "autocorrelation",
    "build_basis",
    "build_grid",
    "classical_period",
    "compute_eigenstate",
    "eigen_energy",
    "equivariance_distance",
    "gaussian_coefficients",
    "integrate_classical",
    "integrate_trajectory",
    "quantile_transport",
    "radial_period",
    "revival_time",
    "run_ensemble",
    "sample_positions",
    "snapshot_density",
    "turning_points",
    "velocity_field",
]
