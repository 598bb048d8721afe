"""Exciton-bath ensemble dynamics with stochastic bath thermostatting.

A small numpy library that propagates the single-excitation dynamics of
a chromophore aggregate coupled to finite discretized harmonic baths,
using a shared-coherent-state trial wavefunction, and keeps those baths
at a controlled temperature through random momentum-resampling events.
"""

__version__ = "0.1.0"

from .dynamics import (DerivativeBuffer, IntegratorConfig, TrajectoryError,
                       drive_strength, eom_rhs, propagate_segment, rk4_step)
from .ensemble import (EnsembleAccumulator, EnsembleError, EnsembleResult,
                       RunConfig, TrajectoryRecord, load_checkpoint,
                       run_ensemble, run_trajectory, save_checkpoint)
from .model import (BathModes, BathSpec, EigenBasis, ExcitonModel, build_bath,
                    diagonalize, spectral_density, specific_heat)
from .observables import (TemperatureEstimate, TimeSeries, bath_temperature,
                          exciton_populations, phase_space_mean,
                          recursion_time, windowed_kinetic_energy)
from .rng import BatchStream, CounterStream, trajectory_seed
from .state import (D2State, ThermalLaw, init_state, sample_displacement,
                    total_energy)
from .thermalization import (ThermalizationParams, expected_event_count,
                             scatter)
from .units import DEFAULT_UNITS, KB_CM_PER_K, WAVENUMBER_TO_ANGULAR, UnitSystem

__all__ = [
    "BathModes", "BathSpec", "BatchStream", "CounterStream", "D2State",
    "DEFAULT_UNITS", "DerivativeBuffer", "EigenBasis", "EnsembleAccumulator",
    "EnsembleError", "EnsembleResult", "ExcitonModel", "IntegratorConfig",
    "KB_CM_PER_K", "RunConfig", "TemperatureEstimate", "ThermalLaw",
    "ThermalizationParams", "TimeSeries", "TrajectoryError",
    "TrajectoryRecord", "UnitSystem", "WAVENUMBER_TO_ANGULAR",
    "bath_temperature", "build_bath", "diagonalize", "drive_strength",
    "eom_rhs", "exciton_populations", "expected_event_count", "init_state",
    "load_checkpoint", "phase_space_mean", "propagate_segment",
    "recursion_time", "rk4_step", "run_ensemble", "run_trajectory",
    "sample_displacement", "save_checkpoint", "scatter", "spectral_density",
    "specific_heat", "total_energy", "trajectory_seed",
    "windowed_kinetic_energy",
]
