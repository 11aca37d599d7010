"""Torsional magnetic-spring oscillator: simulation and system identification."""

from .errors import ConfigError, DataError, DomainError, MagtorsionError, NumericalError
from .models import (
    MU_0,
    CoilParams,
    MagnetGeometry,
    MechanicalParams,
    PowerLawFit,
    RingdownModal,
    alpha_scale,
    back_emf,
    beta_model,
    coil_torque,
    denormalize_params,
    dipole_moment,
    fit_power_law,
    normalize_params,
    restoring_torque,
    spring_amplitude,
    stator_field,
)
from .odesim import (
    ORACLE_SETTINGS,
    SWEEP_SETTINGS,
    IntegratorSettings,
    Trajectory,
    harmonic_drive,
    integrate_coupled,
    integrate_free,
    linear_steady_state,
)
from .ringdown import (
    HalfCycleSchedule,
    build_schedule,
    combined_response,
    combined_velocity,
    detect_arrest,
    envelope_amplitude,
    schedule_from_modal,
    viscous_response,
)

__version__ = "0.1.0"
