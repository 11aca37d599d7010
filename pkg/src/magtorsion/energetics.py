"""Energy-dissipation accounting for ringdown records.

The reference dissipation is the decline of mechanical (elastic + kinetic)
energy along the record; each damping model predicts the same quantity as
accumulated dissipative work. Their discrepancy, summarized by a relative
RMS metric, ranks the models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError
from .sysid import TimeSeries, central_derivative

# One-sided-stencil samples at each record end, excluded from error sums.
EDGE_SAMPLES = 4


@dataclass(frozen=True)
class EnergyTrace:
    times: np.ndarray
    e_mech: np.ndarray
    e_dis: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.e_mech) == len(self.e_dis)):
            raise DomainError("energy trace arrays must have equal length")


def mechanical_energy(theta, omega, k_mag: float, inertia: float):
    """Instantaneous elastic plus kinetic energy (J) of the linearized oscillator."""
    if not k_mag > 0.0 or not inertia > 0.0:
        raise DomainError("k_mag and inertia must be strictly positive")
    theta = np.asarray(theta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    return 0.5 * k_mag * theta**2 + 0.5 * inertia * omega**2


def experimental_dissipation(series: TimeSeries, k_mag: float, inertia: float) -> EnergyTrace:
    """Dissipated energy inferred from the record's mechanical-energy decline.

    Velocity comes from the 8-point finite-difference stencil.
    """
    if len(series) < 9:
        raise DataError("experimental_dissipation needs at least 9 samples")
    omega = central_derivative(series, "8-point").values
    e_mech = mechanical_energy(series.values, omega, k_mag, inertia)
    return EnergyTrace(series.times, e_mech, e_mech[0] - e_mech)


def model_dissipation(series: TimeSeries, viscous_c: float, dry_tf: float,
                      initial_energy: float | None = None) -> EnergyTrace:
    """Dissipated energy predicted by a damping model along the sampled path.

    The viscous work c * velocity^2 is integrated by the trapezoidal rule;
    the dry work is the friction torque times the sampled path length, which
    is exact on monotone swings. Both contributions are non-negative per
    step, so the trace never decreases. ``e_mech`` is the predicted remaining
    energy when ``initial_energy`` is given, NaN otherwise.
    """
    if len(series) < 9:
        raise DataError("model_dissipation needs at least 9 samples")
    if viscous_c < 0.0 or dry_tf < 0.0:
        raise DomainError("damping coefficients must be non-negative")
    omega = central_derivative(series, "8-point").values
    power = viscous_c * omega**2
    e_dis = np.zeros(len(series))
    e_dis[1:] = np.cumsum(0.5 * (power[1:] + power[:-1]) * series.dt
                          + dry_tf * np.abs(np.diff(series.values)))
    if initial_energy is None:
        e_mech = np.full(len(series), math.nan)
    else:
        e_mech = initial_energy - e_dis
    return EnergyTrace(series.times, e_mech, e_dis)


def relative_rms_error(experimental: EnergyTrace, model: EnergyTrace) -> float:
    """Root summed squared dissipation mismatch over the peak experimental value.

    The sum is not divided by the sample count, so compare traces only at
    equal sampling. The stencil edge samples are excluded to avoid one-sided
    differentiation bias.
    """
    if len(experimental.times) != len(model.times) or not np.array_equal(
        experimental.times, model.times
    ):
        raise DataError("energy traces are on different sampling grids")
    sl = slice(EDGE_SAMPLES, len(experimental.times) - EDGE_SAMPLES)
    diff = experimental.e_dis[sl] - model.e_dis[sl]
    peak = float(np.max(experimental.e_dis))
    if peak == 0.0:
        return 0.0 if float(np.sum(diff**2)) == 0.0 else math.inf
    return float(math.sqrt(np.sum(diff**2)) / peak)
