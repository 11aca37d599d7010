"""Closed-form free response of the oscillator under viscous plus dry damping.

Between two successive turning points the velocity keeps one sign, so the
dry-friction torque acts as a constant offset and the equation of motion is
linear. The full ringdown is therefore a chain of damped-cosine half-cycles:
the first segment absorbs the initial conditions, every later segment starts
at a turning point, lasts exactly half a damped period, and hands its end
state to the next one. The turning-point amplitudes obey a recursion that
mixes a proportional (viscous) decrement with a fixed (dry) decrement and
has a closed geometric-series form, so the angle at any instant is computed
directly without time stepping. Motion arrests at the first turning point
that falls inside the friction dead band.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .models import RingdownModal

# Beyond this many half-cycles the search for an arrest reports "none found".
DEFAULT_K_MAX = 10**6

# The half-cycle phase bookkeeping assumes weak viscous damping; above this
# ratio the construction is still evaluated but flagged.
ZETA_VALIDITY_LIMIT = 0.2


class WeakDampingAssumptionWarning(UserWarning):
    """Raised when a schedule is built with zeta beyond the validated range."""


@dataclass(frozen=True)
class HalfCycleSchedule:
    """Precomputed segment bookkeeping for one combined-damping ringdown.

    ``z0`` is the branch integer selecting the first turning time, ``t1``
    that time, ``s0`` the velocity sign of the initial segment, ``theta1``
    the first turning-point amplitude coefficient. ``arrest_index`` is the
    half-cycle index at which motion stops (0 = never started, None = no
    arrest within ``k_max``); ``rest_angle`` is the angle held afterwards.
    """

    modal: RingdownModal
    z0: int
    t1: float
    s0: int
    theta1: float
    arrest_index: int | None
    rest_angle: float
    k_max: int = DEFAULT_K_MAX

    @property
    def half_period(self) -> float:
        return math.pi / self.modal.omega_d

    def turning_time(self, k: int) -> float:
        """Start instant of half-cycle k >= 1 (arithmetic sequence)."""
        if k < 1:
            raise DomainError("turning times are defined for k >= 1")
        return self.t1 + (k - 1) * self.half_period

    @property
    def arrest_time(self) -> float | None:
        if self.arrest_index is None:
            return None
        if self.arrest_index == 0:
            return 0.0
        return self.turning_time(self.arrest_index)


def _phase_lag(zeta: float) -> float:
    """Phase offset atan(zeta / sqrt(1 - zeta^2)) of each turning point."""
    return math.atan2(zeta, math.sqrt(1.0 - zeta * zeta))


def _decrement_sum(m, a):
    """Geometric-series factor (1 - e^(-m a)) / (1 - e^(-a)), linear limit m at a = 0."""
    if a == 0.0:
        return np.asarray(m, dtype=float)
    return np.expm1(-a * np.asarray(m, dtype=float)) / math.expm1(-a)


def _envelope(schedule: HalfCycleSchedule, k):
    """Turning-point amplitude coefficient for half-cycle index array k >= 1."""
    zeta = schedule.modal.zeta
    root = math.sqrt(1.0 - zeta * zeta)
    a = math.pi * zeta / root
    m = np.asarray(k, dtype=float) - 1.0
    return schedule.theta1 * np.exp(-a * m) - (
        2.0 * schedule.modal.theta_f / root
    ) * _decrement_sum(m, a)


def envelope_amplitude(schedule: HalfCycleSchedule, k: int) -> float:
    """Closed-form amplitude coefficient of half-cycle k (k >= 1, before arrest)."""
    if k < 1:
        raise DomainError("envelope_amplitude is defined for k >= 1")
    if schedule.arrest_index is not None and k >= schedule.arrest_index:
        raise DomainError(
            f"half-cycle {k} is at or beyond the arrest index {schedule.arrest_index}"
        )
    return float(_envelope(schedule, k))


def _theta_k(theta1: float, zeta: float, theta_f: float, k: int) -> float:
    """Scalar turning-point amplitude coefficient of half-cycle k >= 1."""
    root = math.sqrt(1.0 - zeta * zeta)
    a = math.pi * zeta / root
    m = float(k - 1)
    if a == 0.0:
        return theta1 - (2.0 * theta_f / root) * m
    return theta1 * math.exp(-a * m) - (2.0 * theta_f / root) * (
        math.expm1(-a * m) / math.expm1(-a)
    )


def _find_arrest(theta1: float, zeta: float, theta_f: float, k_max: int) -> int | None:
    """Smallest k >= 1 whose amplitude coefficient drops to or below zero.

    Solved in closed form from the geometric envelope, then nudged onto the
    exact integer by direct evaluation; None when no arrest occurs within
    k_max half-cycles.
    """
    if theta1 <= 0.0:
        return 1
    if theta_f == 0.0:
        return None  # pure viscous decay never reaches zero
    root = math.sqrt(1.0 - zeta * zeta)
    a = math.pi * zeta / root
    if zeta == 0.0:
        m_star = math.ceil(theta1 * root / (2.0 * theta_f))
    else:
        gamma = 2.0 * theta_f / (root * -math.expm1(-a))
        m_star = math.ceil(math.log(gamma / (theta1 + gamma)) / -a)
    k = max(1, m_star + 1)
    while k > 1 and _theta_k(theta1, zeta, theta_f, k - 1) <= 0.0:
        k -= 1
    while _theta_k(theta1, zeta, theta_f, k) > 0.0:
        k += 1
        if k - 1 > k_max:
            return None
    return k if k <= k_max else None


def _rest_angle(modal: RingdownModal, t1: float, s0: int, theta1: float,
                arrest_index: int) -> float:
    """Angle at the arrest turning point, evaluated from the last live segment."""
    zeta, wn, wd, thf = modal.zeta, modal.omega_n, modal.omega_d, modal.theta_f
    if arrest_index == 1:
        return (modal.theta0_amp * math.exp(-zeta * wn * t1)
                * math.cos(wd * t1 + modal.phi0) - s0 * thf)
    k = arrest_index - 1
    s_k = s0 * (-1) ** k
    phi_k = -_phase_lag(zeta) + (1 + s_k) * (math.pi / 2.0)
    dt = math.pi / wd
    theta_k = _theta_k(theta1, zeta, thf, k)
    return (theta_k * math.exp(-zeta * wn * dt) * math.cos(wd * dt + phi_k)
            - s_k * thf)


def schedule_from_modal(modal: RingdownModal, *, s0: int | None = None,
                        k_max: int = DEFAULT_K_MAX) -> HalfCycleSchedule:
    """Build the half-cycle schedule directly from the five modal parameters.

    This is the parameterization used when fitting measured ringdowns: the
    amplitude/phase pair of the initial segment is given, and the branch
    integer, first turning time, initial velocity sign, and first
    turning-point amplitude follow from it.
    """
    if modal.zeta >= 1.0:
        raise DomainError("schedule requires zeta < 1")
    if modal.zeta > ZETA_VALIDITY_LIMIT:
        warnings.warn(
            f"zeta = {modal.zeta:.3g} exceeds the validated weak-damping range "
            f"(<= {ZETA_VALIDITY_LIMIT}); half-cycle phases may be unreliable",
            WeakDampingAssumptionWarning,
            stacklevel=2,
        )
    zeta, wd, thf = modal.zeta, modal.omega_d, modal.theta_f
    lag = _phase_lag(zeta)

    if s0 is None:
        arg = (zeta / math.sqrt(1.0 - zeta * zeta)) * math.cos(modal.phi0) + math.sin(modal.phi0)
        if arg != 0.0:
            s0 = -1 if arg > 0.0 else 1
        else:
            # Extremum start: first motion heads toward equilibrium.
            s0 = -1 if math.cos(modal.phi0) >= 0.0 else 1

    x = -(lag + modal.phi0) / math.pi
    z0 = math.floor(x)
    t1 = -(lag + z0 * math.pi + modal.phi0) / wd
    if t1 <= 1e-9 * math.pi / wd:
        # The formula's smallest root is the start instant itself (an
        # extremum start, up to roundoff); the first turning is one branch
        # later.
        z0 -= 1
        t1 = -(lag + z0 * math.pi + modal.phi0) / wd

    root = math.sqrt(1.0 - zeta * zeta)
    theta1 = (modal.theta0_amp * math.exp(-zeta * modal.omega_n * t1)
              * math.cos(wd * t1 + modal.phi0) / (s0 * root)
              - 2.0 * thf / root)

    arrest = _find_arrest(theta1, zeta, thf, k_max)
    rest = math.nan if arrest is None else _rest_angle(modal, t1, s0, theta1, arrest)
    return HalfCycleSchedule(modal, z0, t1, s0, theta1, arrest, rest, k_max)


def build_schedule(modal: RingdownModal, theta0: float, omega0: float,
                   k_max: int = DEFAULT_K_MAX) -> HalfCycleSchedule:
    """Build the schedule from physical initial conditions (angle, velocity).

    Inverts the initial-segment amplitude/phase from (theta0, omega0); the
    amplitude and phase stored on the given modal set are ignored. A release
    inside the friction band with zero velocity never starts moving and
    yields an arrested-at-start schedule.
    """
    zeta, wd, thf = modal.zeta, modal.omega_d, modal.theta_f
    if theta0 == 0.0 and omega0 == 0.0:
        raise DomainError("degenerate start: theta0 and omega0 are both zero")
    if omega0 == 0.0 and abs(theta0) <= thf:
        return HalfCycleSchedule(modal, 0, math.nan, 0, math.nan,
                                 arrest_index=0, rest_angle=theta0, k_max=k_max)
    if omega0 != 0.0:
        s0 = 1 if omega0 > 0.0 else -1
    else:
        s0 = -1 if theta0 > 0.0 else 1
    ratio = zeta / math.sqrt(1.0 - zeta * zeta)
    a = theta0 + s0 * thf
    b = -omega0 / wd - ratio * a
    theta0_amp = math.hypot(a, b)
    phi0 = math.atan2(b, a)
    if phi0 <= -math.pi:
        phi0 = math.pi
    full = RingdownModal(modal.omega_n, zeta, thf, theta0_amp, phi0)
    return schedule_from_modal(full, s0=s0, k_max=k_max)


def detect_arrest(schedule: HalfCycleSchedule) -> int | None:
    """Half-cycle index at which motion freezes, or None if none within k_max."""
    return schedule.arrest_index


def viscous_response(modal: RingdownModal, times) -> np.ndarray:
    """Angle samples of the solely-viscous decay; the dry friction angle is ignored."""
    t = np.asarray(times, dtype=float)
    return (modal.theta0_amp * np.exp(-modal.zeta * modal.omega_n * t)
            * np.cos(modal.omega_d * t + modal.phi0))


def _split_indices(schedule: HalfCycleSchedule, t: np.ndarray):
    """Half-cycle index per sample: 0 before the first turning, then 1, 2, ..."""
    k = np.zeros(t.shape, dtype=np.int64)
    late = t >= schedule.t1
    k[late] = np.floor(schedule.modal.omega_d * (t[late] - schedule.t1) / math.pi).astype(np.int64) + 1
    return k


def combined_response(schedule: HalfCycleSchedule, times) -> np.ndarray:
    """Angle samples of the combined viscous-plus-dry ringdown.

    Each sample is assigned to its half-cycle, whose damped-cosine segment is
    evaluated directly; samples at or past the arrest instant hold the rest
    angle.
    """
    modal = schedule.modal
    t = np.asarray(times, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.empty(t.shape, dtype=float)

    if schedule.arrest_index == 0:
        out[:] = schedule.rest_angle
        return out[0] if scalar else out

    zeta, wn, wd, thf = modal.zeta, modal.omega_n, modal.omega_d, modal.theta_f
    k = _split_indices(schedule, t)
    if schedule.arrest_index is not None:
        frozen = k >= schedule.arrest_index
        out[frozen] = schedule.rest_angle
    else:
        frozen = np.zeros(t.shape, dtype=bool)

    first = ~frozen & (k == 0)
    out[first] = (modal.theta0_amp * np.exp(-zeta * wn * t[first])
                  * np.cos(wd * t[first] + modal.phi0) - schedule.s0 * thf)

    live = ~frozen & (k >= 1)
    if np.any(live):
        kl = k[live]
        tk = schedule.t1 + (kl - 1) * (math.pi / wd)
        theta_k = _envelope(schedule, kl)
        s_k = schedule.s0 * np.where(kl % 2 == 0, 1, -1)
        phi_k = -_phase_lag(zeta) + (1 + s_k) * (math.pi / 2.0)
        tau = t[live] - tk
        out[live] = theta_k * np.exp(-zeta * wn * tau) * np.cos(wd * tau + phi_k) - s_k * thf
    return out[0] if scalar else out


def combined_velocity(schedule: HalfCycleSchedule, times) -> np.ndarray:
    """Angular-velocity samples of the combined-damping ringdown (zero after arrest)."""
    modal = schedule.modal
    t = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.zeros(t.shape, dtype=float)
    if schedule.arrest_index == 0:
        return out

    zeta, wn, wd, thf = modal.zeta, modal.omega_n, modal.omega_d, modal.theta_f
    ratio = zeta / math.sqrt(1.0 - zeta * zeta)
    k = _split_indices(schedule, t)
    live = np.ones(t.shape, dtype=bool)
    if schedule.arrest_index is not None:
        live = k < schedule.arrest_index

    first = live & (k == 0)
    ph = wd * t[first] + modal.phi0
    out[first] = (-wd * modal.theta0_amp * np.exp(-zeta * wn * t[first])
                  * (ratio * np.cos(ph) + np.sin(ph)))

    later = live & (k >= 1)
    if np.any(later):
        kl = k[later]
        tk = schedule.t1 + (kl - 1) * (math.pi / wd)
        theta_k = _envelope(schedule, kl)
        s_k = schedule.s0 * np.where(kl % 2 == 0, 1, -1)
        phi_k = -_phase_lag(zeta) + (1 + s_k) * (math.pi / 2.0)
        tau = t[later] - tk
        ph = wd * tau + phi_k
        out[later] = (-wd * theta_k * np.exp(-zeta * wn * tau)
                      * (ratio * np.cos(ph) + np.sin(ph)))
    return out
