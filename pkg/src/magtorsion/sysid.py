"""Identification procedures: ringdown fits, calibrations, coupling and coil fits.

Ringdown fitting follows the measured pipeline: trim the record to the
small-angle band, low-pass it, then run a multi-start nonlinear least-squares
search against either the solely-viscous decay or the combined-damping
closed form. All other fits are linear regressions in a transformed space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import butter, sosfiltfilt

from .errors import DataError, DomainError, NumericalError
from .models import RingdownModal
from .ringdown import WeakDampingAssumptionWarning, combined_response, schedule_from_modal

DEFAULT_N_STARTS = 64
DEFAULT_TRIM_UPPER = math.radians(15.0)
DEFAULT_TRIM_LOWER = math.radians(2.5)
# 100x the oscillation frequency can exceed Nyquist at realistic sampling
# rates; the default cutoff is clamped to this fraction of the sample rate.
CUTOFF_CLAMP_FRACTION = 0.45


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled record: start time, spacing, values, unit tag."""

    t0: float
    dt: float
    values: np.ndarray
    unit: str = "rad"

    def __post_init__(self):
        if not self.dt > 0.0:
            raise DomainError("dt must be strictly positive")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 1 or len(self.values) < 2:
            raise DataError("TimeSeries needs at least 2 samples")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class PhasorSample:
    """One steady-state amplitude/phase reading at a single frequency."""

    freq: float
    amplitude: float
    phase: float
    unit: str = ""

    def __post_init__(self):
        if self.amplitude < 0.0:
            raise DomainError("phasor amplitude must be non-negative")
        if not -math.pi < self.phase <= math.pi:
            raise DomainError("phasor phase must lie in (-pi, pi]")


@dataclass
class FitReport:
    parameters: dict[str, float]
    sse: float
    r_squared: float
    n_starts_used: int
    converged: bool
    notes: dict = field(default_factory=dict)


class SlopeFit(NamedTuple):
    value: float
    r_squared: float


def dominant_frequency(series: TimeSeries) -> float:
    """Frequency (Hz) of the largest non-DC spectral line.

    The peak bin is refined by quadratic interpolation of the log magnitude
    against its two neighbours.
    """
    if len(series) < 16:
        raise DataError("dominant_frequency needs at least 16 samples")
    mag = np.abs(np.fft.rfft(series.values))
    if len(mag) < 2:
        raise DataError("series too short for a non-DC bin")
    k = 1 + int(np.argmax(mag[1:]))
    floor = 1e-12 * mag[0]
    if mag[k] <= floor or mag[k] == 0.0:
        raise DataError("flat signal: no non-DC spectral content")
    df = 1.0 / (len(series) * series.dt)
    delta = 0.0
    if 1 <= k - 1 and k + 1 < len(mag) and mag[k - 1] > 0.0 and mag[k + 1] > 0.0:
        left, center, right = np.log(mag[k - 1 : k + 2])
        denom = left - 2.0 * center + right
        if denom != 0.0:
            delta = float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))
    return (k + delta) * df


def default_cutoff(series: TimeSeries) -> tuple[float, bool]:
    """Default low-pass cutoff: 100x the dominant frequency, Nyquist-clamped.

    Returns (cutoff_hz, clamped).
    """
    raw = 100.0 * dominant_frequency(series)
    limit = CUTOFF_CLAMP_FRACTION / series.dt
    return (limit, True) if raw > limit else (raw, False)


def lowpass(series: TimeSeries, cutoff: float | None = None) -> TimeSeries:
    """Fifth-order Butterworth low-pass applied forward-backward (zero phase)."""
    if cutoff is None:
        cutoff, _ = default_cutoff(series)
    nyquist = 0.5 / series.dt
    if not 0.0 < cutoff < nyquist:
        raise DomainError(f"cutoff {cutoff} Hz outside (0, {nyquist}) Hz")
    sos = butter(5, cutoff, btype="low", fs=1.0 / series.dt, output="sos")
    return TimeSeries(series.t0, series.dt, sosfiltfilt(sos, series.values), series.unit)


def _local_extrema(values: np.ndarray) -> np.ndarray:
    """Indices of strict interior turning points of the sampled signal."""
    d = np.diff(values)
    return 1 + np.flatnonzero(d[:-1] * d[1:] < 0.0)


def trim_to_band(series: TimeSeries, upper: float = DEFAULT_TRIM_UPPER,
                 lower: float = DEFAULT_TRIM_LOWER) -> TimeSeries:
    """Segment between the first extremum inside the upper bound and the
    last extremum still above the lower bound."""
    if not (math.isfinite(upper) and math.isfinite(lower) and upper > lower > 0.0):
        raise DomainError("trim band must satisfy finite upper > lower > 0")
    ext = _local_extrema(series.values)
    if len(ext) == 0:
        raise DataError("no oscillation extrema found in series")
    amp = np.abs(series.values[ext])
    start_candidates = ext[amp <= upper]
    end_candidates = ext[amp >= lower]
    if len(start_candidates) == 0 or len(end_candidates) == 0:
        raise DataError("amplitude never enters the requested band")
    i0, i1 = int(start_candidates[0]), int(end_candidates[-1])
    if i0 > i1:
        raise DataError("amplitude never enters the requested band")
    return TimeSeries(series.t0 + i0 * series.dt, series.dt,
                      series.values[i0 : i1 + 1], series.unit)


def _viscous_model(t, params):
    wn, zeta, theta0, phi0 = params
    wd = wn * math.sqrt(1.0 - zeta * zeta)
    return theta0 * np.exp(-zeta * wn * t) * np.cos(wd * t + phi0)


def _combined_model(t, params, s0=None):
    wn, zeta, theta_f, theta0, phi0 = params
    modal = RingdownModal(wn, zeta, theta_f, theta0, phi0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WeakDampingAssumptionWarning)
        sched = schedule_from_modal(modal, s0=s0)
    return combined_response(sched, t)


def _refine(t, y, model, x0, lo, hi):
    """One bounded local least-squares run; returns (sse, x, success) or None.

    x_scale='jac' equalizes parameters spanning several decades (rad/s
    frequencies next to 1e-4-level damping ratios).
    """
    try:
        res = least_squares(lambda p: model(t, p) - y, x0, bounds=(lo, hi),
                            method="trf", x_scale="jac",
                            ftol=1e-12, xtol=1e-14, gtol=1e-14,
                            max_nfev=200 * (len(x0) + 1))
    except (ValueError, DomainError):
        return None
    return float(np.sum(res.fun**2)), res.x, res.status > 0


def _multistart(t, y, model, bounds, n_starts, seed, informed=None):
    """Best-of-n randomized local least-squares fits; deterministic per seed.

    ``informed`` adds one extra data-derived starting point ahead of the
    random draws.
    """
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    starts = [] if informed is None else [np.clip(informed, lo, hi)]
    starts += [rng.uniform(lo, hi) for _ in range(n_starts)]
    best = None
    converged = False
    for x0 in starts:
        out = _refine(t, y, model, x0, lo, hi)
        if out is None:
            continue
        sse, x, ok = out
        if best is None or sse < best[0]:
            best = (sse, x)
            converged = converged or ok
    if best is None:
        raise NumericalError("no multi-start fit converged")
    return best[0], best[1], converged


def _r_squared(y, sse):
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 if ss_tot == 0.0 else 1.0 - sse / ss_tot


def _ringdown_bounds(series: TimeSeries):
    w_est = 2.0 * math.pi * dominant_frequency(series)
    amp = float(np.max(np.abs(series.values)))
    return w_est, amp


def fit_viscous_model(series: TimeSeries, n_starts: int = DEFAULT_N_STARTS,
                      seed: int = 0) -> FitReport:
    """Multi-start fit of the solely-viscous decay to an angle record."""
    w_est, amp = _ringdown_bounds(series)
    bounds = [(0.8 * w_est, 1.2 * w_est), (1e-5, 0.5),
              (0.5 * amp, 2.0 * amp), (-math.pi + 1e-9, math.pi)]
    t = series.times - series.t0
    informed = [w_est, 1e-3, amp, 0.0]
    sse, x, ok = _multistart(t, series.values, _viscous_model, bounds,
                             n_starts, seed, informed=informed)
    return FitReport(
        parameters={"omega_n_rad_per_s": x[0], "zeta": x[1],
                    "theta0_amp_rad": x[2], "phi0_rad": x[3]},
        sse=sse, r_squared=_r_squared(series.values, sse),
        n_starts_used=n_starts, converged=ok,
    )


def _degauge_sliver(x, t, y, lo, hi):
    """Re-polish a fit whose leading half-cycle degenerated to a sliver.

    A record that starts at an extremum can be parameterized equivalently
    with a near-zero first segment of flipped velocity sign; that surrogate
    is a shallow local minimum whose amplitude is biased by twice the
    friction angle. Restarting from the gauge-fixed parameters (the first
    turning amplitude and an extremum-start phase) lets the optimizer reach
    the clean minimum; the better sum of squares wins.
    """
    wn, zeta, theta_f, theta0, phi0 = x
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WeakDampingAssumptionWarning)
        sched = schedule_from_modal(RingdownModal(wn, zeta, theta_f, theta0, phi0))
    half = math.pi / sched.modal.omega_d
    if sched.t1 > 1e-3 * half or sched.theta1 <= 0.0:
        return None
    lag = math.atan2(zeta, math.sqrt(1.0 - zeta * zeta))
    nudge = 1e-9
    phi0_c = (-lag + nudge) if sched.s0 == 1 else (math.pi - lag + nudge)
    x0 = np.clip([wn, zeta, theta_f, sched.theta1, phi0_c], lo, hi)
    return _refine(t, y, _combined_model, x0, lo, hi)


def fit_combined_model(series: TimeSeries, n_starts: int = DEFAULT_N_STARTS,
                       seed: int = 0) -> FitReport:
    """Multi-start fit of the combined viscous-plus-dry closed form."""
    w_est, amp = _ringdown_bounds(series)
    bounds = [(0.8 * w_est, 1.2 * w_est), (1e-5, 0.5), (0.0, amp / 4.0),
              (0.5 * amp, 2.0 * amp), (-math.pi + 1e-9, math.pi)]
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    t = series.times - series.t0
    informed = [w_est, 1e-3, 1e-3 * amp, amp, 0.0]
    sse, x, ok = _multistart(t, series.values, _combined_model, bounds,
                             n_starts, seed, informed=informed)
    polished = _degauge_sliver(x, t, series.values, lo, hi)
    if polished is not None and polished[0] < sse:
        sse, x, _ = polished
    return FitReport(
        parameters={"omega_n_rad_per_s": x[0], "zeta": x[1], "theta_f_rad": x[2],
                    "theta0_amp_rad": x[3], "phi0_rad": x[4]},
        sse=sse, r_squared=_r_squared(series.values, sse),
        n_starts_used=n_starts, converged=ok,
    )


def fit_calibration(pairs) -> tuple[float, float]:
    """Least squares of sensor voltage = A sin(angle) + B; returns (A, B)."""
    pts = np.asarray(pairs, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise DataError("fit_calibration needs at least 3 (angle, voltage) pairs")
    theta, v = pts[:, 0], pts[:, 1]
    if theta.max() - theta.min() <= math.radians(10.0):
        raise DataError("calibration angles must span more than 10 degrees")
    design = np.column_stack([np.sin(theta), np.ones_like(theta)])
    (a, b), *_ = np.linalg.lstsq(design, v, rcond=None)
    return float(a), float(b)


def delta_angle(delta_v: float, a: float) -> float:
    """Invert the sinusoidal calibration: angle change from a voltage change."""
    if abs(delta_v) > abs(a):
        raise DomainError(f"|delta_v| = {abs(delta_v)} exceeds |A| = {abs(a)}")
    return math.asin(delta_v / a)


def _zero_intercept_slope(x: np.ndarray, y: np.ndarray, what: str,
                          scale: float | None = None) -> SlopeFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    # Regressors at roundoff level (e.g. currents projected through
    # cos(pi/2)) count as zero.
    if scale is None:
        scale = float(np.max(np.abs(x))) if len(x) else 0.0
    nz = x[np.abs(x) > 1e-9 * scale]
    if len(np.unique(nz)) < 2:
        raise DataError(f"{what}: need at least 2 distinct nonzero regressor values")
    slope = float(np.dot(x, y) / np.dot(x, x))
    sse = float(np.sum((y - slope * x) ** 2))
    return SlopeFit(slope, _r_squared(y, sse))


def fit_torque_coupling(samples) -> SlopeFit:
    """Torque coupling coefficient from (torque, current, angle) samples."""
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
        raise DataError("fit_torque_coupling needs at least 2 (torque, i, theta) samples")
    torque, i, theta = pts[:, 0], pts[:, 1], pts[:, 2]
    return _zero_intercept_slope(i * np.cos(theta), torque, "fit_torque_coupling",
                                 scale=float(np.max(np.abs(i))))


def fit_emf_coupling(samples) -> SlopeFit:
    """Back-EMF coupling coefficient from (voltage, velocity, angle) samples."""
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
        raise DataError("fit_emf_coupling needs at least 2 (u, omega, theta) samples")
    u, omega, theta = pts[:, 0], pts[:, 1], pts[:, 2]
    return _zero_intercept_slope(omega * np.cos(theta), u, "fit_emf_coupling",
                                 scale=float(np.max(np.abs(omega))))


def fit_impedance(points) -> tuple[float, float]:
    """Coil resistance and inductance from (frequency, |Z|) sweep data.

    |Z|^2 is linear in f^2 with intercept R^2 and slope (2 pi L)^2.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise DataError("fit_impedance needs at least 2 (f, |Z|) points")
    f, z = pts[:, 0], pts[:, 1]
    if len(np.unique(f)) < 2:
        raise DataError("fit_impedance needs at least 2 distinct frequencies")
    slope, intercept = np.polyfit(f**2, z**2, 1)
    if intercept < 0.0 or slope < 0.0:
        raise DataError(
            f"non-physical impedance fit: intercept = {intercept}, slope = {slope}"
        )
    return float(math.sqrt(intercept)), float(math.sqrt(slope) / (2.0 * math.pi))


def extract_rotor_field(net: PhasorSample, current: PhasorSample, b_i: float) -> float:
    """Rotor-field magnitude after subtracting the coil's own field phasor."""
    if not math.isclose(net.freq, current.freq, rel_tol=1e-9, abs_tol=0.0):
        raise DataError(f"frequency mismatch: {net.freq} Hz vs {current.freq} Hz")
    phi = net.phase - current.phase
    in_phase = net.amplitude * math.cos(phi) - b_i * current.amplitude
    quad = net.amplitude * math.sin(phi)
    return math.hypot(in_phase, quad)


def fit_field_constant(points) -> SlopeFit:
    """Sensed-field-per-current constant from (current, field) amplitude pairs."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise DataError("fit_field_constant needs at least 2 (i, B) points")
    return _zero_intercept_slope(pts[:, 0], pts[:, 1], "fit_field_constant")


# Interior coefficients of the 8th-order central first-derivative stencil,
# offsets -4..4.
_CENTRAL8 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0,
                      4 / 5, -1 / 5, 4 / 105, -1 / 280])


def _onesided_weights(offsets: np.ndarray, at: int) -> np.ndarray:
    """First-derivative weights on integer offsets, exact for deg(len-1) polynomials."""
    s = offsets.astype(float) - at
    a = np.vander(s, increasing=True).T
    rhs = np.zeros(len(s))
    rhs[1] = 1.0
    return np.linalg.solve(a, rhs)


def central_derivative(series: TimeSeries, stencil: str = "2-point") -> TimeSeries:
    """Finite-difference derivative with centered interior stencils.

    ``2-point`` is the second-order centered difference, ``8-point`` the
    eighth-order one; endpoints use one-sided stencils of matching order.
    """
    v = series.values
    dt = series.dt
    if stencil == "2-point":
        if len(v) < 3:
            raise DataError("2-point stencil needs at least 3 samples")
        out = np.empty_like(v)
        out[1:-1] = (v[2:] - v[:-2]) / (2.0 * dt)
        out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt)
        out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dt)
    elif stencil == "8-point":
        if len(v) < 9:
            raise DataError("8-point stencil needs at least 9 samples")
        out = np.empty_like(v)
        core = np.zeros(len(v) - 8)
        for j, c in enumerate(_CENTRAL8):
            if c != 0.0:
                core += c * v[j : j + len(core)]
        out[4:-4] = core / dt
        offs = np.arange(9)
        for i in range(4):
            out[i] = np.dot(_onesided_weights(offs, i), v[:9]) / dt
            out[-1 - i] = -np.dot(_onesided_weights(offs, i), v[-9:][::-1]) / dt
    else:
        raise DomainError(f"unknown stencil {stencil!r}; use '2-point' or '8-point'")
    unit = {"rad": "rad/s"}.get(series.unit, series.unit + "/s")
    return TimeSeries(series.t0, series.dt, out, unit)
