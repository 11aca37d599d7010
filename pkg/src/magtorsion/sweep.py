"""Forced frequency-response protocol with initial-condition continuation.

Each sweep point drives the coupled system at one frequency until steady
state, extracts the fundamental amplitude and phase from an integer-cycle
window, and seeds the next point's initial angle with the amplitude just
found, which lets the time-marching simulation track the branch selected by
the sweep direction. Points within one sweep are therefore strictly
sequential; distinct sweeps (directions, drive levels) are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels
from .errors import DataError, DomainError
from .models import CoilParams, MechanicalParams, normalize_params
from .odesim import SWEEP_SETTINGS, IntegratorSettings, Trajectory

DEFAULT_N_FFT = 32
DEFAULT_SAMPLES_PER_CYCLE = 64
MIN_TRANSIENT_CYCLES = 200


@dataclass(frozen=True)
class DriveSchedule:
    """Ordered per-point (frequency Hz, voltage amplitude V) drive plan."""

    points: tuple[tuple[float, float], ...]
    direction: str  # 'forward' | 'backward'

    def __post_init__(self):
        if self.direction not in ("forward", "backward"):
            raise DomainError("direction must be 'forward' or 'backward'")
        if len(self.points) == 0:
            raise DomainError("drive schedule must not be empty")
        f = np.array([p[0] for p in self.points])
        u = np.array([p[1] for p in self.points])
        step = np.diff(f)
        if self.direction == "forward" and np.any(step <= 0.0):
            raise DomainError("forward schedule frequencies must strictly increase")
        if self.direction == "backward" and np.any(step >= 0.0):
            raise DomainError("backward schedule frequencies must strictly decrease")
        if np.any(f <= 0.0):
            raise DomainError("drive frequencies must be strictly positive")
        if np.any(u < 0.0):
            raise DomainError("drive amplitudes must be non-negative")

    @classmethod
    def from_grid(cls, f_start: float, f_stop: float, f_step: float, u_amp: float,
                  direction: str = "forward") -> "DriveSchedule":
        """Uniform grid from f_start to f_stop inclusive, one flat drive level."""
        if not f_step > 0.0:
            raise DomainError("f_step must be strictly positive")
        n = int(round((f_stop - f_start) / f_step)) + 1
        freqs = f_start + f_step * np.arange(n)
        if direction == "backward":
            freqs = freqs[::-1]
        return cls(tuple((float(f), float(u_amp)) for f in freqs), direction)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @property
    def freq_step(self) -> float:
        """Representative grid spacing (median absolute step)."""
        if len(self.points) < 2:
            return 0.0
        return float(np.median(np.abs(np.diff(self.frequencies))))


@dataclass(frozen=True)
class SweepResult:
    """Per-frequency steady-state response of one sweep direction and level."""

    f_hz: np.ndarray
    theta_amp: np.ndarray
    i_amp: np.ndarray
    theta_phase: np.ndarray
    converged: np.ndarray
    direction: str
    label: str = ""
    level: float = 0.0

    def __len__(self) -> int:
        return len(self.f_hz)


def _wrap_phase(phi: float) -> float:
    out = math.remainder(phi, 2.0 * math.pi)
    if out <= -math.pi:
        out = math.pi
    return out


def _window_phasor(x: np.ndarray, n_cycles: int) -> tuple[float, float]:
    """Amplitude and start-referenced phase of the bin at n_cycles per window."""
    spectrum = np.fft.rfft(x)
    if n_cycles >= len(spectrum):
        raise DataError("analysis window has too few samples per cycle")
    coef = spectrum[n_cycles]
    n = len(x)
    return 2.0 * abs(coef) / n, float(np.angle(coef))


def default_transient_cycles(p: MechanicalParams, f_ext: float) -> int:
    """Drive cycles to integrate before the analysis window.

    Five viscous time constants expressed in drive cycles, floored at
    MIN_TRANSIENT_CYCLES; the floor alone applies for an undamped rotor.
    """
    omega_n, zeta, _ = normalize_params(p)
    if zeta <= 0.0:
        return MIN_TRANSIENT_CYCLES
    return max(MIN_TRANSIENT_CYCLES, int(math.ceil(5.0 * f_ext / (zeta * omega_n))))


def run_sweep(p: MechanicalParams, coil: CoilParams, sched: DriveSchedule,
              settings: IntegratorSettings = SWEEP_SETTINGS, *,
              n_transient: int | None = None, n_fft: int = DEFAULT_N_FFT,
              samples_per_cycle: int = DEFAULT_SAMPLES_PER_CYCLE,
              label: str = "", linearized: bool = False) -> SweepResult:
    """Run one continuation sweep over the drive schedule.

    Point 0 starts from rest; every later point restarts from the previous
    steady amplitude with zero velocity and zero coil current. The restart
    angle carries the sign of the previous response's in-phase component:
    the drive clock restarts at its maximum, and that is the displacement
    sign state continuity implies there. Without it the continuation falls
    off the resonant branch inside the bistable window and the sweep
    direction stops mattering. An integrator failure flags the point as
    unconverged and the sweep moves on.
    """
    n_pts = len(sched.points)
    theta_amp = np.zeros(n_pts)
    i_amp = np.zeros(n_pts)
    theta_phase = np.zeros(n_pts)
    converged = np.zeros(n_pts, dtype=bool)

    n_window = n_fft * samples_per_cycle
    out_theta = np.empty(n_window)
    out_omega = np.empty(n_window)
    out_i = np.empty(n_window)

    theta_start = 0.0
    for idx, (f_ext, u_amp) in enumerate(sched.points):
        n_tr = n_transient if n_transient is not None else default_transient_cycles(p, f_ext)
        period = 1.0 / f_ext
        sample_times = (n_tr + np.arange(n_window) / samples_per_cycle) * period
        status, *_ = _kernels.harmonic_point(
            p.inertia, p.viscous_c, p.dry_tf, p.spring_tamp,
            coil.resistance, coil.inductance, coil.k_t, coil.k_emf,
            u_amp, f_ext, theta_start, 0.0, 0.0,
            sample_times, out_theta, out_omega, out_i,
            settings.rel_tol, settings.abs_tol, settings.max_step,
            settings.coulomb_epsilon, linearized,
        )
        amp, phase = _window_phasor(out_theta, n_fft)
        cur_amp, _ = _window_phasor(out_i, n_fft)
        theta_amp[idx] = amp
        i_amp[idx] = cur_amp
        theta_phase[idx] = _wrap_phase(phase)
        converged[idx] = status == _kernels.OK
        theta_start = math.copysign(amp, math.cos(phase))
    return SweepResult(sched.frequencies, theta_amp, i_amp, theta_phase, converged,
                       sched.direction, label=label,
                       level=float(np.mean(sched.amplitudes)))


def steady_state_amplitude(traj: Trajectory, f_ext: float,
                           n_cycles: int) -> tuple[float, float]:
    """Fundamental amplitude and phase of the final n_cycles drive cycles.

    The window is resampled to an exact integer number of samples per cycle
    (taken verbatim when the trajectory grid already aligns), so the drive
    line falls on a single leakage-free bin. The phase is referenced to
    cos(2 pi f_ext t) on the trajectory's absolute time axis.
    """
    if n_cycles < 1:
        raise DomainError("n_cycles must be at least 1")
    t = traj.times
    dt = float(np.median(np.diff(t)))
    if np.max(np.abs(np.diff(t) - dt)) > 1e-9 * dt:
        raise DataError("steady_state_amplitude needs uniform sampling")
    span = t[-1] - t[0]
    window = n_cycles / f_ext
    # A DFT window of N samples covers N*dt seconds while the samples span
    # only (N-1)*dt, hence the one-sample slack.
    if span + dt * (1.0 + 1e-9) < window:
        raise DataError(
            f"trajectory spans {span:.6g} s; {n_cycles} cycles need {window:.6g} s"
        )
    per_cycle = 1.0 / (f_ext * dt)
    if abs(per_cycle - round(per_cycle)) < 1e-9 and round(per_cycle) >= 2:
        m = n_cycles * int(round(per_cycle))
        x = traj.theta[-m:]
        t_w0 = t[len(t) - m]
    else:
        per = max(16, int(math.ceil(per_cycle)))
        m = n_cycles * per
        t_w0 = t[-1] - window
        grid = t_w0 + np.arange(m) * (window / m)
        x = CubicSpline(t, traj.theta)(grid)
    amp, phase = _window_phasor(x, n_cycles)
    return amp, _wrap_phase(phase - 2.0 * math.pi * f_ext * t_w0)


def extract_backbone(sweeps: list[SweepResult]) -> list[tuple[float, float]]:
    """Peak (frequency, amplitude) per drive level, ordered by drive level.

    Both directions of one level are pooled; the level is identified by the
    result's ``level`` field.
    """
    by_level: dict[float, list[SweepResult]] = {}
    for s in sweeps:
        by_level.setdefault(s.level, []).append(s)
    backbone = []
    for level in sorted(by_level):
        group = by_level[level]
        f_all = np.concatenate([s.f_hz for s in group])
        a_all = np.concatenate([s.theta_amp for s in group])
        k = int(np.argmax(a_all))
        backbone.append((float(f_all[k]), float(a_all[k])))
    return backbone


def classify_nonlinearity(backbone: list[tuple[float, float]],
                          freq_tol: float) -> str:
    """Label the backbone's frequency trend across increasing drive levels.

    ``freq_tol`` is the frequency resolution of the sweeps (one grid step):
    smaller peak shifts are indistinguishable from a flat backbone.
    """
    if len(backbone) < 2:
        return "inconclusive"
    f = np.array([b[0] for b in backbone])
    steps = np.diff(f)
    signs = np.where(steps <= -freq_tol, -1, np.where(steps >= freq_tol, 1, 0))
    if np.all(signs == -1):
        return "softening"
    if np.all(signs == 0):
        return "linear"
    if signs[0] == 1:
        flip = np.flatnonzero(signs == -1)
        if len(flip) > 0:
            k = flip[0]
            if np.all(signs[:k] == 1) and np.all(signs[k:] == -1):
                return "stiffening-then-softening"
    return "inconclusive"


@dataclass(frozen=True)
class JumpReport:
    fwd_jump_f: float
    bwd_jump_f: float
    fwd_delta_amp: float
    bwd_delta_amp: float
    freq_step: float
    hysteresis: bool


def detect_jumps(forward: SweepResult, backward: SweepResult) -> JumpReport:
    """Largest single-step amplitude change per direction, plus a hysteresis flag.

    A jump location is the midpoint of its frequency step; hysteresis is
    declared when the two locations differ by more than one grid step.
    """
    if len(forward) != len(backward) or not np.allclose(
        np.sort(forward.f_hz), np.sort(backward.f_hz), rtol=0.0, atol=1e-12
    ):
        raise DataError("forward and backward sweeps cover different frequency sets")
    if len(forward) < 2:
        raise DataError("jump detection needs at least 2 sweep points")

    def biggest(res: SweepResult) -> tuple[float, float]:
        d = np.diff(res.theta_amp)
        k = int(np.argmax(np.abs(d)))
        return 0.5 * (res.f_hz[k] + res.f_hz[k + 1]), float(d[k])

    step = float(np.median(np.abs(np.diff(forward.f_hz))))
    fwd_f, fwd_d = biggest(forward)
    bwd_f, bwd_d = biggest(backward)
    return JumpReport(fwd_f, bwd_f, fwd_d, bwd_d, step,
                      hysteresis=abs(fwd_f - bwd_f) > step * (1.0 + 1e-9))
