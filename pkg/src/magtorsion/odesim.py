"""Numerical integration of the free and the coil-driven oscillator.

The free ringdown is integrated event-exactly: between turning points the
dry-friction torque is a constant, so the dynamics are smooth and an
adaptive embedded Runge-Kutta pair (DOP853) integrates them to tolerance;
each zero-velocity event either arrests the motion (when the spring torque
cannot overcome friction) or flips the friction sign. The driven two-state
electromechanical system instead replaces sgn(velocity) with a steep tanh,
which behaves well under sustained forcing where sticking episodes are
negligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, NumericalError
from .models import CoilParams, MechanicalParams


@dataclass(frozen=True)
class IntegratorSettings:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = math.inf
    coulomb_epsilon: float = 1e-4   # rad/s, tanh regularization scale

    def __post_init__(self):
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise DomainError("tolerances must be strictly positive")
        if not self.coulomb_epsilon > 0.0:
            raise DomainError("coulomb_epsilon must be strictly positive")


# Defaults for oracle duty (cross-checking closed forms) and for sweeps.
ORACLE_SETTINGS = IntegratorSettings(rel_tol=1e-9, abs_tol=1e-12)
SWEEP_SETTINGS = IntegratorSettings(rel_tol=1e-7, abs_tol=1e-10)


@dataclass(frozen=True)
class Trajectory:
    """Uniformly or arbitrarily sampled state history of one integration.

    ``i_coil`` is present only for coupled runs; ``turnings`` holds the
    zero-velocity event times of event-exact free runs.
    """

    times: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    i_coil: np.ndarray | None = None
    turnings: np.ndarray | None = None

    def __post_init__(self):
        if len(self.times) != len(self.theta) or len(self.times) != len(self.omega):
            raise DomainError("trajectory arrays must have equal length")
        if self.i_coil is not None and len(self.i_coil) != len(self.times):
            raise DomainError("trajectory arrays must have equal length")
        if np.any(np.diff(self.times) <= 0.0):
            raise DomainError("trajectory times must be strictly increasing")


def _spring_torque(theta, p: MechanicalParams, spring: str):
    if spring == "linear":
        return p.spring_tamp * theta
    if spring == "sinusoidal":
        return p.spring_tamp * np.sin(theta)
    raise DomainError(f"unknown spring model {spring!r}; use 'linear' or 'sinusoidal'")


def integrate_free(p: MechanicalParams, theta0: float, omega0: float, t_end: float,
                   settings: IntegratorSettings = ORACLE_SETTINGS,
                   spring: str = "linear",
                   times: np.ndarray | None = None) -> Trajectory:
    """Event-exact free ringdown of the combined-damping oscillator.

    Integrates piecewise-smooth dynamics between zero-velocity events; at
    each event the sticking condition |spring torque| <= dry torque either
    freezes the motion or the friction sign flips and integration resumes.
    """
    if not t_end > 0.0:
        raise DomainError("t_end must be strictly positive")
    if times is None:
        period = 2.0 * math.pi / p.omega_n
        n = max(2, int(math.ceil(200.0 * t_end / period)))
        times = np.linspace(0.0, t_end, n)
    else:
        times = np.asarray(times, dtype=float)

    theta_out = np.empty_like(times)
    omega_out = np.empty_like(times)
    turnings: list[float] = []

    # Friction sign of the first segment; released-from-rest motion heads in
    # the direction of the net spring torque, or never starts at all.
    if omega0 != 0.0:
        s = 1.0 if omega0 > 0.0 else -1.0
    else:
        tq = float(_spring_torque(theta0, p, spring))
        if abs(tq) <= p.dry_tf:
            theta_out[:] = theta0
            omega_out[:] = 0.0
            return Trajectory(times, theta_out, omega_out, turnings=np.array([]))
        s = -1.0 if tq > 0.0 else 1.0

    def make_rhs(sign):
        c, tf, j = p.viscous_c, p.dry_tf, p.inertia

        def rhs(t, y):
            th, om = y
            return (om, -(c * om + _spring_torque(th, p, spring) + tf * sign) / j)

        return rhs

    def make_event(sign):
        def ev(t, y):
            return y[1]

        ev.terminal = True
        ev.direction = -sign
        return ev

    t, y = 0.0, np.array([theta0, omega0], dtype=float)
    filled = 0
    while t < t_end:
        sol = solve_ivp(make_rhs(s), (t, t_end), y, method="DOP853",
                        events=make_event(s), dense_output=True,
                        rtol=settings.rel_tol, atol=settings.abs_tol,
                        max_step=settings.max_step)
        if sol.status < 0:
            raise NumericalError(f"free integration failed at t = {t}: {sol.message}")
        seg_end = sol.t[-1]
        hi = np.searchsorted(times, seg_end, side="right")
        if hi > filled:
            chunk = sol.sol(times[filled:hi])
            theta_out[filled:hi] = chunk[0]
            omega_out[filled:hi] = chunk[1]
            filled = hi
        if sol.status != 1:
            break
        t_ev = float(sol.t_events[0][0])
        theta_ev = float(sol.y_events[0][0][0])
        turnings.append(t_ev)
        if abs(float(_spring_torque(theta_ev, p, spring))) <= p.dry_tf:
            theta_out[filled:] = theta_ev
            omega_out[filled:] = 0.0
            filled = len(times)
            break
        s = -s
        t, y = t_ev, np.array([theta_ev, 0.0])
    if filled < len(times):
        # t_end landed exactly on a segment boundary; hold the final state.
        theta_out[filled:] = y[0]
        omega_out[filled:] = y[1]
    return Trajectory(times, theta_out, omega_out, turnings=np.asarray(turnings))


def harmonic_drive(u_amp: float, f_hz: float):
    """Voltage drive u(t) = u_amp * cos(2 pi f t)."""
    w = 2.0 * math.pi * f_hz

    def u_in(t):
        return u_amp * math.cos(w * t)

    return u_in


def integrate_coupled(p: MechanicalParams, coil: CoilParams, drive,
                      ic: tuple[float, float, float], t_end: float,
                      settings: IntegratorSettings = SWEEP_SETTINGS,
                      times: np.ndarray | None = None) -> Trajectory:
    """Coupled coil-rotor dynamics under a voltage drive ``drive(t)``.

    Electrical loop: L di/dt + R i + k_EMF * omega * cos(theta) = u(t).
    Mechanical: J d(omega)/dt + c omega + T_f tanh(omega/eps)
                + T_amp sin(theta) = k_T i cos(theta).
    """
    if not t_end > 0.0:
        raise DomainError("t_end must be strictly positive")
    if times is None:
        period = 2.0 * math.pi / p.omega_n
        n = max(2, int(math.ceil(200.0 * t_end / period)))
        times = np.linspace(0.0, t_end, n)
    else:
        times = np.asarray(times, dtype=float)

    c, tf, j, tamp = p.viscous_c, p.dry_tf, p.inertia, p.spring_tamp
    r, l, k_t, k_emf = coil.resistance, coil.inductance, coil.k_t, coil.k_emf
    eps = settings.coulomb_epsilon

    def rhs(t, y):
        th, om, i = y
        cth = math.cos(th)
        return (
            om,
            (k_t * i * cth - c * om - tf * math.tanh(om / eps) - tamp * math.sin(th)) / j,
            (drive(t) - r * i - k_emf * om * cth) / l,
        )

    sol = solve_ivp(rhs, (0.0, t_end), np.asarray(ic, dtype=float), method="DOP853",
                    t_eval=times, rtol=settings.rel_tol, atol=settings.abs_tol,
                    max_step=settings.max_step)
    if sol.status < 0:
        raise NumericalError(f"coupled integration failed: {sol.message}")
    return Trajectory(sol.t, sol.y[0], sol.y[1], i_coil=sol.y[2])


def linear_steady_state(p: MechanicalParams, coil: CoilParams, u_amp: float,
                        f_hz: float) -> tuple[float, float, float]:
    """Closed-form steady state of the linearized coupled system.

    Linearization: cos(theta) -> 1, sin(theta) -> theta, no dry friction.
    Returns (theta_amp, theta_phase, i_amp) for the drive u_amp*cos(2 pi f t),
    with theta(t) = theta_amp * cos(2 pi f t + theta_phase).
    """
    w = 2.0 * math.pi * f_hz
    z_el = coil.resistance + 1j * w * coil.inductance
    mech = p.spring_tamp - p.inertia * w**2 + 1j * w * p.viscous_c
    theta_ph = u_amp / (z_el * mech / coil.k_t + 1j * w * coil.k_emf)
    i_ph = mech * theta_ph / coil.k_t
    return (abs(theta_ph), float(np.angle(theta_ph)), abs(i_ph))
