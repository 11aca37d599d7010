"""Core physical models of the torsional magnetic oscillator.

Domain parameter types, the magnetic torsional-spring model (stator field
of a rectangular block magnet, dipole-moment scaling), the coil coupling
coefficients, and the empirical power-law fit used throughout for
distance-scaling studies.

All angles are radians, all quantities SI, everywhere in this package.
Unit conversion happens only at the CLI boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DomainError

# Vacuum permeability, exact pre-2019 SI definition (N A^-2).
MU_0 = 4.0e-7 * math.pi


@dataclass(frozen=True)
class MagnetGeometry:
    """Rectangular block magnet: length, width, thickness (m) and residual flux density (T)."""

    length: float
    width: float
    thickness: float
    b_r: float

    def __post_init__(self):
        for name in ("length", "width", "thickness", "b_r"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"MagnetGeometry.{name} must be strictly positive")

    @property
    def volume(self) -> float:
        return self.length * self.width * self.thickness


@dataclass(frozen=True)
class MechanicalParams:
    """Physical rotor parameters: inertia, viscous and dry damping, spring amplitude.

    ``spring_tamp`` is the amplitude of the sinusoidal restoring torque; it
    equals the linearized torsional stiffness for small angles.
    """

    inertia: float        # kg m^2
    viscous_c: float      # N m s / rad
    dry_tf: float         # N m
    spring_tamp: float    # N m

    def __post_init__(self):
        if not self.inertia > 0.0:
            raise DomainError("inertia must be strictly positive")
        if self.viscous_c < 0.0:
            raise DomainError("viscous_c must be non-negative")
        if self.dry_tf < 0.0:
            raise DomainError("dry_tf must be non-negative")
        if not self.spring_tamp > 0.0:
            raise DomainError("spring_tamp must be strictly positive")

    @property
    def omega_n(self) -> float:
        """Undamped natural frequency (rad/s) of the linearized spring."""
        return math.sqrt(self.spring_tamp / self.inertia)


@dataclass(frozen=True)
class RingdownModal:
    """Normalized free-response parameter set {omega_n, zeta, theta_f, Theta0, phi0}."""

    omega_n: float   # rad/s
    zeta: float      # dimensionless, < 1
    theta_f: float   # rad, dry friction angle
    theta0_amp: float = 0.0   # rad, undamped amplitude coefficient
    phi0: float = 0.0         # rad, phase in (-pi, pi]

    def __post_init__(self):
        if not self.omega_n > 0.0:
            raise DomainError("omega_n must be strictly positive")
        if not 0.0 <= self.zeta < 1.0:
            raise DomainError("zeta must lie in [0, 1) for an oscillatory ringdown")
        if self.theta_f < 0.0:
            raise DomainError("theta_f must be non-negative")
        if self.theta0_amp < 0.0:
            raise DomainError("theta0_amp must be non-negative")
        if not -math.pi < self.phi0 <= math.pi:
            raise DomainError("phi0 must lie in (-pi, pi]")

    @property
    def omega_d(self) -> float:
        """Damped oscillation frequency (rad/s); dry friction does not change it."""
        return self.omega_n * math.sqrt(1.0 - self.zeta**2)


@dataclass(frozen=True)
class CoilParams:
    """Drive-coil electrical and coupling parameters."""

    resistance: float    # ohm
    inductance: float    # H
    k_t: float           # N m / A, torque coupling
    k_emf: float         # V s / rad, back-EMF coupling
    b_i: float = 0.0     # T / A, sensed-field-per-current constant
    d_coil: float = 1.0  # m, coil-to-rotor distance

    def __post_init__(self):
        if not self.resistance > 0.0:
            raise DomainError("resistance must be strictly positive")
        if not self.inductance > 0.0:
            raise DomainError("inductance must be strictly positive")
        if self.k_t < 0.0 or self.k_emf < 0.0 or self.b_i < 0.0:
            raise DomainError("coupling coefficients must be non-negative")
        if not self.d_coil > 0.0:
            raise DomainError("d_coil must be strictly positive")


@dataclass(frozen=True)
class PowerLawFit:
    """Result of a log-log power-law regression y = prefactor * x**exponent."""

    prefactor: float
    exponent: float
    r_squared: float


def stator_field(d_stator: float, geom: MagnetGeometry) -> float:
    """Magnetic field (T) of one stator block at the rotor center.

    ``d_stator`` is the rotor-center-to-stator-center distance; the
    manufacturer's central-line formula is evaluated at the center-to-surface
    distance d = d_stator - thickness/2, which must be positive.
    """
    d = d_stator - 0.5 * geom.thickness
    if not d > 0.0:
        raise DomainError(
            f"d_stator = {d_stator} must exceed half the magnet thickness {0.5 * geom.thickness}"
        )
    return (2.0 * geom.b_r / math.pi) * _arctan_bracket(d, geom)


def _arctan_bracket(d: float, geom: MagnetGeometry) -> float:
    """Dimensionless geometry factor of the block-magnet central-line field."""
    lw = geom.length * geom.width
    s = geom.length**2 + geom.width**2
    dt = d + geom.thickness
    near = math.atan2(lw, 2.0 * d * math.sqrt(4.0 * d * d + s))
    far = math.atan2(lw, 2.0 * dt * math.sqrt(4.0 * dt * dt + s))
    return near - far


def dipole_moment(geom: MagnetGeometry | None = None, *,
                  volume: float | None = None, b_r: float | None = None) -> float:
    """Equivalent magnetic dipole moment (A m^2) of a block magnet: B_r * V / mu_0.

    Accepts either a geometry or explicit ``volume`` and ``b_r``. b_r = 0 is
    allowed and yields zero moment.
    """
    if geom is not None:
        volume, b_r = geom.volume, geom.b_r
    if volume is None or b_r is None:
        raise DomainError("dipole_moment needs a geometry or both volume and b_r")
    if not volume > 0.0:
        raise DomainError("volume must be strictly positive")
    if b_r < 0.0:
        raise DomainError("b_r must be non-negative")
    return b_r * volume / MU_0


def alpha_scale(b_r: float, rotor_volume: float) -> float:
    """Theoretical spring-amplitude prefactor alpha = 2 B_r^2 V / (pi mu_0), in N m."""
    if not rotor_volume > 0.0 or not b_r > 0.0:
        raise DomainError("alpha_scale requires positive b_r and rotor_volume")
    return 2.0 * b_r**2 * rotor_volume / (math.pi * MU_0)


def spring_amplitude(d_stator: float, geom: MagnetGeometry, alpha: float) -> float:
    """Sinusoidal spring amplitude T_amp = alpha * g(d_stator), in N m.

    g is the arctangent-difference geometry factor of the stator field; the
    linearized stiffness K_Mag equals T_amp under the small-angle equality.
    """
    if not alpha > 0.0:
        raise DomainError("alpha must be strictly positive")
    d = d_stator - 0.5 * geom.thickness
    if not d > 0.0:
        raise DomainError(
            f"d_stator = {d_stator} must exceed half the magnet thickness {0.5 * geom.thickness}"
        )
    return alpha * _arctan_bracket(d, geom)


def restoring_torque(theta, t_amp: float):
    """Magnetic restoring torque -T_amp * sin(theta). Accepts scalars or arrays."""
    if not t_amp > 0.0:
        raise DomainError("t_amp must be strictly positive")
    return -t_amp * np.sin(theta)


def coil_torque(theta, i_coil, k_t: float):
    """Drive torque k_T * i * cos(theta) exerted by the coil on the rotor."""
    return k_t * i_coil * np.cos(theta)


def back_emf(theta, omega, k_emf: float):
    """Back-electromotive force k_EMF * omega * cos(theta) induced across the coil.

    Enters the electrical loop equation with positive sign on the source side.
    """
    return k_emf * omega * np.cos(theta)


def beta_model(l_coil: float, r_loop: float, m_r: float) -> float:
    """Distance-scaling constant beta (V s m^3 / rad) of k_EMF(d) = beta * d^-3.

    The coil is compressed into one equivalent current loop of radius
    ``r_loop`` whose aggregate area is inferred from the self-inductance.
    """
    if not (l_coil > 0.0 and r_loop > 0.0 and m_r > 0.0):
        raise DomainError("beta_model requires strictly positive inputs")
    a_coil = 2.0 * math.pi * r_loop * l_coil / MU_0
    return (MU_0 / (2.0 * math.pi)) * m_r * a_coil


def fit_power_law(points) -> PowerLawFit:
    """Ordinary least squares of log(y) on log(x) for (x, y) pairs.

    Requires at least two points with strictly positive, distinct abscissae
    and strictly positive ordinates.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DataError("fit_power_law expects a sequence of (x, y) pairs")
    if pts.shape[0] < 2:
        raise DataError("fit_power_law is underdetermined with fewer than 2 points")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise DomainError("fit_power_law requires strictly positive coordinates")
    if np.unique(x).size != x.size:
        raise DomainError("fit_power_law requires distinct abscissae")
    lx, ly = np.log(x), np.log(y)
    n, lnA = np.polyfit(lx, ly, 1)
    resid = ly - (lnA + n * lx)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - np.sum(resid**2) / ss_tot
    return PowerLawFit(prefactor=float(np.exp(lnA)), exponent=float(n), r_squared=float(r2))


def normalize_params(p: MechanicalParams) -> tuple[float, float, float]:
    """(omega_n, zeta, theta_f) of the normalized equation of motion.

    omega_n = sqrt(T_amp/J), zeta = c / (2 sqrt(J T_amp)), theta_f = T_f / T_amp.
    Raises if the parameters are not oscillatory (zeta >= 1).
    """
    omega_n = math.sqrt(p.spring_tamp / p.inertia)
    zeta = p.viscous_c / (2.0 * math.sqrt(p.inertia * p.spring_tamp))
    theta_f = p.dry_tf / p.spring_tamp
    if zeta >= 1.0:
        raise DomainError(f"zeta = {zeta} >= 1; parameters are not oscillatory")
    return omega_n, zeta, theta_f


def denormalize_params(omega_n: float, zeta: float, theta_f: float,
                       inertia: float) -> MechanicalParams:
    """Inverse of :func:`normalize_params` for a given rotor inertia."""
    if not omega_n > 0.0 or not inertia > 0.0:
        raise DomainError("omega_n and inertia must be strictly positive")
    if not 0.0 <= zeta < 1.0:
        raise DomainError("zeta must lie in [0, 1)")
    if theta_f < 0.0:
        raise DomainError("theta_f must be non-negative")
    t_amp = inertia * omega_n**2
    return MechanicalParams(
        inertia=inertia,
        viscous_c=2.0 * zeta * math.sqrt(inertia * t_amp),
        dry_tf=theta_f * t_amp,
        spring_tamp=t_amp,
    )
