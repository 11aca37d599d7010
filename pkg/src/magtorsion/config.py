"""TOML run configuration: typed sections with unit-suffixed keys.

Every physical key carries its unit in the name (``j_kg_m2``,
``k_emf_v_s_per_rad``) so a config file cannot be mis-read silently. Angle
and distance unit preferences apply only at the CLI boundary; the library
itself is radians and meters throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import ConfigError, DomainError
from .models import CoilParams, MagnetGeometry, MechanicalParams
from .odesim import SWEEP_SETTINGS, IntegratorSettings


@dataclass
class UnitPrefs:
    angle: str = "deg"      # deg | rad
    distance: str = "cm"    # cm | m

    def angle_to_rad(self, x: float) -> float:
        return math.radians(x) if self.angle == "deg" else x

    def angle_from_rad(self, x: float) -> float:
        return math.degrees(x) if self.angle == "deg" else x

    def distance_to_m(self, x: float) -> float:
        return 0.01 * x if self.distance == "cm" else x


@dataclass
class SweepConfig:
    f_start_hz: float = 30.0
    f_stop_hz: float = 44.0
    f_step_hz: float = 0.1
    u_amp_v: tuple[float, ...] = (0.3, 0.7, 1.0, 1.7)
    n_fft_cycles: int = 32
    samples_per_cycle: int = 64
    n_transient_cycles: int | None = None


@dataclass
class RunConfig:
    mechanical: MechanicalParams | None = None
    coil: CoilParams | None = None
    magnet: MagnetGeometry | None = None
    rotor_volume_m3: float | None = None
    integrator: IntegratorSettings = SWEEP_SETTINGS
    sweep: SweepConfig = field(default_factory=SweepConfig)
    units: UnitPrefs = field(default_factory=UnitPrefs)

    def require_mechanical(self) -> MechanicalParams:
        if self.mechanical is None:
            raise ConfigError("config is missing the [mechanical] section")
        return self.mechanical

    def require_coil(self) -> CoilParams:
        if self.coil is None:
            raise ConfigError("config is missing the [coil] section")
        return self.coil

    def require_magnet(self) -> MagnetGeometry:
        if self.magnet is None:
            raise ConfigError("config is missing the [magnet] section")
        return self.magnet


def _get(section: dict, table: str, key: str, default=None, required=False):
    if key in section:
        return section[key]
    if required:
        raise ConfigError(f"[{table}] is missing required key '{key}'")
    return default


def load_config(path) -> RunConfig:
    """Parse and validate a TOML run configuration."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc

    cfg = RunConfig()
    try:
        if "mechanical" in doc:
            sec = doc["mechanical"]
            cfg.mechanical = MechanicalParams(
                inertia=_get(sec, "mechanical", "j_kg_m2", required=True),
                viscous_c=_get(sec, "mechanical", "c_n_m_s_per_rad", required=True),
                dry_tf=_get(sec, "mechanical", "tf_n_m", required=True),
                spring_tamp=_get(sec, "mechanical", "t_amp_n_m", required=True),
            )
        if "coil" in doc:
            sec = doc["coil"]
            cfg.coil = CoilParams(
                resistance=_get(sec, "coil", "r_ohm", required=True),
                inductance=_get(sec, "coil", "l_h", required=True),
                k_t=_get(sec, "coil", "k_t_n_m_per_a", required=True),
                k_emf=_get(sec, "coil", "k_emf_v_s_per_rad", required=True),
                b_i=_get(sec, "coil", "b_i_t_per_a", 0.0),
                d_coil=_get(sec, "coil", "d_coil_m", 1.0),
            )
        if "magnet" in doc:
            sec = doc["magnet"]
            cfg.magnet = MagnetGeometry(
                length=_get(sec, "magnet", "length_m", required=True),
                width=_get(sec, "magnet", "width_m", required=True),
                thickness=_get(sec, "magnet", "thickness_m", required=True),
                b_r=_get(sec, "magnet", "b_r_t", required=True),
            )
        if "rotor" in doc:
            cfg.rotor_volume_m3 = _get(doc["rotor"], "rotor", "volume_m3", required=True)
        if "integrator" in doc:
            sec = doc["integrator"]
            cfg.integrator = IntegratorSettings(
                rel_tol=_get(sec, "integrator", "rel_tol", SWEEP_SETTINGS.rel_tol),
                abs_tol=_get(sec, "integrator", "abs_tol", SWEEP_SETTINGS.abs_tol),
                max_step=_get(sec, "integrator", "max_step_s", math.inf),
                coulomb_epsilon=_get(sec, "integrator", "coulomb_epsilon_rad_per_s",
                                     SWEEP_SETTINGS.coulomb_epsilon),
            )
        if "sweep" in doc:
            sec = doc["sweep"]
            levels = _get(sec, "sweep", "u_amp_v", list(SweepConfig.u_amp_v))
            if isinstance(levels, (int, float)):
                levels = [levels]
            cfg.sweep = SweepConfig(
                f_start_hz=_get(sec, "sweep", "f_start_hz", 30.0),
                f_stop_hz=_get(sec, "sweep", "f_stop_hz", 44.0),
                f_step_hz=_get(sec, "sweep", "f_step_hz", 0.1),
                u_amp_v=tuple(float(u) for u in levels),
                n_fft_cycles=int(_get(sec, "sweep", "n_fft_cycles", 32)),
                samples_per_cycle=int(_get(sec, "sweep", "samples_per_cycle", 64)),
                n_transient_cycles=_get(sec, "sweep", "n_transient_cycles"),
            )
        if "units" in doc:
            sec = doc["units"]
            angle = _get(sec, "units", "angle", "deg")
            distance = _get(sec, "units", "distance", "cm")
            if angle not in ("deg", "rad"):
                raise ConfigError(f"[units] angle must be 'deg' or 'rad', got {angle!r}")
            if distance not in ("cm", "m"):
                raise ConfigError(f"[units] distance must be 'cm' or 'm', got {distance!r}")
            cfg.units = UnitPrefs(angle, distance)
    except DomainError as exc:
        raise ConfigError(f"config {path}: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"config {path}: malformed value: {exc}") from exc
    return cfg
