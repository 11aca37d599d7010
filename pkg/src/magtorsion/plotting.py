"""Figure rendering for CLI reports (file output only, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(Path(path), dpi=DPI)
    plt.close(fig)


def ringdown_figure(path, curves, angle_unit: str = "deg") -> None:
    """Angle-vs-time traces; ``curves`` is a list of (label, times, values_rad)."""
    fig, ax = plt.subplots(figsize=(8, 4))
    scale = 180.0 / np.pi if angle_unit == "deg" else 1.0
    for label, t, v in curves:
        ax.plot(t, scale * np.asarray(v), lw=0.8, label=label)
    ax.set_xlabel("time (s)")
    ax.set_ylabel(f"angle ({angle_unit})")
    ax.legend(loc="upper right")
    ax.grid(alpha=0.3)
    _save(fig, path)


def fit_figure(path, t, data, fits, angle_unit: str = "deg") -> None:
    """Measured samples with fitted model overlays; ``fits`` = [(label, values)]."""
    fig, ax = plt.subplots(figsize=(8, 4))
    scale = 180.0 / np.pi if angle_unit == "deg" else 1.0
    ax.plot(t, scale * np.asarray(data), ".", ms=2, color="0.6", label="data")
    for label, v in fits:
        ax.plot(t, scale * np.asarray(v), lw=1.0, label=label)
    ax.set_xlabel("time (s)")
    ax.set_ylabel(f"angle ({angle_unit})")
    ax.legend(loc="upper right")
    ax.grid(alpha=0.3)
    _save(fig, path)


def sweep_figure(path, results, backbone=None, angle_unit: str = "deg") -> None:
    """Amplitude-vs-frequency curves for every sweep, plus the backbone."""
    fig, ax = plt.subplots(figsize=(8, 5))
    scale = 180.0 / np.pi if angle_unit == "deg" else 1.0
    for res in results:
        style = "-" if res.direction == "forward" else "--"
        order = np.argsort(res.f_hz)
        ax.plot(res.f_hz[order], scale * res.theta_amp[order], style, lw=1.0,
                label=f"{res.label} {res.direction}")
    if backbone:
        fb = [b[0] for b in backbone]
        ab = [scale * b[1] for b in backbone]
        ax.plot(fb, ab, "o-", color="green", lw=1.5, ms=5, label="backbone")
    ax.set_xlabel("drive frequency (Hz)")
    ax.set_ylabel(f"steady-state amplitude ({angle_unit})")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    _save(fig, path)


def spring_model_figure(path, d_m, b_s, t_amp, dist_unit: str = "cm") -> None:
    """Stator field and spring amplitude against distance, log-log."""
    scale = 100.0 if dist_unit == "cm" else 1.0
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.loglog(scale * np.asarray(d_m), b_s, "o-", ms=3)
    ax1.set_xlabel(f"stator distance ({dist_unit})")
    ax1.set_ylabel("stator field (T)")
    ax1.grid(alpha=0.3, which="both")
    ax2.loglog(scale * np.asarray(d_m), t_amp, "s-", ms=3, color="crimson")
    ax2.set_xlabel(f"stator distance ({dist_unit})")
    ax2.set_ylabel("spring amplitude (N m)")
    ax2.grid(alpha=0.3, which="both")
    _save(fig, path)


def energy_figure(path, traces) -> None:
    """Dissipated-energy traces; ``traces`` = [(label, EnergyTrace)]."""
    fig, ax = plt.subplots(figsize=(8, 4))
    for label, tr in traces:
        ax.plot(tr.times, 1e3 * tr.e_dis, lw=1.0, label=label)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("dissipated energy (mJ)")
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    _save(fig, path)


def impedance_figure(path, f_hz, z_ohm, r_fit: float, l_fit: float) -> None:
    """Squared impedance against squared frequency with the identified line."""
    fig, ax = plt.subplots(figsize=(6, 4))
    f2 = np.asarray(f_hz) ** 2
    ax.plot(f2, np.asarray(z_ohm) ** 2, "o", ms=4, label="data")
    grid = np.linspace(0.0, f2.max() * 1.05, 100)
    ax.plot(grid, r_fit**2 + (2 * np.pi * l_fit) ** 2 * grid, "-",
            label=f"fit: R={r_fit:.3g} ohm, L={l_fit:.3g} H")
    ax.set_xlabel("f^2 (Hz^2)")
    ax.set_ylabel("|Z|^2 (ohm^2)")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, path)
