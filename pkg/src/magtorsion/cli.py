"""Command-line surface tying simulation, identification, and reporting together.

Reports are machine-readable (CSV tables with '#' schema comments, JSON with
unit-suffixed keys) and each report path also renders a matplotlib figure
next to the data unless --no-plot is given. Exit codes: 0 success, 2 config
error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io, plotting
from .config import RunConfig, load_config
from .energetics import experimental_dissipation, model_dissipation, relative_rms_error
from .errors import ConfigError, DataError, DomainError, NumericalError
from .models import (
    alpha_scale,
    denormalize_params,
    fit_power_law,
    normalize_params,
    spring_amplitude,
    stator_field,
)
from .odesim import integrate_free
from .ringdown import build_schedule, combined_response, schedule_from_modal
from .models import RingdownModal
from .sweep import DriveSchedule, classify_nonlinearity, detect_jumps, extract_backbone, run_sweep
from .sysid import (
    default_cutoff,
    fit_combined_model,
    fit_emf_coupling,
    fit_field_constant,
    fit_impedance,
    fit_torque_coupling,
    fit_viscous_model,
    lowpass,
    trim_to_band,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magtorsion",
        description="Torsional magnetic-spring oscillator: simulation, sweeps, and fits.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="TOML run configuration")
    common.add_argument("--outdir", type=Path, default=Path("."),
                        help="directory for output files (default: .)")
    common.add_argument("--seed", type=int, default=0,
                        help="random seed for multi-start fits (default: 0)")
    common.add_argument("--no-plot", action="store_true",
                        help="skip figure rendering")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate-ringdown", parents=[common],
                        help="free-decay trajectory from an initial angle",
                        description="Writes ringdown_analytic.csv and/or ringdown_ode.csv "
                                    "(columns t,value; value in the configured angle unit).")
    sp.add_argument("--theta0", type=float, required=True,
                    help="release angle (configured angle unit)")
    sp.add_argument("--omega0", type=float, default=0.0,
                    help="release velocity (rad/s)")
    sp.add_argument("--duration", type=float, default=2.0, help="seconds to simulate")
    sp.add_argument("--sample-rate", type=float, default=5000.0, help="Hz")
    sp.add_argument("--method", choices=("analytic", "ode", "both"), default="analytic")
    sp.add_argument("--spring", choices=("linear", "sinusoidal"), default="linear",
                    help="spring model for the ODE path (analytic path is linear)")

    fp = sub.add_parser("fit-ringdown", parents=[common],
                        help="fit both damping models to a measured ringdown",
                        description="Reads a t,value CSV (value in the configured angle "
                                    "unit), writes fit_report.json with both model fits "
                                    "and an energy-dissipation comparison.")
    fp.add_argument("--input", type=Path, required=True)
    fp.add_argument("--n-starts", type=int, default=64)
    fp.add_argument("--no-trim", action="store_true", help="skip amplitude-band trimming")
    fp.add_argument("--no-filter", action="store_true", help="skip low-pass filtering")
    fp.add_argument("--trim-upper", type=float, default=15.0,
                    help="trim band upper extremum (configured angle unit)")
    fp.add_argument("--trim-lower", type=float, default=2.5,
                    help="trim band lower extremum (configured angle unit)")

    wp = sub.add_parser("sweep", parents=[common],
                        help="forced frequency sweeps with continuation",
                        description="Writes sweep_<level>_<direction>.csv per run plus "
                                    "sweep_report.json (backbone, classification, jumps).")
    wp.add_argument("--schedule", type=Path, default=None,
                    help="drive schedule CSV (f_hz,u_amp_v); overrides the config grid")
    wp.add_argument("--directions", choices=("both", "forward", "backward"),
                    default="both")

    gp = sub.add_parser("spring-model", parents=[common],
                        help="stator field and spring stiffness vs distance",
                        description="Writes spring_model.csv with columns d_stator_m,"
                                    "b_s_t,t_amp_n_m,k_mag_n_m_per_rad.")
    gp.add_argument("--d-start", type=float, required=True,
                    help="first stator distance (configured distance unit)")
    gp.add_argument("--d-stop", type=float, required=True)
    gp.add_argument("--d-step", type=float, default=None,
                    help="grid step (default: 24 points over the range)")
    gp.add_argument("--alpha", type=float, default=None,
                    help="spring prefactor N m (default: theoretical from config)")

    cp = sub.add_parser("fit-coil", parents=[common],
                        help="coil impedance, coupling, and field-constant fits",
                        description="Each input is optional; coil_fit.json reports "
                                    "whatever was identified. Angles use the configured "
                                    "angle unit; angular velocity is always rad/s.")
    cp.add_argument("--impedance", type=Path, help="CSV f_hz,z_ohm")
    cp.add_argument("--torque", type=Path, help="CSV torque_n_m,i_a,theta")
    cp.add_argument("--emf", type=Path, help="CSV u_v,omega_rad_per_s,theta")
    cp.add_argument("--field", type=Path, help="CSV i_a,b_t")
    cp.add_argument("--kemf-distance", type=Path,
                    help="CSV d,k_emf_v_s_per_rad (d in configured distance unit)")

    ep = sub.add_parser("energy-compare", parents=[common],
                        help="dissipated-energy traces of both damping models vs data",
                        description="Writes energy_experimental.csv, energy_combined.csv, "
                                    "energy_viscous.csv and energy_report.json.")
    ep.add_argument("--input", type=Path, required=True,
                    help="ringdown CSV t,value (configured angle unit)")
    ep.add_argument("--viscous-c", type=float, default=None,
                    help="viscous-only model coefficient (default: [mechanical] c)")
    ep.add_argument("--combined-c", type=float, default=None)
    ep.add_argument("--combined-tf", type=float, default=None)
    return parser


def _load_cfg(args) -> RunConfig:
    return load_config(args.config) if args.config else RunConfig()


def _load_angle_series(path, cfg: RunConfig):
    series = io.load_timeseries_csv(path, unit=cfg.units.angle)
    if cfg.units.angle == "deg":
        from .sysid import TimeSeries

        series = TimeSeries(series.t0, series.dt, np.radians(series.values), "rad")
    return series


def _cmd_simulate_ringdown(args, cfg: RunConfig) -> int:
    p = cfg.require_mechanical()
    theta0 = cfg.units.angle_to_rad(args.theta0)
    if not args.duration > 0.0 or not args.sample_rate > 0.0:
        raise ConfigError("duration and sample rate must be positive")
    n = int(round(args.duration * args.sample_rate)) + 1
    times = np.arange(n) / args.sample_rate
    scale = 1.0 if cfg.units.angle == "rad" else 180.0 / math.pi
    from .sysid import TimeSeries

    curves = []
    if args.method in ("analytic", "both"):
        omega_n, zeta, theta_f = normalize_params(p)
        sched = build_schedule(RingdownModal(omega_n, zeta, theta_f), theta0, args.omega0)
        theta = combined_response(sched, times)
        out = args.outdir / "ringdown_analytic.csv"
        io.write_timeseries_csv(out, TimeSeries(0.0, 1.0 / args.sample_rate,
                                                scale * theta, cfg.units.angle),
                                comment="closed-form combined-damping ringdown")
        curves.append(("analytic", times, theta))
        print(f"wrote {out}")
    if args.method in ("ode", "both"):
        traj = integrate_free(p, theta0, args.omega0, times[-1], cfg.integrator,
                              spring=args.spring, times=times)
        out = args.outdir / "ringdown_ode.csv"
        io.write_timeseries_csv(out, TimeSeries(0.0, 1.0 / args.sample_rate,
                                                scale * traj.theta, cfg.units.angle),
                                comment=f"event-exact ODE ringdown, {args.spring} spring")
        curves.append((f"ode ({args.spring})", times, traj.theta))
        print(f"wrote {out}")
    if not args.no_plot:
        fig = args.outdir / "ringdown.png"
        plotting.ringdown_figure(fig, curves, cfg.units.angle)
        print(f"wrote {fig}")
    return 0


def _physical_damping(report, inertia):
    """Convert fitted normalized parameters back to c (and T_f if fitted)."""
    wn = report.parameters["omega_n_rad_per_s"]
    zeta = report.parameters["zeta"]
    theta_f = report.parameters.get("theta_f_rad", 0.0)
    p = denormalize_params(wn, zeta, theta_f, inertia)
    return p.viscous_c, p.dry_tf, p.spring_tamp


def _cmd_fit_ringdown(args, cfg: RunConfig) -> int:
    series = _load_angle_series(args.input, cfg)
    notes: dict = {"n_samples_raw": len(series)}
    if not args.no_trim:
        series = trim_to_band(series, cfg.units.angle_to_rad(args.trim_upper),
                              cfg.units.angle_to_rad(args.trim_lower))
        notes["trimmed"] = True
    if not args.no_filter:
        cutoff, clamped = default_cutoff(series)
        series = lowpass(series, cutoff)
        notes["cutoff_hz"] = cutoff
        notes["cutoff_clamped"] = clamped
    notes["n_samples_fit"] = len(series)

    viscous = fit_viscous_model(series, n_starts=args.n_starts, seed=args.seed)
    combined = fit_combined_model(series, n_starts=args.n_starts, seed=args.seed)

    payload = {
        "viscous": {"parameters": viscous.parameters, "sse": viscous.sse,
                    "r_squared": viscous.r_squared, "converged": viscous.converged,
                    "n_starts_used": viscous.n_starts_used},
        "combined": {"parameters": combined.parameters, "sse": combined.sse,
                     "r_squared": combined.r_squared, "converged": combined.converged,
                     "n_starts_used": combined.n_starts_used},
        "preprocessing": notes,
    }

    if cfg.mechanical is not None:
        inertia = cfg.mechanical.inertia
        energy = {}
        c_v, _, k_v = _physical_damping(viscous, inertia)
        c_c, tf_c, k_c = _physical_damping(combined, inertia)
        exp_trace = experimental_dissipation(series, k_c, inertia)
        energy["viscous_rel_rms_error"] = relative_rms_error(
            exp_trace, model_dissipation(series, c_v, 0.0))
        energy["combined_rel_rms_error"] = relative_rms_error(
            exp_trace, model_dissipation(series, c_c, tf_c))
        energy["identified_c_n_m_s_per_rad"] = c_c
        energy["identified_tf_n_m"] = tf_c
        energy["identified_k_mag_n_m_per_rad"] = k_c
        payload["energy"] = energy

    out = args.outdir / "fit_report.json"
    io.write_json_report(out, payload)
    print(f"wrote {out}")

    if not args.no_plot:
        t = series.times - series.t0
        vx = viscous.parameters
        cx = combined.parameters
        modal_v = RingdownModal(vx["omega_n_rad_per_s"], vx["zeta"], 0.0,
                                vx["theta0_amp_rad"], vx["phi0_rad"])
        from .ringdown import viscous_response

        fit_v = viscous_response(modal_v, t)
        sched_c = schedule_from_modal(RingdownModal(
            cx["omega_n_rad_per_s"], cx["zeta"], cx["theta_f_rad"],
            cx["theta0_amp_rad"], cx["phi0_rad"]))
        fit_c = combined_response(sched_c, t)
        fig = args.outdir / "fit_ringdown.png"
        plotting.fit_figure(fig, t, series.values,
                            [("viscous fit", fit_v), ("combined fit", fit_c)],
                            cfg.units.angle)
        print(f"wrote {fig}")
    return 0


def _cmd_sweep(args, cfg: RunConfig) -> int:
    p = cfg.require_mechanical()
    coil = cfg.require_coil()
    sc = cfg.sweep
    directions = ("forward", "backward") if args.directions == "both" else (args.directions,)

    plans: list[DriveSchedule] = []
    if args.schedule is not None:
        base = io.load_drive_schedule_csv(args.schedule)
        for d in directions:
            pts = base.points if d == base.direction else tuple(reversed(base.points))
            plans.append(DriveSchedule(pts, d))
    else:
        for u in sc.u_amp_v:
            for d in directions:
                plans.append(DriveSchedule.from_grid(sc.f_start_hz, sc.f_stop_hz,
                                                     sc.f_step_hz, u, d))

    results = []
    for plan in plans:
        label = f"{plan.amplitudes.mean():g}V"
        res = run_sweep(p, coil, plan, cfg.integrator,
                        n_transient=sc.n_transient_cycles, n_fft=sc.n_fft_cycles,
                        samples_per_cycle=sc.samples_per_cycle, label=label)
        results.append(res)
        out = args.outdir / f"sweep_{label}_{plan.direction}.csv"
        io.write_sweep_csv(out, res)
        print(f"wrote {out}")

    backbone = extract_backbone(results)
    freq_step = plans[0].freq_step
    report = {
        "backbone": [{"f_peak_hz": f, "theta_peak_rad": a} for f, a in backbone],
        "classification": classify_nonlinearity(backbone, freq_step),
        "freq_step_hz": freq_step,
        "jumps": {},
    }
    if args.directions == "both":
        by_label: dict[str, dict] = {}
        for res in results:
            by_label.setdefault(res.label, {})[res.direction] = res
        for label, pair in by_label.items():
            if "forward" in pair and "backward" in pair:
                jr = detect_jumps(pair["forward"], pair["backward"])
                report["jumps"][label] = {
                    "fwd_jump_f_hz": jr.fwd_jump_f,
                    "bwd_jump_f_hz": jr.bwd_jump_f,
                    "fwd_delta_amp_rad": jr.fwd_delta_amp,
                    "bwd_delta_amp_rad": jr.bwd_delta_amp,
                    "hysteresis": jr.hysteresis,
                }
    out = args.outdir / "sweep_report.json"
    io.write_json_report(out, report)
    print(f"wrote {out}")

    if not args.no_plot:
        fig = args.outdir / "sweep.png"
        plotting.sweep_figure(fig, results, backbone, cfg.units.angle)
        print(f"wrote {fig}")
    return 0


def _cmd_spring_model(args, cfg: RunConfig) -> int:
    geom = cfg.require_magnet()
    if args.alpha is not None:
        alpha = args.alpha
    else:
        if cfg.rotor_volume_m3 is None:
            raise ConfigError("spring-model needs --alpha or a [rotor] volume_m3 entry")
        alpha = alpha_scale(geom.b_r, cfg.rotor_volume_m3)
    d0 = cfg.units.distance_to_m(args.d_start)
    d1 = cfg.units.distance_to_m(args.d_stop)
    if not d1 > d0:
        raise ConfigError("--d-stop must exceed --d-start")
    if args.d_step is not None:
        step = cfg.units.distance_to_m(args.d_step)
        n = int(round((d1 - d0) / step)) + 1
        d = d0 + step * np.arange(n)
    else:
        d = np.linspace(d0, d1, 24)

    b_s = np.array([stator_field(x, geom) for x in d])
    t_amp = np.array([spring_amplitude(x, geom, alpha) for x in d])
    out = args.outdir / "spring_model.csv"
    io.write_table_csv(out,
                       "columns: d_stator_m (m), b_s_t (T), t_amp_n_m (N m), "
                       "k_mag_n_m_per_rad (N m/rad, small-angle equality)",
                       {"d_stator_m": d, "b_s_t": b_s, "t_amp_n_m": t_amp,
                        "k_mag_n_m_per_rad": t_amp})
    print(f"wrote {out}")

    pw = fit_power_law(np.column_stack([d, t_amp]))
    io.write_json_report(args.outdir / "spring_model.json", {
        "alpha_n_m": alpha,
        "k_mag_power_law": {"prefactor": pw.prefactor, "exponent": pw.exponent,
                            "r_squared": pw.r_squared},
    })
    print(f"wrote {args.outdir / 'spring_model.json'}")

    if not args.no_plot:
        fig = args.outdir / "spring_model.png"
        plotting.spring_model_figure(fig, d, b_s, t_amp, cfg.units.distance)
        print(f"wrote {fig}")
    return 0


def _load_columns(path, expected: list[str]) -> np.ndarray:
    """Small n-column numeric CSV with an exact header."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [line for line in raw.splitlines()
            if line.strip() and not line.lstrip().startswith("#")]
    if not rows or [c.strip() for c in rows[0].split(",")] != expected:
        raise DataError(f"{path}: expected header {','.join(expected)!r}")
    data = []
    for n, line in enumerate(rows[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(expected):
            raise DataError(f"{path}:{n}: expected {len(expected)} columns")
        try:
            data.append([float(x) for x in parts])
        except ValueError as exc:
            raise DataError(f"{path}:{n}: {exc}") from exc
    if not data:
        raise DataError(f"{path}: no data rows")
    return np.asarray(data)


def _cmd_fit_coil(args, cfg: RunConfig) -> int:
    report: dict = {}
    impedance_data = None
    if args.impedance:
        pts = _load_columns(args.impedance, ["f_hz", "z_ohm"])
        r, l = fit_impedance(pts)
        report["r_ohm"] = r
        report["l_h"] = l
        impedance_data = (pts[:, 0], pts[:, 1], r, l)
    if args.torque:
        pts = _load_columns(args.torque, ["torque_n_m", "i_a", "theta"])
        pts[:, 2] = [cfg.units.angle_to_rad(x) for x in pts[:, 2]]
        fit = fit_torque_coupling(pts)
        report["k_t_n_m_per_a"] = fit.value
        report["k_t_r_squared"] = fit.r_squared
    if args.emf:
        pts = _load_columns(args.emf, ["u_v", "omega_rad_per_s", "theta"])
        pts[:, 2] = [cfg.units.angle_to_rad(x) for x in pts[:, 2]]
        fit = fit_emf_coupling(pts)
        report["k_emf_v_s_per_rad"] = fit.value
        report["k_emf_r_squared"] = fit.r_squared
    if args.field:
        pts = _load_columns(args.field, ["i_a", "b_t"])
        fit = fit_field_constant(pts)
        report["b_i_t_per_a"] = fit.value
        report["b_i_r_squared"] = fit.r_squared
    if args.kemf_distance:
        pts = _load_columns(args.kemf_distance, ["d", "k_emf_v_s_per_rad"])
        d = np.array([cfg.units.distance_to_m(x) for x in pts[:, 0]])
        x = d**-3
        beta = float(np.dot(x, pts[:, 1]) / np.dot(x, x))
        report["beta_v_s_m3_per_rad"] = beta
    if not report:
        raise ConfigError("fit-coil needs at least one input CSV")

    out = args.outdir / "coil_fit.json"
    io.write_json_report(out, report)
    print(f"wrote {out}")
    if impedance_data is not None and not args.no_plot:
        fig = args.outdir / "coil_impedance.png"
        plotting.impedance_figure(fig, *impedance_data)
        print(f"wrote {fig}")
    return 0


def _cmd_energy_compare(args, cfg: RunConfig) -> int:
    p = cfg.require_mechanical()
    series = _load_angle_series(args.input, cfg)
    c_combined = args.combined_c if args.combined_c is not None else p.viscous_c
    tf_combined = args.combined_tf if args.combined_tf is not None else p.dry_tf
    c_viscous = args.viscous_c if args.viscous_c is not None else p.viscous_c

    exp_trace = experimental_dissipation(series, p.spring_tamp, p.inertia)
    e0 = float(exp_trace.e_mech[0])
    combined_trace = model_dissipation(series, c_combined, tf_combined, initial_energy=e0)
    viscous_trace = model_dissipation(series, c_viscous, 0.0, initial_energy=e0)

    for name, trace in (("experimental", exp_trace), ("combined", combined_trace),
                        ("viscous", viscous_trace)):
        out = args.outdir / f"energy_{name}.csv"
        io.write_energy_csv(out, trace, comment=f"{name} dissipation trace")
        print(f"wrote {out}")

    report = {
        "combined_rel_rms_error": relative_rms_error(exp_trace, combined_trace),
        "viscous_rel_rms_error": relative_rms_error(exp_trace, viscous_trace),
        "combined_c_n_m_s_per_rad": c_combined,
        "combined_tf_n_m": tf_combined,
        "viscous_c_n_m_s_per_rad": c_viscous,
    }
    out = args.outdir / "energy_report.json"
    io.write_json_report(out, report)
    print(f"wrote {out}")

    if not args.no_plot:
        fig = args.outdir / "energy_compare.png"
        plotting.energy_figure(fig, [("experimental", exp_trace),
                                     ("combined model", combined_trace),
                                     ("viscous model", viscous_trace)])
        print(f"wrote {fig}")
    return 0


_COMMANDS = {
    "simulate-ringdown": _cmd_simulate_ringdown,
    "fit-ringdown": _cmd_fit_ringdown,
    "sweep": _cmd_sweep,
    "spring-model": _cmd_spring_model,
    "fit-coil": _cmd_fit_coil,
    "energy-compare": _cmd_energy_compare,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_cfg(args)
        args.outdir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        return _fail(exc, 2)
    except (DataError, DomainError) as exc:
        return _fail(exc, 3)
    except NumericalError as exc:
        return _fail(exc, 4)


def _fail(exc: Exception, code: int) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc),
                      "exit_code": code}), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
