"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line. Run with `pytest tests/test_acceptance.py -v -s`.

The sweep-based criteria share one full demo-grid run (30..44 Hz in 0.1 Hz
steps, drive levels 0.3/0.7/1.0/1.7 V, both directions, default transient
protocol) through a module-scoped fixture.
"""

import math
import time

import numpy as np
import pytest

from magtorsion import (
    MechanicalParams,
    RingdownModal,
    alpha_scale,
    beta_model,
    build_schedule,
    combined_response,
    fit_power_law,
    integrate_free,
    normalize_params,
    spring_amplitude,
    viscous_response,
)
from magtorsion.energetics import (
    experimental_dissipation,
    model_dissipation,
    relative_rms_error,
)
from magtorsion.odesim import IntegratorSettings
from magtorsion.sweep import (
    DriveSchedule,
    classify_nonlinearity,
    detect_jumps,
    extract_backbone,
    run_sweep,
)
from magtorsion.sysid import (
    TimeSeries,
    fit_combined_model,
    fit_emf_coupling,
    fit_impedance,
    fit_torque_coupling,
    fit_viscous_model,
)

from conftest import (
    TABLE_C,
    TABLE_J,
    TABLE_KEMF,
    TABLE_KT,
    TABLE_L,
    TABLE_R,
    TABLE_TAMP,
    TABLE_TF,
    rms,
)

DEMO_LEVELS = (0.3, 0.7, 1.0, 1.7)
SWEEP_BUDGET_S = 600.0


def report(criterion: int, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def demo_sweeps(mech_mod, coil_mod):
    """Full demo grid, both directions, all four drive levels."""
    t0 = time.perf_counter()
    results = {}
    for u in DEMO_LEVELS:
        for direction in ("forward", "backward"):
            sched = DriveSchedule.from_grid(30.0, 44.0, 0.1, u, direction)
            results[(u, direction)] = run_sweep(mech_mod, coil_mod, sched,
                                                label=f"{u:g}V")
    elapsed = time.perf_counter() - t0
    return results, elapsed


@pytest.fixture(scope="module")
def mech_mod():
    return MechanicalParams(TABLE_J, TABLE_C, TABLE_TF, TABLE_TAMP)


@pytest.fixture(scope="module")
def coil_mod():
    from magtorsion import CoilParams

    return CoilParams(TABLE_R, TABLE_L, TABLE_KT, TABLE_KEMF)


def test_criterion_1_constant_reproduction():
    alpha = alpha_scale(1.35, 8.19e-6)
    beta = beta_model(1.83e-3, 18e-3, 8.80e-3)
    f_n = math.sqrt(TABLE_TAMP / TABLE_J) / (2.0 * math.pi)
    ok_alpha = abs(alpha - 7.57) <= 0.01
    ok_beta = abs(beta - 2.90e-7) <= 0.02 * 2.90e-7
    ok_fn = abs(f_n - 36.93) <= 0.01
    report(1, ok_alpha and ok_beta and ok_fn,
           f"alpha={alpha:.4f} N m (7.57+-0.01), beta={beta:.4g} (2.90e-7+-2%), "
           f"f_n={f_n:.4f} Hz (36.93+-0.01)")


def test_criterion_2_closed_form_vs_ode_oracle():
    rng = np.random.default_rng(2024)
    settings = IntegratorSettings(rel_tol=1e-11, abs_tol=1e-14)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        zeta = 10 ** rng.uniform(-3.0, math.log10(0.2))
        theta0 = 0.3
        theta_f = rng.uniform(0.0, 0.1) * theta0
        omega_n = rng.uniform(20.0, 400.0)
        modal = RingdownModal(omega_n, zeta, theta_f)
        sched = build_schedule(modal, theta0, 0.0)
        t_end = sched.t1 + 9.4 * math.pi / modal.omega_d
        if sched.arrest_time is not None:
            t_end = min(t_end, 0.999 * sched.arrest_time)
        times = np.linspace(0.0, t_end, 1500)
        inertia = 1e-5
        p = MechanicalParams(inertia, 2.0 * zeta * omega_n * inertia,
                             theta_f * inertia * omega_n**2,
                             inertia * omega_n**2)
        traj = integrate_free(p, theta0, 0.0, t_end, settings, times=times)
        err = rms(traj.theta - combined_response(sched, times))
        worst = max(worst, err / sched.modal.theta0_amp)
    elapsed = time.perf_counter() - t0
    report(2, worst < 1e-8 and elapsed < 60.0,
           f"worst RMS/Theta0 = {worst:.3g} (< 1e-8) over 100 random "
           f"parameter points in {elapsed:.1f} s (< 60 s)")


def test_criterion_3_degeneracy_suite():
    # Dry-frictionless chain reduces to the viscous closed form.
    modal_v = RingdownModal(2 * math.pi * 36.93, 7.6e-4, 0.0)
    sched_v = build_schedule(modal_v, math.radians(15.0), 0.0)
    t = np.linspace(0.0, 2.0, 40_000)
    gap = np.max(np.abs(combined_response(sched_v, t)
                        - viscous_response(sched_v.modal, t)))
    # Undamped chain loses exactly 4 theta_f per period.
    theta_f = 2e-3
    modal_d = RingdownModal(2 * math.pi * 36.93, 0.0, theta_f)
    sched_d = build_schedule(modal_d, 0.3, 0.0)
    extrema = np.abs([combined_response(sched_d, sched_d.turning_time(k))
                      for k in range(1, 30)])
    period_loss = extrema[:-2] - extrema[2:]
    loss_err = np.max(np.abs(period_loss - 4.0 * theta_f))
    # Turning instants form an arithmetic sequence at half the damped period.
    modal_c = RingdownModal(2 * math.pi * 36.93, 7.6e-4, 1.765e-4)
    sched_c = build_schedule(modal_c, math.radians(15.0), 0.0)
    half = math.pi / modal_c.omega_d
    spacing_rel = max(
        abs((sched_c.turning_time(k + 1) - sched_c.turning_time(k)) - half) / half
        for k in range(1, 50))
    ok = gap < 1e-12 and loss_err < 1e-10 and spacing_rel < 1e-12
    report(3, ok,
           f"viscous-limit gap {gap:.2g} rad (<1e-12), period loss error "
           f"{loss_err:.2g} rad (<1e-10), spacing error {spacing_rel:.2g} (<1e-12)")


def test_criterion_4_identification_round_trips(mech_mod):
    omega_n, zeta, theta_f = normalize_params(mech_mod)
    sched = build_schedule(RingdownModal(omega_n, zeta, theta_f),
                           math.radians(15.0), 0.0)
    fs = 2000.0
    t = np.arange(int(4.0 * fs)) / fs
    clean = combined_response(sched, t)
    truth = {
        "omega_n_rad_per_s": omega_n,
        "zeta": zeta,
        "theta_f_rad": theta_f,
        "theta0_amp_rad": sched.modal.theta0_amp,
        "phi0_rad": sched.modal.phi0,
    }
    t0 = time.perf_counter()
    rep_clean = fit_combined_model(TimeSeries(0.0, 1.0 / fs, clean),
                                   n_starts=64, seed=11)
    worst_clean = max(
        abs(rep_clean.parameters[k] - v) / max(abs(v), 1e-12)
        for k, v in truth.items())

    rng = np.random.default_rng(8)
    noisy = clean + rng.normal(0.0, 0.005 * np.max(np.abs(clean)), len(clean))
    rep_noisy = fit_combined_model(TimeSeries(0.0, 1.0 / fs, noisy),
                                   n_starts=64, seed=11)
    worst_noisy = max(
        abs(rep_noisy.parameters[k] - truth[k]) / max(abs(truth[k]), 1e-12)
        for k in ("omega_n_rad_per_s", "zeta", "theta_f_rad", "theta0_amp_rad"))
    elapsed = time.perf_counter() - t0
    ok = (worst_clean < 1e-4 and worst_noisy < 1e-2
          and rep_noisy.r_squared > 0.995 and elapsed < 60.0)
    report(4, ok,
           f"noiseless worst error {worst_clean:.2g} (<1e-4), noisy worst "
           f"{worst_noisy:.2g} (<1e-2), R^2={rep_noisy.r_squared:.5f} (>0.995), "
           f"{elapsed:.1f} s at 64 starts (<60 s)")


def test_criterion_5_energy_metric_ordering(mech_mod):
    omega_n, zeta, theta_f = normalize_params(mech_mod)
    sched = build_schedule(RingdownModal(omega_n, zeta, theta_f),
                           math.radians(15.0), 0.0)
    fs = 10_000.0
    t = np.arange(int(4.0 * fs)) / fs
    series = TimeSeries(0.0, 1.0 / fs, combined_response(sched, t))
    exp_trace = experimental_dissipation(series, mech_mod.spring_tamp, mech_mod.inertia)
    err_combined = relative_rms_error(
        exp_trace, model_dissipation(series, mech_mod.viscous_c, mech_mod.dry_tf))
    err_viscous = relative_rms_error(
        exp_trace, model_dissipation(series, mech_mod.viscous_c, 0.0))
    ok = err_combined < 5e-3 and err_combined < err_viscous
    report(5, ok,
           f"combined model error {err_combined:.2g} (<5e-3) vs viscous-only "
           f"{err_viscous:.3g} (strictly larger)")


def test_criterion_6_stiffness_scaling_law(stator_geom):
    d = np.linspace(0.028, 0.052, 13)
    k_mag = [spring_amplitude(x, stator_geom, 7.57) for x in d]
    fit = fit_power_law(np.column_stack([d, k_mag]))
    ok = -2.3 <= fit.exponent <= -1.7
    report(6, ok, f"stiffness scaling exponent {fit.exponent:.3f} in [-2.3, -1.7]")


def test_criterion_7_coil_identification():
    f = np.linspace(0.0, 200.0, 25)
    z = np.sqrt(TABLE_R**2 + (2 * np.pi * f * TABLE_L) ** 2)
    r0, l0 = fit_impedance(np.column_stack([f, z]))
    exact = abs(r0 - TABLE_R) < 1e-9 and abs(l0 - TABLE_L) < 1e-12

    rng = np.random.default_rng(17)
    f_n = np.linspace(10.0, 200.0, 60)
    z_n = np.sqrt(TABLE_R**2 + (2 * np.pi * f_n * TABLE_L) ** 2)
    z_n = z_n * (1.0 + rng.normal(0.0, 0.01, len(f_n)))
    r1, l1 = fit_impedance(np.column_stack([f_n, z_n]))
    noisy_ok = (abs(r1 - TABLE_R) / TABLE_R < 0.02
                and abs(l1 - TABLE_L) / TABLE_L < 0.02)

    i = rng.uniform(-2.0, 2.0, 40)
    th = rng.uniform(-1.2, 1.2, 40)
    kt = fit_torque_coupling(np.column_stack([TABLE_KT * i * np.cos(th), i, th]))
    om = rng.uniform(-30.0, 30.0, 40)
    kemf = fit_emf_coupling(np.column_stack([TABLE_KEMF * om * np.cos(th), om, th]))
    couplings_ok = (abs(kt.value - TABLE_KT) < 1e-12
                    and abs(kemf.value - TABLE_KEMF) < 1e-12)
    ok = exact and noisy_ok and couplings_ok
    report(7, ok,
           f"impedance exact (R={r0:.6g}, L={l0:.6g}), noisy within 2% "
           f"(R={r1:.4g}, L={l1:.4g}), couplings exact "
           f"(k_T={kt.value:.6g}, k_EMF={kemf.value:.6g})")


def test_criterion_8_sweep_behavior(demo_sweeps):
    results, elapsed = demo_sweeps
    # Low drive: resonance peak within 2% of the natural frequency.
    low = results[(0.3, "forward")]
    f_peak = low.f_hz[int(np.argmax(low.theta_amp))]
    low_ok = abs(f_peak - 36.93) / 36.93 < 0.02
    # High drive: softening hysteresis loop between the directions.
    jr = detect_jumps(results[(1.7, "forward")], results[(1.7, "backward")])
    fwd_peak = float(np.max(results[(1.7, "forward")].theta_amp))
    bwd_peak = float(np.max(results[(1.7, "backward")].theta_amp))
    high_ok = (jr.hysteresis and jr.bwd_jump_f < jr.fwd_jump_f
               and bwd_peak >= fwd_peak)
    time_ok = elapsed < SWEEP_BUDGET_S
    report(8, low_ok and high_ok and time_ok,
           f"0.3 V peak at {f_peak:.2f} Hz (within 2% of 36.93); 1.7 V jumps "
           f"fwd {jr.fwd_jump_f:.2f} Hz > bwd {jr.bwd_jump_f:.2f} Hz with "
           f"bwd peak {bwd_peak:.3f} >= fwd peak {fwd_peak:.3f} rad; full demo "
           f"grid in {elapsed:.0f} s (< {SWEEP_BUDGET_S:.0f} s)")


def test_criterion_9_classification(demo_sweeps):
    results, _ = demo_sweeps
    backbone = extract_backbone(list(results.values()))
    label = classify_nonlinearity(backbone, 0.1)
    constructed = [(36.0, 0.1), (36.4, 0.3), (36.2, 0.5), (35.5, 0.8)]
    constructed_label = classify_nonlinearity(constructed, 0.1)
    ok = label == "softening" and constructed_label == "stiffening-then-softening"
    report(9, ok,
           f"demo backbone {[(round(f, 2), round(a, 3)) for f, a in backbone]} "
           f"-> {label}; constructed pattern -> {constructed_label}")
