import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magtorsion import (
    DomainError,
    MechanicalParams,
    RingdownModal,
    build_schedule,
    combined_response,
    combined_velocity,
    detect_arrest,
    envelope_amplitude,
    integrate_free,
    schedule_from_modal,
    viscous_response,
)
from magtorsion.odesim import IntegratorSettings
from magtorsion.ringdown import WeakDampingAssumptionWarning, _theta_k

from conftest import rms


def iterate_recursion(theta1, zeta, theta_f, k):
    """Direct iteration of the turning-point amplitude recursion (oracle)."""
    root = math.sqrt(1.0 - zeta**2)
    q = math.exp(-math.pi * zeta / root)
    val = theta1
    for _ in range(k - 1):
        val = val * q - 2.0 * theta_f / root
    return val


class TestViscousResponse:
    def test_undamped_is_pure_cosine(self):
        modal = RingdownModal(10.0, 0.0, 0.0, 0.3, 0.0)
        t = np.linspace(0.0, 5.0, 1000)
        assert np.allclose(viscous_response(modal, t), 0.3 * np.cos(10.0 * t), atol=1e-15)

    def test_initial_value(self):
        modal = RingdownModal(10.0, 0.05, 0.0, 0.3, 0.0)
        assert viscous_response(modal, 0.0) == pytest.approx(0.3, rel=1e-15)

    @given(omega_n=st.floats(1.0, 500.0), zeta=st.floats(1e-5, 0.3),
           theta0=st.floats(0.01, 1.0))
    @settings(max_examples=100, deadline=None)
    def test_ratio_across_one_period_is_log_decrement(self, omega_n, zeta, theta0):
        modal = RingdownModal(omega_n, zeta, 0.0, theta0, 0.0)
        period = 2.0 * math.pi / modal.omega_d
        t = np.array([0.3 * period, 1.3 * period])
        v = viscous_response(modal, t)
        expected = math.exp(-2.0 * math.pi * zeta / math.sqrt(1.0 - zeta**2))
        assert v[1] / v[0] == pytest.approx(expected, rel=1e-12)


class TestBuildSchedule:
    def test_undamped_release_from_rest(self):
        modal = RingdownModal(20.0, 0.0, 0.01)
        sched = build_schedule(modal, 0.5, 0.0)
        assert sched.s0 == -1
        assert sched.modal.phi0 == pytest.approx(0.0, abs=1e-15)
        assert sched.modal.theta0_amp == pytest.approx(0.5 - 0.01, rel=1e-14)
        assert sched.t1 == pytest.approx(math.pi / 20.0, rel=1e-14)

    def test_frictionless_matches_viscous_parameterization(self):
        modal = RingdownModal(20.0, 0.02, 0.0)
        sched = build_schedule(modal, 0.4, 0.0)
        assert sched.modal.theta0_amp * math.cos(sched.modal.phi0) == pytest.approx(0.4, rel=1e-14)
        t = np.linspace(0.0, 3.0, 4000)
        assert np.max(np.abs(combined_response(sched, t)
                             - viscous_response(sched.modal, t))) < 1e-12

    def test_first_turning_pinned_against_ode_oracle(self, mech, modal):
        theta0 = math.radians(15.0)
        sched = build_schedule(modal, theta0, 0.0)
        settings_ = IntegratorSettings(rel_tol=1e-11, abs_tol=1e-14)
        traj = integrate_free(mech, theta0, 0.0, 1.5 * sched.t1, settings_,
                              times=np.linspace(0.0, 1.5 * sched.t1, 50))
        assert abs(traj.turnings[0] - sched.t1) < 1e-9
        ode_extremum = integrate_free(mech, theta0, 0.0, sched.t1 + 1e-9, settings_,
                                      times=np.array([0.0, sched.t1])).theta[-1]
        analytic_extremum = combined_response(sched, sched.t1)
        assert abs(ode_extremum - analytic_extremum) < 1e-9

    def test_nonzero_initial_velocity(self):
        modal = RingdownModal(25.0, 0.01, 1e-3)
        sched = build_schedule(modal, 0.1, 2.0)
        assert sched.s0 == 1
        t = np.array([0.0])
        assert combined_response(sched, t)[0] == pytest.approx(0.1, rel=1e-12)
        assert combined_velocity(sched, t)[0] == pytest.approx(2.0, rel=1e-10)

    def test_degenerate_start_rejected(self, modal):
        with pytest.raises(DomainError):
            build_schedule(modal, 0.0, 0.0)

    def test_arrest_at_start(self):
        modal = RingdownModal(20.0, 0.01, 0.05)
        sched = build_schedule(modal, 0.03, 0.0)
        assert sched.arrest_index == 0
        t = np.linspace(0.0, 1.0, 100)
        assert np.all(combined_response(sched, t) == 0.03)

    def test_strong_damping_flagged(self):
        modal = RingdownModal(20.0, 0.35, 0.0, 0.4, 0.0)
        with pytest.warns(WeakDampingAssumptionWarning):
            schedule_from_modal(modal)


class TestEnvelope:
    def test_undamped_linear_decrement(self):
        modal = RingdownModal(20.0, 0.0, 0.01)
        sched = build_schedule(modal, 0.5, 0.0)
        theta1 = sched.theta1
        for k in range(1, 20):
            if sched.arrest_index is not None and k >= sched.arrest_index:
                break
            expected = theta1 - 2.0 * 0.01 * (k - 1)
            assert envelope_amplitude(sched, k) == pytest.approx(expected, abs=1e-10)

    def test_frictionless_log_decrement(self):
        modal = RingdownModal(20.0, 0.03, 0.0)
        sched = build_schedule(modal, 0.5, 0.0)
        q = math.exp(-math.pi * 0.03 / math.sqrt(1.0 - 0.03**2))
        for k in (1, 2, 5, 20, 100):
            assert envelope_amplitude(sched, k) == pytest.approx(
                sched.theta1 * q ** (k - 1), rel=1e-12)

    @given(zeta=st.floats(1e-4, 0.2), ratio=st.floats(1e-4, 0.02))
    @settings(max_examples=100, deadline=None)
    def test_closed_form_equals_recursion(self, zeta, ratio):
        theta1 = 0.4
        theta_f = ratio * theta1
        for k in (2, 7, 50, 200):
            closed = _theta_k(theta1, zeta, theta_f, k)
            iterated = iterate_recursion(theta1, zeta, theta_f, k)
            assert closed == pytest.approx(iterated, rel=1e-12, abs=1e-15)

    def test_out_of_range_after_arrest(self):
        # Release angle chosen so the first turning amplitude is 10 theta_f.
        modal = RingdownModal(20.0, 0.0, 0.04)
        sched = build_schedule(modal, 0.52, 0.0)
        assert sched.theta1 == pytest.approx(0.4, rel=1e-12)
        assert sched.arrest_index == 6
        with pytest.raises(DomainError):
            envelope_amplitude(sched, 6)


class TestDetectArrest:
    def test_linear_envelope_arrest_count(self):
        # theta1 = 10 theta_f with zero viscous damping: six half-cycles.
        modal = RingdownModal(20.0, 0.0, 0.04)
        sched = build_schedule(modal, 0.52, 0.0)
        assert sched.theta1 == pytest.approx(0.4, rel=1e-12)
        assert detect_arrest(sched) == 6
        # brute-force iteration of the recursion agrees
        k = 1
        while iterate_recursion(sched.theta1, 0.0, 0.04, k) > 0.0:
            k += 1
        assert k == 6

    def test_no_arrest_without_friction(self):
        modal = RingdownModal(20.0, 0.05, 0.0)
        sched = build_schedule(modal, 0.5, 0.0)
        assert detect_arrest(sched) is None

    def test_rest_angle_inside_friction_band(self, modal):
        sched = build_schedule(modal, math.radians(15.0), 0.0)
        k_stop = detect_arrest(sched)
        assert k_stop is not None
        assert abs(sched.rest_angle) <= modal.theta_f * (1.0 + 1e-9)
        t_after = sched.arrest_time + np.linspace(0.0, 1.0, 50)
        assert np.all(combined_response(sched, t_after) == sched.rest_angle)
        assert np.all(combined_velocity(sched, t_after) == 0.0)

    @given(zeta=st.floats(1e-4, 0.15), ratio=st.floats(0.005, 0.08))
    @settings(max_examples=50, deadline=None)
    def test_closed_form_arrest_matches_iteration(self, zeta, ratio):
        modal = RingdownModal(50.0, zeta, ratio * 0.5)
        sched = build_schedule(modal, 0.5, 0.0)
        k_stop = detect_arrest(sched)
        assert k_stop is not None
        k = 1
        while iterate_recursion(sched.theta1, zeta, modal.theta_f, k) > 0.0:
            k += 1
            assert k < 10_000
        assert k_stop == k


class TestCombinedResponse:
    def test_frictionless_equals_viscous(self):
        modal = RingdownModal(30.0, 0.02, 0.0)
        sched = build_schedule(modal, 0.3, 0.0)
        t = np.linspace(0.0, 5.0, 20_000)
        assert np.max(np.abs(combined_response(sched, t)
                             - viscous_response(sched.modal, t))) < 1e-12

    def test_continuity_at_turning_points(self, modal):
        sched = build_schedule(modal, math.radians(15.0), 0.0)
        eps = 1e-9 / modal.omega_d
        for k in range(1, 40):
            tk = sched.turning_time(k)
            jump = abs(combined_response(sched, tk - eps) - combined_response(sched, tk + eps))
            assert jump < 1e-12

    def test_velocity_vanishes_at_turning_points(self, modal):
        sched = build_schedule(modal, math.radians(15.0), 0.0)
        scale = modal.omega_n * sched.modal.theta0_amp
        for k in range(1, 60):
            tk = sched.turning_time(k)
            assert abs(combined_velocity(sched, np.array([tk]))[0]) < 1e-10 * scale

    def test_half_cycle_spacing_exact(self, modal):
        sched = build_schedule(modal, math.radians(15.0), 0.0)
        half = math.pi / modal.omega_d
        for k in range(1, 30):
            spacing = sched.turning_time(k + 1) - sched.turning_time(k)
            assert spacing == pytest.approx(half, rel=1e-12)

    def test_alternating_extrema_lose_twice_friction_angle_undamped(self):
        # Zero viscous damping: each full period loses exactly 4 theta_f.
        theta_f = 2e-3
        modal = RingdownModal(40.0, 0.0, theta_f)
        sched = build_schedule(modal, 0.3, 0.0)
        extrema = [combined_response(sched, sched.turning_time(k))
                   for k in range(1, 20)]
        mags = np.abs(extrema)
        drops = mags[:-1] - mags[1:]
        assert np.allclose(drops, 2.0 * theta_f, atol=1e-10)

    def test_matches_ode_oracle_on_random_grid(self):
        rng = np.random.default_rng(42)
        settings_ = IntegratorSettings(rel_tol=1e-11, abs_tol=1e-14)
        for _ in range(10):
            zeta = 10 ** rng.uniform(-3, math.log10(0.2))
            theta0 = 0.3
            theta_f = rng.uniform(0.0, 0.1) * theta0
            omega_n = rng.uniform(10.0, 300.0)
            modal = RingdownModal(omega_n, zeta, theta_f)
            sched = build_schedule(modal, theta0, 0.0)
            t_end = sched.t1 + 9.4 * math.pi / modal.omega_d
            if sched.arrest_time is not None:
                t_end = min(t_end, 0.999 * sched.arrest_time)
            times = np.linspace(0.0, t_end, 2000)
            inertia = 1e-5
            p = MechanicalParams(inertia, 2.0 * zeta * omega_n * inertia,
                                 theta_f * inertia * omega_n**2,
                                 inertia * omega_n**2)
            traj = integrate_free(p, theta0, 0.0, t_end, settings_, times=times)
            err = rms(traj.theta - combined_response(sched, times))
            assert err < 1e-8 * sched.modal.theta0_amp
