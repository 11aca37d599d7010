"""Compiled integration kernel for harmonic-drive sweep points.

A sweep point integrates the coupled coil-rotor system through hundreds of
transient drive cycles before the analysis window, and a full sweep grid
runs a thousand such points, so this hot path is a hand-rolled adaptive
Dormand-Prince 5(4) stepper compiled with numba. Steps are clipped to land
exactly on the requested sample instants; dry friction uses the same tanh
regularization as the general-purpose integrator.
"""

import math

import numpy as np
from numba import njit

# Kernel exit codes.
OK = 0
STEP_UNDERFLOW = 1
STEP_OVERFLOW = 2

_MAX_STEPS = 50_000_000


@njit(cache=True)
def harmonic_point(j, c, tf, tamp, r, l, k_t, k_emf,
                   u_amp, f_ext, theta0, omega0, i0,
                   sample_times, out_theta, out_omega, out_i,
                   rtol, atol, max_step, eps, linear):
    """Integrate the driven system from t = 0, sampling at ``sample_times``.

    Returns (status, theta, omega, i_coil) with the final state. The drive is
    u_amp * cos(2 pi f_ext t); ``linear`` selects the linearized dynamics
    (straight spring, unit coupling projection, no dry friction).
    """
    w = 2.0 * math.pi * f_ext
    t_end = sample_times[-1]
    h_floor = 1e-15 * t_end
    h_max = max_step
    if h_max > 0.25 / f_ext:
        h_max = 0.25 / f_ext

    y0, y1, y2 = theta0, omega0, i0
    t = 0.0
    h = 1e-3 / f_ext
    n_samples = sample_times.shape[0]
    m = 0
    nsteps = 0

    def rhs(tt, a, b, d):
        if linear:
            cc = 1.0
            sp = tamp * a
            fr = 0.0
        else:
            cc = math.cos(a)
            sp = tamp * math.sin(a)
            fr = tf * math.tanh(b / eps)
        return (b,
                (k_t * d * cc - c * b - fr - sp) / j,
                (u_amp * math.cos(w * tt) - r * d - k_emf * b * cc) / l)

    # FSAL first stage
    k1_0, k1_1, k1_2 = rhs(t, y0, y1, y2)

    while True:
        while m < n_samples and t >= sample_times[m]:
            out_theta[m] = y0
            out_omega[m] = y1
            out_i[m] = y2
            m += 1
        if m >= n_samples:
            return OK, y0, y1, y2
        nsteps += 1
        if nsteps > _MAX_STEPS:
            return STEP_OVERFLOW, y0, y1, y2

        ht = h
        if ht > h_max:
            ht = h_max
        target = sample_times[m]
        clipped = False
        if t + ht >= target:
            ht = target - t
            clipped = True
        if ht < h_floor:
            return STEP_UNDERFLOW, y0, y1, y2

        k2_0, k2_1, k2_2 = rhs(t + ht / 5.0,
                               y0 + ht * (k1_0 / 5.0),
                               y1 + ht * (k1_1 / 5.0),
                               y2 + ht * (k1_2 / 5.0))
        k3_0, k3_1, k3_2 = rhs(t + 3.0 * ht / 10.0,
                               y0 + ht * (3.0 / 40.0 * k1_0 + 9.0 / 40.0 * k2_0),
                               y1 + ht * (3.0 / 40.0 * k1_1 + 9.0 / 40.0 * k2_1),
                               y2 + ht * (3.0 / 40.0 * k1_2 + 9.0 / 40.0 * k2_2))
        k4_0, k4_1, k4_2 = rhs(t + 4.0 * ht / 5.0,
                               y0 + ht * (44.0 / 45.0 * k1_0 - 56.0 / 15.0 * k2_0 + 32.0 / 9.0 * k3_0),
                               y1 + ht * (44.0 / 45.0 * k1_1 - 56.0 / 15.0 * k2_1 + 32.0 / 9.0 * k3_1),
                               y2 + ht * (44.0 / 45.0 * k1_2 - 56.0 / 15.0 * k2_2 + 32.0 / 9.0 * k3_2))
        k5_0, k5_1, k5_2 = rhs(t + 8.0 * ht / 9.0,
                               y0 + ht * (19372.0 / 6561.0 * k1_0 - 25360.0 / 2187.0 * k2_0
                                          + 64448.0 / 6561.0 * k3_0 - 212.0 / 729.0 * k4_0),
                               y1 + ht * (19372.0 / 6561.0 * k1_1 - 25360.0 / 2187.0 * k2_1
                                          + 64448.0 / 6561.0 * k3_1 - 212.0 / 729.0 * k4_1),
                               y2 + ht * (19372.0 / 6561.0 * k1_2 - 25360.0 / 2187.0 * k2_2
                                          + 64448.0 / 6561.0 * k3_2 - 212.0 / 729.0 * k4_2))
        k6_0, k6_1, k6_2 = rhs(t + ht,
                               y0 + ht * (9017.0 / 3168.0 * k1_0 - 355.0 / 33.0 * k2_0
                                          + 46732.0 / 5247.0 * k3_0 + 49.0 / 176.0 * k4_0
                                          - 5103.0 / 18656.0 * k5_0),
                               y1 + ht * (9017.0 / 3168.0 * k1_1 - 355.0 / 33.0 * k2_1
                                          + 46732.0 / 5247.0 * k3_1 + 49.0 / 176.0 * k4_1
                                          - 5103.0 / 18656.0 * k5_1),
                               y2 + ht * (9017.0 / 3168.0 * k1_2 - 355.0 / 33.0 * k2_2
                                          + 46732.0 / 5247.0 * k3_2 + 49.0 / 176.0 * k4_2
                                          - 5103.0 / 18656.0 * k5_2))
        # 5th-order solution
        z0 = y0 + ht * (35.0 / 384.0 * k1_0 + 500.0 / 1113.0 * k3_0 + 125.0 / 192.0 * k4_0
                        - 2187.0 / 6784.0 * k5_0 + 11.0 / 84.0 * k6_0)
        z1 = y1 + ht * (35.0 / 384.0 * k1_1 + 500.0 / 1113.0 * k3_1 + 125.0 / 192.0 * k4_1
                        - 2187.0 / 6784.0 * k5_1 + 11.0 / 84.0 * k6_1)
        z2 = y2 + ht * (35.0 / 384.0 * k1_2 + 500.0 / 1113.0 * k3_2 + 125.0 / 192.0 * k4_2
                        - 2187.0 / 6784.0 * k5_2 + 11.0 / 84.0 * k6_2)
        t_new = target if clipped else t + ht
        k7_0, k7_1, k7_2 = rhs(t_new, z0, z1, z2)

        # Embedded 4th-order error estimate
        e0 = ht * (71.0 / 57600.0 * k1_0 - 71.0 / 16695.0 * k3_0 + 71.0 / 1920.0 * k4_0
                   - 17253.0 / 339200.0 * k5_0 + 22.0 / 525.0 * k6_0 - 1.0 / 40.0 * k7_0)
        e1 = ht * (71.0 / 57600.0 * k1_1 - 71.0 / 16695.0 * k3_1 + 71.0 / 1920.0 * k4_1
                   - 17253.0 / 339200.0 * k5_1 + 22.0 / 525.0 * k6_1 - 1.0 / 40.0 * k7_1)
        e2 = ht * (71.0 / 57600.0 * k1_2 - 71.0 / 16695.0 * k3_2 + 71.0 / 1920.0 * k4_2
                   - 17253.0 / 339200.0 * k5_2 + 22.0 / 525.0 * k6_2 - 1.0 / 40.0 * k7_2)

        s0 = atol + rtol * max(abs(y0), abs(z0))
        s1 = atol + rtol * max(abs(y1), abs(z1))
        s2 = atol + rtol * max(abs(y2), abs(z2))
        err = math.sqrt(((e0 / s0) ** 2 + (e1 / s1) ** 2 + (e2 / s2) ** 2) / 3.0)

        if err <= 1.0:
            t = t_new
            y0, y1, y2 = z0, z1, z2
            k1_0, k1_1, k1_2 = k7_0, k7_1, k7_2
            if not clipped:
                # Sample-landing steps keep the natural step estimate.
                factor = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
                h = ht * factor
        else:
            h = ht * max(0.2, 0.9 * err ** -0.2)
