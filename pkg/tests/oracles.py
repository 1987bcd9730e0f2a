"""Independent reference computations used by the tests."""
import math

import numpy as np
from scipy.optimize import golden


def brute_force_extrema(u, lo, hi, n=200_001):
    """Minima/maxima of ``u`` on [lo, hi] by dense scan refined with golden section."""
    x = np.linspace(lo, hi, n)
    y = u(x)
    dx = x[1] - x[0]
    mins, maxs = [], []
    for i in range(1, n - 1):
        if y[i] < y[i - 1] and y[i] < y[i + 1]:
            mins.append(golden(u, brack=(x[i] - dx, x[i], x[i] + dx), tol=1e-12))
        elif y[i] > y[i - 1] and y[i] > y[i + 1]:
            maxs.append(golden(lambda s: -u(s), brack=(x[i] - dx, x[i], x[i] + dx), tol=1e-12))
    return mins, maxs


def rk4_pair(e_lo, e_hi, h_ll, h_hh, h_lh, t_end, n_steps, a_lo0=1.0 + 0j):
    """Integrate the coupled interaction-picture amplitude equations of one pair.

        i da_lo/dt = H_ll a_lo + H_lh exp(i (E_lo - E_hi) t) a_hi
        i da_hi/dt = H_lh exp(i (E_hi - E_lo) t) a_lo + H_hh a_hi

    (hbar = 1) with a fixed-step classical Runge-Kutta scheme.  Returns the
    times and both amplitude histories.
    """
    w = e_hi - e_lo

    def f(t, y):
        lo, hi = y
        return np.array([
            -1j * (h_ll * lo + h_lh * np.exp(-1j * w * t) * hi),
            -1j * (h_lh * np.exp(1j * w * t) * lo + h_hh * hi),
        ])

    dt = t_end / n_steps
    y = np.array([a_lo0, 0.0], dtype=complex)
    ts = [0.0]
    ys = [y.copy()]
    t = 0.0
    for _ in range(n_steps):
        k1 = f(t, y)
        k2 = f(t + dt / 2, y + dt / 2 * k1)
        k3 = f(t + dt / 2, y + dt / 2 * k2)
        k4 = f(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
        ts.append(t)
        ys.append(y.copy())
    return np.array(ts), np.array(ys)


def harmonic_levels(k, kinetic, n):
    """Exact ``(n + 1/2) omega`` for ``-kinetic d2/dx2 + k x^2 / 2`` (mass = 1 / (2 kinetic))."""
    omega = math.sqrt(2.0 * k * kinetic)
    return (np.arange(n) + 0.5) * omega
