"""Independent numerical oracles used by the tests.

None of these reuse the closed-form expressions of the package: the pitch
restoring is obtained by integrating hydrostatic buoyancy over a
discretised, tilted hull, and the signal generators build their series from
first principles.
"""
from __future__ import annotations

import numpy as np

RHO, G = 1025.0, 9.81


def _disc_cells(radius: float, cell: float):
    """Cell centres and area of a Cartesian discretisation of a disc."""
    n = int(np.ceil(radius / cell))
    c = (np.arange(-n, n) + 0.5) * cell
    X, Y = np.meshgrid(c, c, indexing="ij")
    inside = X ** 2 + Y ** 2 <= radius ** 2
    return X[inside], Y[inside], cell * cell


def _solids(shape):
    """Vertical cylinders (x_c, y_c, radius, z_bottom, z_top) making up the hull."""
    out = []
    for xc, yc in shape.column_xy:
        out.append((xc, yc, shape.r_hp, shape.z_keel, shape.z_plate_top))
        out.append((xc, yc, shape.r, shape.z_plate_top, shape.freeboard))
    return out


def buoyancy_moment(shape, beta: float, cell: float = 0.05) -> tuple[float, float]:
    """Submerged volume [m^3] and buoyancy pitch moment M_y [Nm] about the SWL origin.

    The body is rotated by ``beta`` about the y axis (``x_w = x cos b + z sin b``,
    ``z_w = -x sin b + z cos b``); each plan cell of each cylinder is
    integrated analytically over its wetted height ``z_w < 0``.
    """
    cb, sb = np.cos(beta), np.sin(beta)
    vol = mom = 0.0
    for xc, yc, radius, z0, z1 in _solids(shape):
        x, _, da = _disc_cells(radius, cell)
        x = x + xc
        # z_w < 0  <=>  z < x tan(beta)
        top = np.minimum(z1, x * sb / cb)
        a = z0
        b = np.maximum(top, a)
        h = b - a
        vol += np.sum(h) * da
        xw = cb * x * h + sb * (b ** 2 - a ** 2) / 2
        # upward force rho g dV at x_w gives M_y = -x_w F_z
        mom += -RHO * G * np.sum(xw) * da
    return vol, mom


def c55_pressure_integration(shape, z_cm: float, beta: float = 2e-3, cell: float = 0.05) -> float:
    """Pitch restoring stiffness from tilted-hull buoyancy plus a weight equal to the buoyancy at rest."""
    vol0, _ = buoyancy_moment(shape, 0.0, cell)
    weight = RHO * G * vol0

    def total(b):
        _, m_b = buoyancy_moment(shape, b, cell)
        # weight acts at x_w = z_cm sin(b)
        return m_b + weight * np.sin(b) * z_cm

    return -(total(beta) - total(-beta)) / (2 * beta)


def gaussian_series(omega, psd, duration: float, dt: float, seed: int) -> np.ndarray:
    """Random-amplitude Gaussian realization of a one-sided PSD (per rad/s) by summing harmonics."""
    rng = np.random.default_rng(seed)
    n = int(round(duration / dt))
    dw = 2 * np.pi / (n * dt)
    w = np.arange(1, n // 2) * dw
    s = np.interp(w, omega, psd, left=0.0, right=0.0)
    # complex Gaussian coefficients: Rayleigh amplitudes, uniform phases; the
    # series below is 2 Re(c e^{iwt}), so each part carries variance s dw / 4
    c = (rng.standard_normal(w.size) + 1j * rng.standard_normal(w.size)) * np.sqrt(s * dw) / 2
    spec = np.zeros(n // 2 + 1, dtype=complex)
    spec[1:n // 2] = c
    return np.fft.irfft(spec, n=n) * n


def rk4(f, y0, t):
    """Classical fixed-step Runge-Kutta integration of ``dy/dt = f(t, y)``."""
    y = np.empty((t.size, np.size(y0)))
    y[0] = y0
    for i in range(t.size - 1):
        h = t[i + 1] - t[i]
        k1 = f(t[i], y[i])
        k2 = f(t[i] + h / 2, y[i] + h / 2 * k1)
        k3 = f(t[i] + h / 2, y[i] + h / 2 * k2)
        k4 = f(t[i + 1], y[i] + h * k3)
        y[i + 1] = y[i] + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y
