"""Rotor thrust/power coefficient tables.

The rotor is treated as an actuator disk whose loading is tabulated over
tip-speed ratio and collective blade pitch.  The tables are produced by a
compact blade-element momentum (BEM) solve on a Betz-optimal blade sized to
the DTU 10 MW reference rotor (radius, design tip-speed ratio, blade count).
No airfoil data files are needed: a generic cambered section with a
Viterna post-stall extrapolation is used.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import RectBivariateSpline, RegularGridInterpolator


@dataclass(frozen=True)
class BladeSection:
    """Generic cambered airfoil with Viterna post-stall extrapolation.

    Beyond positive stall the lift and drag follow the Viterna-Corrigan
    extrapolation anchored at the stall point, which keeps a realistic
    deep-stall lift plateau (cl ~ 1) instead of collapsing onto the flat-plate
    curve; the negative-stall side (feathered blades) uses flat-plate values.
    """

    cl_alpha: float = 2 * np.pi * 0.95
    alpha0: float = np.deg2rad(-3.0)
    alpha_stall: float = np.deg2rad(11.0)
    cd0: float = 0.008
    cd_max: float = 1.3

    def coefficients(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        cl_lin = self.cl_alpha * (alpha - self.alpha0)
        cd_att = self.cd0 + 0.012 * (alpha - self.alpha0) ** 2
        # Viterna extrapolation anchored at the attached-flow stall point
        a_s = self.alpha_stall
        cl_s = self.cl_alpha * (a_s - self.alpha0)
        cd_s = self.cd0 + 0.012 * (a_s - self.alpha0) ** 2
        sa_s, ca_s = np.sin(a_s), np.cos(a_s)
        kl = (cl_s - self.cd_max * sa_s * ca_s) * sa_s / ca_s ** 2
        kd = (cd_s - self.cd_max * sa_s ** 2) / ca_s
        sa = np.maximum(np.sin(alpha), 0.5 * sa_s)
        ca = np.cos(alpha)
        cl_vit = 0.5 * self.cd_max * np.sin(2 * alpha) + kl * ca ** 2 / sa
        cd_vit = np.maximum(self.cd_max * sa ** 2 + kd * ca, cd_att)
        cl_fp = 1.1 * np.sin(2 * alpha)
        cd_fp = 0.02 + 1.8 * np.sin(alpha) ** 2
        # smooth blends around +/- stall
        s_pos = 0.5 * (1 + np.tanh((alpha - a_s) / np.deg2rad(2.0)))
        s_neg = 0.5 * (1 + np.tanh((-alpha - a_s - np.deg2rad(4.0)) / np.deg2rad(2.0)))
        cl = (1 - s_pos - s_neg) * cl_lin + s_pos * cl_vit + s_neg * cl_fp
        cd = (1 - s_pos - s_neg) * cd_att + s_pos * cd_vit + s_neg * cd_fp
        return cl, cd


def _betz_blade(radius, hub_radius, n_blades, tsr_design, cl_design, alpha_design, n_sections):
    r = np.linspace(hub_radius, radius, n_sections + 1)
    r = 0.5 * (r[1:] + r[:-1])
    dr = np.full_like(r, (radius - hub_radius) / n_sections)
    tsr_r = tsr_design * r / radius
    phi = 2.0 / 3.0 * np.arctan(1.0 / tsr_r)
    chord = 8 * np.pi * r / (n_blades * cl_design) * (1 - np.cos(phi))
    chord = np.minimum(chord, 0.07 * radius)
    twist = phi - alpha_design
    return r, dr, chord, twist


def bem_coefficients(tsr, pitch, *, radius=89.17, hub_radius=2.8, n_blades=3,
                     tsr_design=7.8, n_sections=30, section=BladeSection()):
    """Thrust and power coefficients from a steady BEM solve.

    Parameters
    ----------
    tsr : array_like
        Tip-speed ratios (broadcast against ``pitch``).
    pitch : array_like
        Collective blade pitch [rad], positive towards feather.

    Returns
    -------
    ct, cp : ndarray
    """
    tsr, pitch = np.broadcast_arrays(np.asarray(tsr, float), np.asarray(pitch, float))
    shape = tsr.shape
    lam = tsr.reshape(-1, 1)
    theta = pitch.reshape(-1, 1)

    alpha_d = np.deg2rad(6.0)
    cl_d, _ = section.coefficients(alpha_d)
    r, dr, chord, twist = _betz_blade(radius, hub_radius, n_blades, tsr_design,
                                      cl_d, alpha_d, n_sections)
    lam_r = lam * r / radius
    sigma = n_blades * chord / (2 * np.pi * r)

    def induction(phi):
        sphi, cphi = np.sin(phi), np.cos(phi)
        alpha = phi - (twist + theta)
        cl, cd = section.coefficients(alpha)
        cn = cl * cphi + cd * sphi
        ct = cl * sphi - cd * cphi
        f_tip = n_blades / 2 * (radius - r) / (r * np.abs(sphi) + 1e-12)
        f_hub = n_blades / 2 * (r - hub_radius) / (hub_radius * np.abs(sphi) + 1e-12)
        F = (4 / np.pi ** 2) * np.arccos(np.exp(-f_tip)) * np.arccos(np.exp(-f_hub))
        F = np.maximum(F, 1e-4)
        k = sigma * cn / (4 * F * sphi ** 2 + 1e-12)
        kp = sigma * ct / (4 * F * sphi * cphi + 1e-12)
        a = k / (1 + k)
        # Buhl high-induction correction
        g1 = 2 * F * k - (10 / 9 - F)
        g2 = np.maximum(2 * F * k - F * (4 / 3 - F), 0.0)
        g3 = 2 * F * k - (25 / 9 - 2 * F)
        safe = np.where(np.abs(g3) < 1e-6, 1.0, g3)
        a_buhl = np.where(np.abs(g3) < 1e-6, 1 - 1 / (2 * np.sqrt(g2 + 1e-12)),
                          (g1 - np.sqrt(g2)) / safe)
        a = np.where(k > 2 / 3, a_buhl, a)
        return a, kp, cl, cd, F

    def residual(phi):
        a, kp, *_ = induction(phi)
        return np.sin(phi) / (1 - a) - np.cos(phi) * (1 - kp) / lam_r

    lo = np.full(lam_r.shape, 1e-6)
    hi = np.full(lam_r.shape, np.pi / 2)
    f_lo = residual(lo)
    f_hi = residual(hi)
    bracketed = np.sign(f_lo) != np.sign(f_hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        f_mid = residual(mid)
        left = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, f_mid, f_lo)
        hi = np.where(left, hi, mid)
    phi = 0.5 * (lo + hi)
    # no induction where the windmill-state residual has no root (feathered, reversed flow)
    phi = np.where(bracketed, phi, np.arctan2(1.0, lam_r))

    a, kp, cl, cd, F = induction(phi)
    a = np.where(bracketed, a, 0.0)
    w2 = np.where(bracketed, (1 - a) ** 2 / np.sin(phi) ** 2, 1 + lam_r ** 2)
    cn = cl * np.cos(phi) + cd * np.sin(phi)
    ctan = cl * np.sin(phi) - cd * np.cos(phi)
    # per-blade loads normalised by 0.5 rho V^2
    area = np.pi * radius ** 2
    d_thrust = n_blades * w2 * chord * cn * dr
    d_torque = n_blades * w2 * chord * ctan * r * dr
    ct_rotor = d_thrust.sum(axis=1) / area
    cq_rotor = d_torque.sum(axis=1) / (area * radius)
    cp_rotor = cq_rotor * lam[:, 0]
    return ct_rotor.reshape(shape), cp_rotor.reshape(shape)


@dataclass(frozen=True)
class RotorTables:
    """Tabulated c_T(lambda, theta) and c_P(lambda, theta) with bilinear lookup."""

    tsr: np.ndarray
    pitch: np.ndarray
    ct: np.ndarray
    cp: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_ct_i", RegularGridInterpolator(
            (self.tsr, self.pitch), self.ct, bounds_error=False, fill_value=None))
        object.__setattr__(self, "_cp_i", RegularGridInterpolator(
            (self.tsr, self.pitch), self.cp, bounds_error=False, fill_value=None))

    def clamp(self, tsr, pitch):
        return (np.clip(tsr, self.tsr[0], self.tsr[-1]),
                np.clip(pitch, self.pitch[0], self.pitch[-1]))

    def coefficients(self, tsr, pitch):
        lam, th = self.clamp(np.asarray(tsr, float), np.asarray(pitch, float))
        pts = np.stack(np.broadcast_arrays(lam, th), axis=-1)
        return self._ct_i(pts), self._cp_i(pts)

    def optimum(self):
        """Tip-speed ratio and pitch of the peak power coefficient."""
        i, j = np.unravel_index(np.argmax(self.cp), self.cp.shape)
        return self.tsr[i], self.pitch[j], self.cp[i, j]


@lru_cache(maxsize=4)
def default_rotor_tables(radius: float = 89.17, ct_scale: float = 1.0) -> RotorTables:
    """BEM tables on a coarse grid, resampled by bicubic splines onto a fine lookup grid.

    The lookup is bilinear (shared with the time-domain kernel), so its slopes
    jump at the grid nodes; on the fine grid those jumps are small enough for
    central-difference linearisation slopes to be insensitive to the step.
    """
    tsr = np.linspace(2.0, 16.0, 57)
    pitch = np.deg2rad(np.linspace(-4.0, 40.0, 89))
    L, P = np.meshgrid(tsr, pitch, indexing="ij")
    ct, cp = bem_coefficients(L, P, radius=radius)
    tsr_f = np.linspace(2.0, 16.0, 701)
    pitch_f = np.deg2rad(np.linspace(-4.0, 40.0, 441))
    ct_f = RectBivariateSpline(tsr, pitch, ct)(tsr_f, pitch_f)
    cp_f = RectBivariateSpline(tsr, pitch, cp)(tsr_f, pitch_f)
    ct_f = ct_f * ct_scale
    for arr in (ct_f, cp_f):
        arr.setflags(write=False)
    return RotorTables(tsr_f, pitch_f, ct_f, cp_f)
