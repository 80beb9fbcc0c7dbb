"""Quasi-static catenary mooring for planar (surge/heave/pitch) motion.

Each line is an elastic catenary with a frictionless seabed.  The three
lines are solved in 3D for a platform that only moves in the x-z plane, so
the two upwind lines contribute their in-plane components exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .constants import WATER_DEPTH


class CatenaryError(RuntimeError):
    pass


def _residual_jacobian(H, V, XF, ZF, L, w, EA):
    s = V / H
    q = np.sqrt(1 + s * s)
    touch = V < w * L
    # seabed contact: the grounded length carries no tension gradient
    fx_c = L - V / w + H / w * np.arcsinh(s) + H * L / EA - XF
    fz_c = H / w * (q - 1) + V * V / (2 * EA * w) - ZF
    j_c = (np.arcsinh(s) / w - s / (w * q) + L / EA, -1 / w + 1 / (w * q),
           (q - 1) / w - s * s / (w * q), s / (w * q) + V / (EA * w))
    sa = (V - w * L) / H
    qa = np.sqrt(1 + sa * sa)
    fx_s = H / w * (np.arcsinh(s) - np.arcsinh(sa)) + H * L / EA - XF
    fz_s = H / w * (q - qa) + (V * L - w * L * L / 2) / EA - ZF
    j_s = ((np.arcsinh(s) - np.arcsinh(sa)) / w - (s / q - sa / qa) / w + L / EA,
           (1 / q - 1 / qa) / w,
           (q - qa) / w - (s * s / q - sa * sa / qa) / w,
           (s / q - sa / qa) / w + L / EA)
    fx = np.where(touch, fx_c, fx_s)
    fz = np.where(touch, fz_c, fz_s)
    jac = [np.where(touch, a, b) for a, b in zip(j_c, j_s)]
    return fx, fz, jac


def catenary_batch(XF, ZF, L: float, w: float, EA: float, tol: float = 1e-6,
                   max_iter: int = 100):
    """Vectorised elastic catenary solve; see :func:`catenary`."""
    XF, ZF = np.broadcast_arrays(np.asarray(XF, float), np.asarray(ZF, float))
    if np.any(XF <= 0) or np.any(ZF <= 0):
        raise CatenaryError("fairlead must lie above and away from the anchor")
    slack = L * L - ZF * ZF > XF * XF
    lam0 = np.where(slack, np.sqrt(3 * np.abs((L * L - ZF * ZF) / (XF * XF) - 1)), 0.2)
    lam0 = np.maximum(lam0, 1e-3)
    H = np.maximum(np.abs(w * XF / (2 * lam0)), 1.0)
    V = np.maximum(w / 2 * (ZF / np.tanh(lam0) + L), 1.0)
    for _ in range(max_iter):
        fx, fz, (a, b, c, d) = _residual_jacobian(H, V, XF, ZF, L, w, EA)
        if np.all(np.maximum(np.abs(fx), np.abs(fz)) < tol):
            return H, V
        det = a * d - b * c
        dH = (-fx * d + fz * b) / det
        dV = (fx * c - fz * a) / det
        # halve steps that would make H non-positive
        alpha = np.ones_like(H)
        for _ in range(30):
            bad = H + alpha * dH <= 0
            if not bad.any():
                break
            alpha = np.where(bad, alpha / 2, alpha)
        H = H + alpha * dH
        V = V + alpha * dV
    raise CatenaryError("catenary did not converge")


def catenary(XF: float, ZF: float, L: float, w: float, EA: float,
             tol: float = 1e-6, max_iter: int = 100) -> tuple[float, float]:
    """Horizontal and vertical fairlead tension [N] of an elastic catenary.

    Parameters
    ----------
    XF, ZF : float
        Horizontal and vertical fairlead offset from the anchor [m].
    L : float
        Unstretched length [m].
    w : float
        Submerged weight per length [N/m].
    EA : float
        Axial stiffness [N].
    """
    H, V = catenary_batch(XF, ZF, L, w, EA, tol, max_iter)
    return float(H), float(V)


@dataclass(frozen=True)
class MooringConfig:
    length: float = 610.0
    weight: float = 1100.0       # submerged weight per length [N/m]
    ea: float = 7.5e8            # axial stiffness [N]
    anchor_radius: float = 600.0
    fairlead_z: float = 8.7
    fairlead_radius: float = 26.0
    depth: float = WATER_DEPTH
    headings_deg: tuple = (0.0, 120.0, 240.0)   # line 0 downwind

    def __post_init__(self):
        if len(self.headings_deg) != 3:
            raise ValueError("three mooring lines are expected")


@dataclass(frozen=True)
class MooringSystem:
    config: MooringConfig = field(default_factory=MooringConfig)

    @classmethod
    def default(cls) -> "MooringSystem":
        return _DEFAULT

    @cached_property
    def _geometry(self):
        c = self.config
        ang = np.deg2rad(np.asarray(c.headings_deg, float))
        unit = np.column_stack([np.cos(ang), np.sin(ang)])
        fair = np.column_stack([c.fairlead_radius * unit, np.full(3, c.fairlead_z)])
        anchor = np.column_stack([c.anchor_radius * unit, np.full(3, -c.depth)])
        return fair, anchor

    def fairleads(self, x: float = 0.0, z: float = 0.0, beta: float = 0.0) -> np.ndarray:
        fair, _ = self._geometry
        cb, sb = np.cos(beta), np.sin(beta)
        out = np.empty_like(fair)
        out[:, 0] = x + fair[:, 0] * cb + fair[:, 2] * sb
        out[:, 1] = fair[:, 1]
        out[:, 2] = z - fair[:, 0] * sb + fair[:, 2] * cb
        return out

    def line_tensions(self, x: float = 0.0, z: float = 0.0, beta: float = 0.0):
        """Horizontal and vertical fairlead tension per line plus horizontal unit vectors."""
        c = self.config
        _, anchor = self._geometry
        fl = self.fairleads(x, z, beta)
        dxy = anchor[:, :2] - fl[:, :2]
        XF = np.hypot(dxy[:, 0], dxy[:, 1])
        ZF = fl[:, 2] - anchor[:, 2]
        H, V = catenary_batch(XF, ZF, c.length, c.weight, c.ea)
        return H, V, dxy / XF[:, None], fl

    def forces(self, x: float = 0.0, z: float = 0.0, beta: float = 0.0) -> np.ndarray:
        """Planar generalized force (F_x, F_z, M_y about the displaced reference point)."""
        H, V, u, fl = self.line_tensions(x, z, beta)
        fx = H * u[:, 0]
        fz = -V
        rx = fl[:, 0] - x
        rz = fl[:, 2] - z
        return np.array([fx.sum(), fz.sum(), np.sum(rz * fx - rx * fz)])

    def static_vertical_load(self) -> float:
        """Total downward pull at the fairleads in the undisplaced position [N]."""
        return float(-self.forces()[1])

    def stiffness(self, x: float = 0.0, z: float = 0.0, beta: float = 0.0,
                  steps=(0.1, 0.1, 1e-3)) -> np.ndarray:
        """Tangent stiffness K = -dF/dq by central differences."""
        q0 = np.array([x, z, beta], float)
        K = np.zeros((3, 3))
        for j, h in enumerate(steps):
            dq = np.zeros(3)
            dq[j] = h
            K[:, j] = -(self.forces(*(q0 + dq)) - self.forces(*(q0 - dq))) / (2 * h)
        return K

    @cached_property
    def table(self) -> "CatenaryTable":
        c = self.config
        xf0 = c.anchor_radius - c.fairlead_radius
        zf0 = c.depth + c.fairlead_z
        return CatenaryTable.build(c, xf0 - 60.0, xf0 + 40.0, zf0 - 25.0, zf0 + 25.0)


@dataclass(frozen=True)
class CatenaryTable:
    """Pre-solved (H, V) on a regular (XF, ZF) grid for fast time stepping."""

    xf: np.ndarray
    zf: np.ndarray
    H: np.ndarray
    V: np.ndarray

    @classmethod
    def build(cls, c: MooringConfig, xf_lo, xf_hi, zf_lo, zf_hi, dx=0.25, dz=0.25):
        xf = np.arange(xf_lo, xf_hi + dx / 2, dx)
        zf = np.arange(zf_lo, zf_hi + dz / 2, dz)
        X, Z = np.meshgrid(xf, zf, indexing="ij")
        H, V = catenary_batch(X, Z, c.length, c.weight, c.ea)
        return cls(xf, zf, H, V)


_DEFAULT = MooringSystem()
