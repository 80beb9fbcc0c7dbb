"""Slender-body hydrodynamics of the three-column hull.

Replaces a panel code with analytic expressions:

* horizontal first-order force on each (stepped) column from the
  MacCamy-Fuchs diffraction solution, integrated over depth;
* vertical Froude-Krylov force on each heave plate from the incident-wave
  pressure at the keel and at the plate top;
* zero-frequency added mass from strip theory and the flat-disc limit;
* Morison drag nodes (column strips and one keel node per heave plate).

Complex amplitudes follow the ``exp(+i omega t)`` convention; the incident
wave elevation at the origin is ``Re(a exp(i omega t))`` and waves travel
towards ``+x`` for heading 0.  All forces and moments refer to the point on
the platform centreline at the still water level.  Generalised coordinates
are surge, heave and pitch; a positive pitch moves points above SWL
downwind, so the generalised pitch moment is ``sum(z F_x - x F_z)``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import jvp, yvp

from .constants import G, RHO_WATER, WATER_DEPTH
from .hull_design import HullShape

OMEGA_MIN, OMEGA_MAX, N_OMEGA = 0.05, 3.0, 600


def default_omega() -> np.ndarray:
    return np.linspace(OMEGA_MIN, OMEGA_MAX, N_OMEGA)


def wavenumber(omega, depth: float = WATER_DEPTH, g: float = G) -> np.ndarray:
    """Solve the linear dispersion relation omega^2 = g k tanh(k h)."""
    omega = np.asarray(omega, dtype=float)
    k = np.maximum(omega ** 2 / g, 1e-12)
    if np.isinf(depth):
        return k
    # Newton from the deep-water guess, safeguarded for shallow water
    k = np.maximum(k, omega / np.sqrt(g * depth))
    for _ in range(50):
        th = np.tanh(k * depth)
        f = g * k * th - omega ** 2
        df = g * th + g * k * depth * (1 - th ** 2)
        step = f / df
        k = np.maximum(k - step, 0.5 * k)
        if np.all(np.abs(step) <= 1e-12 * k):
            break
    return k


def _depth_functions(k, z, depth):
    """cosh(k(z+h))/cosh(kh) and sinh(k(z+h))/cosh(kh), overflow-safe."""
    if np.isinf(depth):
        e = np.exp(k * z)
        return e, e
    a = np.exp(k * z)
    b = np.exp(-k * (z + 2 * depth))
    den = 1 + np.exp(-2 * k * depth)
    return (a + b) / den, (a - b) / den


def _tanh_kh(k, depth):
    return np.ones_like(k) if np.isinf(depth) else np.tanh(k * depth)


# -- drag nodes ----------------------------------------------------------------
@dataclass(frozen=True)
class DragNode:
    """Morison drag element.

    ``direction`` is ``"h"`` for horizontal drag on a column strip and ``"v"``
    for vertical drag on a heave-plate keel surface.
    """

    x: float
    y: float
    z: float
    direction: str
    area: float
    length: float
    cd: float
    kind: str = "column"

    def __post_init__(self):
        if self.direction not in ("h", "v"):
            raise ValueError("direction must be 'h' or 'v'")
        if self.cd < 0:
            raise ValueError("drag coefficient must be non-negative")

    def kinematics(self) -> np.ndarray:
        """Row mapping (surge, heave, pitch) velocities to the node's drag-direction velocity."""
        if self.direction == "h":
            return np.array([1.0, 0.0, self.z])
        return np.array([0.0, 1.0, -self.x])


def heave_plate_cd(kc, a: float = 5.0, b: float = 0.4, c: float = 1.5,
                   lower: float = 1.5, upper: float = 15.0):
    """Heave-plate drag coefficient as a decreasing function of KC.

    ``Cd = a KC^-b + c`` clipped to ``[lower, upper]``; ``KC = 0`` maps to
    the upper clip (quiescent limit).
    """
    kc = np.asarray(kc, dtype=float)
    if np.any(kc < 0):
        raise ValueError("KC must be non-negative")
    with np.errstate(divide="ignore"):
        cd = np.where(kc > 0, a * np.power(np.where(kc > 0, kc, 1.0), -b) + c, upper)
    cd = np.clip(cd, lower, upper)
    return float(cd) if cd.ndim == 0 else cd


def drag_nodes(shape: HullShape, strips_per_column: int = 10, strips_per_plate: int = 2,
               cd_column: float = 0.4, cd_keel: float = 15.0) -> list[DragNode]:
    """Column strips (horizontal drag) plus one keel node per heave plate."""
    if strips_per_column < 10:
        raise ValueError("at least 10 strips per column are required")
    nodes: list[DragNode] = []
    z_top = shape.z_plate_top
    col_edges = np.linspace(z_top, 0.0, strips_per_column + 1)
    hp_edges = np.linspace(shape.z_keel, z_top, strips_per_plate + 1)
    for xc, yc in shape.column_xy:
        for edges, radius in ((hp_edges, shape.r_hp), (col_edges, shape.r)):
            for z0, z1 in zip(edges[:-1], edges[1:]):
                nodes.append(DragNode(xc, yc, 0.5 * (z0 + z1), "h", 2 * radius * (z1 - z0),
                                      2 * radius, cd_column, "column"))
        nodes.append(DragNode(xc, yc, shape.z_keel, "v", np.pi * shape.r_hp ** 2,
                              2 * shape.r_hp, cd_keel, "keel"))
    return nodes


def with_keel_cd(nodes: list[DragNode], cd) -> list[DragNode]:
    """Copy of ``nodes`` with keel drag coefficients replaced (scalar or per keel node)."""
    keel = [i for i, n in enumerate(nodes) if n.kind == "keel"]
    cd = np.broadcast_to(np.asarray(cd, float), (len(keel),))
    out = list(nodes)
    for i, c in zip(keel, cd):
        out[i] = replace(nodes[i], cd=float(c))
    return out


def node_velocity_rao(nodes: list[DragNode], omega, depth: float = WATER_DEPTH,
                      heading: float = 0.0, g: float = G) -> np.ndarray:
    """Incident-wave particle velocity along each node's drag direction per unit amplitude.

    Returns a complex array of shape ``(len(omega), len(nodes))``.
    """
    omega = np.atleast_1d(np.asarray(omega, float))
    k = wavenumber(omega, depth, g)[:, None]
    th = _tanh_kh(k, depth)
    x = np.array([n.x for n in nodes])[None, :]
    y = np.array([n.y for n in nodes])[None, :]
    z = np.array([n.z for n in nodes])[None, :]
    horiz = np.array([n.direction == "h" for n in nodes])[None, :]
    C, S = _depth_functions(k, z, depth)
    phase = np.exp(-1j * k * (x * np.cos(heading) + y * np.sin(heading)))
    w = omega[:, None]
    u = w * C / th * np.cos(heading)
    v = 1j * w * S / th
    return np.where(horiz, u, v) * phase


# -- added mass ----------------------------------------------------------------
def plate_added_mass(shape: HullShape, rho: float = RHO_WATER) -> float:
    """Vertical added mass of one heave plate [kg].

    Flat disc in unbounded fluid, less the half-disc covered by the column.
    """
    return rho * (8.0 / 3.0 * shape.r_hp ** 3 - 4.0 / 3.0 * shape.r ** 3)


def added_mass(shape: HullShape, rho: float = RHO_WATER) -> np.ndarray:
    """Zero-frequency added mass (surge, heave, pitch) about the SWL reference [kg, kg m, kg m^2]."""
    z_top = shape.z_plate_top
    # strips: (radius, z0, z1)
    segs = [(shape.r, z_top, 0.0), (shape.r_hp, shape.z_keel, z_top)]
    a11 = a15 = a55 = 0.0
    for radius, z0, z1 in segs:
        m = rho * np.pi * radius ** 2
        a11 += m * (z1 - z0)
        a15 += m * (z1 ** 2 - z0 ** 2) / 2
        a55 += m * (z1 ** 3 - z0 ** 3) / 3
    a33_plate = plate_added_mass(shape, rho)
    xs = shape.column_xy[:, 0]
    A = np.zeros((3, 3))
    A[0, 0] = 3 * a11
    A[0, 2] = A[2, 0] = 3 * a15
    A[1, 1] = 3 * a33_plate
    A[1, 2] = A[2, 1] = -a33_plate * xs.sum()
    A[2, 2] = 3 * a55 + a33_plate * np.sum(xs ** 2)
    return A


# -- first-order excitation ----------------------------------------------------
def _mf_factor(k, radius):
    """MacCamy-Fuchs horizontal load factor 4 / (k H1'(kR)) for exp(+i omega t)."""
    kr = k * radius
    return 4.0 / (k * (jvp(1, kr) - 1j * yvp(1, kr)))


def force_rao(shape: HullShape, omega, depth: float = WATER_DEPTH, rho: float = RHO_WATER,
              g: float = G, heading: float = 0.0, plate_diffraction: bool = True) -> np.ndarray:
    """Complex wave force per unit amplitude, shape ``(len(omega), 3)``: surge, heave, pitch.

    With ``plate_diffraction`` each heave plate additionally carries the
    diffraction (added-mass) force ``a33_plate * a_z`` of the incident
    vertical water acceleration at mid-plate height.  This is the vertical
    counterpart of the MacCamy-Fuchs correction and, for thin plates, the
    dominant part of the vertical load at wave frequencies.
    """
    omega = np.atleast_1d(np.asarray(omega, float))
    if np.any(omega <= 0):
        raise ValueError("frequencies must be positive")
    k = wavenumber(omega, depth, g)
    z_top = shape.z_plate_top
    X = np.zeros((omega.size, 3), dtype=complex)
    cpsi, spsi = np.cos(heading), np.sin(heading)
    for xc, yc in shape.column_xy:
        phase = np.exp(-1j * k * (xc * cpsi + yc * spsi))
        fx = np.zeros_like(X[:, 0])
        my = np.zeros_like(X[:, 0])
        for radius, z0, z1 in ((shape.r, z_top, 0.0), (shape.r_hp, shape.z_keel, z_top)):
            C0, S0 = _depth_functions(k, z0, depth)
            C1, S1 = _depth_functions(k, z1, depth)
            int_c = (S1 - S0) / k
            int_zc = (z1 * S1 - z0 * S0) / k - (C1 - C0) / k ** 2
            mf = rho * g * _mf_factor(k, radius)
            fx += mf * int_c
            my += mf * int_zc
        c_keel, _ = _depth_functions(k, shape.z_keel, depth)
        c_top, _ = _depth_functions(k, z_top, depth)
        fz = rho * g * np.pi * (c_keel * shape.r_hp ** 2 - c_top * (shape.r_hp ** 2 - shape.r ** 2))
        if plate_diffraction:
            _, s_mid = _depth_functions(k, shape.z_keel + 0.5 * shape.h_hp, depth)
            fz = fz - omega ** 2 * plate_added_mass(shape, rho) * s_mid / _tanh_kh(k, depth)
        X[:, 0] += fx * cpsi * phase
        X[:, 1] += fz * phase
        X[:, 2] += (my * cpsi - xc * fz) * phase
    return X


# -- slow drift ----------------------------------------------------------------
def drift_coefficient(shape: HullShape, omega, depth: float = WATER_DEPTH,
                      rho: float = RHO_WATER, g: float = G) -> np.ndarray:
    """Heuristic mean-drift coefficient T_c(omega) [N/m^2] in surge.

    ``0.5 rho g (3 * 2r) R(omega)^2`` with a reflection-coefficient shape
    ``R^2 = (kr)^4 / (1 + (kr)^4)``: negligible for long waves, full
    reflection over the column width for short ones.
    """
    k = wavenumber(omega, depth, g)
    kr4 = (k * shape.r) ** 4
    return 0.5 * rho * g * 6 * shape.r * kr4 / (1 + kr4)


def newman_slow_drift(amplitudes, omega, phases, tc, t) -> np.ndarray:
    """Newman single-sum slow-drift force ``2 (sum a_i sqrt(T_c,i) cos(w_i t + phi_i))^2``."""
    tc = np.asarray(tc, float)
    if np.any(tc < 0):
        raise ValueError("drift coefficients must be non-negative")
    a = np.asarray(amplitudes, float) * np.sqrt(tc)
    t = np.asarray(t, float)
    s = np.zeros_like(t)
    for ai, wi, pi in zip(a, omega, phases):
        if ai != 0:
            s += ai * np.cos(wi * t + pi)
    return 2 * s ** 2


def slow_drift_spectrum(omega, s_eta, tc, mu=None) -> np.ndarray:
    """One-sided difference-frequency surge force spectrum (Newman approximation).

    ``S_F(mu) = 8 int S(w) S(w + mu) T_c(w) T_c(w + mu) dw``, evaluated on the
    difference frequencies ``mu`` (default: the wave grid itself).  The
    geometric mean of the two drift coefficients is the spectral counterpart
    of the single-sum series in ``newman_slow_drift``, so both paths carry
    the same slow-drift variance.
    """
    omega = np.asarray(omega, float)
    s_eta = np.asarray(s_eta, float)
    tc = np.asarray(tc, float)
    mu = omega if mu is None else np.atleast_1d(np.asarray(mu, float))
    dw = np.gradient(omega)
    out = np.zeros(mu.shape)
    for j, m in enumerate(mu):
        s2 = np.interp(omega + m, omega, s_eta, right=0.0)
        t2 = np.interp(omega + m, omega, tc, right=tc[-1])
        out[j] = 8 * np.sum(s_eta * s2 * tc * t2 * dw)
    return out


# -- coefficient container -----------------------------------------------------
@dataclass(frozen=True)
class HydroCoefficients:
    added_mass: np.ndarray
    omega: np.ndarray
    X: np.ndarray
    depth: float = WATER_DEPTH
    drift: np.ndarray | None = None
    source: str = field(default="analytic")

    def __post_init__(self):
        A = np.asarray(self.added_mass, float)
        if A.shape != (3, 3) or not np.allclose(A, A.T, rtol=1e-10, atol=1e-6 * max(1.0, np.abs(A).max())):
            raise ValueError("added mass must be a symmetric 3x3 matrix")
        if self.X.shape != (self.omega.size, 3):
            raise ValueError("force RAO must have shape (n_omega, 3)")

    @classmethod
    def from_shape(cls, shape: HullShape, omega=None, depth: float = WATER_DEPTH) -> "HydroCoefficients":
        omega = default_omega() if omega is None else np.asarray(omega, float)
        return cls(added_mass(shape), omega, force_rao(shape, omega, depth), depth,
                   drift_coefficient(shape, omega, depth))

    def force_at(self, omega) -> np.ndarray:
        """Linear interpolation of the RAO (real and imaginary parts) to other frequencies."""
        omega = np.asarray(omega, float)
        out = np.empty((omega.size, 3), dtype=complex)
        for j in range(3):
            out[:, j] = (np.interp(omega, self.omega, self.X[:, j].real, left=0, right=0)
                         + 1j * np.interp(omega, self.omega, self.X[:, j].imag, left=0, right=0))
        return out

    # CSV layout: omega, Re/Im per dof; added mass as comment header
    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("# schema: semisub.hydro/1\n")
            fh.write("# added_mass: " + " ".join(f"{v:.10e}" for v in self.added_mass.ravel()) + "\n")
            fh.write(f"# depth: {self.depth}\n")
            w = csv.writer(fh)
            w.writerow(["omega", "re_x1", "im_x1", "re_x3", "im_x3", "re_x5", "im_x5"])
            for om, row in zip(self.omega, self.X):
                w.writerow([f"{om:.10e}"] + [f"{v:.10e}" for c in row for v in (c.real, c.imag)])

    @classmethod
    def from_csv(cls, path, shape: HullShape | None = None) -> "HydroCoefficients":
        """Load externally computed coefficients (e.g. from a panel code).

        The added-mass header is optional when ``shape`` is given, in which
        case the analytic added mass is used.
        """
        text = Path(path).read_text()
        meta = {}
        body = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
            elif line.strip():
                body.append(line)
        rows = list(csv.reader(io.StringIO("\n".join(body))))
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        omega = data[:, 0]
        X = data[:, 1::2] + 1j * data[:, 2::2]
        if "added_mass" in meta:
            A = np.array([float(v) for v in meta["added_mass"].split()]).reshape(3, 3)
        elif shape is not None:
            A = added_mass(shape)
        else:
            raise ValueError("added mass missing and no shape given")
        depth = float(meta.get("depth", WATER_DEPTH))
        drift = drift_coefficient(shape, omega, depth) if shape is not None else None
        return cls(A, omega, X, depth, drift, source=str(path))
