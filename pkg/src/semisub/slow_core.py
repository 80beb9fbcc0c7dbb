"""Low-order coupled floating wind turbine model (planar, 6 DOF).

Degrees of freedom: platform surge ``x_p``, heave ``z_p`` and pitch
``beta_p`` about the SWL reference point, the first tower fore-aft mode
``x_t`` (tower-top deflection), rotor speed ``Omega`` and the blade-pitch
actuator state ``theta`` (first-order lag).  The state vector is::

    [x_p, z_p, beta_p, x_t, dx_p, dz_p, dbeta_p, dx_t, Omega, theta]

and the closed loop adds the PI integrator state ``xi``.

Aerodynamics are quasi-static actuator-disk loads from tabulated
c_T(lambda, theta) and c_P(lambda, theta) with the relative wind speed at
the hub.  Hydrodynamics: constant added mass, linear hydrostatics, first-order
wave excitation from the force RAO, Morison quadratic drag at the drag nodes
using the relative velocity, and Newman's slow-drift force in surge.
Mooring forces come from the quasi-static catenary model.

Small-angle kinematics: a point (x, z) of the platform moves to
``(x + x_p + beta_p z, z + z_p - beta_p x)``.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache

import numpy as np
from numba import njit
from scipy import optimize

from .constants import G, RHO_WATER
from .environment import LoadCase, WaveRealization, WindRealization, rotor_effective_wind, \
    turbulence_sigma, wave_realization
from .hull_design import Design
from .hydro import DragNode, HydroCoefficients, drag_nodes, drift_coefficient, node_velocity_rao, \
    with_keel_cd
from .mooring import MooringSystem
from .turbine import TurbineConfig

log = logging.getLogger(__name__)

STATE_NAMES = ("x_p", "z_p", "beta_p", "x_t", "dx_p", "dz_p", "dbeta_p", "dx_t", "omega", "theta")
N_DOF = 4
N_STATE = 10
OUTPUT_NAMES = ("omega", "x_t", "M_yt", "P", "a_tt", "beta_p", "x_p", "z_p", "theta")
INPUT_NAMES = ("M_g", "theta_ref")
DIST_NAMES = ("v0", "F_x", "F_z", "M_y")

# rotor-coefficient central-difference steps (wind, rotor speed, pitch)
SLOPE_STEPS = (0.5, 0.01, np.deg2rad(0.5))


class SimulationError(RuntimeError):
    pass


# -- aerodynamics --------------------------------------------------------------
def aero_forces(turbine: TurbineConfig, v_rel, omega, theta):
    """Rotor thrust [N] and aerodynamic torque [Nm] from the coefficient tables.

    ``(lambda, theta)`` outside the tables are clamped to the table edges.
    """
    v_rel = np.asarray(v_rel, float)
    omega = np.asarray(omega, float)
    if np.any(omega <= 0):
        raise ValueError("rotor speed must be positive for a torque evaluation")
    if np.any(v_rel <= 0):
        raise ValueError("relative wind speed must be positive")
    lam = omega * turbine.rotor_radius / v_rel
    tab = turbine.rotor
    if np.any((lam < tab.tsr[0]) | (lam > tab.tsr[-1])):
        log.debug("tip-speed ratio outside rotor table; clamped")
    ct, cp = tab.coefficients(lam, theta)
    qa = 0.5 * turbine.rho_air * turbine.rotor_area
    thrust = qa * np.asarray(ct) * v_rel ** 2
    torque = qa * np.asarray(cp) * v_rel ** 3 / omega
    if thrust.size == 1 and v_rel.ndim == 0 and omega.ndim == 0 and np.ndim(theta) == 0:
        return float(thrust.ravel()[0]), float(torque.ravel()[0])
    return thrust, torque


@lru_cache(maxsize=16)
def optimal_mode_gain(turbine: TurbineConfig) -> tuple[float, float]:
    """Below-rated torque constant K [Nm s^2] and the optimal tip-speed ratio."""
    tab = turbine.rotor
    lam = np.linspace(tab.tsr[0], tab.tsr[-1], 2801)
    _, cp = tab.coefficients(lam, np.full_like(lam, turbine.min_pitch))
    i = int(np.argmax(cp))
    lam_opt, cp_max = lam[i], cp[i]
    k = 0.5 * turbine.rho_air * turbine.rotor_area * turbine.rotor_radius ** 3 * cp_max / lam_opt ** 3
    return float(k), float(lam_opt)


@lru_cache(maxsize=16)
def rated_wind_speed(turbine: TurbineConfig) -> float:
    """Lowest wind speed giving rated mechanical power at rated speed and minimum pitch."""
    w = turbine.rated_rotor_speed

    def excess(v):
        _, q = aero_forces(turbine, v, w, turbine.min_pitch)
        return q * w - turbine.rated_mech_power

    # above the power peak the fixed-pitch rotor stalls; search below it
    grid = np.linspace(3.0, 25.0, 221)
    p = np.array([excess(v) for v in grid])
    hi = grid[np.argmax(p > 0)] if np.any(p > 0) else None
    if hi is None:
        raise ValueError("rotor never reaches rated power at rated speed")
    return float(optimize.brentq(excess, 3.0, hi, xtol=1e-8))


# -- model ---------------------------------------------------------------------
@dataclass
class NonlinearModel:
    """Coupled model of one design; owns its drag-coefficient state."""

    design: Design
    turbine: TurbineConfig = field(default_factory=TurbineConfig)
    mooring: MooringSystem = field(default_factory=MooringSystem.default)
    hydro: HydroCoefficients | None = None
    nodes: list[DragNode] | None = None
    parked_ct: float = 0.02
    rho: float = RHO_WATER

    def __post_init__(self):
        if self.hydro is None:
            self.hydro = HydroCoefficients.from_shape(self.design.shape)
        if self.nodes is None:
            self.nodes = drag_nodes(self.design.shape)

    def with_keel_cd(self, cd) -> "NonlinearModel":
        return replace(self, nodes=with_keel_cd(self.nodes, cd))

    # geometry helpers -----------------------------------------------------
    @property
    def z_hub(self) -> float:
        return self.turbine.hub_height

    @property
    def z_top(self) -> float:
        return self.turbine.tower_top_z

    @property
    def thrust_vector(self) -> np.ndarray:
        """Generalised-force direction of a horizontal hub force."""
        return np.array([1.0, 0.0, self.z_hub, 1.0])

    @cached_property
    def _rigid_items(self):
        """(mass [kg], z, own pitch inertia [kg m^2]) of all rigid-body mass lumps."""
        m = self.design.mass
        items = [(i.mass * 1e3, i.z, i.inertia * 1e3) for k, i in m.items().items()
                 if k not in ("tower", "rna")]
        z_tw, m_tw = self.turbine.tower_stations()
        items += [(mi, zi, 0.0) for mi, zi in zip(m_tw, z_tw)]
        items.append((self.turbine.rna_mass * 1e3, self.z_hub, self.turbine.rna_inertia * 1e3))
        return items

    @cached_property
    def structural_mass(self) -> np.ndarray:
        t = self.turbine
        M = np.zeros((4, 4))
        for mi, zi, ii in self._rigid_items:
            M[0, 0] += mi
            M[0, 2] += mi * zi
            M[2, 2] += mi * zi ** 2 + ii
        M[1, 1] = M[0, 0]
        z_tw, m_tw = t.tower_stations()
        phi = t.mode_shape(z_tw)
        m_rna = t.rna_mass * 1e3
        M[0, 3] = np.sum(m_tw * phi) + m_rna
        M[2, 3] = np.sum(m_tw * phi * z_tw) + m_rna * self.z_hub
        M[3, 3] = t.tower_modal_mass
        return M + np.triu(M, 1).T

    @cached_property
    def mass_matrix(self) -> np.ndarray:
        M = self.structural_mass.copy()
        M[:3, :3] += self.hydro.added_mass
        return M

    @cached_property
    def stiffness_matrix(self) -> np.ndarray:
        """Hydrostatic, tower-elastic and tower-gravity stiffness (mooring excluded)."""
        t = self.turbine
        h = self.design.hydrostatics
        K = np.zeros((4, 4))
        K[1, 1] = h.c33
        K[2, 2] = h.c55
        K[3, 3] = t.tower_modal_stiffness
        z_tw, m_tw = t.tower_stations()
        k23 = -G * (np.sum(m_tw * t.mode_shape(z_tw)) + t.rna_mass * 1e3)
        K[2, 3] = K[3, 2] = k23
        return K

    @cached_property
    def damping_matrix(self) -> np.ndarray:
        """Structural (tower) damping; hydrodynamic damping comes from drag only."""
        t = self.turbine
        C = np.zeros((4, 4))
        C[3, 3] = 2 * t.tower_damping_ratio * np.sqrt(t.tower_modal_stiffness * t.tower_modal_mass)
        return C

    @cached_property
    def mooring_offset(self) -> np.ndarray:
        return self.mooring.forces(0.0, 0.0, 0.0)

    def mooring_force(self, x: float, z: float, beta: float) -> np.ndarray:
        """Mooring force change relative to the undisplaced position (surge, heave, pitch)."""
        return self.mooring.forces(x, z, beta) - self.mooring_offset

    def node_arrays(self):
        nodes = self.nodes
        J = np.array([n.kinematics() for n in nodes])
        coef = np.array([0.5 * self.rho * n.cd * n.area for n in nodes])
        return J, coef

    @property
    def tower_base_moment_coeffs(self) -> tuple[float, float]:
        """M_yt = a x_t + b beta_p (elastic moment plus RNA gravity offset)."""
        t = self.turbine
        w = t.rna_mass * 1e3 * G
        return t.tower_base_moment_per_deflection + w, w * (self.z_hub - t.tower_base_z)

    def tower_base_moment(self, x_t, beta):
        a, b = self.tower_base_moment_coeffs
        return a * np.asarray(x_t) + b * np.asarray(beta)


def mooring_force(model: NonlinearModel, x_p: float, z_p: float, beta_p: float) -> np.ndarray:
    return model.mooring_force(x_p, z_p, beta_p)


# -- numba kernels -------------------------------------------------------------
# scalar parameter vector layout
(P_ZHUB, P_R, P_QA, P_J, P_TAU, P_OMR, P_KOPT, P_TRATED, P_KP, P_KI, P_THMIN, P_THMAX,
 P_PARKED, P_CTPARK, P_TSR0, P_DTSR, P_PIT0, P_DPIT, P_XF0, P_DXF, P_ZF0, P_DZF, P_OMEGA_FIX,
 P_NSCHED) = range(24)
# pitch-indexed gain schedule rows (theta, kp, ki) follow the scalar parameters
MAX_SCHEDULE = 16
P_SCHED = 24
N_PARAM = P_SCHED + 3 * MAX_SCHEDULE


@njit(cache=True)
def _bilinear(tab, x0, dx, y0, dy, x, y):
    nx, ny = tab.shape
    fx = (x - x0) / dx
    fy = (y - y0) / dy
    fx = min(max(fx, 0.0), nx - 1.000001)
    fy = min(max(fy, 0.0), ny - 1.000001)
    i = int(fx)
    j = int(fy)
    ax = fx - i
    ay = fy - j
    return ((1 - ax) * (1 - ay) * tab[i, j] + ax * (1 - ay) * tab[i + 1, j]
            + (1 - ax) * ay * tab[i, j + 1] + ax * ay * tab[i + 1, j + 1])


@njit(cache=True)
def _mooring(x, z, beta, fair, anchor, Htab, Vtab, p, out):
    cb = np.cos(beta)
    sb = np.sin(beta)
    out[0] = 0.0
    out[1] = 0.0
    out[2] = 0.0
    for i in range(fair.shape[0]):
        fx = x + fair[i, 0] * cb + fair[i, 2] * sb
        fy = fair[i, 1]
        fz = z - fair[i, 0] * sb + fair[i, 2] * cb
        dx = anchor[i, 0] - fx
        dy = anchor[i, 1] - fy
        xf = np.sqrt(dx * dx + dy * dy)
        zf = fz - anchor[i, 2]
        H = _bilinear(Htab, p[P_XF0], p[P_DXF], p[P_ZF0], p[P_DZF], xf, zf)
        V = _bilinear(Vtab, p[P_XF0], p[P_DXF], p[P_ZF0], p[P_DZF], xf, zf)
        hx = H * dx / xf
        out[0] += hx
        out[1] -= V
        out[2] += (fz - z) * hx + (fx - x) * V


@njit(cache=True)
def _plant_rhs(y, mg, theta_cmd, v0, fw, fsd, unode, Minv, K, C, eT, Jn, coef,
               fair, anchor, Htab, Vtab, moor0, ct_tab, cp_tab, p, dy, aux):
    """Derivative of the 10 plant states for given controls and disturbances."""
    q = y[0:4]
    qd = y[4:8]
    om = y[8]
    th = y[9]
    v_hub = eT[0] * qd[0] + eT[2] * qd[2] + eT[3] * qd[3]
    vrel = v0 - v_hub
    if p[P_PARKED] > 0.5:
        thrust = p[P_QA] * p[P_CTPARK] * vrel * abs(vrel)
        torque = 0.0
    else:
        vr = max(vrel, 0.1)
        omg = max(om, 1e-3)
        lam = omg * p[P_R] / vr
        ct = _bilinear(ct_tab, p[P_TSR0], p[P_DTSR], p[P_PIT0], p[P_DPIT], lam, th)
        cp = _bilinear(cp_tab, p[P_TSR0], p[P_DTSR], p[P_PIT0], p[P_DPIT], lam, th)
        thrust = p[P_QA] * ct * vr * vr
        torque = p[P_QA] * cp * vr * vr * vr / omg
    f = np.zeros(4)
    moor = np.zeros(3)
    _mooring(q[0], q[1], q[2], fair, anchor, Htab, Vtab, p, moor)
    for i in range(4):
        acc = eT[i] * thrust
        for j in range(4):
            acc -= K[i, j] * q[j] + C[i, j] * qd[j]
        f[i] = acc
    for i in range(3):
        f[i] += fw[i] + moor[i] - moor0[i]
    f[0] += fsd
    for n in range(Jn.shape[0]):
        vs = Jn[n, 0] * qd[0] + Jn[n, 1] * qd[1] + Jn[n, 2] * qd[2]
        rel = unode[n] - vs
        fn = coef[n] * rel * abs(rel)
        for i in range(3):
            f[i] += Jn[n, i] * fn
    for i in range(4):
        dy[i] = qd[i]
        s = 0.0
        for j in range(4):
            s += Minv[i, j] * f[j]
        dy[4 + i] = s
    if p[P_PARKED] > 0.5:
        dy[8] = 0.0
    else:
        dy[8] = (torque - mg) / p[P_J]
    dy[9] = (theta_cmd - th) / p[P_TAU]
    aux[0] = thrust
    aux[1] = torque


@njit(cache=True)
def _scheduled_gains(theta, p):
    n = int(p[P_NSCHED])
    if n == 0:
        return p[P_KP], p[P_KI]
    th = p[P_SCHED:P_SCHED + n]
    kp = p[P_SCHED + MAX_SCHEDULE:P_SCHED + MAX_SCHEDULE + n]
    ki = p[P_SCHED + 2 * MAX_SCHEDULE:P_SCHED + 2 * MAX_SCHEDULE + n]
    return np.interp(theta, th, kp), np.interp(theta, th, ki)


@njit(cache=True)
def _controller(y, xi, p):
    """Generator torque, saturated pitch command and integrator rate.

    ``xi`` is the integral of ``k_i * error`` (a pitch angle), so the gains can
    follow the measured pitch through the schedule without kicking the
    command.
    """
    om = y[8]
    err = om - p[P_OMR]
    kp, ki = _scheduled_gains(y[9], p)
    raw = kp * err + xi
    cmd = min(max(raw, p[P_THMIN]), p[P_THMAX])
    dxi = ki * err
    if (raw <= p[P_THMIN] and err < 0) or (raw >= p[P_THMAX] and err > 0):
        dxi = 0.0
    if raw > p[P_THMIN]:
        mg = p[P_TRATED]
    else:
        mg = min(p[P_KOPT] * om * om, p[P_TRATED])
    return mg, cmd, dxi


@njit(cache=True)
def _full_rhs(y, k, fw, fsd, v0, unode, Minv, K, C, eT, Jn, coef, fair, anchor, Htab, Vtab,
              moor0, ct_tab, cp_tab, p, dy, aux):
    if p[P_PARKED] > 0.5:
        mg = 0.0
        cmd = y[9]
        dxi = 0.0
    else:
        mg, cmd, dxi = _controller(y, y[10], p)
    _plant_rhs(y, mg, cmd, v0[k], fw[k], fsd[k], unode[k], Minv, K, C, eT, Jn, coef,
               fair, anchor, Htab, Vtab, moor0, ct_tab, cp_tab, p, dy, aux)
    dy[10] = dxi
    aux[2] = mg
    aux[3] = cmd


@njit(cache=True)
def _integrate(y0, n_steps, dt, fw, fsd, v0, unode, Minv, K, C, eT, Jn, coef, fair, anchor,
               Htab, Vtab, moor0, ct_tab, cp_tab, p, bound):
    n = y0.size
    Y = np.empty((n_steps + 1, n))
    D = np.empty((n_steps + 1, n))
    A = np.empty((n_steps + 1, 4))
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    aux = np.empty(4)
    aux_dummy = np.empty(4)
    status = 0
    last = n_steps
    for s in range(n_steps + 1):
        _full_rhs(y, 2 * s, fw, fsd, v0, unode, Minv, K, C, eT, Jn, coef, fair, anchor, Htab,
                  Vtab, moor0, ct_tab, cp_tab, p, k1, aux)
        Y[s] = y
        D[s] = k1
        A[s] = aux
        ok = True
        for i in range(n):
            if not np.isfinite(y[i]) or abs(y[i]) > bound[i]:
                ok = False
        if not ok:
            status = 1
            last = s
            break
        if s == n_steps:
            break
        for i in range(n):
            tmp[i] = y[i] + 0.5 * dt * k1[i]
        _full_rhs(tmp, 2 * s + 1, fw, fsd, v0, unode, Minv, K, C, eT, Jn, coef, fair, anchor,
                  Htab, Vtab, moor0, ct_tab, cp_tab, p, k2, aux_dummy)
        for i in range(n):
            tmp[i] = y[i] + 0.5 * dt * k2[i]
        _full_rhs(tmp, 2 * s + 1, fw, fsd, v0, unode, Minv, K, C, eT, Jn, coef, fair, anchor,
                  Htab, Vtab, moor0, ct_tab, cp_tab, p, k3, aux_dummy)
        for i in range(n):
            tmp[i] = y[i] + dt * k3[i]
        _full_rhs(tmp, 2 * s + 2, fw, fsd, v0, unode, Minv, K, C, eT, Jn, coef, fair, anchor,
                  Htab, Vtab, moor0, ct_tab, cp_tab, p, k4, aux_dummy)
        for i in range(n):
            y[i] = y[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
    return Y[:last + 1], D[:last + 1], A[:last + 1], status


# -- controller settings used by the time-domain model -------------------------
@dataclass(frozen=True)
class ControlSettings:
    """Controller parameters for one simulation.

    Without a ``schedule`` the PI gains ``kp``, ``ki`` are constant;
    otherwise ``schedule`` holds ``(theta, k_p, k_i)`` rows sorted by pitch and
    the gains are interpolated linearly in the measured pitch (constant
    beyond the ends).
    """

    k_opt: float
    rated_torque: float
    rated_speed: float
    kp: float
    ki: float
    parked: bool = False
    schedule: tuple = ()


def _kernel_inputs(model: NonlinearModel, ctrl: ControlSettings):
    t = model.turbine
    tab = t.rotor
    table = model.mooring.table
    fair, anchor = model.mooring._geometry
    J, coef = model.node_arrays()
    p = np.zeros(N_PARAM)
    p[P_ZHUB] = model.z_hub
    p[P_R] = t.rotor_radius
    p[P_QA] = 0.5 * t.rho_air * t.rotor_area
    p[P_J] = t.drivetrain_inertia
    p[P_TAU] = t.actuator_time_constant
    p[P_OMR] = ctrl.rated_speed
    p[P_KOPT] = ctrl.k_opt
    p[P_TRATED] = ctrl.rated_torque
    p[P_KP] = ctrl.kp
    p[P_KI] = ctrl.ki
    rows = np.asarray(ctrl.schedule, dtype=float).reshape(-1, 3)
    if len(rows) > MAX_SCHEDULE:
        raise ValueError(f"gain schedule limited to {MAX_SCHEDULE} rows")
    p[P_NSCHED] = len(rows)
    for j in range(3):
        p[P_SCHED + j * MAX_SCHEDULE:P_SCHED + j * MAX_SCHEDULE + len(rows)] = rows[:, j]
    p[P_THMIN] = t.min_pitch
    p[P_THMAX] = t.max_pitch
    p[P_PARKED] = 1.0 if ctrl.parked else 0.0
    p[P_CTPARK] = model.parked_ct
    p[P_TSR0], p[P_DTSR] = tab.tsr[0], tab.tsr[1] - tab.tsr[0]
    p[P_PIT0], p[P_DPIT] = tab.pitch[0], tab.pitch[1] - tab.pitch[0]
    p[P_XF0], p[P_DXF] = table.xf[0], table.xf[1] - table.xf[0]
    p[P_ZF0], p[P_DZF] = table.zf[0], table.zf[1] - table.zf[0]
    return dict(Minv=np.linalg.inv(model.mass_matrix), K=model.stiffness_matrix,
                C=model.damping_matrix, eT=model.thrust_vector, Jn=J, coef=coef,
                fair=np.ascontiguousarray(fair), anchor=np.ascontiguousarray(anchor),
                Htab=np.ascontiguousarray(table.H), Vtab=np.ascontiguousarray(table.V),
                moor0=model.mooring_offset, ct_tab=np.ascontiguousarray(tab.ct),
                cp_tab=np.ascontiguousarray(tab.cp), p=p)


def equations_of_motion(model: NonlinearModel, state, t: float, controls, env) -> np.ndarray:
    """Plant state derivative for given controls ``(M_g, theta_cmd)``.

    ``env`` is a dict with optional keys ``v0`` (rotor-effective wind),
    ``f_wave`` (3-vector), ``f_drift`` (surge) and ``u_nodes`` (water
    velocity per drag node).  ``t`` is unused (the model is autonomous given
    ``env``) but kept for the conventional signature.
    """
    state = np.asarray(state, float)
    if not np.all(np.isfinite(state)):
        raise SimulationError(f"non-finite state: {state}")
    parked = bool(env.get("parked", False))
    ctrl = ControlSettings(0.0, 0.0, 0.0, 0.0, 0.0, parked)
    k = _kernel_inputs(model, ctrl)
    n_nodes = len(model.nodes)
    dy = np.zeros(N_STATE)
    aux = np.zeros(2)
    _plant_rhs(state[:N_STATE], float(controls[0]), float(controls[1]), float(env.get("v0", 0.0)),
               np.asarray(env.get("f_wave", np.zeros(3)), float), float(env.get("f_drift", 0.0)),
               np.asarray(env.get("u_nodes", np.zeros(n_nodes)), float), k["Minv"], k["K"], k["C"],
               k["eT"], k["Jn"], k["coef"], k["fair"], k["anchor"], k["Htab"], k["Vtab"],
               k["moor0"], k["ct_tab"], k["cp_tab"], k["p"], dy, aux)
    if not np.all(np.isfinite(dy)):
        raise SimulationError(f"non-finite derivative at state {state}")
    return dy


# -- operating point -----------------------------------------------------------
@dataclass(frozen=True)
class OperatingPoint:
    v: float
    q: np.ndarray          # x_p, z_p, beta_p, x_t
    omega: float
    theta: float
    mg: float
    thrust: float
    torque: float
    region: str            # "parked", "below", "transition", "above"

    @property
    def power(self) -> float:
        return self.mg * self.omega

    def to_record(self) -> dict:
        return {"v": self.v, "x_p": float(self.q[0]), "z_p": float(self.q[1]),
                "beta_p": float(self.q[2]), "x_t": float(self.q[3]), "omega": self.omega,
                "theta": self.theta, "M_g": self.mg, "thrust": self.thrust,
                "torque": self.torque, "region": self.region}


def rotor_operating_point(turbine: TurbineConfig, v: float):
    """Steady rotor speed, pitch, generator torque and region for a wind speed."""
    if v < turbine.cut_in or v > turbine.cut_out:
        return 0.0, np.pi / 2, 0.0, "parked"
    k_opt, _ = optimal_mode_gain(turbine)
    w_r = turbine.rated_rotor_speed
    th0 = turbine.min_pitch

    def balance(om):
        _, q = aero_forces(turbine, v, om, th0)
        return q - k_opt * om ** 2

    # the stable equilibrium is the highest-speed root (lower ones lie in stall)
    grid = np.linspace(0.05, 3 * w_r, 301)
    f = np.array([balance(w) for w in grid])
    idx = np.nonzero((f[:-1] > 0) & (f[1:] <= 0))[0]
    if idx.size == 0:
        raise SimulationError(f"no torque equilibrium at v={v}")
    i = idx[-1]
    om = optimize.brentq(balance, grid[i], grid[i + 1], xtol=1e-12)
    if om < turbine.min_rotor_speed:
        om = turbine.min_rotor_speed
        _, q = aero_forces(turbine, v, om, th0)
        return om, th0, q, "below"
    t_r = turbine.rated_torque
    _, q = aero_forces(turbine, v, w_r, th0)
    if om <= w_r:
        if k_opt * om ** 2 <= t_r:
            return om, th0, k_opt * om ** 2, "below"
        if q < t_r:
            # torque limit reached below rated speed: the rotor settles where
            # the aerodynamic torque equals rated torque
            om = optimize.brentq(lambda w: aero_forces(turbine, v, w, th0)[1] - t_r,
                                 np.sqrt(t_r / k_opt), w_r, xtol=1e-12)
            return om, th0, t_r, "below"
    elif v < rated_wind_speed(turbine):
        return w_r, th0, q, "transition"

    def pitch_balance(th):
        _, qq = aero_forces(turbine, v, w_r, th)
        return qq - turbine.rated_torque

    # feathering branch: the highest pitch angle delivering rated torque
    grid = np.linspace(th0, turbine.max_pitch, 401)
    f = np.array([pitch_balance(x) for x in grid])
    idx = np.nonzero((f[:-1] >= 0) & (f[1:] < 0))[0]
    if idx.size == 0:
        raise SimulationError(f"no pitch angle gives rated torque at v={v}")
    i = idx[-1]
    th = optimize.brentq(pitch_balance, grid[i], grid[i + 1], xtol=1e-12)
    return w_r, th, turbine.rated_torque, "above"


def operating_point(model: NonlinearModel, v: float) -> OperatingPoint:
    """Steady state of the coupled model at mean wind speed ``v``."""
    t = model.turbine
    om, th, mg, region = rotor_operating_point(t, v)
    if region == "parked":
        thrust = 0.5 * t.rho_air * t.rotor_area * model.parked_ct * v ** 2 if v > 0 else 0.0
        torque = 0.0
    else:
        thrust, torque = aero_forces(t, v, om, th)
    K = model.stiffness_matrix
    eT = model.thrust_vector

    def residual(q):
        f = -K @ q + eT * thrust
        f[:3] += model.mooring_force(*q[:3])
        return f / np.array([1e6, 1e6, 1e8, 1e6])

    K_lin = K.copy()
    K_lin[:3, :3] += model.mooring.stiffness()
    q0 = np.linalg.solve(K_lin, eT * thrust)
    sol = optimize.root(residual, q0, method="hybr", tol=1e-12)
    if not sol.success or np.max(np.abs(residual(sol.x))) > 1e-6:
        raise SimulationError(f"operating point did not converge at v={v}: {sol.message}")
    return OperatingPoint(v, sol.x, om, th, mg, float(thrust), float(torque), region)


def steady_outputs(model: NonlinearModel, op: OperatingPoint) -> dict:
    """Output channels at the operating point (the means of the linear model)."""
    a_yt, b_yt = model.tower_base_moment_coeffs
    x_p, z_p, beta, x_t = (float(v) for v in op.q)
    return {"omega": op.omega, "x_t": x_t, "M_yt": a_yt * x_t + b_yt * beta,
            "P": model.turbine.gen_efficiency * op.mg * op.omega, "a_tt": 0.0,
            "beta_p": beta, "x_p": x_p, "z_p": z_p, "theta": op.theta}


# -- linearization -------------------------------------------------------------
@dataclass(frozen=True)
class LinearModel:
    """Open-loop state-space model ``dx = A x + B u + Bd d``, ``y = C x + D u + Dd d``.

    Inputs ``u = [M_g, theta_ref]``; disturbances ``d = [v0, F_x, F_z, M_y]``
    (wind speed and generalised platform forces).  Waves enter through
    ``wave_force`` (per unit amplitude on ``omega``) mapped onto the force
    disturbance columns.
    """

    A: np.ndarray
    B: np.ndarray
    Bd: np.ndarray
    C: np.ndarray
    D: np.ndarray
    Dd: np.ndarray
    op: OperatingPoint
    omega: np.ndarray
    wave_force: np.ndarray          # (n_omega, 3) complex, incl. drag excitation
    node_kin: np.ndarray            # (n_nodes, 3)
    node_water: np.ndarray          # (n_omega, n_nodes) complex
    rotor_slopes: dict
    k_opt: float
    mass: np.ndarray
    stiffness: np.ndarray
    damping: np.ndarray
    z_cm: float
    z_hub: float
    tower_base_z: float
    tower_top_z: float
    tower_mode: object = None       # callable phi(z)
    drift: np.ndarray | None = None
    z_keel: float = 0.0
    state_names: tuple = STATE_NAMES
    output_names: tuple = OUTPUT_NAMES

    def to_json(self) -> str:
        rec = {"schema": "semisub.linear_model/1", "states": list(self.state_names),
               "inputs": list(INPUT_NAMES), "disturbances": list(DIST_NAMES),
               "outputs": list(self.output_names), "operating_point": self.op.to_record()}
        for k in ("A", "B", "Bd", "C", "D", "Dd"):
            rec[k] = np.asarray(getattr(self, k)).tolist()
        rec["rotor_slopes"] = {k: float(v) for k, v in self.rotor_slopes.items()}
        return json.dumps(rec, indent=1)


def rotor_slopes(turbine: TurbineConfig, v: float, omega: float, theta: float,
                 steps=SLOPE_STEPS) -> dict:
    """Central-difference derivatives of thrust and torque w.r.t. v, Omega, theta."""
    dv, dw, dth = steps

    def tq(vv, ww, tt):
        return aero_forces(turbine, vv, ww, tt)

    out = {}
    for name, delta, args in (("v", dv, lambda s: (v + s, omega, theta)),
                              ("omega", dw, lambda s: (v, omega + s, theta)),
                              ("theta", dth, lambda s: (v, omega, theta + s))):
        tp, qp = tq(*args(delta))
        tm, qm = tq(*args(-delta))
        out["T_" + name] = (tp - tm) / (2 * delta)
        out["Q_" + name] = (qp - qm) / (2 * delta)
    return out


def borgman_damping(sigma, coef):
    """Equivalent linear damping of quadratic drag ``coef * u |u|`` for Gaussian u."""
    return np.sqrt(8 / np.pi) * np.asarray(sigma) * np.asarray(coef)


def linearize(model: NonlinearModel, op: OperatingPoint, node_std, omega=None) -> LinearModel:
    """State-space model about ``op`` with Borgman-linearised drag."""
    t = model.turbine
    M = model.mass_matrix
    try:
        Minv = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise SimulationError("singular mass matrix") from exc
    K = model.stiffness_matrix.copy()
    K[:3, :3] += model.mooring.stiffness(*op.q[:3])
    J, coef = model.node_arrays()
    node_std = np.broadcast_to(np.asarray(node_std, float), (len(model.nodes),))
    b = borgman_damping(node_std, coef)
    Cd = model.damping_matrix.copy()
    Cd[:3, :3] += J.T @ (b[:, None] * J)
    eT = model.thrust_vector

    if op.region == "parked":
        sl = {k: 0.0 for k in ("T_v", "T_omega", "T_theta", "Q_v", "Q_omega", "Q_theta")}
        sl["T_v"] = 2 * 0.5 * t.rho_air * t.rotor_area * model.parked_ct * op.v
    else:
        sl = rotor_slopes(t, op.v, op.omega, op.theta)

    n = N_STATE
    A = np.zeros((n, n))
    A[0:4, 4:8] = np.eye(4)
    # aero damping enters through the hub velocity
    C_aero = sl["T_v"] * np.outer(eT, eT)
    A[4:8, 0:4] = -Minv @ K
    A[4:8, 4:8] = -Minv @ (Cd + C_aero)
    A[4:8, 8] = Minv @ eT * sl["T_omega"]
    A[4:8, 9] = Minv @ eT * sl["T_theta"]
    Jr = t.drivetrain_inertia
    if op.region != "parked":
        A[8, 4:8] = -sl["Q_v"] * eT / Jr
        A[8, 8] = sl["Q_omega"] / Jr
        A[8, 9] = sl["Q_theta"] / Jr
    A[9, 9] = -1.0 / t.actuator_time_constant

    B = np.zeros((n, 2))
    if op.region != "parked":
        B[8, 0] = -1.0 / Jr
    B[9, 1] = 1.0 / t.actuator_time_constant
    Bd = np.zeros((n, 4))
    Bd[4:8, 0] = Minv @ eT * sl["T_v"]
    Bd[8, 0] = sl["Q_v"] / Jr if op.region != "parked" else 0.0
    Bd[4:8, 1:4] = Minv[:, :3]

    # outputs
    a_yt, b_yt = model.tower_base_moment_coeffs
    eta = t.gen_efficiency
    L_top = np.array([1.0, 0.0, model.z_top, 1.0])
    no = len(OUTPUT_NAMES)
    C = np.zeros((no, n))
    D = np.zeros((no, 2))
    Dd = np.zeros((no, 4))
    C[0, 8] = 1.0
    C[1, 3] = 1.0
    C[2, 3] = a_yt
    C[2, 2] = b_yt
    C[3, 8] = eta * op.mg
    D[3, 0] = eta * op.omega
    C[4] = L_top @ A[4:8]
    D[4] = L_top @ B[4:8]
    Dd[4] = L_top @ Bd[4:8]
    C[5, 2] = 1.0
    C[6, 0] = 1.0
    C[7, 1] = 1.0
    C[8, 9] = 1.0

    hydro = model.hydro
    omega = hydro.omega if omega is None else np.asarray(omega, float)
    X = hydro.force_at(omega)
    U = node_velocity_rao(model.nodes, omega, hydro.depth)
    wave_force = X + (U * b[None, :]) @ J
    drift = drift_coefficient(model.design.shape, omega, hydro.depth)
    k_opt, _ = optimal_mode_gain(t)
    return LinearModel(A, B, Bd, C, D, Dd, op, omega, wave_force, J, U, sl, k_opt, M, K, Cd,
                       model.design.mass.z_cm, model.z_hub, t.tower_base_z, t.tower_top_z,
                       t.mode_shape, drift, model.design.shape.z_keel)


# -- time-domain simulation ----------------------------------------------------
@dataclass(frozen=True)
class SimulationResult:
    t: np.ndarray
    outputs: dict
    status: int = 0

    @property
    def unstable(self) -> bool:
        return self.status != 0

    COLUMNS = ("t", "x_p", "z_p", "beta_p", "x_t", "omega", "theta", "M_g", "thrust",
               "M_yt", "P", "a_tt", "v0", "eta")

    def to_csv(self, path) -> None:
        """Write the time series; see ``COLUMNS`` for the column schema (SI units)."""
        cols = [c for c in self.COLUMNS if c == "t" or c in self.outputs]
        data = [self.t] + [self.outputs[c] for c in cols[1:]]
        with open(path, "w", newline="") as fh:
            fh.write("# schema: semisub.timeseries/1\n")
            w = csv.writer(fh)
            w.writerow(cols)
            for row in zip(*data):
                w.writerow([f"{v:.8g}" for v in row])


def simulate(model: NonlinearModel, ctrl: ControlSettings, op: OperatingPoint,
             wave: WaveRealization | None, wind: WindRealization | None, dt: float = 0.05,
             transient: float = 600.0, drift: bool = True) -> SimulationResult:
    """Fixed-step RK4 integration of the closed-loop nonlinear model.

    ``wave`` and ``wind`` must be sampled at ``dt / 2`` (forcing is needed at
    the RK4 half steps) and cover the same record.  The first ``transient``
    seconds are discarded from the returned series.
    """
    reals = [r.realization for r in (wave, wind) if r is not None]
    if not reals:
        raise ValueError("at least one of wave or wind is required")
    n_half = reals[0].n
    for r in reals:
        if r.n != n_half or not np.isclose(r.dt, dt / 2):
            raise ValueError("realizations must share a grid with spacing dt/2")
    n_steps = (n_half - 1) // 2
    n_nodes = len(model.nodes)
    if wave is not None:
        wr = wave.realization
        fw = wr.series(model.hydro.force_at(wr.omega))
        unode = wr.series(node_velocity_rao(model.nodes, wr.omega, model.hydro.depth))
        if drift:
            tc = drift_coefficient(model.design.shape, wr.omega, model.hydro.depth)
            fsd = 2 * wr.series(np.sqrt(tc)) ** 2
        else:
            fsd = np.zeros(n_half)
        eta = wave.eta
    else:
        fw = np.zeros((n_half, 3))
        unode = np.zeros((n_half, n_nodes))
        fsd = np.zeros(n_half)
        eta = np.zeros(n_half)
    v0 = wind.v0 if wind is not None else np.full(n_half, op.v)

    y0 = np.zeros(N_STATE + 1)
    y0[0:4] = op.q
    y0[8] = op.omega
    y0[9] = op.theta
    # integrator holds the pitch offset; start on the steady-state pitch
    y0[10] = op.theta if op.region == "above" else model.turbine.min_pitch
    bound = np.array([500.0, 100.0, 1.0, 50.0, 100.0, 100.0, 5.0, 100.0, 10.0, 10.0, 1e9])
    k = _kernel_inputs(model, ctrl)
    Y, Dy, Aux, status = _integrate(
        y0, n_steps, dt, np.ascontiguousarray(fw), np.ascontiguousarray(fsd),
        np.ascontiguousarray(v0), np.ascontiguousarray(unode), k["Minv"], k["K"], k["C"],
        k["eT"], k["Jn"], k["coef"], k["fair"], k["anchor"], k["Htab"], k["Vtab"], k["moor0"],
        k["ct_tab"], k["cp_tab"], k["p"], bound)
    if status:
        log.warning("simulation flagged unstable at t=%.1f s", (len(Y) - 1) * dt)
    t_all = np.arange(len(Y)) * dt
    keep = t_all >= transient
    a_yt, b_yt = model.tower_base_moment_coeffs
    L_top = np.array([1.0, 0.0, model.z_top, 1.0])
    out = {
        "x_p": Y[:, 0], "z_p": Y[:, 1], "beta_p": Y[:, 2], "x_t": Y[:, 3],
        "omega": Y[:, 8], "theta": Y[:, 9], "M_g": Aux[:, 2], "thrust": Aux[:, 0],
        "M_yt": a_yt * Y[:, 3] + b_yt * Y[:, 2],
        "P": model.turbine.gen_efficiency * Aux[:, 2] * Y[:, 8],
        "a_tt": Dy[:, 4:8] @ L_top,
        "v0": v0[0:2 * len(Y):2][:len(Y)], "eta": eta[0:2 * len(Y):2][:len(Y)],
    }
    out = {kk: np.asarray(vv)[keep] for kk, vv in out.items()}
    return SimulationResult(t_all[keep] - transient, out, int(status))


def case_realizations(case: LoadCase, turbine: TurbineConfig, dt: float = 0.05,
                      transient: float = 600.0, i_ref: float = 0.12, harmonic_fraction: float = 0.02,
                      rotor_speed: float | None = None, seed: int | None = None):
    """Wave and wind realizations of a load case on the ``dt/2`` grid."""
    seed = case.seed if seed is None else seed
    total = case.duration + transient
    wave = wave_realization(case.hs, case.tp, seed, total, dt / 2, case.gamma)
    sigma = turbulence_sigma(case.v, i_ref)
    w = turbine.rated_rotor_speed if rotor_speed is None else rotor_speed
    wind = rotor_effective_wind(case.v, sigma, turbine.rotor_diameter, seed, total, dt / 2,
                                harmonic_fraction, w)
    return wave, wind
