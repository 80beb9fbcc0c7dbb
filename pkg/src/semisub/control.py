"""Per-design controller synthesis and the drag / gain fixed point.

Below rated the generator torque follows ``M_g = K Omega^2``; above rated a
PI controller on the rotor-speed error commands the blade pitch while the
generator torque is held at its rated value.  The PI gains are obtained by
pole placement on the single-state rotor model

    J dOmega = Q_Omega dOmega + Q_theta dtheta,

targeting a regulator frequency kept below the platform pitch frequency so
that the blade-pitch loop cannot drive the platform-pitch mode unstable.

The viscous drag of the heave plates depends on the Keulegan-Carpenter
number of the relative keel motion, which in turn depends on the closed-loop
response; ``fixed_point`` iterates drag coefficients, drag linearisation and
gains to a consistent state.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .environment import LoadCase, jonswap, rotor_admittance, kaimal, turbulence_sigma
from .hydro import heave_plate_cd
from .slow_core import (LinearModel, NonlinearModel, OperatingPoint, linearize,
                        operating_point, optimal_mode_gain)

log = logging.getLogger(__name__)

PLATFORM_PITCH_FREQ_CAP = 0.06 * 2 * np.pi


class TuningError(RuntimeError):
    pass


@dataclass(frozen=True)
class PIGains:
    kp: float                 # [rad s / rad]
    ki: float                 # [rad / rad]
    omega_reg: float          # regulator natural frequency actually used [rad/s]
    zeta: float
    reductions: int = 0


@dataclass(frozen=True)
class TuningSettings:
    freq_cap: float = PLATFORM_PITCH_FREQ_CAP
    pitch_fraction: float = 0.7
    zeta: float = 0.7
    reduction: float = 0.8
    max_reductions: int = 10


@dataclass
class ControllerGains:
    """Below-rated torque constant and above-rated PI gains versus mean wind speed."""

    k_opt: float
    rated_torque: float
    v: list = field(default_factory=list)
    kp: list = field(default_factory=list)
    ki: list = field(default_factory=list)

    def add(self, v: float, gains: PIGains) -> None:
        order = np.searchsorted(self.v, v)
        self.v.insert(order, v)
        self.kp.insert(order, gains.kp)
        self.ki.insert(order, gains.ki)

    def gains_at(self, v: float) -> tuple[float, float]:
        """Linearly interpolated (k_p, k_i); constant extrapolation outside the table."""
        if not self.v:
            raise TuningError("empty gain schedule")
        return float(np.interp(v, self.v, self.kp)), float(np.interp(v, self.v, self.ki))

    def pitch_table(self, turbine) -> tuple[tuple[float, float, float], ...]:
        """Schedule re-indexed by the steady-state blade pitch: ``(theta, k_p, k_i)`` rows."""
        from .slow_core import rotor_operating_point
        rows = [(float(rotor_operating_point(turbine, v)[1]), float(p), float(i))
                for v, p, i in zip(self.v, self.kp, self.ki)]
        return tuple(sorted(rows))

    def to_record(self) -> dict:
        return {"K": self.k_opt, "rated_torque": self.rated_torque,
                "table": [{"v": v, "kp": p, "ki": i} for v, p, i in zip(self.v, self.kp, self.ki)]}


def torque_law(omega, k_opt: float, rated_torque: float):
    """Below-rated generator torque ``K Omega^2`` saturated at the rated torque."""
    omega = np.asarray(omega, float)
    if np.any(omega < 0):
        raise ValueError("rotor speed must be non-negative")
    mg = np.minimum(k_opt * omega ** 2, rated_torque)
    return float(mg) if mg.ndim == 0 else mg


def platform_pitch_frequency(mass: np.ndarray, stiffness: np.ndarray) -> float:
    """Undamped frequency [rad/s] of the pitch-dominated structural mode."""
    w2, V = linalg.eigh(stiffness, mass)
    # participation measured in potential energy so the DOF units cancel
    energy = np.abs(V * (stiffness @ V))
    i = int(np.argmax(energy[2] / energy.sum(axis=0)))
    return float(np.sqrt(max(w2[i], 0.0)))


def pi_gains(slopes: dict, inertia: float, omega_reg: float, zeta: float,
             kp_floor: float = 0.1) -> tuple[float, float]:
    """PI gains placing the rotor-mode poles at ``omega_reg`` with damping ``zeta``.

    At high wind speeds the aerodynamic damping ``-dQ/dOmega`` alone can
    exceed the target damping, which would call for a negative proportional
    gain.  The proportional gain is therefore floored at
    ``kp_floor * k_i / omega_reg`` (PI zero a decade above the regulator
    frequency); the loop is then slightly over-damped instead of sign-flipped.
    """
    q_th = slopes["Q_theta"]
    if not q_th < 0:
        raise TuningError(f"torque must decrease with pitch above rated (dQ/dtheta = {q_th:.3g})")
    kp = -(2 * zeta * omega_reg * inertia + slopes["Q_omega"]) / q_th
    ki = -omega_reg ** 2 * inertia / q_th
    return max(kp, kp_floor * ki / omega_reg), ki


# -- closed loop ---------------------------------------------------------------
@dataclass(frozen=True)
class ClosedLoop:
    """Closed-loop linear model ``dx = A x + Bd d``, ``y = C x + Dd d``.

    Disturbances ``d = [v0, F_x, F_z, M_y]``.  Above rated the state vector is
    extended by the PI integrator.
    """

    A: np.ndarray
    Bd: np.ndarray
    C: np.ndarray
    Dd: np.ndarray
    linear: LinearModel
    gains: PIGains | None

    @property
    def op(self) -> OperatingPoint:
        return self.linear.op

    @property
    def output_names(self):
        return self.linear.output_names

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)

    def max_real_eig(self) -> float:
        return float(np.max(self.eigenvalues().real))

    def is_stable(self) -> bool:
        return self.max_real_eig() < 0

    def state_transfer(self, omega) -> np.ndarray:
        """(n_omega, n_state, 4) transfer from disturbances to states."""
        omega = np.atleast_1d(np.asarray(omega, float))
        n = self.A.shape[0]
        M = 1j * omega[:, None, None] * np.eye(n)[None] - self.A[None]
        rhs = np.broadcast_to(self.Bd, (omega.size,) + self.Bd.shape)
        return np.linalg.solve(M, rhs)

    def output_transfer(self, omega) -> np.ndarray:
        """(n_omega, n_out, 4) transfer from disturbances to outputs."""
        Hx = self.state_transfer(omega)
        return np.einsum("oj,wjk->wok", self.C, Hx) + self.Dd[None]

    def wave_transfer(self, omega, states: bool = False) -> np.ndarray:
        """Per unit wave amplitude: (n_omega, n_out) or (n_omega, n_state)."""
        H = self.state_transfer(omega) if states else self.output_transfer(omega)
        X = self.wave_force(omega)
        return np.einsum("wok,wk->wo", H[:, :, 1:4], X)

    def wave_force(self, omega) -> np.ndarray:
        lin = self.linear
        omega = np.atleast_1d(np.asarray(omega, float))
        out = np.zeros((omega.size, 3), dtype=complex)
        for j in range(3):
            out[:, j] = (np.interp(omega, lin.omega, lin.wave_force[:, j].real, left=0, right=0)
                         + 1j * np.interp(omega, lin.omega, lin.wave_force[:, j].imag, left=0, right=0))
        return out

    def wind_transfer(self, omega, states: bool = False) -> np.ndarray:
        H = self.state_transfer(omega) if states else self.output_transfer(omega)
        return H[:, :, 0]

    def output(self, name: str) -> int:
        return list(self.output_names).index(name)


def closed_loop(lin: LinearModel, gains: PIGains | None) -> ClosedLoop:
    """Close the torque / pitch loops of ``lin`` for its operating region.

    Above rated: ``theta_ref = k_p dOmega + k_i xi`` with constant torque.
    Below rated: ``dM_g = 2 K Omega dOmega`` unless the torque sits at its
    limit.  Parked: no feedback.
    """
    A, B, Bd, C, D, Dd = lin.A, lin.B, lin.Bd, lin.C, lin.D, lin.Dd
    n = A.shape[0]
    region = lin.op.region
    if region == "above":
        if gains is None:
            raise TuningError("above-rated closed loop needs PI gains")
        Fk = np.zeros((2, n + 1))
        Fk[1, 8] = gains.kp
        Fk[1, n] = gains.ki
        Ae = np.zeros((n + 1, n + 1))
        Ae[:n, :n] = A
        Ae[n, 8] = 1.0
        Be = np.vstack([B, np.zeros((1, 2))])
        Acl = Ae + Be @ Fk
        Bdcl = np.vstack([Bd, np.zeros((1, Bd.shape[1]))])
        Ccl = np.hstack([C, np.zeros((C.shape[0], 1))]) + D @ Fk
    else:
        Fk = np.zeros((2, n))
        saturated = lin.k_opt * lin.op.omega ** 2 > lin.op.mg * (1 + 1e-9)
        if region in ("below", "transition") and not saturated:
            Fk[0, 8] = 2 * lin.k_opt * lin.op.omega
        Acl = A + B @ Fk
        Bdcl = Bd
        Ccl = C + D @ Fk
    return ClosedLoop(Acl, Bdcl, Ccl, Dd, lin, gains)


def tune_pi(lin: LinearModel, settings: TuningSettings = TuningSettings(),
            inertia: float | None = None) -> PIGains:
    """Pole placement with platform-pitch detuning and closed-loop stability retries.

    ``inertia`` defaults to the drivetrain inertia implied by ``lin.B``.
    """
    if lin.op.region != "above":
        raise TuningError("PI tuning needs an above-rated operating point")
    if inertia is None:
        inertia = -1.0 / lin.B[8, 0]
    w_pitch = platform_pitch_frequency(lin.mass, lin.stiffness)
    w_reg = min(settings.freq_cap, settings.pitch_fraction * w_pitch)
    for i in range(settings.max_reductions + 1):
        kp, ki = pi_gains(lin.rotor_slopes, inertia, w_reg, settings.zeta)
        gains = PIGains(kp, ki, w_reg, settings.zeta, i)
        if closed_loop(lin, gains).is_stable():
            return gains
        log.info("closed loop unstable at omega_reg=%.4f; reducing", w_reg)
        w_reg *= settings.reduction
    raise TuningError(f"no stable PI tuning at v={lin.op.v} after {settings.max_reductions} reductions")


# -- spectra used by the fixed point -------------------------------------------
def response_grid(n_low: int = 60, n_high: int = 200, hydro_omega=None) -> np.ndarray:
    """Frequency grid: log band below the wave range, the wave grid, and a band up to 4 rad/s."""
    from .hydro import default_omega
    w = default_omega() if hydro_omega is None else np.asarray(hydro_omega)
    low = np.geomspace(0.005, w[0], n_low + 1)[:-1]
    high = np.linspace(w[-1], 4.0, n_high + 1)[1:]
    return np.concatenate([low, w, high])


def wave_spectrum(case: LoadCase, omega) -> np.ndarray:
    s = jonswap(omega, case.hs, case.tp, case.gamma, normalize=False)
    from .hydro import default_omega
    ref = default_omega()
    s_ref = jonswap(ref, case.hs, case.tp, case.gamma, normalize=False)
    from scipy.integrate import trapezoid
    m0 = trapezoid(s_ref, ref)
    s = s * (case.hs ** 2 / 16 / m0) if m0 > 0 else s
    # waves carry no energy outside the hydrodynamic grid
    return np.where((omega >= ref[0]) & (omega <= ref[-1]), s, 0.0)


def wind_spectrum(v: float, omega, diameter: float, i_ref: float = 0.12,
                  alpha: float = 3.0) -> np.ndarray:
    return kaimal(omega, v, turbulence_sigma(v, i_ref)) * rotor_admittance(omega, v, diameter, alpha)


# -- fixed point ---------------------------------------------------------------
@dataclass(frozen=True)
class FixedPointSettings:
    cd_keel0: float = 15.0
    relaxation: float = 0.5
    rtol: float = 1e-3
    max_iter: int = 20
    i_ref: float = 0.12
    tuning: TuningSettings = TuningSettings()


@dataclass(frozen=True)
class ConvergedCase:
    case: LoadCase
    closed: ClosedLoop
    model: NonlinearModel
    cd_keel: float
    kc: float
    gains: PIGains | None
    iterations: int
    converged: bool
    node_std: np.ndarray

    @property
    def op(self) -> OperatingPoint:
        return self.closed.op


def _node_relative_std(cl: ClosedLoop, omega, s_wave, s_wind) -> np.ndarray:
    """Standard deviation of the drag-direction relative velocity at each node."""
    lin = cl.linear
    J = lin.node_kin
    w = omega
    Hq_wave = cl.wave_transfer(w, states=True)[:, 4:7]           # platform velocities
    Hq_wind = cl.wind_transfer(w, states=True)[:, 4:7]
    U = np.zeros((w.size, J.shape[0]), dtype=complex)
    for j in range(J.shape[0]):
        U[:, j] = (np.interp(w, lin.omega, lin.node_water[:, j].real, left=0, right=0)
                   + 1j * np.interp(w, lin.omega, lin.node_water[:, j].imag, left=0, right=0))
    rel_wave = U - Hq_wave @ J.T
    rel_wind = Hq_wind @ J.T
    dw = np.gradient(w)
    var = (np.abs(rel_wave) ** 2 * (s_wave * dw)[:, None]).sum(0) \
        + (np.abs(rel_wind) ** 2 * (s_wind * dw)[:, None]).sum(0)
    return np.sqrt(var)


def incident_node_std(model: NonlinearModel, case: LoadCase, omega=None) -> np.ndarray:
    from .hydro import node_velocity_rao
    w = model.hydro.omega if omega is None else omega
    s = wave_spectrum(case, w)
    U = node_velocity_rao(model.nodes, w, model.hydro.depth)
    return np.sqrt((np.abs(U) ** 2 * (s * np.gradient(w))[:, None]).sum(0))


def fixed_point_solve(model: NonlinearModel, case: LoadCase,
                settings: FixedPointSettings = FixedPointSettings(),
                omega=None, op: OperatingPoint | None = None) -> ConvergedCase:
    """Iterate keel drag coefficient, Borgman linearisation and PI gains to consistency."""
    omega = response_grid() if omega is None else omega
    op = operating_point(model, case.v) if op is None else op
    s_wave = wave_spectrum(case, omega)
    s_wind = wind_spectrum(case.v, omega, model.turbine.rotor_diameter, settings.i_ref) \
        if op.region != "parked" else np.zeros_like(omega)
    cd = settings.cd_keel0
    m = model.with_keel_cd(cd)
    sigma = incident_node_std(m, case)
    keel = np.array([n.kind == "keel" for n in m.nodes])
    r_hp = model.design.shape.r_hp
    gains = None
    converged = False
    kc = 0.0
    it = 0
    for it in range(1, settings.max_iter + 1):
        lin = linearize(m, op, sigma)
        gains_new = tune_pi(lin, settings.tuning) if op.region == "above" else None
        cl = closed_loop(lin, gains_new)
        sigma_new = _node_relative_std(cl, omega, s_wave, s_wind)
        kc = float(np.sqrt(2) * sigma_new[keel].mean() * case.tp / (2 * r_hp))
        cd_target = heave_plate_cd(kc)
        cd_new = cd + settings.relaxation * (cd_target - cd)
        changes = [abs(cd_new - cd) / cd,
                   float(np.max(np.abs(sigma_new - sigma) / np.maximum(sigma_new, 1e-9)))]
        if gains is not None and gains_new is not None:
            changes.append(abs(gains_new.kp - gains.kp) / abs(gains_new.kp))
        gains = gains_new
        if max(changes) < settings.rtol:
            sigma = sigma_new
            converged = True
            break
        # the node-velocity map alternates about its fixed point (contraction
        # ratio near -0.7 in mild seas), so the STDs are relaxed like Cd
        sigma = sigma + settings.relaxation * (sigma_new - sigma)
        cd = cd_new
        m = model.with_keel_cd(cd)
    if not converged:
        log.warning("drag/gain fixed point not converged for %s after %d iterations", case.key, it)
    return ConvergedCase(case, cl, m, cd, kc, gains, it, converged, sigma)


def build_gain_schedule(model: NonlinearModel, cases, settings: FixedPointSettings = FixedPointSettings()
                        ) -> ControllerGains:
    """Gain schedule from fixed-point tunings at the above-rated case wind speeds."""
    k_opt, _ = optimal_mode_gain(model.turbine)
    sched = ControllerGains(k_opt, model.turbine.rated_torque)
    seen = set()
    for c in cases:
        if c.v in seen:
            continue
        op = operating_point(model, c.v)
        if op.region != "above":
            continue
        seen.add(c.v)
        res = fixed_point_solve(model, c, settings, op=op)
        sched.add(c.v, res.gains)
    return sched


def control_settings(model: NonlinearModel, op: OperatingPoint, gains: PIGains | None = None,
                     schedule: ControllerGains | None = None):
    """Time-domain controller parameters for one operating point.

    A ``schedule`` gives pitch-scheduled gains (valid across the region
    switch); otherwise the fixed ``gains`` of the case are used.
    """
    from .slow_core import ControlSettings
    t = model.turbine
    k_opt, _ = optimal_mode_gain(t)
    parked = op.region == "parked"
    if schedule is not None and schedule.v:
        table = schedule.pitch_table(t)
        _, kp, ki = table[0]
        return ControlSettings(k_opt, t.rated_torque, t.rated_rotor_speed, kp, ki, parked, table)
    kp, ki = (gains.kp, gains.ki) if gains is not None else (0.0, 0.0)
    return ControlSettings(k_opt, t.rated_torque, t.rated_rotor_speed, kp, ki, parked)
