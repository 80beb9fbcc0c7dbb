from types import SimpleNamespace

import numpy as np
import pytest
from scipy import optimize

from semisub.control import (ControllerGains, FixedPointSettings, TuningError,
                             build_gain_schedule, closed_loop, fixed_point_solve, pi_gains,
                             platform_pitch_frequency, torque_law, tune_pi)
from semisub.environment import LoadCase, load_case_table, operational_cases
from semisub.slow_core import aero_forces, linearize, operating_point, optimal_mode_gain
from semisub.turbine import TurbineConfig


# -- torque law --------------------------------------------------------------------
def test_torque_zero_speed():
    assert torque_law(0.0, 1e7, 1e7) == 0.0


def test_torque_saturates():
    w = np.linspace(0.0, 2.0, 50)
    mg = torque_law(w, 1.2e7, 1.0e7)
    assert mg.max() == 1.0e7
    assert np.allclose(mg[mg < 1e7], 1.2e7 * w[mg < 1e7] ** 2)
    with pytest.raises(ValueError):
        torque_law(-0.1, 1.0, 1.0)


def test_optimal_mode_power_equals_peak_cp_power():
    t = TurbineConfig()
    k, lam_opt = optimal_mode_gain(t)
    v = 7.0
    w = lam_opt * v / t.rotor_radius
    _, cp_max = t.rotor.optimum()[1:]
    mg = torque_law(w, k, t.rated_torque)
    aero_peak = 0.5 * t.rho_air * t.rotor_area * v ** 3 * cp_max
    assert mg * w == pytest.approx(aero_peak, rel=5e-3)


def _steady_speed(t, v, k):
    """Highest rotor speed where the aerodynamic torque balances K Omega^2."""
    f = lambda w: aero_forces(t, v, w, 0.0)[1] - torque_law(w, k, np.inf)
    grid = np.linspace(0.1, 3.0, 300)
    vals = np.array([f(w) for w in grid])
    i = np.nonzero((vals[:-1] > 0) & (vals[1:] <= 0))[0][-1]
    return optimize.brentq(f, grid[i], grid[i + 1])


def test_halving_k_speeds_rotor_up():
    t = TurbineConfig()
    k, _ = optimal_mode_gain(t)
    assert _steady_speed(t, 7.0, k / 2) > _steady_speed(t, 7.0, k)


# -- pole placement ------------------------------------------------------------------
def test_pole_placement_closed_form():
    slopes = {"Q_theta": -2.0, "Q_omega": -0.5}
    J, w, z = 3.0, 0.8, 0.7
    kp, ki = pi_gains(slopes, J, w, z)
    assert kp == pytest.approx((2 * z * w * J - 0.5) / 2.0)
    assert ki == pytest.approx(w ** 2 * J / 2.0)
    # rotor-speed loop J s^2 - (Q_w + Q_th kp) s - Q_th ki = 0
    poles = np.roots([J, -(slopes["Q_omega"] + slopes["Q_theta"] * kp), -slopes["Q_theta"] * ki])
    assert np.allclose(np.abs(poles), w)
    assert np.allclose(-poles.real / np.abs(poles), z)


def test_proportional_gain_floor():
    # aerodynamic damping already exceeds the target: the raw k_p would be negative
    slopes = {"Q_theta": -1.0, "Q_omega": -10.0}
    kp, ki = pi_gains(slopes, 1.0, 1.0, 0.7)
    assert kp == pytest.approx(0.1 * ki / 1.0)


def test_positive_torque_pitch_slope_rejected():
    with pytest.raises(TuningError):
        pi_gains({"Q_theta": 1.0, "Q_omega": 0.0}, 1.0, 1.0, 0.7)


def test_platform_pitch_frequency_uncoupled():
    M = np.diag([1.0, 2.0, 4.0])
    K = np.diag([0.01, 8.0, 9.0])
    assert platform_pitch_frequency(M, K) == pytest.approx(1.5)


@pytest.fixture(scope="module")
def above_lin(model_24):
    op = operating_point(model_24, 13.9)
    return op, linearize(model_24, op, np.full(len(model_24.nodes), 0.05))


def test_tuned_loop_stable(above_lin):
    _, lin = above_lin
    g = tune_pi(lin)
    assert g.kp > 0 and g.ki > 0
    assert closed_loop(lin, g).max_real_eig() < 0
    w_pitch = platform_pitch_frequency(lin.mass, lin.stiffness)
    assert g.omega_reg <= 0.7 * w_pitch + 1e-12


def test_tuning_needs_above_rated(model_24):
    op = operating_point(model_24, 8.0)
    lin = linearize(model_24, op, np.zeros(len(model_24.nodes)))
    with pytest.raises(TuningError):
        tune_pi(lin)


def test_above_rated_loop_needs_gains(above_lin):
    with pytest.raises(TuningError):
        closed_loop(above_lin[1], None)


def test_more_drag_permits_faster_regulator(model_24, above_lin):
    op, _ = above_lin
    slow = tune_pi(linearize(model_24, op, np.zeros(len(model_24.nodes))))
    damped = tune_pi(linearize(model_24, op, np.full(len(model_24.nodes), 0.5)))
    assert damped.omega_reg >= slow.omega_reg


# -- fixed point -----------------------------------------------------------------------
def test_zero_input_converges_in_one_iteration(model_24):
    calm = SimpleNamespace(v=0.0, hs=0.0, tp=9.5, gamma=None, key="calm", weight=0.0)
    res = fixed_point_solve(model_24, calm)
    assert res.iterations == 1 and res.converged
    assert res.cd_keel == 15.0
    assert np.all(res.node_std == 0.0)


def test_reference_case_converges(converged_24):
    assert converged_24.converged and converged_24.iterations <= 20
    assert converged_24.closed.is_stable()
    assert converged_24.gains.kp > 0


def test_cd_decreases_with_sea_state(model_24):
    cds = [fixed_point_solve(model_24, LoadCase(44.0, hs, 15.0, 0.0)).cd_keel
           for hs in (4.0, 6.0, 8.5, 10.9)]
    assert np.all(np.diff(cds) < 0)
    # mild operational seas stay in the quiescent (clipped) branch of the fit
    mild = [fixed_point_solve(model_24, LoadCase(13.9, hs, 9.5, 1.0)).cd_keel for hs in (1.4, 3.0)]
    assert mild[0] >= mild[1]


def test_iteration_limit_flags(model_24, reference_case):
    res = fixed_point_solve(model_24, reference_case, FixedPointSettings(max_iter=2))
    assert not res.converged and res.iterations == 2


# -- gain schedule ------------------------------------------------------------------------
@pytest.fixture(scope="module")
def schedule(model_24):
    return build_gain_schedule(model_24, operational_cases(load_case_table()))


def test_schedule_covers_above_rated_bins(schedule):
    assert schedule.v == [13.9, 17.9, 22.1, 25.0]
    assert all(k > 0 for k in schedule.kp) and all(k > 0 for k in schedule.ki)


def test_schedule_interpolation_continuous(schedule):
    v = np.linspace(12.0, 26.0, 2801)
    kp = np.array([schedule.gains_at(x)[0] for x in v])
    assert np.max(np.abs(np.diff(kp))) < 1e-2 * np.ptp(kp)
    for x, p in zip(schedule.v, schedule.kp):
        assert schedule.gains_at(x)[0] == pytest.approx(p)


def test_pitch_table_sorted(schedule):
    rows = schedule.pitch_table(TurbineConfig())
    th = [r[0] for r in rows]
    assert th == sorted(th) and th[0] > 0


def test_empty_schedule():
    with pytest.raises(TuningError):
        ControllerGains(1.0, 1.0).gains_at(15.0)


def test_schedule_record(schedule):
    rec = schedule.to_record()
    assert [r["v"] for r in rec["table"]] == schedule.v
