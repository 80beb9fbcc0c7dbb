import numpy as np
import pytest
from dataclasses import replace

from semisub.constants import G, RHO_WATER
from semisub.hull_design import HullShape, ShapeParams
from semisub.hydro import (HydroCoefficients, added_mass, default_omega, drag_nodes,
                           drift_coefficient, force_rao, heave_plate_cd, newman_slow_drift,
                           slow_drift_spectrum, wavenumber, with_keel_cd)
from semisub.slow_core import borgman_damping


def _column_shape(r=1.0, t=1.0, d=1e-3):
    """Three coincident plain columns (no plate) -> a single cylinder, tripled."""
    return HullShape(ShapeParams(max(d, 1e-6), 0.01), r=r, r_hp=r, t=t)


# -- added mass ----------------------------------------------------------------
def test_strip_added_mass_unit_cylinder():
    A = added_mass(_column_shape())
    assert A[0, 0] / 3 == pytest.approx(RHO_WATER * np.pi, rel=1e-12)


def test_added_mass_symmetric_psd(design_space):
    rng = np.random.default_rng(0)
    for d in design_space:
        A = added_mass(d.shape)
        assert np.allclose(A, A.T)
        x = rng.standard_normal((50, 3))
        assert np.all(np.einsum("ij,jk,ik->i", x, A, x) >= 0)


def test_heave_added_mass_exceeds_displacement(design_24):
    A = added_mass(design_24.shape)
    assert A[1, 1] > RHO_WATER * design_24.hydrostatics.volume


# -- wave excitation ---------------------------------------------------------------
def test_dispersion_relation():
    w = np.array([0.2, 0.6, 1.5])
    k = wavenumber(w, 130.0)
    assert np.allclose(w ** 2, G * k * np.tanh(k * 130.0), rtol=1e-10)
    assert np.allclose(wavenumber(w, np.inf), w ** 2 / G)


def test_long_wave_heave_limit(design_24):
    X = force_rao(design_24.shape, [1e-3])
    assert abs(X[0, 1]) == pytest.approx(RHO_WATER * G * design_24.hydrostatics.a_wp, rel=1e-4)


def test_long_wave_surge_leads_by_90_degrees():
    shape = _column_shape(r=5.0, t=20.0)
    w = 0.05
    X = force_rao(shape, [w], depth=np.inf)[0, 0]
    assert np.degrees(np.angle(X)) == pytest.approx(90.0, abs=0.5)
    # Morison inertia oracle (C_m = 2) for a long wave in deep water
    k = w ** 2 / G
    morison = 3 * 2 * RHO_WATER * np.pi * 25.0 * w ** 2 * (1 - np.exp(-k * 20.0)) / k
    assert abs(X) == pytest.approx(morison, rel=0.01)


def test_force_vanishes_for_short_waves(design_24):
    X = force_rao(design_24.shape, [3.0, 6.0])
    X0 = np.abs(force_rao(design_24.shape, default_omega())).max(axis=0)
    assert np.all(np.abs(X[-1]) < 0.01 * X0)


def test_rejects_non_positive_frequency(design_24):
    with pytest.raises(ValueError):
        force_rao(design_24.shape, [0.0, 1.0])


def test_heave_cancellation_every_design(design_space):
    w = default_omega()
    for d in design_space:
        a = np.abs(force_rao(d.shape, w)[:, 1])
        a0 = np.abs(force_rao(d.shape, [1e-3])[0, 1])
        mins = [i for i in range(1, a.size - 1) if a[i] < a[i - 1] and a[i] <= a[i + 1]]
        assert mins, d.key
        assert min(a[i] for i in mins) < 0.1 * a0, d.key


def test_rao_continuity(design_space):
    w = default_omega()
    for d in design_space:
        X = force_rao(d.shape, w)
        jump = np.abs(np.diff(X, axis=0)).max(axis=0) / np.abs(X).max(axis=0)
        assert np.all(jump < 0.05), d.key


def test_heading_reversal_conjugates_phases(design_24):
    w = default_omega()
    fwd = force_rao(design_24.shape, w)
    back = force_rao(design_24.shape, w, heading=np.pi)
    assert np.allclose(back[:, 1], np.conj(fwd[:, 1]), rtol=1e-9, atol=1e-6)


def test_counter_phase_forcing_band(design_24):
    w = 2 * np.pi / np.linspace(7.0, 11.0, 41)
    X = force_rao(design_24.shape, w)
    dphi = np.abs(np.degrees(np.angle(X[:, 0] / X[:, 2])))
    assert np.any(dphi > 90.0)


# -- drag -------------------------------------------------------------------------
def test_heave_plate_cd_limits():
    assert heave_plate_cd(0.0) == 15.0
    assert heave_plate_cd(1e12) == pytest.approx(1.5, abs=1e-3)
    kc = np.linspace(0.1, 10.0, 200)
    assert np.all(np.diff(heave_plate_cd(kc)) <= 0)
    with pytest.raises(ValueError):
        heave_plate_cd(-1.0)


def test_drag_nodes_partition(design_24):
    s = design_24.shape
    nodes = drag_nodes(s)
    h = sum(n.area for n in nodes if n.direction == "h")
    v = sum(n.area for n in nodes if n.direction == "v")
    assert h == pytest.approx(3 * (2 * s.r * (s.t - s.h_hp) + 2 * s.r_hp * s.h_hp))
    assert v == pytest.approx(3 * np.pi * s.r_hp ** 2)
    keel = [n for n in nodes if n.kind == "keel"]
    assert len(keel) == 3 and all(n.z == -s.t for n in keel)
    assert all(n.cd == 0.4 for n in nodes if n.kind == "column")


def test_node_counts_constant(design_space):
    counts = {len(drag_nodes(d.shape)) for d in design_space}
    assert counts == {3 * (10 + 2 + 1)}


def test_too_few_strips_rejected(design_24):
    with pytest.raises(ValueError):
        drag_nodes(design_24.shape, strips_per_column=5)


def test_keel_cd_replacement(design_24):
    nodes = with_keel_cd(drag_nodes(design_24.shape), 3.0)
    assert {n.cd for n in nodes if n.kind == "keel"} == {3.0}
    assert {n.cd for n in nodes if n.kind == "column"} == {0.4}


def test_borgman_equivalent_power():
    rng = np.random.default_rng(3)
    sigma, coef = 0.7, 2.0
    u = sigma * rng.standard_normal(2_000_000)
    quadratic = np.mean(coef * u * np.abs(u) * u)
    linear = np.mean(borgman_damping(sigma, coef) * u * u)
    assert linear == pytest.approx(quadratic, rel=0.02)
    assert borgman_damping(0.0, coef) == 0.0


# -- slow drift -----------------------------------------------------------------------
def test_zero_drift_coefficient_gives_zero_force():
    t = np.linspace(0, 100, 1001)
    f = newman_slow_drift([1.0, 0.5], [0.5, 0.6], [0.0, 1.0], [0.0, 0.0], t)
    assert np.all(f == 0)


def test_monochromatic_mean_drift():
    a, tc, w = 1.3, 2.0e4, 0.7
    t = np.linspace(0, 2 * np.pi / w * 50, 50001)[:-1]
    f = newman_slow_drift([a], [w], [0.3], [tc], t)
    assert f.mean() == pytest.approx(a ** 2 * tc, rel=1e-6)


def test_bichromatic_difference_frequency():
    dt, n = 0.5, 8192
    t = np.arange(n) * dt
    dw = 2 * np.pi / (n * dt)
    w1, w2 = 300 * dw, 340 * dw
    f = newman_slow_drift([1.0, 1.0], [w1, w2], [0.0, 0.0], [1.0, 1.0], t)
    spec = np.abs(np.fft.rfft(f - f.mean()))
    low = spec[1:200]
    assert np.argmax(low) + 1 == 40


def test_negative_drift_coefficient_rejected():
    with pytest.raises(ValueError):
        newman_slow_drift([1.0], [0.5], [0.0], [-1.0], np.zeros(3))


def test_slow_drift_spectrum_matches_series_variance(design_24):
    from semisub.environment import jonswap, wave_realization
    w = default_omega()
    tc = drift_coefficient(design_24.shape, w)
    s = jonswap(w, 3.0, 9.5)
    # below 0.4 rad/s the Newman series holds difference-frequency terms only
    mu = np.linspace(1e-4, 0.4, 800)
    sf = slow_drift_spectrum(w, s, tc, mu)
    var_spec = np.sum(0.5 * (sf[1:] + sf[:-1]) * np.diff(mu))
    var = []
    for seed in range(6):
        r = wave_realization(3.0, 9.5, seed, duration=7200.0, dt=0.25).realization
        f = 2 * r.series(np.sqrt(drift_coefficient(design_24.shape, r.omega))) ** 2
        F = np.fft.rfft(f - f.mean())
        F[np.fft.rfftfreq(f.size, r.dt) * 2 * np.pi > 0.4] = 0
        var.append(np.var(np.fft.irfft(F, n=f.size)))
    assert np.mean(var) == pytest.approx(var_spec, rel=0.1)


def test_slow_drift_spectrum_total_equals_pair_sum(design_24):
    """Integrated spectrum equals the exact difference-frequency variance of the series."""
    from semisub.environment import jonswap
    w = np.linspace(0.3, 2.0, 800)
    s = jonswap(w, 3.0, 9.5)
    tc = drift_coefficient(design_24.shape, w)
    dw = w[1] - w[0]
    b = 2 * s * dw * tc                     # a_i^2 T_c,i
    pair_var = b.sum() ** 2 - np.sum(b ** 2)  # 2 sum_{i<j} b_i b_j
    mu = np.arange(1, w.size) * dw
    sf = slow_drift_spectrum(w, s, tc, mu)
    assert np.sum(sf) * dw == pytest.approx(pair_var, rel=0.02)


# -- coefficient container -------------------------------------------------------------
def test_csv_roundtrip(tmp_path, design_24):
    hc = HydroCoefficients.from_shape(design_24.shape)
    path = tmp_path / "hydro.csv"
    hc.to_csv(path)
    back = HydroCoefficients.from_csv(path, design_24.shape)
    assert np.allclose(back.added_mass, hc.added_mass, rtol=1e-9)
    assert np.allclose(back.X, hc.X, rtol=1e-9)
    assert path.read_text().startswith("# schema: semisub.hydro/1")


def test_asymmetric_added_mass_rejected(design_24):
    hc = HydroCoefficients.from_shape(design_24.shape)
    A = hc.added_mass.copy()
    A[0, 2] *= 2
    with pytest.raises(ValueError):
        replace(hc, added_mass=A)
