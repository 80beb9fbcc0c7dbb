import numpy as np
import pytest
from scipy import signal

from semisub.environment import (EXTREME, TABLE4, LoadCase, jonswap, jonswap_gamma, kaimal,
                                 load_case_table, operational_cases, rotor_admittance,
                                 rotor_effective_wind, spectral_moment, turbulence_sigma,
                                 wave_realization)

DT = 0.05


# -- load cases ------------------------------------------------------------------
def test_table_row_10_3():
    row = [r for r in TABLE4 if r[0] == 10.3][0]
    assert row[1] == 2.2 and row[2] == (5.0, 8.0, 11.0) and row[3] == 28.7


def test_raw_probabilities_sum():
    assert sum(r[3] for r in TABLE4) == pytest.approx(92.9)


def test_weights_renormalised():
    cases = operational_cases(load_case_table())
    assert len(cases) == 21
    assert sum(c.weight for c in cases) == pytest.approx(1.0, abs=1e-12)
    # ratios between rows survive the renormalisation; each Tp carries a third
    w = {c.v: 0.0 for c in cases}
    for c in cases:
        w[c.v] += c.weight
    assert w[10.3] / w[5.0] == pytest.approx(28.7 / 14.8)
    third = [c.weight for c in cases if c.v == 13.9]
    assert np.allclose(third, third[0])


def test_extreme_case():
    ext = [c for c in load_case_table() if c.label == "DLC6.1"]
    assert EXTREME == (44.0, 10.9, 15.0)
    assert len(ext) == 3 and {c.seed for c in ext} == {1, 2, 3}
    assert all((c.v, c.hs, c.tp, c.weight) == (44.0, 10.9, 15.0, 0.0) for c in ext)


def test_load_case_validation():
    with pytest.raises(ValueError):
        LoadCase(10.0, 0.0, 8.0, 0.1)
    with pytest.raises(ValueError):
        LoadCase(10.0, 1.0, 8.0, -0.1)


# -- JONSWAP ----------------------------------------------------------------------
def test_gamma_one_is_pierson_moskowitz():
    w = np.linspace(0.1, 3.0, 500)
    hs, tp = 2.5, 10.0
    wp = 2 * np.pi / tp
    pm = 5 / 16 * hs ** 2 * wp ** 4 / w ** 5 * np.exp(-1.25 * (wp / w) ** 4)
    assert np.allclose(jonswap(w, hs, tp, gamma=1.0, normalize=False), pm, rtol=1e-12)


@pytest.mark.parametrize("gamma", [None, 1.0, 3.3])
def test_zeroth_moment(gamma):
    w = np.linspace(0.05, 3.0, 600)
    s = jonswap(w, 2.0, 8.0, gamma=gamma, normalize=False)
    assert spectral_moment(w, s) == pytest.approx(0.25, rel=0.01)
    assert spectral_moment(w, jonswap(w, 2.0, 8.0, gamma=gamma)) == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize("tp", [5.0, 9.5, 15.0])
def test_peak_at_tp(tp):
    w = np.linspace(0.05, 3.0, 600)
    s = jonswap(w, 3.0, tp)
    assert abs(w[np.argmax(s)] - 2 * np.pi / tp) <= w[1] - w[0]


def test_gamma_relation():
    assert jonswap_gamma(4.0, 7.0) == 5.0      # Tp/sqrt(Hs) = 3.5
    assert jonswap_gamma(1.0, 6.0) == 1.0
    assert 1.0 < jonswap_gamma(4.0, 8.5) < 5.0


# -- wave realizations ----------------------------------------------------------------
@pytest.mark.parametrize("hs, tp", [(1.4, 5.0), (3.0, 9.5), (10.9, 15.0)])
def test_realization_hs_and_peak(hs, tp):
    wr = wave_realization(hs, tp, seed=4, dt=DT)
    assert 4 * np.std(wr.eta) == pytest.approx(hs, rel=0.03)
    # periodogram of the synthesised record on its own harmonic grid
    f, p = signal.periodogram(wr.eta, fs=1 / DT, window="boxcar", detrend=False)
    step = f[1] - f[0]
    assert abs(f[np.argmax(p)] - 1 / tp) <= step


def test_realization_variance_matches_spectrum():
    wr = wave_realization(3.0, 9.5, seed=11, dt=DT)
    w = np.linspace(0.05, 3.0, 4000)
    m0 = spectral_moment(w, jonswap(w, 3.0, 9.5))
    assert np.var(wr.eta) == pytest.approx(m0, rel=0.03)


def test_realization_deterministic():
    a = wave_realization(3.0, 9.5, seed=5, dt=DT).eta
    b = wave_realization(3.0, 9.5, seed=5, dt=DT).eta
    c = wave_realization(3.0, 9.5, seed=6, dt=DT).eta
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, c)


def test_zero_spectrum_gives_flat_sea():
    wr = wave_realization(0.0, 9.5, seed=1, duration=600.0, dt=DT)
    assert np.all(wr.eta == 0)


def test_nyquist_enforced():
    with pytest.raises(ValueError):
        wave_realization(3.0, 9.5, seed=1, duration=600.0, dt=1.5)


@pytest.mark.parametrize("duration", [3600.0, 36000.0])
def test_moment_convergence(duration):
    wr = wave_realization(3.0, 9.5, seed=2, duration=duration, dt=0.2)
    assert 16 * np.var(wr.eta) == pytest.approx(9.0, rel=0.03)


def test_wave_csv(tmp_path):
    wr = wave_realization(1.4, 5.0, seed=1, duration=60.0, dt=0.5)
    path = tmp_path / "wave.csv"
    wr.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema: semisub.wave/1" and lines[1] == "t,eta"
    assert len(lines) == 2 + wr.eta.size


# -- wind ----------------------------------------------------------------------------
D = 178.3
W_RATED = 9.6 * 2 * np.pi / 60


def test_zero_turbulence_leaves_3p_line_only():
    wind = rotor_effective_wind(12.0, 0.0, D, seed=1, duration=600.0, dt=DT,
                                harmonic_fraction=0.02, rotor_speed=W_RATED)
    expected = 12.0 + 0.02 * 12.0 * np.cos(3 * W_RATED * wind.t)
    assert np.allclose(wind.v0, expected, atol=1e-12)


def test_wind_mean():
    wind = rotor_effective_wind(13.9, turbulence_sigma(13.9), D, seed=3, dt=DT)
    assert np.mean(wind.v0) == pytest.approx(13.9, rel=0.01)


def test_wind_psd_matches_filtered_kaimal():
    v, sigma = 13.9, turbulence_sigma(13.9)
    wind = rotor_effective_wind(v, sigma, D, seed=8, duration=36000.0, dt=0.25,
                                harmonic_fraction=0.0)
    f, p = signal.welch(wind.v0, fs=4.0, nperseg=2 ** 14)
    target = kaimal(2 * np.pi * f, v, sigma) * rotor_admittance(2 * np.pi * f, v, D) * 2 * np.pi
    for lo, hi in ((0.005, 0.02), (0.02, 0.05), (0.05, 0.1), (0.1, 0.3)):
        sel = (f >= lo) & (f < hi)
        assert p[sel].mean() == pytest.approx(target[sel].mean(), rel=0.10), (lo, hi)


def test_3p_line_visible():
    wind = rotor_effective_wind(13.9, turbulence_sigma(13.9), D, seed=2, duration=3600.0,
                                dt=DT, rotor_speed=W_RATED)
    f, p = signal.periodogram(wind.v0 - wind.v0.mean(), fs=1 / DT)
    band = (f > 0.3) & (f < 0.7)
    f3p = 3 * W_RATED / (2 * np.pi)
    assert abs(f[band][np.argmax(p[band])] - f3p) <= f[1] - f[0]


def test_wind_deterministic_and_independent_of_wave_stream():
    a = rotor_effective_wind(10.0, 1.0, D, seed=4, duration=600.0, dt=DT).v0
    b = rotor_effective_wind(10.0, 1.0, D, seed=4, duration=600.0, dt=DT).v0
    assert a.tobytes() == b.tobytes()


def test_non_positive_mean_wind_rejected():
    with pytest.raises(ValueError):
        rotor_effective_wind(0.0, 1.0, D, seed=1)


def test_turbulence_class_c():
    assert turbulence_sigma(15.0) == pytest.approx(0.12 * (0.75 * 15.0 + 5.6))
