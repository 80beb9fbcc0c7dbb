"""Wind and wave disturbances: load cases, spectra and seeded realizations.

Waves follow a JONSWAP spectrum, wind a Kaimal spectrum reduced to a
rotor-effective wind speed by a first-order rotor-averaging admittance.
Time series are synthesised by inverse FFT with uniformly distributed random
phases on the harmonic frequencies of the record, so the sample variance of
a realization equals the discrete spectral variance exactly.

Spectra are one-sided in angular frequency (units per rad/s).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid

# Operational table: wind speed, Hs, three Tp values, probability [%]
TABLE4 = (
    (5.0, 1.4, (5.0, 7.0, 11.0), 14.8),
    (7.1, 1.7, (5.0, 8.0, 11.0), 25.0),
    (10.3, 2.2, (5.0, 8.0, 11.0), 28.7),
    (13.9, 3.0, (7.0, 9.5, 12.0), 17.5),
    (17.9, 4.3, (7.5, 10.0, 13.0), 5.9),
    (22.1, 6.2, (10.0, 12.5, 15.0), 0.9),
    (25.0, 8.3, (10.0, 12.0, 14.0), 0.1),
)
EXTREME = (44.0, 10.9, 15.0)

DEFAULT_DURATION = 3600.0
DEFAULT_TRANSIENT = 600.0


@dataclass(frozen=True)
class LoadCase:
    v: float
    hs: float
    tp: float
    weight: float
    seed: int = 1
    duration: float = DEFAULT_DURATION
    label: str = "DLC1.2"
    gamma: float | None = None

    def __post_init__(self):
        if not (self.hs > 0 and self.tp > 0):
            raise ValueError("Hs and Tp must be positive")
        if self.weight < 0:
            raise ValueError("weights must be non-negative")

    @property
    def key(self) -> str:
        return f"{self.label}_v{self.v:g}_hs{self.hs:g}_tp{self.tp:g}"


def load_case_table(rows=TABLE4, extreme=EXTREME, seed: int = 1,
                    extreme_seeds=(1, 2, 3), duration: float = DEFAULT_DURATION,
                    include_extreme: bool = True) -> list[LoadCase]:
    """Operational cases (weights renormalised to one, 1/3 per Tp) plus the 50-year case.

    The extreme case carries zero weight and one entry per seed.
    """
    total = sum(r[3] for r in rows)
    cases = []
    for v, hs, tps, f in rows:
        for tp in tps:
            cases.append(LoadCase(v, hs, tp, f / total / len(tps), seed, duration))
    if include_extreme and extreme is not None:
        v, hs, tp = extreme
        cases.extend(LoadCase(v, hs, tp, 0.0, s, duration, "DLC6.1") for s in extreme_seeds)
    return cases


def operational_cases(cases: list[LoadCase]) -> list[LoadCase]:
    return [c for c in cases if c.label == "DLC1.2"]


# -- waves ---------------------------------------------------------------------
def jonswap_gamma(hs: float, tp: float) -> float:
    """Standard peak-enhancement factor from Tp / sqrt(Hs)."""
    ratio = tp / np.sqrt(hs)
    if ratio <= 3.6:
        return 5.0
    if ratio >= 5.0:
        return 1.0
    return float(np.exp(5.75 - 1.15 * ratio))


def jonswap(omega, hs: float, tp: float, gamma: float | None = None,
            normalize: bool = True) -> np.ndarray:
    """JONSWAP wave spectrum S(omega) [m^2 s/rad].

    With ``normalize`` the discrete zeroth moment on ``omega`` is scaled to
    exactly ``Hs^2 / 16``.
    """
    omega = np.asarray(omega, dtype=float)
    if hs < 0 or tp <= 0:
        raise ValueError("need Hs >= 0 and Tp > 0")
    if hs == 0:
        return np.zeros_like(omega)
    gamma = jonswap_gamma(hs, tp) if gamma is None else gamma
    wp = 2 * np.pi / tp
    w = np.where(omega > 0, omega, np.inf)
    sigma = np.where(w <= wp, 0.07, 0.09)
    pm = 5.0 / 16.0 * hs ** 2 * wp ** 4 / w ** 5 * np.exp(-1.25 * (wp / w) ** 4)
    peak = gamma ** np.exp(-((w - wp) ** 2) / (2 * sigma ** 2 * wp ** 2))
    s = (1 - 0.287 * np.log(gamma)) * pm * peak
    if normalize and omega.size > 1:
        m0 = trapezoid(s, omega) if omega.size > 1 else 0.0
        if m0 > 0:
            s *= hs ** 2 / 16 / m0
    return s


def spectral_moment(omega, s, n: int = 0) -> float:
    return float(trapezoid(np.asarray(omega) ** n * np.asarray(s), omega))


@dataclass(frozen=True)
class Realization:
    """Harmonic amplitudes/phases of a seeded random-phase realization.

    Frequencies are the harmonics ``j * 2 pi / T`` of the record length ``T``
    that fall inside the spectral band; ``series`` evaluates any linear
    transfer function of the underlying process on the time grid.
    """

    dt: float
    n: int
    omega: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray
    index: np.ndarray        # harmonic number of each component

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    @property
    def duration(self) -> float:
        return self.n * self.dt

    def series(self, transfer=None) -> np.ndarray:
        """``Re sum H_j a_j exp(i (w_j t + phi_j))``; ``transfer`` shape (n_freq, ...) or None."""
        c = self.amplitude * np.exp(1j * self.phase)
        if transfer is not None:
            transfer = np.asarray(transfer)
            c = c.reshape((-1,) + (1,) * (transfer.ndim - 1)) * transfer
        spec = np.zeros((self.n // 2 + 1,) + c.shape[1:], dtype=complex)
        spec[self.index] = c
        return np.fft.irfft(spec, n=self.n, axis=0) * (self.n / 2)


def _harmonic_grid(duration: float, dt: float, band):
    n = int(round(duration / dt))
    dw = 2 * np.pi / (n * dt)
    lo, hi = band
    if hi >= np.pi / dt:
        raise ValueError("time step does not resolve the spectral band (Nyquist)")
    j = np.arange(max(1, int(np.ceil(lo / dw))), int(np.floor(hi / dw)) + 1)
    return n, dw, j


def random_phase_realization(spectrum, seed: int, duration: float, dt: float,
                             band=(0.05, 3.0)) -> Realization:
    n, dw, j = _harmonic_grid(duration, dt, band)
    omega = j * dw
    s = np.asarray(spectrum(omega), dtype=float)
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2 * np.pi, size=omega.size)
    return Realization(dt, n, omega, np.sqrt(2 * s * dw), phase, j)


@dataclass(frozen=True)
class WaveRealization:
    realization: Realization
    hs: float
    tp: float

    @property
    def t(self):
        return self.realization.t

    @cached_property
    def eta(self) -> np.ndarray:
        return self.realization.series()

    @property
    def omega(self):
        return self.realization.omega

    @property
    def spectrum(self) -> np.ndarray:
        r = self.realization
        return r.amplitude ** 2 / (2 * (r.omega[1] - r.omega[0] if r.omega.size > 1 else 1.0))

    def to_csv(self, path) -> None:
        _write_series(path, "semisub.wave/1", {"t": self.t, "eta": self.eta})


def wave_realization(hs: float, tp: float, seed: int, duration: float = DEFAULT_DURATION + DEFAULT_TRANSIENT,
                     dt: float = 0.05, gamma: float | None = None, band=(0.05, 3.0)) -> WaveRealization:
    """Seeded irregular-wave realization of a JONSWAP sea state."""
    grid = np.linspace(*band, 2000)

    def spec(w):
        # normalise on a fixed fine grid so the realization carries Hs^2/16
        s = jonswap(w, hs, tp, gamma, normalize=False)
        ref = jonswap(grid, hs, tp, gamma, normalize=False)
        m0 = trapezoid(ref, grid)
        return s * (hs ** 2 / 16 / m0) if m0 > 0 else s

    return WaveRealization(random_phase_realization(spec, seed, duration, dt, band), hs, tp)


# -- wind ----------------------------------------------------------------------
KAIMAL_LENGTH = 340.2


def turbulence_sigma(v: float, i_ref: float = 0.12) -> float:
    """Normal turbulence model standard deviation [m/s] (class C by default)."""
    return i_ref * (0.75 * v + 5.6)


def kaimal(omega, v: float, sigma: float, length: float = KAIMAL_LENGTH) -> np.ndarray:
    """One-sided longitudinal Kaimal point spectrum per rad/s."""
    f = np.asarray(omega, float) / (2 * np.pi)
    s_f = 4 * sigma ** 2 * length / v / (1 + 6 * f * length / v) ** (5 / 3)
    return s_f / (2 * np.pi)


def rotor_admittance(omega, v: float, diameter: float, alpha: float = 3.0) -> np.ndarray:
    """Squared magnitude of a first-order rotor-averaging filter, corner alpha * v / D."""
    wc = alpha * v / diameter
    return 1.0 / (1.0 + (np.asarray(omega, float) / wc) ** 2)


@dataclass(frozen=True)
class WindModel:
    """Rotor-effective wind spectrum plus the deterministic 3P rotational-sampling line."""

    v: float
    ti_sigma: float
    diameter: float
    harmonic_fraction: float = 0.02
    rotor_speed: float = 9.6 * 2 * np.pi / 60
    alpha: float = 3.0
    one_p_fraction: float = 0.0

    def spectrum(self, omega) -> np.ndarray:
        if self.ti_sigma == 0:
            return np.zeros_like(np.asarray(omega, float))
        return kaimal(omega, self.v, self.ti_sigma) * rotor_admittance(omega, self.v, self.diameter, self.alpha)

    def lines(self) -> list[tuple[float, float]]:
        """(angular frequency, amplitude) of harmonic lines."""
        out = [(3 * self.rotor_speed, self.harmonic_fraction * self.v)]
        if self.one_p_fraction:
            out.append((self.rotor_speed, self.one_p_fraction * self.v))
        return [(w, a) for w, a in out if a > 0 and w > 0]


@dataclass(frozen=True)
class WindRealization:
    model: WindModel
    realization: Realization

    @property
    def t(self):
        return self.realization.t

    @cached_property
    def v0(self) -> np.ndarray:
        v = self.model.v + self.realization.series()
        for w, a in self.model.lines():
            v = v + a * np.cos(w * self.t)
        return v

    def to_csv(self, path) -> None:
        _write_series(path, "semisub.wind/1", {"t": self.t, "v0": self.v0})


def rotor_effective_wind(v: float, sigma: float, diameter: float, seed: int,
                         duration: float = DEFAULT_DURATION + DEFAULT_TRANSIENT, dt: float = 0.05,
                         harmonic_fraction: float = 0.02, rotor_speed: float = 9.6 * 2 * np.pi / 60,
                         band=(1e-4, 6.0), alpha: float = 3.0) -> WindRealization:
    """Seeded rotor-effective wind speed time series.

    ``sigma`` is the point turbulence standard deviation (``turbulence_sigma``).
    """
    if not v > 0:
        raise ValueError("mean wind speed must be positive")
    model = WindModel(v, sigma, diameter, harmonic_fraction, rotor_speed, alpha)
    # independent stream from the wave phases for the same seed
    real = random_phase_realization(model.spectrum, seed + 7919, duration, dt, band)
    return WindRealization(model, real)


def _write_series(path, schema: str, columns: dict) -> None:
    keys = list(columns)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {schema}\n")
        w = csv.writer(fh)
        w.writerow(keys)
        for row in zip(*(columns[k] for k in keys)):
            w.writerow([f"{v:.8g}" for v in row])
