"""Response spectra, fatigue statistics and the two design indicators.

* ``response_spectra``: closed-loop output PSDs split by source (wind,
  first-order waves, slow drift) plus deterministic rotor harmonics.
* ``rainflow_del`` / ``spectral_del``: damage-equivalent loads from a time
  series (rainflow counting) or from a PSD (Dirlik).
* ``centerline_response``: harmonic amplitude of the turbine centreline
  along the elevation and its instantaneous centre of rotation.
* ``u_min``: least control effort that cancels a unit disturbance exactly,
  from the inverse of the scaled 2x2 plant.
* ``modal_analysis``: damped frequencies and damping ratios with a label of
  the dominating degree of freedom.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import rainflow
from scipy import optimize
from scipy.special import gamma as gamma_fn

from .control import ClosedLoop
from .slow_core import STATE_NAMES, LinearModel

log = logging.getLogger(__name__)

WOEHLER_EXPONENT = 4.0
N_REF = 1.0e7
LIFETIME = 20 * 365.25 * 24 * 3600.0


# -- response spectra ----------------------------------------------------------
@dataclass(frozen=True)
class SpectralLine:
    """Deterministic harmonic: frequency [rad/s] and complex output amplitudes."""

    omega: float
    amplitude: np.ndarray


@dataclass(frozen=True)
class ResponseSpectra:
    omega: np.ndarray
    names: tuple
    wind: np.ndarray          # (n_omega, n_out) one-sided PSD per rad/s
    wave: np.ndarray
    drift: np.ndarray
    lines: tuple = ()
    rao_wind: np.ndarray | None = None     # (n_omega, n_out) per m/s
    rao_wave: np.ndarray | None = None     # (n_omega, n_out) per m of wave amplitude

    @property
    def total(self) -> np.ndarray:
        return self.wind + self.wave + self.drift

    def index(self, name: str) -> int:
        return list(self.names).index(name)

    def psd(self, name: str) -> np.ndarray:
        return self.total[:, self.index(name)]

    def line_variance(self, name: str) -> float:
        i = self.index(name)
        return float(sum(0.5 * abs(l.amplitude[i]) ** 2 for l in self.lines))

    def moment(self, name: str, n: int = 0) -> float:
        """Spectral moment incl. the harmonic lines."""
        s = _integrate(self.omega, self.omega ** n * self.psd(name))
        i = self.index(name)
        return s + float(sum(0.5 * abs(l.amplitude[i]) ** 2 * l.omega ** n for l in self.lines))

    def std(self, name: str) -> float:
        return float(np.sqrt(self.moment(name, 0)))

    def source_std(self, name: str) -> dict:
        i = self.index(name)
        return {src: float(np.sqrt(_integrate(self.omega, getattr(self, src)[:, i])))
                for src in ("wind", "wave", "drift")} | {"lines": float(np.sqrt(self.line_variance(name)))}


def _integrate(omega, y) -> float:
    """Trapezoidal integral on a possibly non-uniform grid."""
    from scipy.integrate import trapezoid
    return float(trapezoid(y, omega))


def response_spectra(cl: ClosedLoop, omega, s_wind, s_wave, s_drift=None,
                     wind_lines=()) -> ResponseSpectra:
    """Closed-loop output PSDs.

    ``s_drift`` is the slow-drift surge force spectrum [N^2 s/rad];
    ``wind_lines`` are ``(omega, amplitude [m/s])`` harmonic wind components.
    """
    omega = np.asarray(omega, float)
    H = cl.output_transfer(omega)
    Hv = H[:, :, 0]
    Hw = np.einsum("wok,wk->wo", H[:, :, 1:4], cl.wave_force(omega))
    s_wind = np.asarray(s_wind, float)
    s_wave = np.asarray(s_wave, float)
    wind = np.abs(Hv) ** 2 * s_wind[:, None]
    wave = np.abs(Hw) ** 2 * s_wave[:, None]
    if s_drift is None:
        drift = np.zeros_like(wind)
    else:
        drift = np.abs(H[:, :, 1]) ** 2 * np.asarray(s_drift, float)[:, None]
    lines = []
    for w, a in wind_lines:
        lines.append(SpectralLine(float(w), cl.output_transfer([w])[0, :, 0] * a))
    return ResponseSpectra(omega, tuple(cl.output_names), wind, wave, drift, tuple(lines), Hv, Hw)


# -- fatigue -------------------------------------------------------------------
def rainflow_del(series, m: float = WOEHLER_EXPONENT, n_ref: float = N_REF,
                 scale: float = 1.0) -> float:
    """Damage-equivalent load range ``(scale * sum n_i R_i^m / N_ref)^(1/m)``.

    ``scale`` extrapolates the counted cycles, e.g. ``lifetime / duration``.
    Residual half cycles count with ``n = 0.5``.
    """
    x = np.asarray(series, float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    if n_ref <= 0 or m <= 0:
        raise ValueError("m and N_ref must be positive")
    x = x - x.mean()
    damage = sum(n * r ** m for r, n in rainflow.count_cycles(x))
    return float((scale * damage / n_ref) ** (1.0 / m))


def dirlik_parameters(m0, m1, m2, m4):
    """Dirlik's cycle-distribution weights (D1, D2, D3, Q, R)."""
    xm = m1 / m0 * np.sqrt(m2 / m4)
    g = m2 / np.sqrt(m0 * m4)
    d1 = 2 * (xm - g ** 2) / (1 + g ** 2)
    r = (g - xm - d1 ** 2) / (1 - g - d1 + d1 ** 2)
    d2 = (1 - g - d1 + d1 ** 2) / (1 - r)
    d3 = 1 - d1 - d2
    q = 1.25 * (g - d3 - d2 * r) / d1
    return d1, d2, d3, q, r


def spectral_moments(omega, psd, lines=()) -> tuple[float, float, float, float]:
    """Moments m0, m1, m2, m4 of a one-sided PSD in rad/s plus harmonic lines (omega, variance)."""
    omega = np.asarray(omega, float)
    psd = np.asarray(psd, float)
    out = []
    for n in (0, 1, 2, 4):
        v = _integrate(omega, omega ** n * psd) if omega.size > 1 else 0.0
        v += sum(var * w ** n for w, var in lines)
        out.append(float(v))
    return tuple(out)


def spectral_del(omega, psd, m: float = WOEHLER_EXPONENT, n_ref: float = N_REF,
                 duration: float = LIFETIME, lines=()) -> float:
    """Dirlik damage-equivalent load range over ``duration`` seconds.

    ``lines`` adds deterministic harmonics as ``(omega, variance)`` to the
    spectral moments.
    """
    if n_ref <= 0 or m <= 0:
        raise ValueError("m and N_ref must be positive")
    if np.any(np.asarray(psd) < 0):
        raise ValueError("PSD must be non-negative")
    m0, m1, m2, m4 = spectral_moments(omega, psd, lines)
    if m0 <= 0:
        return 0.0
    nu_p = np.sqrt(m4 / m2) / (2 * np.pi)
    if m2 / np.sqrt(m0 * m4) > 1 - 1e-9:
        # single-frequency content: Dirlik's weights degenerate (0/0); use its
        # Rayleigh limit
        return narrowband_del(m0, nu_p, m, n_ref, duration)
    d1, d2, d3, q, r = dirlik_parameters(m0, m1, m2, m4)
    # E[S^m] for the Dirlik range density, S = 2 sqrt(m0) Z
    ez = (d1 * q ** m * gamma_fn(1 + m)
          + np.sqrt(2) ** m * gamma_fn(1 + m / 2) * (d2 * abs(r) ** m + d3))
    es = (2 * np.sqrt(m0)) ** m * ez
    return float((nu_p * duration * es / n_ref) ** (1.0 / m))


def narrowband_del(m0: float, nu: float, m: float = WOEHLER_EXPONENT, n_ref: float = N_REF,
                   duration: float = LIFETIME) -> float:
    """Rayleigh-range closed form for a narrow-band Gaussian process with zero-crossing rate ``nu`` [Hz]."""
    es = (2 * np.sqrt(2 * m0)) ** m * gamma_fn(1 + m / 2)
    return float((nu * duration * es / n_ref) ** (1.0 / m))


# -- statistics ----------------------------------------------------------------
@dataclass(frozen=True)
class CaseStatistics:
    """Per-signal statistics of one load case (spectral path)."""

    key: str
    weight: float
    std: dict
    mean: dict
    max_estimate: dict
    dels: dict
    spectra: ResponseSpectra | None = field(default=None, repr=False)

    def to_record(self) -> dict:
        rec = {"case": self.key, "weight": self.weight}
        for k, v in self.std.items():
            rec[f"std_{k}"] = v
        for k, v in self.mean.items():
            rec[f"mean_{k}"] = v
        for k, v in self.max_estimate.items():
            rec[f"max_{k}"] = v
        for k, v in self.dels.items():
            rec[f"del_{k}"] = v
        return rec


def case_statistics(key: str, weight: float, spectra: ResponseSpectra, means: dict,
                    del_signals=("M_yt",), duration: float = 3600.0, m: float = WOEHLER_EXPONENT,
                    n_ref: float = N_REF, lifetime: float = LIFETIME) -> CaseStatistics:
    """STDs, means, expected maxima over ``duration`` and lifetime DELs from spectra."""
    std, mx, dels = {}, {}, {}
    for name in spectra.names:
        s = spectra.std(name)
        std[name] = s
        m0, _, m2, _ = (spectra.moment(name, n) for n in (0, 1, 2, 4))
        nu0 = np.sqrt(m2 / m0) / (2 * np.pi) if m0 > 0 else 0.0
        n = max(nu0 * duration, 1.0)
        # expected largest peak of a Gaussian process over the record
        peak = s * (np.sqrt(2 * np.log(n)) + 0.5772 / np.sqrt(2 * np.log(n))) if n > 1 else s
        mx[name] = abs(means.get(name, 0.0)) + peak
    for name in del_signals:
        i = spectra.index(name)
        lines = [(l.omega, 0.5 * abs(l.amplitude[i]) ** 2) for l in spectra.lines]
        dels[name] = spectral_del(spectra.omega, spectra.psd(name), m, n_ref, lifetime, lines)
    return CaseStatistics(key, weight, std, dict(means), mx, dels, spectra)


def weight_statistics(stats: list[CaseStatistics], weights=None,
                      m: float = WOEHLER_EXPONENT) -> dict:
    """Weighted aggregate: DELs as ``(sum w DEL^m)^(1/m)``, STDs as ``sqrt(sum w std^2)``."""
    if not stats:
        raise ValueError("no case statistics to aggregate")
    w = np.array([s.weight for s in stats] if weights is None else weights, float)
    if w.size != len(stats) or np.any(w < 0):
        raise ValueError("need one non-negative weight per case")
    out = {"del": {}, "std": {}}
    for name in stats[0].dels:
        out["del"][name] = float(np.sum(w * np.array([s.dels[name] for s in stats]) ** m) ** (1 / m))
    for name in stats[0].std:
        out["std"][name] = float(np.sqrt(np.sum(w * np.array([s.std[name] for s in stats]) ** 2)))
    return out


# -- centerline response -------------------------------------------------------
@dataclass(frozen=True)
class CenterlineResponse:
    z: np.ndarray
    omega: np.ndarray
    channel: str
    phi: np.ndarray           # (n_omega, n_z) complex
    z_cor: np.ndarray         # (n_omega,)

    @property
    def amplitude(self) -> np.ndarray:
        return np.abs(self.phi)


def _centerline_rao(cl: ClosedLoop, omega, channel: str):
    if channel == "wind":
        H = cl.wind_transfer(omega, states=True)
    elif channel == "wave":
        H = cl.wave_transfer(omega, states=True)
    else:
        raise ValueError("channel must be 'wind' or 'wave'")
    return H[:, 0], H[:, 2], H[:, 3]


def centerline_response(cl: ClosedLoop, omega, channel: str = "wave", z=None,
                        n_z: int = 201) -> CenterlineResponse:
    """``|Phi(z)| = |G_xp + G_beta z + G_xt phi_x(z)|`` and its minimiser ``z_cor``.

    ``z`` defaults to a grid from the keel to the hub.  The minimiser is
    refined by bounded golden-section search around the best grid point.
    """
    lin = cl.linear
    omega = np.atleast_1d(np.asarray(omega, float))
    if z is None:
        z = np.linspace(lin.z_keel, lin.z_hub, n_z)
    z = np.asarray(z, float)
    gx, gb, gt = _centerline_rao(cl, omega, channel)
    phi_z = lin.tower_mode(z)
    phi = gx[:, None] + gb[:, None] * z[None, :] + gt[:, None] * phi_z[None, :]
    z_cor = np.empty(omega.size)
    for i in range(omega.size):
        def amp(zz, i=i):
            return abs(gx[i] + gb[i] * zz + gt[i] * float(lin.tower_mode(zz)))
        j = int(np.argmin(np.abs(phi[i])))
        lo = z[max(j - 1, 0)]
        hi = z[min(j + 1, z.size - 1)]
        if hi > lo:
            res = optimize.minimize_scalar(amp, bounds=(lo, hi), method="bounded",
                                           options={"xatol": 1e-6})
            z_cor[i] = res.x if res.fun <= abs(phi[i, j]) else z[j]
        else:
            z_cor[i] = z[j]
    return CenterlineResponse(z, omega, channel, phi, z_cor)


def surge_pitch_phase(cl: ClosedLoop, omega) -> np.ndarray:
    """phase(G_wave,x_p) - phase(G_wave,beta_p) in degrees, wrapped to [0, 360)."""
    H = cl.wave_transfer(omega, states=True)
    return np.mod(np.degrees(np.angle(H[:, 0]) - np.angle(H[:, 2])), 360.0)


# -- minimum control action ----------------------------------------------------
@dataclass(frozen=True)
class Scaling:
    """Design limits used to scale inputs and outputs (unit = limit reached)."""

    max_torque: float
    max_pitch: float = np.deg2rad(5.0)
    max_omega: float = 0.1 * 9.6 * 2 * np.pi / 60
    max_xt: float = 0.5

    @classmethod
    def for_turbine(cls, turbine, **kw) -> "Scaling":
        return cls(0.2 * turbine.rated_torque, max_omega=0.1 * turbine.rated_rotor_speed, **kw)

    @property
    def du(self) -> np.ndarray:
        return np.diag([self.max_torque, self.max_pitch])

    @property
    def dy(self) -> np.ndarray:
        return np.diag([self.max_omega, self.max_xt])


@dataclass(frozen=True)
class UminResult:
    omega: np.ndarray
    channel: str
    u_min: np.ndarray
    sigma_ratio: np.ndarray       # sigma_min / sigma_max of the scaled plant
    flagged: np.ndarray
    scaling: Scaling

    def band_average(self, f_lo: float = 0.05, f_hi: float = 0.15) -> float:
        f = self.omega / (2 * np.pi)
        sel = (f >= f_lo) & (f <= f_hi)
        if not np.any(sel):
            raise ValueError("no frequencies in the averaging band")
        return float(np.mean(self.u_min[sel]))


PLANT_OUTPUTS = ("omega", "x_t")


def plant_transfer(lin: LinearModel, omega):
    """Open-loop 2x2 plant G (inputs M_g, theta_ref -> outputs Omega, x_t) and
    disturbance columns for wind (per m/s) and waves (per m amplitude)."""
    omega = np.atleast_1d(np.asarray(omega, float))
    n = lin.A.shape[0]
    rows = [list(lin.output_names).index(o) for o in PLANT_OUTPUTS]
    C = lin.C[rows]
    M = 1j * omega[:, None, None] * np.eye(n)[None] - lin.A[None]
    Hu = np.linalg.solve(M, np.broadcast_to(lin.B, (omega.size,) + lin.B.shape))
    Hd = np.linalg.solve(M, np.broadcast_to(lin.Bd, (omega.size,) + lin.Bd.shape))
    G = np.einsum("oj,wjk->wok", C, Hu) + lin.D[rows][None]
    Gd = np.einsum("oj,wjk->wok", C, Hd) + lin.Dd[rows][None]
    X = np.zeros((omega.size, 3), dtype=complex)
    for j in range(3):
        X[:, j] = (np.interp(omega, lin.omega, lin.wave_force[:, j].real, left=0, right=0)
                   + 1j * np.interp(omega, lin.omega, lin.wave_force[:, j].imag, left=0, right=0))
    g_wind = Gd[:, :, 0]
    g_wave = np.einsum("wok,wk->wo", Gd[:, :, 1:4], X)
    return G, g_wind, g_wave


def u_min_from_plant(G, gd, scaling: Scaling, cond_tol: float = 1e-8):
    """``||Du^-1 G^-1 g_d||_2`` per frequency via the SVD of the scaled plant.

    Returns (u_min, sigma_min / sigma_max, flagged).
    """
    G = np.asarray(G, complex)
    gd = np.asarray(gd, complex)
    dy_inv = np.linalg.inv(scaling.dy)
    Gs = dy_inv @ G @ scaling.du
    gds = np.einsum("ij,wj->wi", dy_inv, gd)
    U, s, Vh = np.linalg.svd(Gs)
    ratio = s[:, -1] / s[:, 0]
    flagged = ratio < cond_tol
    # u = -V diag(1/s) U^H g_d
    proj = np.einsum("wji,wj->wi", U.conj(), gds) / s
    u = -np.einsum("wji,wj->wi", Vh.conj(), proj)
    if np.any(flagged):
        log.warning("plant nearly singular at %d frequency points", int(flagged.sum()))
    return np.linalg.norm(u, axis=1), ratio, flagged


def u_min(lin: LinearModel, scaling: Scaling, omega, channel: str = "wave") -> UminResult:
    """Least 2-norm scaled control input cancelling a unit wind or wave disturbance."""
    omega = np.atleast_1d(np.asarray(omega, float))
    G, g_wind, g_wave = plant_transfer(lin, omega)
    if channel == "wind":
        gd = g_wind
    elif channel == "wave":
        gd = g_wave
    else:
        raise ValueError("channel must be 'wind' or 'wave'")
    u, ratio, flagged = u_min_from_plant(G, gd, scaling)
    return UminResult(omega, channel, u, ratio, flagged, scaling)


# -- modal analysis ------------------------------------------------------------
@dataclass(frozen=True)
class Mode:
    eigenvalue: complex
    freq: float            # damped frequency [Hz]
    zeta: float
    label: str


# characteristic amplitudes used to compare eigenvector components
# (rotor speed: about 5 % of rated)
STATE_SCALES = {"x_p": 1.0, "z_p": 0.1, "beta_p": 0.01, "x_t": 0.1,
                "omega": 0.05, "theta": 0.01, "xi": 1.0}


def modal_analysis(A, state_names=None, scales: dict | None = None) -> list[Mode]:
    """Eigenvalues of ``A`` as (damped frequency, damping ratio, dominant DOF) sorted by frequency.

    Only eigenvalues with non-negative imaginary part are returned.  The
    label is the displacement-type state with the largest scaled
    eigenvector component.
    """
    A = np.asarray(A, float)
    n = A.shape[0]
    if state_names is None:
        state_names = STATE_NAMES[:n] if n <= len(STATE_NAMES) else STATE_NAMES + ("xi",)
    scales = {**STATE_SCALES, **(scales or {})}
    lam, V = np.linalg.eig(A)
    cand = [i for i, s in enumerate(state_names) if not s.startswith("d")]
    modes = []
    for k in range(n):
        l = lam[k]
        if l.imag < -1e-12:
            continue
        mag = np.abs(l)
        zeta = float(-l.real / mag) if mag > 0 else 0.0
        w = [abs(V[i, k]) / scales.get(state_names[i], 1.0) for i in cand]
        label = state_names[cand[int(np.argmax(w))]]
        modes.append(Mode(complex(l), float(abs(l.imag) / (2 * np.pi)), zeta, label))
    modes.sort(key=lambda m: (m.freq, -m.eigenvalue.real))
    return modes


def mode_frequency(modes: list[Mode], label: str) -> float:
    """Damped frequency of the lowest oscillatory mode dominated by ``label``."""
    for m in modes:
        if m.label == label and m.freq > 0:
            return m.freq
    raise LookupError(f"no oscillatory mode labelled {label!r}")
