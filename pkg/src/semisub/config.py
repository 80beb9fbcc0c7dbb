"""Sweep configuration: YAML file -> validated, immutable ``SweepConfig``.

Example file::

    design_space:
      d: {start: 15, stop: 24, step: 1}     # or an explicit list
      h_hp: [1.0, 4.5, 8.0]
      c55_target: 2.255e9
    load_cases:
      table: default                         # or a CSV path (v, hs, tp1, tp2, tp3, probability)
      seeds: 1
      extreme_seeds: 3
    solver: {rtol: 1.0e-3, max_iter: 20, relaxation: 0.5, cd_keel0: 15.0}
    control: {zeta: 0.7, pitch_fraction: 0.7, freq_cap_hz: 0.06}
    wind: {i_ref: 0.12, harmonic_fraction: 0.02}
    time_domain: {dt: 0.05, transient: 600, spot_check: [[24, 4.5], [20, 4.5], [16, 1.0]]}
    extreme: {h_hp: 4.5, parked_ct: 0.02}
    analysis: {wave_periods: [5, 7.5, 10], wind_periods: [20, 50, 100], umin_band_hz: [0.05, 0.15]}
    output: {dir: sweep_out}
    run: {mode: freq, jobs: 1, seed: 1}

Every section and key is optional; unknown keys are rejected so typos do not
silently fall back to defaults.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .control import FixedPointSettings, TuningSettings
from .environment import EXTREME, TABLE4, LoadCase, load_case_table
from .hull_design import C55_TARGET

MODES = ("freq", "time", "both")


class ConfigError(ValueError):
    """Invalid or unresolvable configuration."""


@dataclass(frozen=True)
class SweepConfig:
    d_values: tuple = tuple(float(d) for d in np.arange(15.0, 24.5, 1.0))
    h_values: tuple = (1.0, 4.5, 8.0)
    c55_target: float = C55_TARGET
    case_table: tuple = TABLE4
    seeds: int = 1
    extreme_seeds: int = 3
    seed: int = 1
    rtol: float = 1e-3
    max_iter: int = 20
    relaxation: float = 0.5
    cd_keel0: float = 15.0
    zeta: float = 0.7
    pitch_fraction: float = 0.7
    freq_cap_hz: float = 0.06
    i_ref: float = 0.12
    harmonic_fraction: float = 0.02
    dt: float = 0.05
    transient: float = 600.0
    duration: float = 3600.0
    spot_check: tuple = ((24.0, 4.5), (20.0, 4.5), (16.0, 1.0))
    extreme_h: float = 4.5
    parked_ct: float = 0.02
    wave_periods: tuple = (5.0, 7.5, 10.0)
    wind_periods: tuple = (20.0, 50.0, 100.0)
    umin_band_hz: tuple = (0.05, 0.15)
    reference_case: tuple = (13.9, 9.5)
    out_dir: str = "sweep_out"
    mode: str = "freq"
    jobs: int = 1

    def __post_init__(self):
        if not self.d_values or not self.h_values:
            raise ConfigError("design space is empty")
        if self.seeds < 1 or self.extreme_seeds < 1:
            raise ConfigError("seeds must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if not (0 < self.relaxation <= 1):
            raise ConfigError("relaxation must lie in (0, 1]")
        if self.rtol <= 0 or self.max_iter < 1:
            raise ConfigError("solver tolerances must be positive")
        if self.dt <= 0 or self.duration <= 0 or self.transient < 0:
            raise ConfigError("time-domain settings must be positive")
        lo, hi = self.umin_band_hz
        if not 0 < lo < hi:
            raise ConfigError("umin band must satisfy 0 < lo < hi")

    # derived settings -------------------------------------------------------
    @property
    def fixed_point(self) -> FixedPointSettings:
        tuning = TuningSettings(freq_cap=self.freq_cap_hz * 2 * np.pi,
                                pitch_fraction=self.pitch_fraction, zeta=self.zeta)
        return FixedPointSettings(self.cd_keel0, self.relaxation, self.rtol, self.max_iter,
                                  self.i_ref, tuning)

    def designs(self) -> list[tuple[float, float]]:
        return [(float(d), float(h)) for h in self.h_values for d in self.d_values]

    def operational_cases(self, seed: int | None = None) -> list[LoadCase]:
        seed = self.seed if seed is None else seed
        return load_case_table(self.case_table, None, seed, duration=self.duration,
                               include_extreme=False)

    def extreme_cases(self) -> list[LoadCase]:
        v, hs, tp = EXTREME
        return [LoadCase(v, hs, tp, 0.0, self.seed + k, self.duration, "DLC6.1")
                for k in range(self.extreme_seeds)]

    def to_record(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = _plain(v)
        return out


def _plain(v):
    if isinstance(v, (tuple, list)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


# -- loading -------------------------------------------------------------------
_SECTIONS = {
    "design_space": {"d": "d_values", "h_hp": "h_values", "c55_target": "c55_target"},
    "load_cases": {"table": "case_table", "seeds": "seeds", "extreme_seeds": "extreme_seeds"},
    "solver": {"rtol": "rtol", "max_iter": "max_iter", "relaxation": "relaxation",
               "cd_keel0": "cd_keel0"},
    "control": {"zeta": "zeta", "pitch_fraction": "pitch_fraction", "freq_cap_hz": "freq_cap_hz"},
    "wind": {"i_ref": "i_ref", "harmonic_fraction": "harmonic_fraction"},
    "time_domain": {"dt": "dt", "transient": "transient", "duration": "duration",
                    "spot_check": "spot_check"},
    "extreme": {"h_hp": "extreme_h", "parked_ct": "parked_ct"},
    "analysis": {"wave_periods": "wave_periods", "wind_periods": "wind_periods",
                 "umin_band_hz": "umin_band_hz", "reference_case": "reference_case"},
    "output": {"dir": "out_dir"},
    "run": {"mode": "mode", "jobs": "jobs", "seed": "seed"},
}


def parse_range(spec) -> tuple:
    """A list of values, a ``{start, stop, step}`` mapping or ``"a..b:step"``."""
    if isinstance(spec, dict):
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec.get("step", 1.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad range {spec!r}") from exc
        return _arange(start, stop, step)
    if isinstance(spec, str):
        try:
            span, _, step = spec.partition(":")
            a, _, b = span.partition("..")
            if b:
                return _arange(float(a), float(b), float(step or 1.0))
            return tuple(float(x) for x in span.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad range {spec!r}") from exc
    if isinstance(spec, (int, float)):
        return (float(spec),)
    try:
        return tuple(float(x) for x in spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value list {spec!r}") from exc


def _arange(start, stop, step):
    if step <= 0 or stop < start:
        raise ConfigError("range needs step > 0 and stop >= start")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return tuple(float(start + i * step) for i in range(n))


def read_case_table(path) -> tuple:
    """CSV with columns v, hs, tp1, tp2, tp3, probability (header row required)."""
    rows = []
    try:
        with open(path, newline="") as fh:
            for rec in csv.DictReader(row for row in fh if not row.startswith("#")):
                rows.append((float(rec["v"]), float(rec["hs"]),
                             (float(rec["tp1"]), float(rec["tp2"]), float(rec["tp3"])),
                             float(rec["probability"])))
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read load-case table {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"load-case table {path} is empty")
    return tuple(rows)


def config_from_dict(data: dict | None, base_dir: Path | None = None) -> SweepConfig:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    kw = {}
    for section, values in data.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown configuration section {section!r}")
        if values is None:
            continue
        if not isinstance(values, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        for key, value in values.items():
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            kw[_SECTIONS[section][key]] = value
    for name in ("d_values", "h_values", "wave_periods", "wind_periods", "umin_band_hz",
                 "reference_case"):
        if name in kw:
            kw[name] = parse_range(kw[name])
    if "spot_check" in kw:
        try:
            kw["spot_check"] = tuple((float(d), float(h)) for d, h in kw["spot_check"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("spot_check must be a list of [d, h_hp] pairs") from exc
    if "case_table" in kw:
        table = kw["case_table"]
        if table in (None, "default"):
            kw["case_table"] = TABLE4
        else:
            path = Path(table)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            kw["case_table"] = read_case_table(path)
    for name in ("seeds", "extreme_seeds", "seed", "max_iter", "jobs"):
        if name in kw:
            try:
                kw[name] = int(kw[name])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{name} must be an integer") from exc
    try:
        return SweepConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> SweepConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return config_from_dict(data, path.parent)


def override(cfg: SweepConfig, **changes) -> SweepConfig:
    """Copy with the non-``None`` entries of ``changes`` applied."""
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})


__all__ = ["ConfigError", "SweepConfig", "config_from_dict", "load_config", "override",
           "parse_range", "read_case_table", "MODES"]
