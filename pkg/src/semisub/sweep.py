"""Brute-force design sweep: per-design pipeline, DLC 6.1 extremes and reports.

Each design runs the chain hull -> hydrodynamics -> per-case drag/gain
fixed point -> response statistics -> weighted aggregate, plus the
counter-phase (centre of rotation) and minimum-control-action indicators at
the reference case.  Designs are independent; a failing design is recorded
and the sweep continues.

Output files carry a ``schema`` header line (CSV) or key (JSON) so their
layout can evolve without silently breaking consumers.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import (LIFETIME, N_REF, WOEHLER_EXPONENT, Scaling, case_statistics,
                       centerline_response, rainflow_del, response_spectra, surge_pitch_phase,
                       u_min)
from .config import SweepConfig
from .control import control_settings, fixed_point_solve, response_grid, wave_spectrum, wind_spectrum
from .hull_design import DesignInfeasible, ShapeParams, solve_draft_for_C55
from .hydro import drift_coefficient, slow_drift_spectrum
from .slow_core import NonlinearModel, case_realizations, simulate, steady_outputs

log = logging.getLogger(__name__)

SCHEMA = "semisub.sweep/1"
STD_SIGNALS = ("omega", "beta_p", "theta", "P", "x_t", "M_yt", "a_tt", "x_p")
DEL_SIGNALS = ("M_yt",)
UMIN_FREQ_HZ = np.linspace(0.01, 0.25, 97)


@dataclass
class DesignResult:
    """Everything the sweep records for one (d, h_hp) grid point."""

    d: float
    h_hp: float
    status: str = "ok"                  # ok | infeasible | failed
    error: str = ""
    design: dict = field(default_factory=dict)
    cases: list = field(default_factory=list)
    weighted: dict = field(default_factory=dict)
    indicators: dict = field(default_factory=dict)
    time_domain: dict = field(default_factory=dict)
    extreme: dict = field(default_factory=dict)

    @property
    def key(self) -> str:
        return f"d{self.d:g}_h{self.h_hp:g}"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_record(self) -> dict:
        return {"schema": SCHEMA, "key": self.key, "d": self.d, "h_hp": self.h_hp,
                "status": self.status, "error": self.error, "design": self.design,
                "cases": self.cases, "weighted": self.weighted, "indicators": self.indicators,
                "time_domain": self.time_domain, "extreme": self.extreme}

    @classmethod
    def from_record(cls, rec: dict) -> "DesignResult":
        if rec.get("schema") != SCHEMA:
            raise ValueError(f"unsupported design record schema {rec.get('schema')!r}")
        return cls(rec["d"], rec["h_hp"], rec["status"], rec.get("error", ""), rec["design"],
                   rec["cases"], rec["weighted"], rec["indicators"], rec.get("time_domain", {}),
                   rec.get("extreme", {}))


# -- aggregation over persisted per-case records --------------------------------
def aggregate_case_records(records: list[dict], m: float = WOEHLER_EXPONENT) -> dict:
    """Weighted DELs ``(sum w DEL^m)^(1/m)`` and STDs ``sqrt(sum w std^2)`` from case records."""
    if not records:
        return {}
    w = np.array([r["weight"] for r in records], float)
    out = {}
    for key in records[0]:
        if key.startswith("del_"):
            vals = np.array([r[key] for r in records], float)
            out[key] = float(np.sum(w * vals ** m) ** (1 / m))
        elif key.startswith("std_"):
            vals = np.array([r[key] for r in records], float)
            out[key] = float(np.sqrt(np.sum(w * vals ** 2)))
    return out


# -- one design ------------------------------------------------------------------
def build_model(d: float, h: float, cfg: SweepConfig) -> NonlinearModel:
    design = solve_draft_for_C55(ShapeParams(d, h), cfg.c55_target)
    return NonlinearModel(design, parked_ct=cfg.parked_ct)


def _case_spectra(model, converged, case, omega, tc, cfg):
    s_wave = wave_spectrum(case, omega)
    region = converged.op.region
    s_wind = (wind_spectrum(case.v, omega, model.turbine.rotor_diameter, cfg.i_ref)
              if region != "parked" else np.zeros_like(omega))
    s_drift = slow_drift_spectrum(model.hydro.omega, wave_spectrum(case, model.hydro.omega), tc,
                                  mu=omega)
    lines = ([(3 * converged.op.omega, cfg.harmonic_fraction * case.v)]
             if region != "parked" and cfg.harmonic_fraction > 0 else [])
    return response_spectra(converged.closed, omega, s_wind, s_wave, s_drift, lines)


def _indicators(model, converged, cfg) -> dict:
    """Centre of rotation, surge/pitch phase and U*min at the reference case."""
    cl = converged.closed
    lin = cl.linear
    out = {"reference_case": converged.case.key, "z_cm": float(lin.z_cm),
           "z_tower_base": float(lin.tower_base_z), "z_hub": float(lin.z_hub),
           "z_mid_tower": float(0.5 * (lin.tower_base_z + lin.tower_top_z))}
    z = np.linspace(lin.z_keel, lin.z_hub, 61)
    curves = []
    for channel, periods in (("wave", cfg.wave_periods), ("wind", cfg.wind_periods)):
        omega = 2 * np.pi / np.asarray(periods, float)
        cr = centerline_response(cl, omega, channel)
        out[f"z_cor_{channel}"] = {f"{T:g}": float(zc) for T, zc in zip(periods, cr.z_cor)}
        amp = np.abs(centerline_response(cl, omega, channel, z=z).phi)
        for T, row in zip(periods, amp):
            curves.append({"channel": channel, "period": float(T),
                           "z": z.tolist(), "amplitude": row.tolist()})
    out["centerline"] = curves
    tp = converged.case.tp
    band = 2 * np.pi / np.array([tp * 1.2, tp * 0.8])
    w_band = np.linspace(band[0], band[1], 21)
    phase = surge_pitch_phase(cl, w_band)
    out["surge_pitch_phase_deg"] = {"min": float(phase.min()), "max": float(phase.max())}
    scaling = Scaling.for_turbine(model.turbine)
    omega = 2 * np.pi * UMIN_FREQ_HZ
    lo, hi = cfg.umin_band_hz
    for channel in ("wave", "wind"):
        res = u_min(lin, scaling, omega, channel)
        out[f"umin_{channel}"] = res.band_average(lo, hi)
        out[f"umin_{channel}_curve"] = {"f_hz": UMIN_FREQ_HZ.tolist(), "u_min": res.u_min.tolist(),
                                        "flagged": int(res.flagged.sum())}
    return out


def evaluate_design(d: float, h: float, cfg: SweepConfig) -> DesignResult:
    """Frequency-domain pipeline for one grid point; never raises."""
    res = DesignResult(float(d), float(h))
    try:
        model = build_model(d, h, cfg)
    except DesignInfeasible as exc:
        res.status, res.error = "infeasible", str(exc)
        return res
    except Exception as exc:  # pragma: no cover - defensive fault isolation
        res.status, res.error = "failed", f"{type(exc).__name__}: {exc}"
        return res
    try:
        res.design = model.design.to_record()
        omega = response_grid()
        tc = drift_coefficient(model.design.shape, model.hydro.omega)
        fp = cfg.fixed_point
        reference = None
        for case in cfg.operational_cases():
            conv = fixed_point_solve(model, case, fp, omega)
            spectra = _case_spectra(model, conv, case, omega, tc, cfg)
            means = steady_outputs(conv.model, conv.op)
            stats = case_statistics(case.key, case.weight, spectra, means, DEL_SIGNALS,
                                    case.duration)
            rec = stats.to_record()
            rec = {k: v for k, v in rec.items()
                   if not k.startswith(("std_", "mean_", "max_")) or k.split("_", 1)[1] in STD_SIGNALS}
            rec.update(v=case.v, hs=case.hs, tp=case.tp, region=conv.op.region,
                       iterations=conv.iterations, converged=conv.converged,
                       cd_keel=conv.cd_keel, kc=conv.kc,
                       kp=conv.gains.kp if conv.gains else None,
                       ki=conv.gains.ki if conv.gains else None,
                       max_re_eig=conv.closed.max_real_eig())
            res.cases.append(_jsonable(rec))
            if (case.v, case.tp) == tuple(cfg.reference_case):
                reference = conv
        res.weighted = aggregate_case_records(res.cases)
        if reference is None:
            raise RuntimeError(f"reference case {cfg.reference_case} not in the load-case table")
        res.indicators = _jsonable(_indicators(model, reference, cfg))
    except Exception as exc:
        log.error("design %s failed: %s", res.key, exc)
        res.status, res.error = "failed", f"{type(exc).__name__}: {exc}"
        log.debug(traceback.format_exc())
    return res


def time_domain_statistics(model: NonlinearModel, cfg: SweepConfig, cases=None) -> dict:
    """Nonlinear simulations of the operational cases; rainflow DELs and STDs."""
    fp = cfg.fixed_point
    omega = response_grid()
    records = []
    for case in (cases if cases is not None else cfg.operational_cases()):
        conv = fixed_point_solve(model, case, fp, omega)
        ctrl = control_settings(conv.model, conv.op, conv.gains)
        per_seed = []
        for k in range(cfg.seeds):
            wave, wind = case_realizations(case, model.turbine, cfg.dt, cfg.transient, cfg.i_ref,
                                           cfg.harmonic_fraction, conv.op.omega or None,
                                           seed=case.seed + k)
            sim = simulate(conv.model, ctrl, conv.op, wave, wind, cfg.dt, cfg.transient)
            rec = {f"std_{s}": float(np.std(sim.outputs[s])) for s in STD_SIGNALS}
            rec.update({f"max_{s}": float(np.max(np.abs(sim.outputs[s]))) for s in STD_SIGNALS})
            for s in DEL_SIGNALS:
                rec[f"del_{s}"] = rainflow_del(sim.outputs[s], WOEHLER_EXPONENT, N_REF,
                                               LIFETIME / case.duration)
            rec["status"] = sim.status
            per_seed.append(rec)
        merged = {k: float(np.mean([r[k] for r in per_seed])) for k in per_seed[0]}
        merged.update(case=case.key, weight=case.weight, v=case.v, hs=case.hs, tp=case.tp,
                      unstable=int(sum(r["status"] != 0 for r in per_seed)))
        records.append(merged)
    return {"cases": records, "weighted": aggregate_case_records(records)}


def run_extreme_design(model: NonlinearModel, cfg: SweepConfig, cases=None) -> dict:
    """Mean over seeds of the maxima of |M_yt| and |a_tt| in the parked 50-year case.

    ``cases`` (one entry per seed, same sea state) defaults to the configured
    DLC 6.1 cases.
    """
    fp = cfg.fixed_point
    cases = cfg.extreme_cases() if cases is None else list(cases)
    conv = fixed_point_solve(model, cases[0], fp)
    ctrl = control_settings(conv.model, conv.op, None)
    maxima = []
    for case in cases:
        wave, wind = case_realizations(case, model.turbine, cfg.dt, cfg.transient, cfg.i_ref,
                                       0.0, None, seed=case.seed)
        sim = simulate(conv.model, ctrl, conv.op, wave, wind, cfg.dt, cfg.transient)
        maxima.append({"seed": case.seed, "status": sim.status,
                       "max_M_yt": float(np.max(np.abs(sim.outputs["M_yt"]))),
                       "max_a_tt": float(np.max(np.abs(sim.outputs["a_tt"])))})
    return {"case": cases[0].key, "cd_keel": conv.cd_keel, "seeds": maxima,
            "mean_max_M_yt": float(np.mean([m["max_M_yt"] for m in maxima])),
            "mean_max_a_tt": float(np.mean([m["max_a_tt"] for m in maxima]))}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


# -- sweep drivers -----------------------------------------------------------------
def _design_task(args):
    d, h, cfg = args
    res = evaluate_design(d, h, cfg)
    if res.ok and cfg.mode in ("time", "both"):
        if cfg.mode == "time" or (d, h) in set(map(tuple, cfg.spot_check)):
            try:
                res.time_domain = _jsonable(time_domain_statistics(build_model(d, h, cfg), cfg))
            except Exception as exc:
                res.status, res.error = "failed", f"time domain: {type(exc).__name__}: {exc}"
    return res


def _extreme_task(args):
    d, h, cfg = args
    res = DesignResult(float(d), float(h))
    try:
        model = build_model(d, h, cfg)
        res.design = model.design.to_record()
        res.extreme = _jsonable(run_extreme_design(model, cfg))
    except DesignInfeasible as exc:
        res.status, res.error = "infeasible", str(exc)
    except Exception as exc:
        res.status, res.error = "failed", f"{type(exc).__name__}: {exc}"
    return res


def _map(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def run_sweep(cfg: SweepConfig) -> list[DesignResult]:
    """Evaluate every grid point; results ordered by (h_hp, d)."""
    tasks = [(d, h, cfg) for d, h in cfg.designs()]
    results = _map(_design_task, tasks, cfg.jobs)
    return sorted(results, key=lambda r: (r.h_hp, r.d))


def run_extreme(cfg: SweepConfig) -> list[DesignResult]:
    """DLC 6.1 mean-of-maxima for the designs at the configured heave-plate height."""
    tasks = [(d, cfg.extreme_h, cfg) for d in cfg.d_values]
    return sorted(_map(_extreme_task, tasks, cfg.jobs), key=lambda r: r.d)


def rank(results: list[DesignResult], metric: str = "del_M_yt") -> list[DesignResult]:
    """Accepted designs ordered by a weighted metric (ties broken by key)."""
    ok = [r for r in results if r.ok and metric in r.weighted]
    return sorted(ok, key=lambda r: (r.weighted[metric], r.h_hp, r.d))


# -- reporting ---------------------------------------------------------------------
def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(schema: str, header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


RANKING_COLUMNS = ["rank", "d", "h_hp", "status", "t", "platform_mass_t", "cost_eur",
                   "del_M_yt", "std_omega", "std_beta_p", "std_theta", "std_P",
                   "umin_wave", "umin_wind", "z_cor_wave_max", "max_iterations", "max_re_eig"]


def _ranking_rows(results):
    order = {r.key: i + 1 for i, r in enumerate(rank(results))}
    rows = []
    for r in sorted(results, key=lambda r: (order.get(r.key, 10 ** 6), r.h_hp, r.d)):
        w, ind, des = r.weighted, r.indicators, r.design
        zc = ind.get("z_cor_wave", {})
        rows.append([order.get(r.key), r.d, r.h_hp, r.status, des.get("t"),
                     des.get("platform_mass_t"), des.get("cost_eur"), w.get("del_M_yt"),
                     w.get("std_omega"), w.get("std_beta_p"), w.get("std_theta"), w.get("std_P"),
                     ind.get("umin_wave"), ind.get("umin_wind"),
                     max(zc.values()) if zc else None,
                     max((c["iterations"] for c in r.cases), default=None),
                     max((c["max_re_eig"] for c in r.cases), default=None)])
    return rows


def report(results: list[DesignResult], out_dir, extreme: list[DesignResult] | None = None) -> Path:
    """Write ranking, per-design JSON, plot-data CSVs and a text summary."""
    out = Path(out_dir)
    for r in results:
        if r.ok and r.cases:
            r.weighted = aggregate_case_records(r.cases)
        _atomic_write(out / "designs" / f"{r.key}.json",
                      json.dumps(r.to_record(), indent=1, sort_keys=True) + "\n")
    _atomic_write(out / "ranking.csv", _csv_text("semisub.ranking/1", RANKING_COLUMNS,
                                                 _ranking_rows(results)))
    _atomic_write(out / "fig3_cost_draft.csv", _csv_text(
        "semisub.fig3/1", ["d", "h_hp", "status", "t", "platform_mass_t", "cost_eur"],
        [[r.d, r.h_hp, r.status, r.design.get("t"), r.design.get("platform_mass_t"),
          r.design.get("cost_eur")] for r in results]))
    stat_cols = sorted({k for r in results for k in r.weighted})
    _atomic_write(out / "fig6_statistics.csv", _csv_text(
        "semisub.fig6/1", ["d", "h_hp"] + stat_cols,
        [[r.d, r.h_hp] + [r.weighted.get(k) for k in stat_cols] for r in results if r.ok]))
    rows9 = []
    for r in results:
        for c in r.indicators.get("centerline", []):
            rows9.extend([r.d, r.h_hp, c["channel"], c["period"], z, a]
                         for z, a in zip(c["z"], c["amplitude"]))
    _atomic_write(out / "fig9_centerline.csv", _csv_text(
        "semisub.fig9/1", ["d", "h_hp", "channel", "period", "z", "amplitude"], rows9))
    rows10 = []
    for r in results:
        for ch in ("wave", "wind"):
            cur = r.indicators.get(f"umin_{ch}_curve")
            if cur:
                rows10.extend([r.d, r.h_hp, ch, f, u] for f, u in zip(cur["f_hz"], cur["u_min"]))
    _atomic_write(out / "fig10_umin.csv", _csv_text(
        "semisub.fig10/1", ["d", "h_hp", "channel", "f_hz", "u_min"], rows10))
    td_rows = [[r.d, r.h_hp] + [r.time_domain["weighted"].get(k) for k in
                                ("del_M_yt", "std_omega", "std_beta_p", "std_x_t")]
               for r in results if r.time_domain]
    _atomic_write(out / "time_domain.csv", _csv_text(
        "semisub.timedomain/1", ["d", "h_hp", "del_M_yt", "std_omega", "std_beta_p", "std_x_t"],
        td_rows))
    if extreme is not None:
        write_extreme(extreme, out)
    _atomic_write(out / "summary.txt", summary_text(results))
    return out


def write_extreme(extreme: list[DesignResult], out_dir) -> None:
    out = Path(out_dir)
    rows = [[r.d, r.h_hp, r.status, r.design.get("t"), r.extreme.get("mean_max_M_yt"),
             r.extreme.get("mean_max_a_tt"),
             r.extreme.get("mean_max_a_tt") / 9.81 if r.extreme else None] for r in extreme]
    _atomic_write(out / "extreme.csv", _csv_text(
        "semisub.extreme/1", ["d", "h_hp", "status", "t", "mean_max_M_yt", "mean_max_a_tt",
                              "mean_max_a_tt_g"], rows))
    for r in extreme:
        _atomic_write(out / "extreme" / f"{r.key}.json",
                      json.dumps(r.to_record(), indent=1, sort_keys=True) + "\n")


def summary_text(results: list[DesignResult]) -> str:
    ranked = rank(results)
    n_ok = sum(r.ok for r in results)
    lines = ["# schema: semisub.summary/1",
             f"designs: {len(results)} evaluated, {n_ok} accepted, "
             f"{sum(r.status == 'infeasible' for r in results)} infeasible, "
             f"{sum(r.status == 'failed' for r in results)} failed"]
    if ranked:
        best = ranked[0]
        worst = ranked[-1]
        spread = worst.weighted["del_M_yt"] / best.weighted["del_M_yt"] - 1
        lines.append(f"minimum weighted M_yt DEL: d={best.d:g} m, h_hp={best.h_hp:g} m "
                     f"(DEL {best.weighted['del_M_yt']:.4e} Nm, draft {best.design['t']:.2f} m)")
        lines.append(f"maximum weighted M_yt DEL: d={worst.d:g} m, h_hp={worst.h_hp:g} m "
                     f"(spread {100 * spread:.1f}%)")
        for h in sorted({r.h_hp for r in ranked}):
            row = [r for r in ranked if r.h_hp == h]
            lines.append(f"minimum at h_hp={h:g} m: d={row[0].d:g} m "
                         f"(DEL {row[0].weighted['del_M_yt']:.4e} Nm)")
    else:
        lines.append("no accepted designs")
    for r in results:
        if r.status == "failed":
            lines.append(f"failed: {r.key}: {r.error}")
    return "\n".join(lines) + "\n"


def load_results(in_dir) -> list[DesignResult]:
    """Per-design JSON records written by ``report``."""
    files = sorted(Path(in_dir, "designs").glob("*.json"))
    results = [DesignResult.from_record(json.loads(f.read_text())) for f in files]
    return sorted(results, key=lambda r: (r.h_hp, r.d))


def load_extreme(in_dir) -> list[DesignResult] | None:
    files = sorted(Path(in_dir, "extreme").glob("*.json"))
    if not files:
        return None
    return sorted((DesignResult.from_record(json.loads(f.read_text())) for f in files),
                  key=lambda r: r.d)


def exit_status(results: list[DesignResult]) -> int:
    """0 when every design was evaluated (infeasible designs are a valid outcome), else 1."""
    if not results:
        return 1
    return 1 if any(r.status == "failed" for r in results) or not any(r.ok for r in results) else 0


__all__ = ["DesignResult", "SCHEMA", "aggregate_case_records", "build_model", "evaluate_design",
           "exit_status", "load_results", "rank", "report", "run_extreme", "run_extreme_design",
           "run_sweep", "summary_text", "time_domain_statistics", "load_extreme"]
