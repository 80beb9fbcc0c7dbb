import json
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

from semisub import sweep
from semisub.cli import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, main
from semisub.config import ConfigError, SweepConfig, config_from_dict, load_config, parse_range
from semisub.environment import TABLE4
from semisub.slow_core import steady_outputs

# one above-rated row that contains the reference case keeps the pipeline short
ROW = tuple(r for r in TABLE4 if r[0] == 13.9)


@pytest.fixture(scope="module")
def small_cfg(tmp_path_factory):
    return SweepConfig(d_values=(23.0, 24.0), h_values=(4.5,), case_table=ROW,
                       out_dir=str(tmp_path_factory.mktemp("small")))


@pytest.fixture(scope="module")
def small_results(small_cfg):
    return sweep.run_sweep(small_cfg)


# -- configuration ---------------------------------------------------------------------
@pytest.mark.parametrize("spec, expected", [
    ("15..24:1", tuple(float(x) for x in range(15, 25))),
    ("1,4.5,8", (1.0, 4.5, 8.0)),
    ({"start": 1, "stop": 2, "step": 0.5}, (1.0, 1.5, 2.0)),
    ([3, 4], (3.0, 4.0)),
    (7, (7.0,)),
])
def test_parse_range(spec, expected):
    assert parse_range(spec) == expected


@pytest.mark.parametrize("spec", ["a..b", "5..1", {"stop": 3}, "1..3:0"])
def test_parse_range_rejects(spec):
    with pytest.raises(ConfigError):
        parse_range(spec)


def test_default_config_grid():
    cfg = SweepConfig()
    assert len(cfg.designs()) == 30
    assert len(cfg.operational_cases()) == 21
    assert len(cfg.extreme_cases()) == 3 and cfg.seeds == 1


@pytest.mark.parametrize("data", [
    {"solver": {"rtoll": 1e-3}},
    {"bogus": {}},
    {"run": {"mode": "fast"}},
    {"load_cases": {"seeds": 0}},
    {"design_space": {"d": []}},
    {"run": "freq"},
])
def test_config_errors(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_config_file_roundtrip(tmp_path):
    (tmp_path / "cases.csv").write_text("v,hs,tp1,tp2,tp3,probability\n13.9,3.0,6,9.5,13,1.0\n")
    (tmp_path / "sweep.yaml").write_text(
        "design_space: {d: {start: 20, stop: 24, step: 2}, h_hp: [4.5]}\n"
        "load_cases: {table: cases.csv}\nrun: {mode: both, jobs: 2}\n")
    cfg = load_config(tmp_path / "sweep.yaml")
    assert cfg.d_values == (20.0, 22.0, 24.0) and cfg.h_values == (4.5,)
    assert cfg.case_table == ((13.9, 3.0, (6.0, 9.5, 13.0), 1.0),)
    assert cfg.mode == "both" and cfg.jobs == 2
    assert json.loads(json.dumps(cfg.to_record()))["d_values"] == [20.0, 22.0, 24.0]


@pytest.mark.parametrize("text", ["solver: {rtol: 1e-3, nope: 1}\n", "run: [unclosed\n"])
def test_cli_config_error_exit_code(tmp_path, text, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_cli_bad_design_selector(tmp_path):
    assert main(["run", "--designs", "x=1", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_cli_missing_config_file(tmp_path):
    assert main(["extreme", "--config", str(tmp_path / "none.yaml")]) == EXIT_CONFIG


# -- reporting -----------------------------------------------------------------------------
def test_empty_report_writes_headers(tmp_path, capsys):
    sweep.report([], tmp_path)
    lines = (tmp_path / "ranking.csv").read_text().splitlines()
    assert lines == ["# schema: semisub.ranking/1", ",".join(sweep.RANKING_COLUMNS)]
    for name in ("fig3_cost_draft.csv", "fig9_centerline.csv", "fig10_umin.csv"):
        assert len((tmp_path / name).read_text().splitlines()) == 2
    assert sweep.exit_status([]) == EXIT_PARTIAL
    assert main(["report", "--in", str(tmp_path)]) == EXIT_PARTIAL
    assert "no accepted designs" in capsys.readouterr().out


def test_infeasible_designs_are_not_failures():
    res = sweep.run_sweep(SweepConfig(d_values=(15.0,), h_values=(4.5, 8.0)))
    assert [r.status for r in res] == ["infeasible", "infeasible"]
    assert sweep.exit_status(res) == EXIT_PARTIAL        # nothing to rank
    assert sweep.exit_status(res + [sweep.DesignResult(24.0, 4.5)]) == EXIT_OK


def test_small_sweep_result(small_results):
    assert [r.key for r in small_results] == ["d23_h4.5", "d24_h4.5"]
    for r in small_results:
        assert r.ok, r.error
        assert len(r.cases) == 3
        assert {"del_M_yt", "std_omega", "std_beta_p", "std_theta", "std_P"} <= set(r.weighted)
        assert set(r.indicators["z_cor_wave"]) == {"5", "7.5", "10"}


def test_weighted_statistics_recomputable(small_results):
    for r in small_results:
        rec = json.loads(json.dumps(r.to_record()))
        again = sweep.aggregate_case_records(rec["cases"])
        assert again == pytest.approx(r.weighted, rel=1e-12)
        # by hand: (sum w DEL^m)^(1/m) with m = 4
        w = np.array([c["weight"] for c in rec["cases"]])
        d = np.array([c["del_M_yt"] for c in rec["cases"]])
        assert np.sum(w * d ** 4) ** 0.25 == pytest.approx(r.weighted["del_M_yt"], rel=1e-12)


def test_rerun_byte_identical(small_cfg, small_results, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    sweep.report(small_results, first)
    sweep.report(sweep.run_sweep(small_cfg), second)
    files = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
    assert files
    for rel in files:
        assert (first / rel).read_bytes() == (second / rel).read_bytes(), rel


def test_report_roundtrip(small_results, tmp_path):
    sweep.report(small_results, tmp_path)
    back = sweep.load_results(tmp_path)
    assert [r.to_record() for r in back] == json.loads(json.dumps(
        [r.to_record() for r in small_results]))
    summary = (tmp_path / "summary.txt").read_text()
    best = sweep.rank(small_results)[0]
    assert f"minimum weighted M_yt DEL: d={best.d:g} m, h_hp={best.h_hp:g} m" in summary


def test_record_schema_checked():
    with pytest.raises(ValueError):
        sweep.DesignResult.from_record({"schema": "other/9"})


def test_rank_deterministic():
    mk = lambda d, h, v: sweep.DesignResult(d, h, weighted={"del_M_yt": v})
    res = [mk(20, 4.5, 2.0), mk(24, 4.5, 1.0), mk(16, 1.0, 2.0),
           sweep.DesignResult(15, 4.5, status="infeasible")]
    assert [r.key for r in sweep.rank(res)] == ["d24_h4.5", "d16_h1", "d20_h4.5"]
    assert [r.key for r in sweep.rank(res[::-1])] == ["d24_h4.5", "d16_h1", "d20_h4.5"]


def test_fault_isolation(monkeypatch, small_cfg):
    real = sweep.build_model

    def flaky(d, h, cfg):
        if d == 23.0:
            raise RuntimeError("injected")
        return real(d, h, cfg)

    monkeypatch.setattr(sweep, "build_model", flaky)
    res = sweep.run_sweep(replace(small_cfg, d_values=(15.0, 23.0, 24.0)))
    status = {r.key: r.status for r in res}
    assert status == {"d15_h4.5": "infeasible", "d23_h4.5": "failed", "d24_h4.5": "ok"}
    assert "injected" in [r for r in res if r.d == 23.0][0].error
    assert sweep.exit_status(res) == EXIT_PARTIAL
    assert "failed: d23_h4.5" in sweep.summary_text(res)


def test_cli_run_and_report(tmp_path, capsys):
    cfg = tmp_path / "sweep.yaml"
    cfg.write_text("load_cases:\n  table: rows.csv\n")
    (tmp_path / "rows.csv").write_text(
        "v,hs,tp1,tp2,tp3,probability\n" + ",".join(map(str, (ROW[0][0], ROW[0][1], *ROW[0][2],
                                                               ROW[0][3]))) + "\n")
    out = tmp_path / "out"
    code = main(["run", "--config", str(cfg), "--designs", "d=24", "hhp=4.5", "--out", str(out)])
    assert code == EXIT_OK
    assert "minimum weighted M_yt DEL: d=24 m, h_hp=4.5 m" in capsys.readouterr().out
    ranking = (out / "ranking.csv").read_bytes()
    assert main(["report", "--in", str(out)]) == EXIT_OK
    assert (out / "ranking.csv").read_bytes() == ranking


# -- extremes --------------------------------------------------------------------------------
def _parked_cases(hs, seeds=(1,), duration=300.0):
    return [SimpleNamespace(v=44.0, hs=hs, tp=15.0, gamma=None, weight=0.0, seed=s,
                            duration=duration, key=f"DLC6.1_hs{hs:g}") for s in seeds]


@pytest.fixture(scope="module")
def parked_model(model_24):
    return model_24


def test_extreme_zero_sea_gives_static_offsets(parked_model):
    cfg = SweepConfig(i_ref=0.0, transient=300.0)
    out = sweep.run_extreme_design(parked_model, cfg, _parked_cases(0.0))
    from semisub.control import fixed_point_solve
    conv = fixed_point_solve(parked_model, _parked_cases(0.0)[0], cfg.fixed_point)
    static = steady_outputs(conv.model, conv.op)
    assert conv.op.region == "parked"
    assert out["mean_max_M_yt"] == pytest.approx(abs(static["M_yt"]), rel=1e-3)
    assert out["mean_max_a_tt"] < 1e-3


def test_extreme_maxima_grow_with_sea_state(parked_model):
    cfg = SweepConfig(transient=300.0)
    lo = sweep.run_extreme_design(parked_model, cfg, _parked_cases(5.0, duration=900.0))
    hi = sweep.run_extreme_design(parked_model, cfg, _parked_cases(10.9, duration=900.0))
    assert hi["mean_max_M_yt"] >= lo["mean_max_M_yt"]
    assert hi["mean_max_a_tt"] >= lo["mean_max_a_tt"]


def test_extreme_mean_over_seeds(parked_model):
    cfg = SweepConfig(transient=200.0)
    out = sweep.run_extreme_design(parked_model, cfg, _parked_cases(10.9, (1, 2), 400.0))
    assert len(out["seeds"]) == 2
    assert out["mean_max_a_tt"] == pytest.approx(np.mean([s["max_a_tt"] for s in out["seeds"]]))
    assert out["seeds"][0]["max_a_tt"] != out["seeds"][1]["max_a_tt"]
