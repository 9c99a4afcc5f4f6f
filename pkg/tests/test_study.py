"""Sweep harness: rate fitting against closed-form lines, the cheap-grid
convergence and linear-response sweeps with frozen slopes, report
determinism, and the failure/floor plumbing."""

import json

import numpy as np
import pytest

import vll.study as study
from vll.errors import BlowupError, ConfigError
from vll.fields import PhysParams
from vll.grid import build_grid
from vll.solver import SimConfig
from vll.study import (RateReport, converge, fit_rate, linstab_study)

LX = 2.0 * np.pi
LY = 8.0
SWEEP = (0.4, 0.2, 0.1)


@pytest.fixture(scope="module")
def setup():
    g = build_grid(LX, LY, 32, 160, stretch=3.0)
    base = SimConfig(dt=8e-4, T=0.1, params=PhysParams.headline(0.5, 1.0),
                     save_every=25)
    return g, base


@pytest.fixture(scope="module")
def rep(setup):
    g, base = setup
    return converge(base, SWEEP, g, "vortex_pair")


@pytest.fixture(scope="module")
def tiny():
    g = build_grid(LX, LY, 16, 96, stretch=2.0)
    base = SimConfig(dt=1.6e-3, T=0.08, params=PhysParams.headline(0.5, 1.0),
                     save_every=10)
    return g, base


# ------------------------------------------------------------------ fitting

def test_fit_rate_exact_line():
    s, r = fit_rate([(e, 3.0 * e) for e in (0.2, 0.1, 0.05)])
    assert abs(s - 1.0) < 1e-12
    assert r < 1e-10


def test_fit_rate_exact_quadratic():
    s, r = fit_rate([(e, 3.0 * e * e) for e in (0.2, 0.1, 0.05, 0.025)])
    assert abs(s - 2.0) < 1e-12
    assert r < 1e-10


def test_fit_rate_flags_floor_contamination():
    s, r = fit_rate([(e, e + 0.01) for e in (0.2, 0.1, 0.05, 0.025)])
    assert 0.8 < s < 0.95
    assert r > 0.1


@pytest.mark.parametrize("pts", [
    [(0.2, 1.0), (0.1, 0.5)],
    [(0.2, 1.0), (0.1, 0.5), (0.1, 0.25)],
    [(0.2, 1.0), (0.1, 0.0), (0.05, 0.25)],
    [(0.2, 1.0), (0.1, -0.5), (0.05, 0.25)],
])
def test_fit_rate_rejects_degenerate_input(pts):
    with pytest.raises(ConfigError):
        fit_rate(pts)


# ------------------------------------------------------------------ reports

def test_report_requires_decreasing_eps():
    with pytest.raises(ConfigError):
        RateReport(kind="converge", eps_values=(0.1, 0.2, 0.4),
                   errors={}, slopes={}, config_hash="x")


def test_report_rejects_bad_error_values():
    with pytest.raises(ConfigError):
        RateReport(kind="converge", eps_values=(0.4, 0.2, 0.1),
                   errors={"L2_u": [1.0, -2.0, 0.5]}, slopes={},
                   config_hash="x")
    with pytest.raises(ConfigError):
        RateReport(kind="converge", eps_values=(0.4, 0.2, 0.1),
                   errors={"L2_u": [1.0, 0.5]}, slopes={}, config_hash="x")


def test_report_csv_round_trip():
    r = RateReport(kind="converge", eps_values=(0.4, 0.2, 0.1),
                   errors={"L2_u": [0.5, 0.25, None],
                           "Linf_u": [1.0 / 3.0, 0.1, 0.05]},
                   slopes={}, config_hash="x")
    lines = r.to_csv().strip().split("\n")
    assert lines[0] == "eps,L2_u,Linf_u"
    cells = lines[1].split(",")
    assert float(cells[0]) == 0.4 and float(cells[2]) == 1.0 / 3.0
    assert lines[3].split(",")[1] == ""    # failed eps stays blank


# ----------------------------------------------------------------- converge

def test_converge_rates_on_cheap_grid(rep):
    # frozen slopes: 1.9715 / 1.8052 / 1.9709 / 1.4698 / 1.9966 / 0.7568
    bands = {"L2_u": (1.85, 2.10), "Linf_u": (1.65, 1.95),
             "L2_theta": (1.85, 2.10), "Linf_theta": (1.30, 1.60),
             "residual_L2": (1.85, 2.10), "Em_sup": (0.60, 0.90)}
    for col, (lo, hi) in bands.items():
        assert lo < rep.slopes[col]["slope"] < hi, col
    assert rep.eps_values == SWEEP
    assert not rep.warnings
    assert not rep.failures
    assert rep.trivial_pass is False
    for vals in rep.errors.values():
        assert all(v > 0.0 for v in vals)
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_converge_hash_tracks_configuration(setup, rep):
    g, base = setup
    assert len(rep.config_hash) == 64
    other = converge(base, (0.5, 0.25, 0.125), g, "vortex_pair")
    assert other.config_hash != rep.config_hash


def test_converge_is_deterministic(setup, rep, monkeypatch):
    g, base = setup
    again = converge(base, SWEEP, g, "vortex_pair")
    assert again.to_json() == rep.to_json()
    assert again.to_csv() == rep.to_csv()
    monkeypatch.setenv("VLL_THREADS", "2")
    threaded = converge(base, SWEEP, g, "vortex_pair")
    assert threaded.to_json() == rep.to_json()


def test_assembled_reference_converges_faster(setup, rep):
    g, base = setup
    repa = converge(base, SWEEP, g, "vortex_pair", against="assembled")
    for col in ("L2_u", "Linf_u", "L2_theta", "Linf_theta"):
        assert repa.slopes[col]["slope"] > rep.slopes[col]["slope"], col


def test_converge_validation(setup):
    g, base = setup
    with pytest.raises(ConfigError):
        converge(base, (0.4, 0.2), g, "vortex_pair")
    with pytest.raises(ConfigError):
        converge(base, (0.4, 0.2, 0.2), g, "vortex_pair")
    with pytest.raises(ConfigError):
        converge(base, (1.2, 0.6, 0.3), g, "vortex_pair")
    with pytest.raises(ConfigError):
        converge(base, SWEEP, g, "vortex_pair", against="viscous")


def test_converge_refuses_unresolved_layer(tiny):
    g, base = tiny
    with pytest.raises(ConfigError, match="places only"):
        converge(base, (0.4, 0.2, 0.002), g, "vortex_pair")


def test_converge_floor_control(tiny):
    g, base = tiny
    rep = converge(base, SWEEP, g, "vortex_pair", floor_check=True)
    assert rep.floor_limited is False
    assert rep.floor_check["eps"] == 0.1
    assert rep.floor_check["rel_change"] < 0.05   # frozen 0.0033


def test_converge_partial_report_on_failures(tiny, monkeypatch):
    g, base = tiny
    real_run = study.run

    def flaky(g_, s0, cfg, which, **kw):
        if which == "viscous" and cfg.params.eps == 0.2:
            raise BlowupError("synthetic blow-up")
        return real_run(g_, s0, cfg, which, **kw)

    monkeypatch.setattr(study, "run", flaky)
    rep = converge(base, SWEEP, g, "vortex_pair")
    assert list(rep.failures) == [0.2]
    assert "synthetic blow-up" in rep.failures[0.2]
    assert rep.errors["L2_u"][1] is None
    assert rep.errors["L2_u"][0] is not None
    assert not rep.slopes           # two surviving points cannot be fitted
    json.loads(rep.to_json())       # partial report still serializes


# -------------------------------------------------------------- linstab

def test_linstab_rates_on_cheap_grid(setup):
    g, base = setup
    rl = linstab_study(base, (0.3, 0.2, 0.1), g, 2)
    # frozen: co_combo 1.9957, Em_sup 1.7391, residual_L2 1.9956
    assert 1.85 < rl.slopes["co_combo"]["slope"] < 2.10
    assert 1.60 < rl.slopes["Em_sup"]["slope"] < 1.90
    assert 1.85 < rl.slopes["residual_L2"]["slope"] < 2.10
    assert rl.trivial_pass is False
    assert set(rl.errors) == set(study.LINSTAB_COLUMNS)


def test_linstab_zero_data_is_a_trivial_pass(setup):
    g, base = setup
    rl = linstab_study(base, (0.3, 0.2, 0.1), g, 2, amplitude=0.0)
    assert rl.trivial_pass is True
    assert rl.slopes == {}
    assert all(v == 0.0 for vals in rl.errors.values() for v in vals)


def test_linstab_requires_second_order(setup):
    g, base = setup
    with pytest.raises(ConfigError):
        linstab_study(base, (0.3, 0.2, 0.1), g, 1)


def test_linstab_floor_control(tiny):
    g, base = tiny
    rl = linstab_study(base, SWEEP, g, 2, floor_check=True)
    assert rl.floor_limited is False
    assert rl.floor_check["rel_change"] < 0.05   # frozen 0.0129


# ------------------------------------------------------------------ output

def test_report_artifacts(tmp_path, rep):
    paths = rep.write(tmp_path / "a", plot="svg")
    names = sorted(p.split("/")[-1] for p in paths)
    assert names == ["rate_report.csv", "rate_report.json",
                     "rate_report.svg"]
    blob = json.loads(open(paths[0]).read() if paths[0].endswith(".json")
                      else open(paths[1]).read())
    assert blob["kind"] == "converge"
    assert set(blob["slopes"]) == set(study.COLUMNS)
    svg1 = open([p for p in paths if p.endswith(".svg")][0], "rb").read()
    rep.write(tmp_path / "b", plot="svg")
    svg2 = open(tmp_path / "b" / "rate_report.svg", "rb").read()
    assert svg1 == svg2


def test_report_rejects_unknown_plot_format(tmp_path, rep):
    with pytest.raises(ConfigError):
        rep.write(tmp_path / "c", plot="png")
