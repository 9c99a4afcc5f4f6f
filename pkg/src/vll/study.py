"""Sweep harness: vanishing-viscosity error tables, layer-expansion residual
rates, and linear-response rates, with reproducible report artifacts.

converge() measures the viscous runs of one data recipe against the inviscid
reference (or against the assembled approximation) over a decreasing eps
sweep and fits log-log slopes.  linstab_study() drives the linearized error
system with the expansion remainder and eps^(K+1)-scaled data and fits the
decay of its conormal response.  Reports serialize to canonical JSON/CSV so
byte-identical reruns certify determinism; the optional SVG is written with
pinned metadata for the same reason.

The default linstab sweep stays in the moderate-eps window: for small eps
the response develops an eps-width layer and the normal-derivative part of
the metric decays one order slower (the estimate it mirrors carries exactly
that exponent), while the window below eps = 0.4 measures the preasymptotic
rate with the discretization floor at the percent level.
"""

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dfield, replace

import numpy as np
from scipy import stats

from .blayer import build_approx
from .errors import BlowupError, CFLError, ConfigError
from .fields import Field, PhysParams, State, make_initial_data
from .grid import LAYER_NODES, Grid, _layer_counts, build_grid
from .norms import Em, _hco_vec
from .solver import SimConfig, run

COLUMNS = ("L2_u", "Linf_u", "L2_theta", "Linf_theta",
           "residual_L2", "Em_sup")
LINSTAB_COLUMNS = COLUMNS + ("co_combo",)

DEFAULT_EPS = (0.2, 0.1, 0.05, 0.025)
LINSTAB_EPS = (0.3, 0.2, 0.1)
EM_ORDER = 2


def _workers() -> int:
    try:
        return max(int(os.environ.get("VLL_THREADS", "1")), 1)
    except ValueError:
        return 1


def _map_ordered(fn, items):
    n = _workers()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


# ------------------------------------------------------------------ report

@dataclass
class RateReport:
    """Per-eps error columns with fitted log-log slopes.

    errors maps column name -> list aligned with eps_values (None marks an
    eps whose run failed); slopes maps column -> {slope, fit_residual} and
    is only populated for columns with at least 3 positive entries.
    """
    kind: str
    eps_values: tuple
    errors: dict
    slopes: dict
    config_hash: str
    failures: dict = dfield(default_factory=dict)
    warnings: list = dfield(default_factory=list)
    floor_check: dict | None = None
    floor_limited: bool | None = None
    trivial_pass: bool = False

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_values)
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ConfigError("report eps values must be strictly decreasing")
        self.eps_values = eps
        for col, vals in self.errors.items():
            if len(vals) != len(eps):
                raise ConfigError(f"column {col!r} has {len(vals)} entries "
                                  f"for {len(eps)} eps values")
            for v in vals:
                if v is None:
                    continue
                if not (np.isfinite(v) and v >= 0.0):
                    raise ConfigError(f"column {col!r} carries an invalid "
                                      f"error value {v!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind,
                "eps_values": list(self.eps_values),
                "errors": {k: list(v) for k, v in self.errors.items()},
                "slopes": self.slopes,
                "config_hash": self.config_hash,
                "failures": {repr(k): v for k, v in self.failures.items()},
                "warnings": list(self.warnings),
                "floor_check": self.floor_check,
                "floor_limited": self.floor_limited,
                "trivial_pass": self.trivial_pass}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        cols = sorted(self.errors)
        lines = [",".join(["eps"] + cols)]
        for i, e in enumerate(self.eps_values):
            row = [f"{e:.17g}"]
            for c in cols:
                v = self.errors[c][i]
                row.append("" if v is None else f"{v:.17g}")
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def write(self, outdir, stem: str = "rate_report",
              plot: str = "none") -> list:
        os.makedirs(outdir, exist_ok=True)
        paths = []
        for suffix, text in ((".json", self.to_json()), (".csv", self.to_csv())):
            path = os.path.join(outdir, stem + suffix)
            with open(path, "w") as fh:
                fh.write(text)
            paths.append(path)
        if plot == "svg":
            path = os.path.join(outdir, stem + ".svg")
            _plot_report(self, path)
            paths.append(path)
        elif plot != "none":
            raise ConfigError(f"unknown plot format {plot!r}")
        return paths


def _plot_report(rep: RateReport, path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    from matplotlib import pyplot as plt

    eps = np.asarray(rep.eps_values)
    with matplotlib.rc_context({"svg.hashsalt": "vll"}):
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        for col in sorted(rep.errors):
            vals = rep.errors[col]
            ok = [(e, v) for e, v in zip(eps, vals)
                  if v is not None and v > 0.0]
            if not ok:
                continue
            xe, ye = zip(*ok)
            line, = ax.loglog(xe, ye, "o-", label=col)
            if col in rep.slopes:
                s = rep.slopes[col]["slope"]
                anchor = ye[0]
                ax.loglog(xe, [anchor * (x / xe[0]) ** s for x in xe],
                          "--", color=line.get_color(), alpha=0.5)
        ax.set_xlabel("eps")
        ax.set_ylabel("error")
        ax.legend(fontsize=7)
        ax.set_title(f"{rep.kind} sweep")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


# ------------------------------------------------------------------ fitting

def fit_rate(points) -> tuple:
    """Least-squares slope of log(err) against log(eps).

    Returns (slope, fit_residual) where fit_residual is the 95% confidence
    half-width of the slope; values above ~0.1 mean the points do not sit
    on one power law (floor contamination, preasymptotics).
    """
    pts = [(float(e), float(r)) for e, r in points]
    if len(pts) < 3:
        raise ConfigError(f"rate fit needs at least 3 points, got {len(pts)}")
    eps = np.array([p[0] for p in pts])
    err = np.array([p[1] for p in pts])
    if np.unique(eps).size != eps.size:
        raise ConfigError("rate fit needs distinct eps values")
    if np.any(err <= 0.0):
        raise ConfigError("rate fit needs positive errors (a zero or "
                          "negative value suggests measuring below the "
                          "discretization floor)")
    le, lr = np.log(eps), np.log(err)
    A = np.vstack([le, np.ones(le.size)]).T
    (slope, intercept) = np.linalg.lstsq(A, lr, rcond=None)[0]
    n = le.size
    ssr = float(np.sum((lr - (intercept + slope * le)) ** 2))
    sxx = float(np.sum((le - le.mean()) ** 2))
    halfwidth = (float(stats.t.ppf(0.975, n - 2))
                 * np.sqrt(ssr / (n - 2) / sxx))
    return float(slope), float(halfwidth)


def _fit_columns(eps_values, errors) -> dict:
    slopes = {}
    for col, vals in errors.items():
        pts = [(e, v) for e, v in zip(eps_values, vals)
               if v is not None and v > 0.0]
        if len(pts) < 3:
            continue
        s, r = fit_rate(pts)
        slopes[col] = {"slope": s, "fit_residual": r}
    return slopes


def _monotone_warnings(eps_values, errors) -> list:
    out = []
    for col in sorted(errors):
        vals = [v for v in errors[col] if v is not None]
        if any(a < b for a, b in zip(vals, vals[1:])):
            out.append(f"column {col} is not monotone across the sweep")
    return out


# ----------------------------------------------------------------- plumbing

def _validate_eps(eps_list) -> tuple:
    eps = tuple(float(e) for e in eps_list)
    if len(eps) < 3:
        raise ConfigError(f"sweep needs at least 3 eps values, got {len(eps)}")
    if len(set(eps)) != len(eps):
        raise ConfigError("sweep eps values must be distinct")
    for e in eps:
        if not (0.0 < e < 1.0):
            raise ConfigError(f"sweep eps values must lie in (0, 1), got {e}")
    return tuple(sorted(eps, reverse=True))


def _check_resolution(g: Grid, eps_min: float) -> None:
    _, covering = _layer_counts(g.y_nodes, eps_min)
    if covering < LAYER_NODES:
        raise ConfigError(
            f"grid places only {covering} nodes over [0, {eps_min:g}]; "
            f"the sweep needs {LAYER_NODES} (refine Ny or raise stretch)")


def _viscous_params(base: PhysParams, eps: float) -> PhysParams:
    return replace(base, eps=eps, nu2=eps * eps)


def _config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _hash_payload(base_cfg: SimConfig, eps_values, g: Grid, **extra) -> dict:
    p = base_cfg.params
    payload = {"dt": base_cfg.dt, "T": base_cfg.T,
               "save_every": base_cfg.save_every, "scheme": base_cfg.scheme,
               "alpha": p.alpha, "nu1": p.nu1, "kappa1": p.kappa1,
               "kappa2": p.kappa2, "bc_variant": p.bc_variant,
               "grid": [g.Lx, g.Ly, g.shape[1], g.shape[0], g.stretch],
               "eps": list(eps_values)}
    payload.update(extra)
    return payload


def _sup_diff_metrics(g: Grid, traj, ref_states, alpha: float) -> dict:
    out = {c: 0.0 for c in ("L2_u", "Linf_u", "L2_theta", "Linf_theta",
                            "Em_sup")}
    for s, r in zip(traj.states, ref_states):
        du1 = s.u1.values - r.u1.values
        du2 = s.u2.values - r.u2.values
        dth = s.theta.values - r.theta.values
        out["L2_u"] = max(out["L2_u"],
                          float(np.sqrt(g.integral(du1 ** 2 + du2 ** 2))))
        out["Linf_u"] = max(out["Linf_u"],
                            float(max(np.abs(du1).max(), np.abs(du2).max())))
        out["L2_theta"] = max(out["L2_theta"],
                              float(np.sqrt(g.integral(dth ** 2))))
        out["Linf_theta"] = max(out["Linf_theta"], float(np.abs(dth).max()))
        diff = State(Field.on(g, du1), Field.on(g, du2), Field.on(g, dth),
                     Field.on(g, s.p.values - r.p.values), s.time)
        out["Em_sup"] = max(out["Em_sup"],
                            float(np.sqrt(Em(g, diff, alpha, EM_ORDER))))
    return out


def _sup_defect_norm(g: Grid, appr) -> float:
    worst = 0.0
    for k in range(len(appr.times)):
        d1, d2, dth = appr._defect(k)
        worst = max(worst, float(np.sqrt(g.integral(d1 ** 2)
                                         + g.integral(d2 ** 2)
                                         + g.integral(dth ** 2))))
    return worst


# ----------------------------------------------------------------- converge

def converge(base_cfg: SimConfig, eps_list, g: Grid, recipe: str, *,
             amplitude: float = 0.5, against: str = "inviscid", K: int = 2,
             floor_check: bool = False) -> RateReport:
    """Viscous-versus-reference error sweep with fitted rates.

    The inviscid reference runs once; each eps runs the viscous system from
    the same initial data and the errors are pointwise same-grid differences,
    sup over stored times.  against="assembled" swaps the reference states
    for the order-K composite approximation at the matching times.  The K=2
    composite defect is recorded per eps as residual_L2 regardless.
    """
    if against not in ("inviscid", "assembled"):
        raise ConfigError(f"unknown reference {against!r}; use 'inviscid' "
                          "or 'assembled'")
    eps_values = _validate_eps(eps_list)
    _check_resolution(g, eps_values[-1])
    alpha = base_cfg.params.alpha
    s0 = make_initial_data(g, recipe, amplitude, alpha)
    ref_cfg = replace(base_cfg, params=PhysParams.inviscid(alpha=alpha))
    ref = run(g, s0, ref_cfg, "inviscid")

    def job(eps):
        cfg = replace(base_cfg, params=_viscous_params(base_cfg.params, eps))
        try:
            visc = run(g, s0, cfg, "viscous")
        except (BlowupError, CFLError) as exc:
            return None, f"{type(exc).__name__}: {exc}"
        appr = build_approx(g, ref, eps, K, alpha)
        if against == "assembled":
            ref_states = [appr.state_at(float(t)) for t in ref.times]
        else:
            ref_states = ref.states
        row = _sup_diff_metrics(g, visc, ref_states, alpha)
        row["residual_L2"] = _sup_defect_norm(g, appr)
        return row, None

    results = _map_ordered(job, list(eps_values))
    errors = {c: [] for c in COLUMNS}
    failures = {}
    for eps, (row, fail) in zip(eps_values, results):
        for c in COLUMNS:
            errors[c].append(None if row is None else row[c])
        if fail is not None:
            failures[eps] = fail

    floor = None
    limited = None
    if floor_check and errors["L2_u"][-1] is not None:
        floor, limited = _resolution_control(
            base_cfg, g, recipe, amplitude, alpha, eps_values[-1],
            errors["L2_u"][-1], against, K)

    payload = _hash_payload(base_cfg, eps_values, g, kind="converge",
                            recipe=recipe, amplitude=amplitude,
                            against=against, K=K)
    return RateReport(kind="converge", eps_values=eps_values, errors=errors,
                      slopes=_fit_columns(eps_values, errors),
                      config_hash=_config_hash(payload), failures=failures,
                      warnings=_monotone_warnings(eps_values, errors),
                      floor_check=floor, floor_limited=limited)


def _refined_setup(base_cfg: SimConfig, g: Grid):
    """Doubled resolution with halved dt: stored times stay identical."""
    g2 = build_grid(g.Lx, g.Ly, 2 * g.shape[1], 2 * g.shape[0],
                    stretch=g.stretch)
    cfg2 = replace(base_cfg, dt=base_cfg.dt / 2.0,
                   save_every=2 * base_cfg.save_every)
    return g2, cfg2


def _resolution_control(base_cfg, g, recipe, amplitude, alpha, eps, coarse,
                        against, K):
    """Repeat the smallest-eps measurement at doubled resolution; when the
    measured error moves by more than 25% the sweep point sat on the
    discretization floor rather than on the physical difference."""
    g2, cfg2 = _refined_setup(base_cfg, g)
    s0 = make_initial_data(g2, recipe, amplitude, alpha)
    ref = run(g2, s0, replace(cfg2, params=PhysParams.inviscid(alpha=alpha)),
              "inviscid")
    cfg = replace(cfg2, params=_viscous_params(cfg2.params, eps))
    try:
        visc = run(g2, s0, cfg, "viscous")
    except (BlowupError, CFLError) as exc:
        return {"eps": eps, "coarse": coarse, "fine": None,
                "note": f"{type(exc).__name__}: {exc}"}, None
    if against == "assembled":
        appr = build_approx(g2, ref, eps, K, alpha)
        ref_states = [appr.state_at(float(t)) for t in ref.times]
    else:
        ref_states = ref.states
    fine = _sup_diff_metrics(g2, visc, ref_states, alpha)["L2_u"]
    rel = abs(fine - coarse) / max(coarse, 1e-300)
    return ({"eps": eps, "coarse": coarse, "fine": fine,
             "rel_change": rel}, bool(rel > 0.25))


# ------------------------------------------------------------ linear study

def _scaled_state(g: Grid, s0: State, scale: float) -> State:
    return State(Field.on(g, scale * s0.u1.values),
                 Field.on(g, scale * s0.u2.values),
                 Field.on(g, scale * s0.theta.values),
                 Field.zeros(g), 0.0)


def _linstab_metrics(g: Grid, traj, alpha: float) -> dict:
    zero = State(Field.zeros(g), Field.zeros(g), Field.zeros(g),
                 Field.zeros(g), 0.0)
    out = _sup_diff_metrics(g, traj, [zero] * len(traj.states), alpha)
    combo = 0.0
    for s in traj.states:
        u = (s.u1.values, s.u2.values, s.theta.values)
        du = tuple(g.ddy_arr(v) for v in u)
        combo = max(combo, _hco_vec(g, u, EM_ORDER)
                    + _hco_vec(g, du, EM_ORDER - 1))
    out["co_combo"] = combo
    return out


def linstab_study(base_cfg: SimConfig, eps_list, g: Grid, K: int, *,
                  recipe: str = "vortex_pair", amplitude: float = 0.5,
                  floor_check: bool = False) -> RateReport:
    """Decay sweep of the linearized error system.

    Per eps the order-K composite approximation supplies the remainder
    forcing and the coefficient fields; the run starts from eps^(K+1)-scaled
    recipe data.  co_combo records the conormal response metric
    sup_t (H^2_co of (u,theta) + H^1_co of dy(u,theta)); a run that stays
    identically zero (zero data, zero remainder) marks the report as a
    trivial pass instead of fitting slopes.
    """
    if K < 2:
        raise ConfigError(f"the linear-response study needs expansion "
                          f"order K >= 2, got {K}")
    eps_values = _validate_eps(eps_list)
    _check_resolution(g, eps_values[-1])
    alpha = base_cfg.params.alpha
    s0 = make_initial_data(g, recipe, amplitude, alpha)
    ref_cfg = replace(base_cfg, params=PhysParams.inviscid(alpha=alpha))
    ref = run(g, s0, ref_cfg, "inviscid")

    def job(eps):
        appr = build_approx(g, ref, eps, K, alpha)
        cfg = replace(base_cfg, params=_viscous_params(base_cfg.params, eps))
        e0 = _scaled_state(g, s0, eps ** (K + 1))
        try:
            lin = run(g, e0, cfg, "linearized", approx=appr)
        except (BlowupError, CFLError) as exc:
            return None, f"{type(exc).__name__}: {exc}"
        row = _linstab_metrics(g, lin, alpha)
        row["residual_L2"] = _sup_defect_norm(g, appr)
        return row, None

    results = _map_ordered(job, list(eps_values))
    errors = {c: [] for c in LINSTAB_COLUMNS}
    failures = {}
    for eps, (row, fail) in zip(eps_values, results):
        for c in LINSTAB_COLUMNS:
            errors[c].append(None if row is None else row[c])
        if fail is not None:
            failures[eps] = fail

    trivial = (not failures and all(
        v == 0.0 for vals in errors.values() for v in vals))

    floor = None
    limited = None
    if floor_check and not trivial and errors["co_combo"][-1] is not None:
        floor, limited = _linstab_control(base_cfg, g, recipe, amplitude,
                                          alpha, eps_values[-1], K,
                                          errors["co_combo"][-1])

    payload = _hash_payload(base_cfg, eps_values, g, kind="linstab",
                            recipe=recipe, amplitude=amplitude, K=K)
    return RateReport(kind="linstab", eps_values=eps_values, errors=errors,
                      slopes={} if trivial else _fit_columns(eps_values,
                                                             errors),
                      config_hash=_config_hash(payload), failures=failures,
                      warnings=_monotone_warnings(eps_values, errors),
                      floor_check=floor, floor_limited=limited,
                      trivial_pass=trivial)


def _linstab_control(base_cfg, g, recipe, amplitude, alpha, eps, K, coarse):
    """Doubled-resolution repeat of the smallest-eps response; above 5%
    movement the response norm is discretization-dominated."""
    g2, cfg2 = _refined_setup(base_cfg, g)
    s0 = make_initial_data(g2, recipe, amplitude, alpha)
    ref = run(g2, s0, replace(cfg2, params=PhysParams.inviscid(alpha=alpha)),
              "inviscid")
    appr = build_approx(g2, ref, eps, K, alpha)
    cfg = replace(cfg2, params=_viscous_params(cfg2.params, eps))
    try:
        lin = run(g2, _scaled_state(g2, s0, eps ** (K + 1)), cfg,
                  "linearized", approx=appr)
    except (BlowupError, CFLError) as exc:
        return {"eps": eps, "coarse": coarse, "fine": None,
                "note": f"{type(exc).__name__}: {exc}"}, None
    fine = _linstab_metrics(g2, lin, alpha)["co_combo"]
    rel = abs(fine - coarse) / max(coarse, 1e-300)
    return ({"eps": eps, "coarse": coarse, "fine": fine,
             "rel_change": rel}, bool(rel > 0.05))
