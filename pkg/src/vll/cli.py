"""Command-line front end: config parsing, command dispatch, artifact layout.

Config files are a flat TOML-compatible subset: `[section]` headers or
dotted keys, one `key = value` per line, values being booleans, integers,
floats, quoted or bare strings, or single-line lists.  Unknown keys are
fatal; every omitted key has a documented default, so a parsed config is
always complete and serializes back to an equal config (lossless
round-trip).  Flags override file values.

Every command writes into one output directory containing a snapshot of the
resolved config plus its artifacts; reruns with the same config produce
byte-identical CSV/JSON (binary state files and SVG carry no timestamps
either).  Exit codes: 0 success, 2 configuration error, 3 numerical
failure, 4 rate assertion failure in `converge --assert`.
"""

import argparse
import json
import math
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from .blayer import build_approx, matching_defects, profile_to_snapshot, residual
from .errors import BlowupError, CFLError, ConfigError, SolveError
from .fields import Field, PhysParams, State, make_initial_data
from .grid import build_grid
from .norms import norm_report
from .snapshots import read_snapshot, write_snapshot
from .solver import SimConfig, Trajectory, run
from .study import DEFAULT_EPS, LINSTAB_EPS, converge, linstab_study

COMMANDS = ("solve-inviscid", "solve-viscous", "solve-linearized",
            "build-blayer", "residual", "converge", "linstab", "diagnose")

_BC_VARIANTS = {"navier": "navier", "impermeable": "impermeable_only"}
_ASSERT_BAND = (0.75, 1.25)
_ASSERT_COLUMNS = ("L2_u", "Linf_u", "L2_theta", "Linf_theta")

# key -> (type tag, default); None defaults resolve per command
_SCHEMA = {
    "grid.lx": ("float", 2.0 * math.pi),
    "grid.ly": ("float", 8.0),
    "grid.nx": ("int", 128),
    "grid.ny": ("int", 256),
    "grid.stretch": ("float", 3.0),
    "phys.eps": ("float", 0.1),
    "phys.alpha": ("float", 1.0),
    "phys.bc": ("str", "navier"),
    "phys.nu1": ("float", 0.0),
    "phys.kappa1": ("float", 0.0),
    "phys.kappa2": ("float", 0.0),
    "sim.dt": ("float", 5e-4),
    "sim.T": ("float", 0.25),
    "sim.save_every": ("int", 10),
    "sim.scheme": ("str", "imex_rk3"),
    "run.recipe": ("str", "vortex_pair"),
    "run.amplitude": ("float", 0.5),
    "run.order": ("int", 2),
    "run.eps": ("floatlist", None),
    "run.against": ("str", "inviscid"),
    "run.time": ("float", -1.0),
    "run.src": ("str", ""),
    "run.assert": ("bool", False),
    "io.out": ("str", None),
    "io.plot": ("str", "none"),
}

_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_BARE_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")
_INT_RE = re.compile(r"^[+-]?[0-9]+$")


# ------------------------------------------------------------ file grammar

def _strip_comment(line: str) -> str:
    out = []
    quoted = False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        if ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out).strip()


def _parse_scalar(tok: str, where: str):
    tok = tok.strip()
    if tok == "":
        raise ConfigError(f"{where}: empty value")
    if tok == "true":
        return True
    if tok == "false":
        return False
    if tok.startswith('"'):
        if not (tok.endswith('"') and len(tok) >= 2) or '"' in tok[1:-1]:
            raise ConfigError(f"{where}: malformed string {tok!r}")
        return tok[1:-1]
    if _INT_RE.match(tok):
        return int(tok)
    try:
        return float(tok)
    except ValueError:
        pass
    if _BARE_RE.match(tok):
        return tok
    raise ConfigError(f"{where}: cannot parse value {tok!r}")


def _parse_value(tok: str, where: str):
    tok = tok.strip()
    if tok.startswith("["):
        if not tok.endswith("]"):
            raise ConfigError(f"{where}: unterminated list")
        body = tok[1:-1].strip()
        if not body:
            return []
        return [_parse_scalar(t, where) for t in body.split(",")]
    return _parse_scalar(tok, where)


def _parse_config_text(text: str, name: str = "<config>") -> dict:
    """Raw dotted-key -> value mapping; duplicate keys are fatal."""
    raw = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        where = f"{name}:{lineno}"
        line = _strip_comment(line)
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{where}: malformed section header")
            section = line[1:-1].strip()
            parts = section.split(".")
            if not section or not all(_KEY_RE.match(p) for p in parts):
                raise ConfigError(f"{where}: bad section name {section!r}")
            continue
        if "=" not in line:
            raise ConfigError(f"{where}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip()
        parts = key.split(".")
        if not all(_KEY_RE.match(p) for p in parts):
            raise ConfigError(f"{where}: bad key {key!r}")
        full = f"{section}.{key}" if section else key
        if full in raw:
            raise ConfigError(f"{where}: duplicate key {full!r}")
        raw[full] = _parse_value(val, f"{where} ({full})")
    return raw


def _coerce(key: str, value, where: str = "config"):
    tag = _SCHEMA[key][0]
    if tag == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: {key} needs a number, "
                              f"got {value!r}")
        return float(value)
    if tag == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: {key} needs an integer, "
                              f"got {value!r}")
        return int(value)
    if tag == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: {key} needs true/false, "
                              f"got {value!r}")
        return value
    if tag == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where}: {key} needs a string, "
                              f"got {value!r}")
        return value
    if tag == "floatlist":
        if not isinstance(value, list) or not value or any(
                isinstance(v, bool) or not isinstance(v, (int, float))
                for v in value):
            raise ConfigError(f"{where}: {key} needs a list of numbers, "
                              f"got {value!r}")
        return tuple(float(v) for v in value)
    raise AssertionError(tag)


# -------------------------------------------------------------- run config

@dataclass(frozen=True)
class RunConfig:
    """One command plus the complete, validated key set."""
    command: str
    values: tuple   # sorted (key, value) pairs; lists stored as tuples

    def __getitem__(self, key: str):
        return dict(self.values)[key]

    def to_dict(self) -> dict:
        return dict(self.values)


def _serialize_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, tuple):
        return "[" + ", ".join(_serialize_value(x) for x in v) + "]"
    return f'"{v}"'


def serialize_config(cfg: RunConfig) -> str:
    lines = [f'command = "{cfg.command}"']
    section = None
    for key in sorted(dict(cfg.values)):
        sec, _, leaf = key.partition(".")
        if sec != section:
            lines.append("")
            lines.append(f"[{sec}]")
            section = sec
        lines.append(f"{leaf} = {_serialize_value(cfg[key])}")
    return "\n".join(lines) + "\n"


def _default_eps(command: str):
    return LINSTAB_EPS if command == "linstab" else DEFAULT_EPS


def parse_config(command: str, path=None, overrides=None) -> RunConfig:
    """Resolve file values, flag overrides, and defaults into a RunConfig."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; "
                          f"choose from {', '.join(COMMANDS)}")
    raw = {}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file {path!r} does not exist")
        with open(path, "r", encoding="utf-8") as fh:
            raw = _parse_config_text(fh.read(), name=str(path))
    cmd = raw.pop("command", command)
    if cmd != command:
        raise ConfigError(f"config file names command {cmd!r} but "
                          f"{command!r} was requested")
    unknown = sorted(set(raw) - set(_SCHEMA))
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(unknown))
    values = {k: _coerce(k, v, where=str(path)) for k, v in raw.items()}
    for k, v in (overrides or {}).items():
        if k not in _SCHEMA:
            raise ConfigError(f"unknown override key {k!r}")
        values[k] = _coerce(k, v, where="flags")
    for k, (tag, default) in _SCHEMA.items():
        if k in values:
            continue
        if k == "run.eps":
            values[k] = tuple(_default_eps(command))
        elif k == "io.out":
            values[k] = os.path.join("runs", command)
        else:
            values[k] = default
    _validate(command, values)
    return RunConfig(command=command, values=tuple(sorted(values.items())))


def _validate(command: str, v: dict) -> None:
    def bad(key, why):
        raise ConfigError(f"{key} = {v[key]!r}: {why}")

    if v["grid.lx"] <= 0 or v["grid.ly"] <= 0:
        bad("grid.lx", "domain lengths must be positive")
    if v["grid.stretch"] < 0:
        bad("grid.stretch", "stretch must be nonnegative")
    if not (0.0 < v["phys.eps"] < 1.0):
        bad("phys.eps", "viscosity parameter must lie in (0, 1)")
    for e in v["run.eps"]:
        if not (0.0 < e < 1.0):
            raise ConfigError(f"run.eps contains {e!r}: every sweep value "
                              "must lie in (0, 1)")
    if v["phys.bc"] not in _BC_VARIANTS:
        bad("phys.bc", "use navier or impermeable")
    for key in ("phys.nu1", "phys.kappa1", "phys.kappa2"):
        if v[key] < 0:
            bad(key, "dissipation coefficients must be nonnegative")
    if v["sim.dt"] <= 0 or not math.isfinite(v["sim.dt"]):
        bad("sim.dt", "time step must be positive")
    if v["sim.T"] <= 0 or not math.isfinite(v["sim.T"]):
        bad("sim.T", "horizon must be positive")
    if v["sim.save_every"] < 1:
        bad("sim.save_every", "snapshot cadence must be >= 1")
    if v["run.recipe"] not in ("vortex_pair", "shear_jet"):
        bad("run.recipe", "use vortex_pair or shear_jet")
    if v["io.plot"] not in ("svg", "none"):
        bad("io.plot", "use svg or none")
    if v["run.against"] not in ("inviscid", "assembled"):
        bad("run.against", "use inviscid or assembled")
    if command == "build-blayer" and v["run.order"] not in (1, 2):
        bad("run.order", "the layer expansion supports orders 1 and 2")
    if command in ("converge", "linstab", "residual", "solve-linearized") \
            and v["run.order"] not in (1, 2):
        bad("run.order", "expansion order must be 1 or 2")
    if command in ("solve-linearized", "build-blayer", "residual",
                   "diagnose") and not v["run.src"]:
        raise ConfigError(f"{command} needs run.src, the directory of a "
                          "stored solve run")


# ----------------------------------------------------------- artifact layer

def _grid_of(v: dict):
    return build_grid(v["grid.lx"], v["grid.ly"], v["grid.nx"],
                      v["grid.ny"], stretch=v["grid.stretch"])


def _viscous_params_of(v: dict) -> PhysParams:
    eps = v["phys.eps"]
    return PhysParams(eps=eps, alpha=v["phys.alpha"], nu1=v["phys.nu1"],
                      nu2=eps * eps, kappa1=v["phys.kappa1"],
                      kappa2=v["phys.kappa2"],
                      bc_variant=_BC_VARIANTS[v["phys.bc"]])


def _sim_config(v: dict, params: PhysParams) -> SimConfig:
    return SimConfig(dt=v["sim.dt"], T=v["sim.T"], params=params,
                     scheme=v["sim.scheme"], save_every=v["sim.save_every"])


def _state_meta(v: dict, t: float, index: int) -> dict:
    return {"kind": "state", "time": t, "index": index,
            "lx": v["grid.lx"], "ly": v["grid.ly"], "nx": v["grid.nx"],
            "ny": v["grid.ny"], "stretch": v["grid.stretch"],
            "alpha": v["phys.alpha"]}


def _write_trajectory(outdir, v: dict, traj: Trajectory) -> None:
    for k, (t, s) in enumerate(zip(traj.times, traj.states)):
        path = os.path.join(outdir, f"state_{k:06d}.vls")
        write_snapshot(path, {"u1": s.u1.values, "u2": s.u2.values,
                              "theta": s.theta.values, "p": s.p.values},
                       _state_meta(v, float(t), k))
    traj.write_diagnostics(os.path.join(outdir, "diagnostics.csv"))
    summary = {"snapshots": len(traj.states),
               "t_final": float(traj.times[-1]),
               "failure": traj.failure}
    _write_json(os.path.join(outdir, "summary.json"), summary)


def _load_trajectory(src):
    if not os.path.isdir(src):
        raise ConfigError(f"run.src {src!r} is not a directory")
    paths = sorted(p for p in os.listdir(src)
                   if p.startswith("state_") and p.endswith(".vls"))
    if len(paths) < 3:
        raise ConfigError(f"run.src {src!r} holds {len(paths)} state files; "
                          "need at least 3")
    states = []
    times = []
    meta0 = None
    g = None
    for p in paths:
        meta, fields = read_snapshot(os.path.join(src, p))
        if meta.get("kind") != "state":
            raise ConfigError(f"{p} is not a state snapshot")
        if g is None:
            meta0 = meta
            g = build_grid(meta["lx"], meta["ly"], meta["nx"], meta["ny"],
                           stretch=meta["stretch"])
        states.append(State(Field.on(g, fields["u1"]),
                            Field.on(g, fields["u2"]),
                            Field.on(g, fields["theta"]),
                            Field.on(g, fields["p"]), float(meta["time"])))
        times.append(float(meta["time"]))
    return g, Trajectory(times=times, states=states), float(meta0["alpha"])


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


# ----------------------------------------------------------------- commands

def _cmd_solve(cfg: RunConfig, outdir: str) -> int:
    v = cfg.to_dict()
    g = _grid_of(v)
    alpha = v["phys.alpha"]
    s0 = make_initial_data(g, v["run.recipe"], v["run.amplitude"], alpha)
    if cfg.command == "solve-inviscid":
        params = PhysParams.inviscid(alpha=alpha)
        traj = run(g, s0, _sim_config(v, params), "inviscid")
    elif cfg.command == "solve-viscous":
        traj = run(g, s0, _sim_config(v, _viscous_params_of(v)), "viscous")
    else:
        gs, ref, src_alpha = _load_trajectory(v["run.src"])
        _require_same_grid(g, gs)
        K = v["run.order"]
        eps = v["phys.eps"]
        appr = build_approx(g, ref, eps, K, src_alpha)
        sc = eps ** (K + 1)
        e0 = State(Field.on(g, sc * s0.u1.values),
                   Field.on(g, sc * s0.u2.values),
                   Field.on(g, sc * s0.theta.values), Field.zeros(g), 0.0)
        traj = run(g, e0, _sim_config(v, _viscous_params_of(v)),
                   "linearized", approx=appr)
    _write_trajectory(outdir, v, traj)
    return 0


def _require_same_grid(g, gs) -> None:
    if g.shape != gs.shape or g.Lx != gs.Lx or g.Ly != gs.Ly \
            or g.stretch != gs.stretch:
        raise ConfigError("run.src was produced on a different grid than "
                          "the configured one")


def _cmd_build_blayer(cfg: RunConfig, outdir: str) -> int:
    v = cfg.to_dict()
    g, ref, alpha = _load_trajectory(v["run.src"])
    K = v["run.order"]
    appr = build_approx(g, ref, v["phys.eps"], K, alpha)
    decay = {}
    for io in range(K + 1):
        worst = 0.0
        for k, prof in enumerate(appr.inner[io]):
            profile_to_snapshot(
                os.path.join(outdir, f"profile_o{io}_{k:06d}.vls"), prof)
            worst = max(worst, prof.decay_max())
        decay[str(io)] = worst
    t_last = float(appr.times[-1])
    report = {"order": K, "eps": v["phys.eps"], "snapshots": len(appr.times),
              "decay_max": decay,
              "theta_layer_max": appr.theta_layer_max(),
              "matching_at_final": matching_defects(appr, t_last)}
    _write_json(os.path.join(outdir, "layer_report.json"), report)
    return 0


def _cmd_residual(cfg: RunConfig, outdir: str) -> int:
    v = cfg.to_dict()
    g, ref, alpha = _load_trajectory(v["run.src"])
    eps, K = v["phys.eps"], v["run.order"]
    appr = build_approx(g, ref, eps, K, alpha)
    t = float(appr.times[-1]) if v["run.time"] < 0 else v["run.time"]
    params = PhysParams(eps=eps, alpha=alpha, nu2=eps * eps)
    (r1, r2), rth = residual(appr, g, t, params)
    write_snapshot(os.path.join(outdir, "residual.vls"),
                   {"r_u1": r1.values, "r_u2": r2.values,
                    "r_theta": rth.values},
                   {"kind": "residual", "time": t, "eps": eps, "order": K})
    report = {"time": t, "eps": eps, "order": K,
              "sup": {"r_u1": float(np.abs(r1.values).max()),
                      "r_u2": float(np.abs(r2.values).max()),
                      "r_theta": float(np.abs(rth.values).max())},
              "L2": {"r_u1": float(np.sqrt(g.integral(r1.values ** 2))),
                     "r_u2": float(np.sqrt(g.integral(r2.values ** 2))),
                     "r_theta": float(np.sqrt(g.integral(rth.values ** 2)))},
              "matching": matching_defects(appr, t)}
    _write_json(os.path.join(outdir, "residual_report.json"), report)
    return 0


def _base_cfg(v: dict) -> SimConfig:
    return _sim_config(v, _viscous_params_of(v))


def _cmd_converge(cfg: RunConfig, outdir: str) -> int:
    v = cfg.to_dict()
    g = _grid_of(v)
    rep = converge(_base_cfg(v), v["run.eps"], g, v["run.recipe"],
                   amplitude=v["run.amplitude"], against=v["run.against"],
                   K=v["run.order"])
    rep.write(outdir, "rate_report", plot=v["io.plot"])
    if v["run.assert"]:
        lo, hi = _ASSERT_BAND
        failed = {}
        for col in _ASSERT_COLUMNS:
            s = rep.slopes.get(col, {}).get("slope")
            if s is None or not (lo <= s <= hi):
                failed[col] = s
        if failed:
            _write_json(os.path.join(outdir, "assert_report.json"),
                        {"band": list(_ASSERT_BAND), "failed": failed})
            return 4
    return 0


def _cmd_linstab(cfg: RunConfig, outdir: str) -> int:
    v = cfg.to_dict()
    g = _grid_of(v)
    rep = linstab_study(_base_cfg(v), v["run.eps"], g, v["run.order"],
                        recipe=v["run.recipe"],
                        amplitude=v["run.amplitude"])
    rep.write(outdir, "rate_report", plot=v["io.plot"])
    return 0


def _flatten_report(rep) -> dict:
    row = {"time": rep.time, "Em": rep.Em}
    for m, per in rep.hco.items():
        for name, val in per.items():
            row[f"hco{m}_{name}"] = val
    for k, per in rep.linf_k.items():
        for name, val in per.items():
            row[f"linf{k}_{name}"] = val
    for m, val in rep.eta_hco.items():
        row[f"eta_hco{m}"] = val
    return row


def _cmd_diagnose(cfg: RunConfig, outdir: str) -> int:
    v = cfg.to_dict()
    g, traj, alpha = _load_trajectory(v["run.src"])
    rows = [_flatten_report(norm_report(g, s, alpha)) for s in traj.states]
    cols = ["time"] + sorted(k for k in rows[0] if k != "time")
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join("%.17g" % row[c] for c in cols))
    with open(os.path.join(outdir, "norms.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_json(os.path.join(outdir, "norms.json"), rows)
    return 0


_COMMAND_TABLE = {
    "solve-inviscid": _cmd_solve,
    "solve-viscous": _cmd_solve,
    "solve-linearized": _cmd_solve,
    "build-blayer": _cmd_build_blayer,
    "residual": _cmd_residual,
    "converge": _cmd_converge,
    "linstab": _cmd_linstab,
    "diagnose": _cmd_diagnose,
}


# ----------------------------------------------------------------- dispatch

def _error_record(outdir, command: str, exc: Exception, code: int) -> None:
    payload = {"command": command, "error": type(exc).__name__,
               "message": str(exc), "exit_code": code}
    try:
        os.makedirs(outdir, exist_ok=True)
        _write_json(os.path.join(outdir, "error.json"), payload)
    except OSError:
        pass
    print(f"error: {exc}", file=sys.stderr)


def dispatch(cfg: RunConfig) -> int:
    """Run one command; artifacts land in io.out, errors become exit codes."""
    outdir = cfg["io.out"]
    try:
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "config.toml"), "w",
                  encoding="utf-8") as fh:
            fh.write(serialize_config(cfg))
        return _COMMAND_TABLE[cfg.command](cfg, outdir)
    except ConfigError as exc:
        _error_record(outdir, cfg.command, exc, 2)
        return 2
    except (BlowupError, CFLError, SolveError) as exc:
        _error_record(outdir, cfg.command, exc, 3)
        return 3


# --------------------------------------------------------------------- main

def _build_argparser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="vll",
        description="Half-plane Boussinesq laboratory: viscous and inviscid "
                    "solves, wall-layer expansions, and rate sweeps.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, metavar="PATH")
        p.add_argument("--out", default=None, metavar="DIR")
        p.add_argument("--eps", default=None,
                       help="comma-separated sweep values, e.g. 0.2,0.1,0.05")
        p.add_argument("--order", type=int, default=None, metavar="K")
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--bc", choices=("navier", "impermeable"),
                       default=None)
        p.add_argument("--T", type=float, default=None, dest="horizon")
        p.add_argument("--nx", type=int, default=None)
        p.add_argument("--ny", type=int, default=None)
        p.add_argument("--plot", choices=("svg", "none"), default=None)
        p.add_argument("--src", default=None,
                       help="input run directory for post-processing")
        p.add_argument("--assert", action="store_true", dest="assert_rates",
                       help="exit 4 unless the sweep slopes sit in the "
                            "first-order band")
        p.add_argument("--strict", action="store_true",
                       help="unknown config keys are fatal (always on; "
                            "kept for interface stability)")
    return ap


def _overrides_from(ns: argparse.Namespace) -> dict:
    out = {}
    if ns.out is not None:
        out["io.out"] = ns.out
    if ns.eps is not None:
        try:
            out["run.eps"] = [float(t) for t in ns.eps.split(",") if t]
        except ValueError:
            raise ConfigError(f"--eps {ns.eps!r}: expected comma-separated "
                              "numbers")
    if ns.order is not None:
        out["run.order"] = ns.order
    if ns.alpha is not None:
        out["phys.alpha"] = ns.alpha
    if ns.bc is not None:
        out["phys.bc"] = ns.bc
    if ns.horizon is not None:
        out["sim.T"] = ns.horizon
    if ns.nx is not None:
        out["grid.nx"] = ns.nx
    if ns.ny is not None:
        out["grid.ny"] = ns.ny
    if ns.plot is not None:
        out["io.plot"] = ns.plot
    if ns.src is not None:
        out["run.src"] = ns.src
    if ns.assert_rates:
        out["run.assert"] = True
    return out


def main(argv=None) -> int:
    ns = _build_argparser().parse_args(argv)
    try:
        cfg = parse_config(ns.command, path=ns.config,
                           overrides=_overrides_from(ns))
    except ConfigError as exc:
        outdir = ns.out or os.path.join("runs", ns.command)
        _error_record(outdir, ns.command, exc, 2)
        return 2
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
