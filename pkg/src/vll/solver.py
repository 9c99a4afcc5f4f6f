"""Time integration: explicit SSP advection with implicit vertical diffusion.

The stepper pairs a four-stage third-order SSP explicit tableau with its
L-stable diagonally implicit companion (the additive scheme of Pareschi and
Russo).  Advection is applied in skew form so transport is exactly
energy-neutral against the grid quadrature; vertical diffusion is a lumped
P1 stiffness form whose quadratic form telescopes to the dissipation
functional plus the slip-wall term.  Stage velocities are projected onto the
discrete divergence-free space, so pressure never enters the march
explicitly; snapshots carry a diagnostic pressure from the two-part Neumann
splitting.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield
from pathlib import Path

import numpy as np

from . import kernels
from .elliptic import NeumannProblem, solve_neumann, split_pressure
from .errors import BlowupError, CFLError, ConfigError
from .fields import (Field, PhysParams, State, check_state, divergence,
                     project_div_free, slip_defect)
from .grid import Grid, _unwrap

CFL_LIMIT = 0.5

# Pareschi-Russo SSP3(4,3,3) additive tableau.  The explicit part reduces to
# the classical three-stage SSP scheme (its second stage duplicates the
# first); the implicit part is stiffly damped with diagonal _GAM.
_GAM = 0.24169426078821
_BET = 0.06042356519705
_ETA = 0.12915286960590
_A_EX = np.array([
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.25, 0.25, 0.0]])
_A_IM = np.array([
    [_GAM, 0.0, 0.0, 0.0],
    [-_GAM, _GAM, 0.0, 0.0],
    [0.0, 1.0 - _GAM, _GAM, 0.0],
    [_BET, _ETA, 0.5 - _BET - _ETA - _GAM, _GAM]])
_B = np.array([0.0, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0])
_C_EX = _A_EX.sum(axis=1)  # stage abscissae for explicit terms


DIAG_COLUMNS = ("time", "KE", "PE_theta", "dissipation", "boundary_flux",
                "max_theta", "div_max", "eta_trace_max")


@dataclass
class SimConfig:
    """Step size, horizon, physics, and snapshot cadence for one run."""

    dt: float
    T: float
    params: PhysParams
    scheme: str = "imex_rk3"
    save_every: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be a positive finite scalar, got {self.dt}")
        if not (np.isfinite(self.T) and self.T >= 0):
            raise ConfigError(f"T must be a nonnegative finite scalar, got {self.T}")
        if self.scheme != "imex_rk3":
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if int(self.save_every) != self.save_every or self.save_every < 1:
            raise ConfigError(f"save_every must be a positive integer, got {self.save_every}")
        self.save_every = int(self.save_every)

    def nsteps(self) -> int:
        n = int(round(self.T / self.dt))
        if abs(n * self.dt - self.T) > 1e-8 * max(self.T, self.dt):
            raise ConfigError(
                f"T = {self.T} is not an integer multiple of dt = {self.dt}")
        return n


@dataclass
class Trajectory:
    """Snapshots plus per-step scalar diagnostics of one run."""

    times: list = dfield(default_factory=list)
    states: list = dfield(default_factory=list)
    diag: dict = dfield(default_factory=lambda: {c: [] for c in DIAG_COLUMNS})
    failure: str | None = None

    def diagnostics_csv(self) -> str:
        lines = [",".join(DIAG_COLUMNS)]
        for row in zip(*(self.diag[c] for c in DIAG_COLUMNS)):
            lines.append(",".join("%.17g" % v for v in row))
        return "\n".join(lines) + "\n"

    def write_diagnostics(self, path) -> None:
        Path(path).write_text(self.diagnostics_csv(), encoding="utf-8")


# ------------------------------------------------------------- spatial terms

def advect(g: Grid, a1, a2, f):
    """Skew-form transport of f by (a1, a2).

    Half conservative plus half advective; with the SBP vertical derivative
    the quadrature pairing <f, advect(a, f)> telescopes to pure boundary
    flux, which vanishes at the wall (a2 = 0 there) and is decay-small at
    the top.
    """
    a1 = _unwrap(g, a1)
    a2 = _unwrap(g, a2)
    f = _unwrap(g, f)
    return 0.5 * (a1 * g.ddx_arr(f) + a2 * g.dadv_arr(f)
                  + g.ddx_arr(a1 * f) + g.dadv_arr(a2 * f))


def vertical_grad_energy(g: Grid, v) -> float:
    """Exact quadratic form of the implicit vertical-diffusion operator:
    dx * sum over columns of sum_j (v[j+1] - v[j])^2 / h_j."""
    v = _unwrap(g, v)
    h = np.diff(g.y_nodes)
    d = np.diff(v, axis=0)
    return float(g.dx * np.sum(d * d / h[:, None]))


def _stiff_apply(g: Grid, v: np.ndarray) -> np.ndarray:
    """K v with K the lumped P1 stiffness matrix (free at both ends)."""
    h = np.diff(g.y_nodes)
    w = np.diff(v, axis=0) / h[:, None]
    out = np.empty_like(v)
    out[0] = -w[0]
    out[1:-1] = w[:-1] - w[1:]
    out[-1] = w[-1]
    return out


def _stiff_dense(g: Grid) -> np.ndarray:
    h = np.diff(g.y_nodes)
    K = np.zeros((g.Ny, g.Ny))
    for j in range(g.Ny - 1):
        inv = 1.0 / h[j]
        K[j, j] += inv
        K[j + 1, j + 1] += inv
        K[j, j + 1] -= inv
        K[j + 1, j] -= inv
    return K


class _ImplicitVar:
    """Factored (I - dt*gam*L) solves plus the L matvec for one unknown.

    L = -nu_v * Wy^{-1}(K + alpha_bc e0 e0^T) + nu_h dxx.  With nu_h = 0 the
    matrix is mode-independent and the solve stays in physical space; with
    nu_h > 0 every rfft mode gets its own diagonal shift.  dirichlet pins
    the wall row (u2).
    """

    def __init__(self, g: Grid, gam_dt: float, nu_v: float, nu_h: float,
                 alpha_bc: float, dirichlet: bool):
        self.g = g
        self.nu_v = nu_v
        self.nu_h = nu_h
        self.alpha_bc = alpha_bc
        self.dirichlet = dirichlet
        self.active = nu_v > 0.0 or nu_h > 0.0
        if not self.active:
            return
        A = np.eye(g.Ny)
        if nu_v > 0.0:
            Kb = _stiff_dense(g)
            if alpha_bc != 0.0:
                Kb[0, 0] += alpha_bc
            A += gam_dt * nu_v * (Kb / g.wy[:, None])
        self.spectral = nu_h > 0.0
        if self.spectral:
            B = g.kx.size
            ab = np.repeat(kernels.dense_to_band(A, 1, 1)[None], B, axis=0)
            ab[:, 2, :] += gam_dt * nu_h * (g.kx ** 2)[:, None]
            if dirichlet:
                ab[:, 1, 1] = 0.0   # superdiag entry of column 1 (row 0)
                ab[:, 2, 0] = 1.0   # diagonal of row 0
            self.lu, self.piv = kernels.gbtrf(ab, 1, 1)
        else:
            if dirichlet:
                A[0, :] = 0.0
                A[0, 0] = 1.0
            ab = kernels.dense_to_band(A, 1, 1)[None]
            self.lu, self.piv = kernels.gbtrf(ab, 1, 1)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if not self.active:
            return rhs
        g = self.g
        if not self.spectral:
            x = kernels.gbtrs(self.lu, self.piv, rhs[None], 1, 1)
            return x[0]
        rh = np.fft.rfft(rhs, axis=1)
        b = np.empty((g.kx.size, g.Ny, 2))
        b[:, :, 0] = rh.real.T
        b[:, :, 1] = rh.imag.T
        x = kernels.gbtrs(self.lu, self.piv, b, 1, 1)
        xh = (x[:, :, 0] + 1j * x[:, :, 1]).T
        return np.fft.irfft(xh, n=g.Nx, axis=1)

    def rate(self, v: np.ndarray):
        """L v, the stiff rate recorded for later stages (0.0 if inactive)."""
        if not self.active:
            return 0.0
        g = self.g
        out = np.zeros_like(v)
        if self.nu_v > 0.0:
            Kv = _stiff_apply(g, v)
            if self.alpha_bc != 0.0:
                Kv[0] += self.alpha_bc * v[0]
            out -= self.nu_v * (Kv / g.wy[:, None])
        if self.nu_h > 0.0:
            out += self.nu_h * g.ddx2_arr(v)
        if self.dirichlet:
            out[0, :] = 0.0
        return out


class _Implicit:
    def __init__(self, g: Grid, params: PhysParams, dt: float):
        gam_dt = _GAM * dt
        alpha_bc = params.alpha if params.bc_variant == "navier" else 0.0
        self.u1 = _ImplicitVar(g, gam_dt, params.nu2, params.nu1, alpha_bc, False)
        self.u2 = _ImplicitVar(g, gam_dt, params.nu2, params.nu1, 0.0, True)
        self.th = _ImplicitVar(g, gam_dt, params.kappa2, params.kappa1, 0.0, False)


# ---------------------------------------------------------------- the stepper

def _rhs_nonlinear(g, params, forcing):
    def rhs(u1, u2, th, t):
        G1 = -advect(g, u1, u2, u1)
        G2 = -advect(g, u1, u2, u2) + th
        Gt = -advect(g, u1, u2, th)
        if forcing is not None:
            f1, f2, ft = forcing(g, t)
            G1 = G1 + f1
            G2 = G2 + f2
            Gt = Gt + ft
        return G1, G2, Gt
    return rhs


def _rhs_linearized(g, params, approx):
    def rhs(u1, u2, th, t):
        a1, a2, ath = (np.asarray(a) for a in approx.sample(g, t))
        G1 = -advect(g, a1, a2, u1) - u1 * g.ddx_arr(a1) - u2 * g.ddy_arr(a1)
        G2 = -advect(g, a1, a2, u2) - u1 * g.ddx_arr(a2) - u2 * g.ddy_arr(a2) + th
        Gt = -advect(g, a1, a2, th) - u1 * g.ddx_arr(ath) - u2 * g.ddy_arr(ath)
        if hasattr(approx, "remainder"):
            r1, r2, rt = approx.remainder(g, t)
            G1 = G1 + r1
            G2 = G2 + r2
            Gt = Gt + rt
        return G1, G2, Gt
    return rhs


def _pressure_free(g, F1, F2, a1=None, a2=None):
    """Subtract the gradient part of a momentum slope.

    The Neumann solve carries the slope's wall value as its bottom flux, so
    the corrected vertical component vanishes at the wall smoothly; chopping
    the wall row instead leaves an h-scale kink whose divergence the algebraic
    projector can only absorb with an O(1/h) slip-trace kick.  The algebraic
    projection afterwards removes the remaining O(h^2) discretization residue
    exactly, keeping stage reconstructions solenoidal to rounding.

    The mixed-operator gradient is not exactly W-orthogonal to the
    divergence-free space (the one-sided vertical derivative has no summation
    by parts), so when a reference state is supplied the discarded part is
    orthogonalized against it along the state itself; the discrete pressure
    then does exactly zero work on that state and the energy audit closes to
    its dt^2 sampling error instead of an O(h^2) floor.
    """
    div = g.ddx_arr(F1) + g.ddy_arr(F2)
    prob = NeumannProblem(rhs=div, bottom_flux=F2[0, :].copy(),
                          top_flux=F2[-1, :].copy())
    lam = solve_neumann(g, prob)
    q1 = F1 - g.ddx_arr(lam)
    q2 = F2 - g.ddy_arr(lam)
    q2[0, :] = 0.0
    q1, q2 = project_div_free(g, q1, q2)
    if a1 is not None:
        den = g.integral(a1 * a1) + g.integral(a2 * a2)
        if den > 0.0:
            num = g.integral(a1 * (F1 - q1)) + g.integral(a2 * (F2 - q2))
            c = num / den
            q1 = q1 + c * a1
            q2 = q2 + c * a2
    return q1, q2


def _imex_step(g, u1, u2, th, t, dt, imp, rhs_fn):
    # Every recorded momentum slope has its gradient part removed, so stage
    # reconstructions and the final combination stay solenoidal to rounding
    # and the state never absorbs an O(1)-amplitude projection correction.
    # The discarded parts do exactly zero work on the stage states, so the
    # energy balance closes to the time-integration error.
    Gs, Ss = [], []
    for i in range(4):
        r1, r2, r3 = u1.copy(), u2.copy(), th.copy()
        for j in range(i):
            ae = _A_EX[i, j]
            if ae != 0.0:
                r1 += (dt * ae) * Gs[j][0]
                r2 += (dt * ae) * Gs[j][1]
                r3 += (dt * ae) * Gs[j][2]
            ai = _A_IM[i, j]
            if ai != 0.0:
                r1 += (dt * ai) * Ss[j][0]
                r2 += (dt * ai) * Ss[j][1]
                r3 += (dt * ai) * Ss[j][2]
        r2[0, :] = 0.0
        v1 = imp.u1.solve(r1)
        v2 = imp.u2.solve(r2)
        v3 = imp.th.solve(r3)
        k1, k2, k3 = imp.u1.rate(v1), imp.u2.rate(v2), imp.th.rate(v3)
        if imp.u1.active:
            # The Dirichlet mask zeroes the wall row of the vertical rate, but
            # the smooth extension of L u2 has wall value nu*u2''(0); restore
            # it by extrapolation so the gradient subtraction sees compatible
            # data instead of an h-scale kink.
            y1, y2 = g.y_nodes[1], g.y_nodes[2]
            k2[0, :] = k2[1, :] + (k2[1, :] - k2[2, :]) * (y1 / (y2 - y1))
        s1, s2 = project_div_free(g, v1, v2)
        if imp.u1.active:
            k1, k2 = _pressure_free(g, k1, k2, s1, s2)
        Ss.append((k1, k2, k3))
        G1, G2, Gt = rhs_fn(s1, s2, v3, t + _C_EX[i] * dt)
        G1, G2 = _pressure_free(g, G1, G2, s1, s2)
        Gs.append((G1, G2, Gt))

    n1, n2, n3 = u1.copy(), u2.copy(), th.copy()
    for i in range(4):
        bi = _B[i]
        if bi == 0.0:
            continue
        n1 += (dt * bi) * (Gs[i][0] + Ss[i][0])
        n2 += (dt * bi) * (Gs[i][1] + Ss[i][1])
        n3 += (dt * bi) * (Gs[i][2] + Ss[i][2])
    n2[0, :] = 0.0
    w1, w2 = project_div_free(g, n1, n2)
    return w1, w2, n3


def _check_cfl(g, u1, u2, dt, t, hmin):
    vmax = float(np.sqrt(np.max(u1 * u1 + u2 * u2)))
    cfl = dt * vmax / hmin
    if cfl > CFL_LIMIT:
        raise CFLError(
            f"advective CFL {cfl:.3f} exceeds {CFL_LIMIT} at t = {t:.6g} "
            f"(max |u| = {vmax:.3g}, min spacing = {hmin:.3g})")


def _check_finite(arrs, t):
    for a in arrs:
        if not np.all(np.isfinite(a)):
            raise BlowupError(f"non-finite state detected at t = {t:.6g}")


# ----------------------------------------------------------------- diagnostics

def diagnostic_pressure(g: Grid, u1, u2, th, params: PhysParams, t: float = 0.0,
                        forcing=None, approx=None):
    """Pressure consistent with the current state: the Neumann solve of the
    momentum forcing divergence plus the slip-induced harmonic part."""
    u1 = _unwrap(g, u1)
    u2 = _unwrap(g, u2)
    th = _unwrap(g, th)
    if approx is not None:
        rhs_fn = _rhs_linearized(g, params, approx)
    else:
        rhs_fn = _rhs_nonlinear(g, params, forcing)
    G1, G2, _ = rhs_fn(u1, u2, th, t)
    _, _, p = split_pressure(g, (G1, G2), u1, params)
    return p


def _diag_row(g, u1, u2, th, params, t):
    ke = 0.5 * g.integral(u1 * u1 + u2 * u2)
    pe = 0.5 * g.integral(th * th)
    diss = 0.0
    if params.nu2 > 0:
        diss += params.nu2 * (vertical_grad_energy(g, u1)
                              + vertical_grad_energy(g, u2))
    if params.nu1 > 0:
        diss += params.nu1 * (g.integral(g.ddx_arr(u1) ** 2)
                              + g.integral(g.ddx_arr(u2) ** 2))
    if params.kappa2 > 0:
        diss += params.kappa2 * vertical_grad_energy(g, th)
    if params.kappa1 > 0:
        diss += params.kappa1 * g.integral(g.ddx_arr(th) ** 2)
    bflux = params.alpha * params.nu2 * g.dx * float(np.sum(u1[0] ** 2))
    eta = slip_defect(g, u1, params.alpha) - g.ddx_arr(u2)[0]
    return {"time": t,
            "KE": ke,
            "PE_theta": pe,
            "dissipation": diss,
            "boundary_flux": bflux,
            "max_theta": float(np.abs(th).max()),
            "div_max": float(np.abs(divergence(g, u1, u2)).max()),
            "eta_trace_max": float(np.abs(eta).max())}


# ------------------------------------------------------------------ public API

def _require_inviscid(params: PhysParams):
    if params.nu1 or params.nu2 or params.kappa1 or params.kappa2:
        raise ConfigError("inviscid stepping requires all dissipation "
                          "coefficients to vanish")


def _single_step(g, s, cfg, rhs_builder, forcing=None, approx=None):
    check_state(g, s)
    u1, u2, th = s.u1.values.copy(), s.u2.values.copy(), s.theta.values.copy()
    hmin = min(g.dx, float(np.diff(g.y_nodes).min()))
    _check_cfl(g, u1, u2, cfg.dt, s.time, hmin)
    imp = _Implicit(g, cfg.params, cfg.dt)
    rhs_fn = rhs_builder(g, cfg.params, forcing if approx is None else approx)
    w1, w2, w3 = _imex_step(g, u1, u2, th, s.time, cfg.dt, imp, rhs_fn)
    t1 = s.time + cfg.dt
    _check_finite((w1, w2, w3), t1)
    p = diagnostic_pressure(g, w1, w2, w3, cfg.params, t1,
                            forcing=forcing, approx=approx)
    return State(Field.on(g, w1), Field.on(g, w2), Field.on(g, w3),
                 Field.on(g, _unwrap(g, p)), t1)


def step_inviscid(g: Grid, s: State, cfg: SimConfig, forcing=None) -> State:
    """One explicit SSP-RK3 step of advection + buoyancy with projection."""
    _require_inviscid(cfg.params)
    return _single_step(g, s, cfg, _rhs_nonlinear, forcing=forcing)


def step_viscous(g: Grid, s: State, cfg: SimConfig, forcing=None) -> State:
    """One IMEX step: explicit transport/buoyancy, implicit dissipation."""
    return _single_step(g, s, cfg, _rhs_nonlinear, forcing=forcing)


def step_linearized(g: Grid, e: State, a, cfg: SimConfig) -> State:
    """One IMEX step of the frozen-coefficient error system around a.

    a must provide sample(g, t) -> (u1, u2, theta) and may provide
    remainder(g, t) -> (R1, R2, Rtheta) forcing arrays.
    """
    return _single_step(g, e, cfg, _rhs_linearized, approx=a)


def run(g: Grid, s0: State, cfg: SimConfig, which: str,
        forcing=None, approx=None) -> Trajectory:
    """March to T capturing snapshots and per-step diagnostics.

    Deterministic bit-for-bit for identical inputs.  On CFL violation,
    solver failure, or blow-up the partial trajectory is attached to the
    raised error as exc.trajectory with the failure field set.
    """
    if which not in ("inviscid", "viscous", "linearized"):
        raise ConfigError(f"unknown run kind {which!r}")
    if which == "inviscid":
        _require_inviscid(cfg.params)
    if which == "linearized" and approx is None:
        raise ConfigError("linearized runs need an approximate solution")
    check_state(g, s0)

    params = cfg.params
    if which == "linearized":
        rhs_fn = _rhs_linearized(g, params, approx)
    else:
        rhs_fn = _rhs_nonlinear(g, params, forcing)
    imp = _Implicit(g, params, cfg.dt)
    hmin = min(g.dx, float(np.diff(g.y_nodes).min()))
    nsteps = cfg.nsteps()

    u1 = s0.u1.values.copy()
    u2 = s0.u2.values.copy()
    th = s0.theta.values.copy()
    t0 = s0.time

    traj = Trajectory()

    def record_diag(t):
        for key, val in _diag_row(g, u1, u2, th, params, t).items():
            traj.diag[key].append(val)

    def record_state(t):
        p = diagnostic_pressure(g, u1, u2, th, params, t,
                                forcing=forcing, approx=approx)
        s = State(Field.on(g, u1), Field.on(g, u2), Field.on(g, th),
                  Field.on(g, _unwrap(g, p)), t)
        check_state(g, s)
        traj.times.append(t)
        traj.states.append(s)

    record_diag(t0)
    record_state(t0)

    for k in range(1, nsteps + 1):
        t_new = t0 + k * cfg.dt
        try:
            _check_cfl(g, u1, u2, cfg.dt, t0 + (k - 1) * cfg.dt, hmin)
            u1, u2, th = _imex_step(g, u1, u2, th, t0 + (k - 1) * cfg.dt,
                                    cfg.dt, imp, rhs_fn)
            _check_finite((u1, u2, th), t_new)
        except Exception as exc:
            traj.failure = f"{type(exc).__name__}: {exc}"
            exc.trajectory = traj
            raise
        record_diag(t_new)
        if k % cfg.save_every == 0 or k == nsteps:
            record_state(t_new)
    return traj
