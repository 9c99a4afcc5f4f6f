"""Time stepper contract: exact fixed points, convergence orders, the energy
budget, boundary traces, and the failure paths of run()."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from vll.errors import BlowupError, CFLError, ConfigError
from vll.fields import (Field, PhysParams, State, make_initial_data,
                        manufactured_forcing, manufactured_solution,
                        project_div_free)
from vll.grid import build_grid
from vll.solver import (DIAG_COLUMNS, SimConfig, advect, run, step_inviscid,
                        step_linearized, step_viscous, vertical_grad_energy)

LX = 2.0 * np.pi
LY = 8.0


def _zero_state(g):
    return State(Field.zeros(g), Field.zeros(g), Field.zeros(g),
                 Field.zeros(g), 0.0)


def _shear_state(g, profile):
    u1 = profile[:, None] * np.ones((1, g.shape[1]))
    return State(Field.on(g, u1), Field.zeros(g), Field.zeros(g),
                 Field.zeros(g), 0.0)


def _maxdiff(a, b):
    return max(np.abs(a.u1.values - b.u1.values).max(),
               np.abs(a.u2.values - b.u2.values).max(),
               np.abs(a.theta.values - b.theta.values).max())


class _HydrostaticApprox:
    """theta = y base state: buoyancy and stratification coupling cancel in
    the energy balance, so the linearized energy can only dissipate."""

    def sample(self, g, t):
        z = np.zeros(g.shape)
        return z, z, np.broadcast_to(g.y_nodes[:, None], g.shape).copy()


# ------------------------------------------------------------- configuration

@pytest.mark.parametrize("kw", [
    {"dt": 0.0}, {"dt": -1e-3}, {"dt": np.nan}, {"dt": np.inf},
    {"T": -0.5}, {"T": np.nan},
    {"scheme": "euler"}, {"scheme": ""},
    {"save_every": 0}, {"save_every": -2}, {"save_every": 1.5},
])
def test_config_rejects_bad_values(kw):
    base = dict(dt=1e-3, T=1e-2, params=PhysParams.inviscid())
    base.update(kw)
    with pytest.raises(ConfigError):
        SimConfig(**base)


def test_run_rejects_nonmultiple_horizon():
    g = build_grid(LX, LY, 8, 32, stretch=0.0)
    cfg = SimConfig(dt=0.3, T=1.0, params=PhysParams.inviscid())
    with pytest.raises(ConfigError):
        run(g, _zero_state(g), cfg, "inviscid")


def test_run_rejects_unknown_system():
    g = build_grid(LX, LY, 8, 32, stretch=0.0)
    cfg = SimConfig(dt=1e-3, T=1e-3, params=PhysParams.inviscid())
    with pytest.raises(ConfigError):
        run(g, _zero_state(g), cfg, "semigroup")


def test_linearized_requires_approx():
    g = build_grid(LX, LY, 8, 32, stretch=0.0)
    cfg = SimConfig(dt=1e-3, T=1e-3, params=PhysParams.headline(0.1, 1.0))
    with pytest.raises(ConfigError):
        run(g, _zero_state(g), cfg, "linearized")


def test_inviscid_step_rejects_viscous_params():
    g = build_grid(LX, LY, 8, 32, stretch=0.0)
    cfg = SimConfig(dt=1e-3, T=1e-3, params=PhysParams.headline(0.1, 1.0))
    with pytest.raises(ConfigError):
        step_inviscid(g, _zero_state(g), cfg)


# -------------------------------------------------------- exact fixed points

@pytest.mark.parametrize("which,params", [
    ("inviscid", PhysParams.inviscid(alpha=0.0)),
    ("viscous", PhysParams.headline(0.1, 1.0)),
])
def test_zero_state_is_bitwise_fixed(which, params):
    g = build_grid(LX, LY, 12, 48, stretch=2.0)
    cfg = SimConfig(dt=1e-3, T=5e-3, params=params)
    traj = run(g, _zero_state(g), cfg, which)
    s = traj.states[-1]
    for f in (s.u1, s.u2, s.theta):
        assert np.all(f.values == 0.0)


def test_hydrostatic_equilibrium_is_bitwise_fixed():
    # u = 0, theta = theta(y): buoyancy lands entirely in the pressure
    # gradient, and the flux-consistent slope correction removes it exactly.
    g = build_grid(LX, LY, 12, 64, stretch=2.0)
    th = np.tanh(2.0 * (4.0 - g.y_nodes))[:, None] * np.ones((1, 12))
    s0 = State(Field.zeros(g), Field.zeros(g), Field.on(g, th),
               Field.zeros(g), 0.0)
    cfg = SimConfig(dt=2e-3, T=2e-2, params=PhysParams.headline(0.1, 1.0))
    s = run(g, s0, cfg, "viscous").states[-1]
    assert np.all(s.u1.values == 0.0)
    assert np.all(s.u2.values == 0.0)
    assert np.array_equal(s.theta.values, th)


# ------------------------------------------------------- manufactured orders

_MMS_A, _MMS_ALPHA = 0.4, 1.0


def _mms_state(g, t):
    u1, u2, th, p = manufactured_solution(g, t, _MMS_A, _MMS_ALPHA)
    u1, u2 = project_div_free(g, u1, u2)
    return State(Field.on(g, u1), Field.on(g, u2), Field.on(g, th),
                 Field.on(g, p), t)


def _mms_forcing(g, t):
    return manufactured_forcing(g, t, _MMS_A, _MMS_ALPHA)


def test_mms_third_order_in_time():
    # self-convergence against a dt=1e-4 reference on the same grid cancels
    # the shared O(h^2) floor; rehearsed ratios sit at 8.0
    g = build_grid(LX, LY, 24, 96, stretch=2.0)
    s0 = _mms_state(g, 0.0)
    T = 0.04
    pv = PhysParams.inviscid(alpha=_MMS_ALPHA)

    def final(dt):
        cfg = SimConfig(dt=dt, T=T, params=pv, save_every=10 ** 6)
        return run(g, s0, cfg, "inviscid", forcing=_mms_forcing).states[-1]

    ref = final(1e-4)
    errs = [_maxdiff(final(dt), ref) for dt in (4e-3, 2e-3, 1e-3)]
    assert errs[0] > errs[1] > errs[2]
    for c, f in zip(errs, errs[1:]):
        assert 5.5 < c / f < 11.0
    assert errs[-1] < 1e-10


def test_mms_second_order_in_space():
    # compare against the unprojected analytic fields: the projection shares
    # its h^2 defect with the marched solution, so it is not a fair oracle
    T, dt = 0.04, 1e-3
    pv = PhysParams.inviscid(alpha=_MMS_ALPHA)
    errs = []
    for nx, ny in ((12, 48), (24, 96), (48, 192)):
        g = build_grid(LX, LY, nx, ny, stretch=2.0)
        cfg = SimConfig(dt=dt, T=T, params=pv, save_every=10 ** 6)
        got = run(g, _mms_state(g, 0.0), cfg, "inviscid",
                  forcing=_mms_forcing).states[-1]
        u1, u2, th, _ = manufactured_solution(g, T, _MMS_A, _MMS_ALPHA)
        errs.append(max(np.abs(got.u1.values - u1).max(),
                        np.abs(got.u2.values - u2).max(),
                        np.abs(got.theta.values - th).max()))
    for c, f in zip(errs, errs[1:]):
        assert 3.2 < c / f < 5.2
    assert errs[-1] < 5e-4


# ------------------------------------------------- one-dimensional heat check

def test_shear_decay_matches_neumann_eigenmode():
    # alpha = 0: cos(pi y / Ly) is an exact Neumann eigenmode, decay rate
    # nu2 (pi/Ly)^2; measured errors 1.2e-5 / 3.0e-6 at Ny = 64 / 128
    T, dt = 0.4, 0.01
    pv = PhysParams.headline(eps=1.0, alpha=0.0)
    errs = []
    for ny in (64, 128):
        g = build_grid(LX, LY, 8, ny, stretch=0.0)
        s0 = _shear_state(g, np.cos(np.pi * g.y_nodes / LY))
        cfg = SimConfig(dt=dt, T=T, params=pv, save_every=10 ** 6)
        s = run(g, s0, cfg, "viscous").states[-1]
        exact = s0.u1.values * np.exp(-((np.pi / LY) ** 2) * T)
        errs.append(np.abs(s.u1.values - exact).max())
        assert np.all(s.u2.values == 0.0)
        assert np.all(s.theta.values == 0.0)
    assert errs[1] < 1e-5
    assert 3.2 < errs[0] / errs[1] < 5.0


def test_shear_decay_matches_independent_reference():
    """Robin wall, alpha = 1: method-of-lines reference on its own fine
    uniform grid (ghost-node boundary rows, LSODA with a banded Jacobian),
    written without reusing any package operator."""
    T, nu, alpha = 0.3, 1.0, 1.0
    n_ref = 4001
    yr = np.linspace(0.0, LY, n_ref)
    h = yr[1] - yr[0]

    def rhs(t, u):
        d = np.empty_like(u)
        d[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h ** 2
        ghost_b = u[1] - 2.0 * h * alpha * u[0]     # u'(0) = alpha u(0)
        d[0] = (u[1] - 2.0 * u[0] + ghost_b) / h ** 2
        d[-1] = (u[-2] - 2.0 * u[-1] + u[-2]) / h ** 2   # u'(Ly) = 0
        return nu * d

    u0 = np.exp(-((yr - 2.0) ** 2))
    sol = solve_ivp(rhs, (0.0, T), u0, method="LSODA", lband=1, uband=1,
                    rtol=1e-10, atol=1e-12, t_eval=[T])
    assert sol.success

    pv = PhysParams.headline(eps=1.0, alpha=alpha)
    errs = []
    for ny in (64, 128):
        g = build_grid(LX, LY, 8, ny, stretch=0.0)
        s0 = _shear_state(g, np.exp(-((g.y_nodes - 2.0) ** 2)))
        cfg = SimConfig(dt=5e-3, T=T, params=pv, save_every=10 ** 6)
        s = run(g, s0, cfg, "viscous").states[-1]
        ref = np.interp(g.y_nodes, yr, sol.y[:, -1])
        errs.append(np.abs(s.u1.values[:, 0] - ref).max())
    assert errs[1] < 5e-4
    assert 3.2 < errs[0] / errs[1] < 5.0


# ------------------------------------------------------------ invariant audit

def test_inviscid_theta_l2_and_max_principle():
    g = build_grid(LX, LY, 32, 96, stretch=2.0)
    s0 = make_initial_data(g, "vortex_pair", 0.5, 0.0)
    cfg = SimConfig(dt=2.5e-3, T=0.25, params=PhysParams.inviscid(),
                    save_every=25)
    traj = run(g, s0, cfg, "inviscid")

    l2 = [np.sqrt(g.integral(s.theta.values ** 2)) for s in traj.states]
    assert max(abs(v - l2[0]) for v in l2) <= 1e-6 * l2[0]

    mx = np.array(traj.diag["max_theta"])
    assert mx.max() <= mx[0] * (1.0 + 1e-3)
    assert np.array(traj.diag["div_max"]).max() <= 1e-10
    assert np.all(traj.states[-1].u2.values[0, :] == 0.0)


def test_viscous_theta_transport_invariants():
    # kappa1 = kappa2 = 0: theta rides along, its L2 mass and extrema are
    # untouched by the wall layer forming in u
    g = build_grid(LX, LY, 32, 96, stretch=2.0)
    s0 = make_initial_data(g, "vortex_pair", 0.5, 1.0)
    cfg = SimConfig(dt=1e-3, T=0.1, params=PhysParams.headline(0.1, 1.0),
                    save_every=20)
    traj = run(g, s0, cfg, "viscous")

    l2 = [np.sqrt(g.integral(s.theta.values ** 2)) for s in traj.states]
    assert max(abs(v - l2[0]) for v in l2) <= 1e-6 * l2[0]
    mx = np.array(traj.diag["max_theta"])
    assert mx.max() <= mx[0] * (1.0 + 1e-3)
    assert np.array(traj.diag["div_max"]).max() <= 1e-10
    assert np.all(traj.states[-1].u2.values[0, :] == 0.0)


def test_slip_trace_second_order():
    # eta = (omega - alpha u1)|wall settles on a dt-independent plateau that
    # shrinks like h^2; family rehearsed at stretch 3.0 with dt tied to h
    pv = PhysParams.headline(0.1, 1.0)
    plateaus = []
    for ny, dt in ((64, 1e-3), (128, 5e-4), (256, 2.5e-4)):
        g = build_grid(LX, LY, 32, ny, stretch=3.0)
        s0 = make_initial_data(g, "vortex_pair", 0.5, 1.0)
        cfg = SimConfig(dt=dt, T=0.04, params=pv, save_every=10 ** 6)
        traj = run(g, s0, cfg, "viscous")
        plateaus.append(traj.diag["eta_trace_max"][-1])
    assert plateaus[-1] < 1e-4
    for c, f in zip(plateaus, plateaus[1:]):
        assert 3.0 < c / f < 7.0


def test_energy_identity_residual_second_order_in_dt():
    # d/dt (KE + PE) = bw - dis - bfl; the centered-difference residual is
    # dominated by the dt^2 recombination error once snapshots are spaced
    # well above the sampling floor, so halving dt divides it by ~4
    g = build_grid(LX, LY, 32, 96, stretch=2.0)
    pv = PhysParams.headline(0.1, 1.0)
    s0 = make_initial_data(g, "vortex_pair", 0.5, 1.0)

    def residual(dt):
        cfg = SimConfig(dt=dt, T=0.2, params=pv, save_every=50)
        traj = run(g, s0, cfg, "viscous")
        ts = np.array(traj.times)
        E, rhs = [], []
        for s in traj.states:
            u1, u2, th = s.u1.values, s.u2.values, s.theta.values
            E.append(0.5 * g.integral(u1 * u1 + u2 * u2)
                     + 0.5 * g.integral(th * th))
            dis = pv.nu2 * (vertical_grad_energy(g, u1)
                            + vertical_grad_energy(g, u2))
            bfl = pv.alpha * pv.nu2 * g.dx * np.sum(u1[0, :] ** 2)
            rhs.append(g.integral(u2 * th) - dis - bfl)
        E, rhs = np.array(E), np.array(rhs)
        lhs = (E[2:] - E[:-2]) / (ts[2:] - ts[:-2])
        return np.abs(lhs - rhs[1:-1]).max()

    r1, r2 = residual(4e-4), residual(2e-4)
    assert r2 < 2e-6
    assert 3.3 < r1 / r2 < 4.6


# ----------------------------------------------------------------- linearized

def test_linearized_zero_error_stays_zero():
    g = build_grid(LX, LY, 16, 64, stretch=2.0)
    cfg = SimConfig(dt=1e-3, T=1e-2, params=PhysParams.headline(0.1, 1.0))
    traj = run(g, _zero_state(g), cfg, "linearized", approx=_HydrostaticApprox())
    s = traj.states[-1]
    for f in (s.u1, s.u2, s.theta):
        assert np.all(f.values == 0.0)


def test_linearized_about_hydrostatic_energy_decays():
    g = build_grid(LX, LY, 32, 96, stretch=2.0)
    cfg = SimConfig(dt=1e-3, T=0.1, params=PhysParams.headline(0.1, 1.0),
                    save_every=20)
    e0 = make_initial_data(g, "vortex_pair", 0.05, 1.0)
    traj = run(g, e0, cfg, "linearized", approx=_HydrostaticApprox())
    E = np.array(traj.diag["KE"]) + np.array(traj.diag["PE_theta"])
    assert np.all(np.diff(E) <= 1e-12 * E[0])
    assert E[-1] < E[0]


# -------------------------------------------------------- trajectory plumbing

def test_zero_horizon_records_single_snapshot():
    g = build_grid(LX, LY, 8, 32, stretch=0.0)
    cfg = SimConfig(dt=1e-3, T=0.0, params=PhysParams.inviscid())
    traj = run(g, _zero_state(g), cfg, "inviscid")
    assert traj.times == [0.0]
    assert len(traj.states) == 1
    assert len(traj.diag["time"]) == 1
    assert traj.failure is None


def test_runs_are_bytewise_deterministic():
    def once():
        g = build_grid(LX, LY, 16, 64, stretch=2.0)   # fresh caches each time
        s0 = make_initial_data(g, "vortex_pair", 0.5, 1.0)
        cfg = SimConfig(dt=1e-3, T=0.02, params=PhysParams.headline(0.1, 1.0))
        return run(g, s0, cfg, "viscous")
    a, b = once(), once()
    assert a.diagnostics_csv() == b.diagnostics_csv()
    sa, sb = a.states[-1], b.states[-1]
    for fa, fb in ((sa.u1, sb.u1), (sa.u2, sb.u2), (sa.theta, sb.theta)):
        assert np.array_equal(fa.values, fb.values)


def test_diagnostics_csv_layout():
    g = build_grid(LX, LY, 8, 32, stretch=0.0)
    s0 = make_initial_data(g, "vortex_pair", 0.1, 0.0)
    cfg = SimConfig(dt=1e-3, T=5e-3, params=PhysParams.inviscid())
    traj = run(g, s0, cfg, "inviscid")
    lines = traj.diagnostics_csv().splitlines()
    assert lines[0] == ",".join(DIAG_COLUMNS)
    assert len(lines) == cfg.nsteps() + 2
    # %.17g repr round-trips doubles exactly
    for text, val in zip(lines[1].split(","),
                         (traj.diag[c][0] for c in DIAG_COLUMNS)):
        assert float(text) == val


def test_cfl_violation_raises_with_partial_trajectory():
    g = build_grid(LX, LY, 16, 128, stretch=3.0)
    s0 = make_initial_data(g, "vortex_pair", 0.5, 1.0)
    cfg = SimConfig(dt=0.05, T=0.5, params=PhysParams.headline(0.1, 1.0))
    with pytest.raises(CFLError) as exc:
        run(g, s0, cfg, "viscous")
    traj = exc.value.trajectory
    assert traj.failure.startswith("CFLError")
    assert len(traj.times) >= 1


def test_nonfinite_state_raises_blowup_with_trajectory():
    g = build_grid(LX, LY, 8, 32, stretch=0.0)
    cfg = SimConfig(dt=1e-3, T=1e-2, params=PhysParams.inviscid())

    def bad_forcing(gg, t):
        # clean at t = 0 so the initial snapshot is valid, NaN afterwards
        f = np.full(gg.shape, np.nan) if t > 0 else np.zeros(gg.shape)
        return f, np.zeros(gg.shape), np.zeros(gg.shape)

    with pytest.raises(BlowupError) as exc:
        run(g, _zero_state(g), cfg, "inviscid", forcing=bad_forcing)
    traj = exc.value.trajectory
    assert traj.failure.startswith("BlowupError")
    assert len(traj.states) == 1


@pytest.mark.parametrize("which,stepper,params", [
    ("inviscid", step_inviscid, PhysParams.inviscid()),
    ("viscous", step_viscous, PhysParams.headline(0.1, 1.0)),
])
def test_single_step_matches_run(which, stepper, params):
    g = build_grid(LX, LY, 16, 64, stretch=2.0)
    s0 = make_initial_data(g, "vortex_pair", 0.3, params.alpha)
    cfg = SimConfig(dt=1e-3, T=1e-3, params=params)
    s_step = stepper(g, s0, cfg)
    s_run = run(g, s0, cfg, which).states[-1]
    assert np.array_equal(s_step.u1.values, s_run.u1.values)
    assert np.array_equal(s_step.u2.values, s_run.u2.values)
    assert np.array_equal(s_step.theta.values, s_run.theta.values)
    assert s_step.time == cfg.dt


def test_linearized_step_matches_run():
    g = build_grid(LX, LY, 16, 64, stretch=2.0)
    cfg = SimConfig(dt=1e-3, T=1e-3, params=PhysParams.headline(0.1, 1.0))
    e0 = make_initial_data(g, "vortex_pair", 0.05, 1.0)
    ap = _HydrostaticApprox()
    s_step = step_linearized(g, e0, ap, cfg)
    s_run = run(g, e0, cfg, "linearized", approx=ap).states[-1]
    assert np.array_equal(s_step.u1.values, s_run.u1.values)
    assert np.array_equal(s_step.theta.values, s_run.theta.values)


# ------------------------------------------------------------ advection bits

def test_skew_advection_does_no_work():
    # exact summation-by-parts in y plus spectral x: the quadratic form
    # vanishes up to the decayed top-boundary term
    g = build_grid(LX, LY, 24, 96, stretch=2.0)
    s = make_initial_data(g, "vortex_pair", 0.7, 1.0)
    a1, a2 = s.u1.values, s.u2.values
    f = np.sin(2.0 * g.x_nodes)[None, :] * (g.y_nodes
                                            * np.exp(-g.y_nodes))[:, None]
    work = g.integral(f * advect(g, a1, a2, f))
    scale = g.integral(f * f)
    assert abs(work) <= 1e-12 * max(scale, 1.0)


def test_advection_of_constant_in_x_by_shear_vanishes():
    rng = np.random.default_rng(7)
    g = build_grid(LX, LY, 16, 64, stretch=2.0)
    a1 = np.repeat(rng.standard_normal((g.shape[0], 1)), g.shape[1], axis=1)
    f = np.repeat(rng.standard_normal((g.shape[0], 1)), g.shape[1], axis=1)
    # a = (a1(y), 0) transports x-independent f nowhere
    out = advect(g, a1, np.zeros(g.shape), f)
    assert np.abs(out).max() <= 1e-12
