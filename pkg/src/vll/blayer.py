"""Two-scale approximate solutions: outer inviscid fields plus wall-layer
profiles in the fast variable z = y/eps.

The slip condition makes every order-0 layer profile vanish, so the leading
approximation is the inviscid solution itself and layers first appear at
order eps.  The first horizontal profile solves a linear drift-diffusion
problem on the half-line driven by the wall traces of the outer flow; the
vertical profiles are slaved to it through the layer divergence relation,
one order up.  Assembly adds one extra slaved vertical profile plus a
divergence-free cutoff lift so the composite field stays solenoidal and
impermeable at the wall.

The order-collection behind the first- and second-order profile equations
follows the same mechanical recipe that produces the leading-order layer
system, with outer fields Taylor-expanded at the wall; it is validated here
operationally, by the order-eps^K scaling of the assembled defect.
"""

from dataclasses import dataclass, field as dfield

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import ConfigError
from .fields import Field, PhysParams, State
from .grid import Grid
from .snapshots import read_snapshot, write_snapshot
from .solver import _A_EX, _A_IM, _B, _C_EX, _GAM, Trajectory

_C_IM = _A_IM.sum(axis=1)   # implicit abscissae for the wall-flux terms

ZMAX = 20.0
DECAY_TOL = 1e-8
MIN_NZ = 256


# ------------------------------------------------------------------ z grid

@dataclass(frozen=True)
class ZGrid:
    """Uniform fast-variable grid on [0, zmax]."""
    z: np.ndarray

    @property
    def nz(self) -> int:
        return self.z.size

    @property
    def h(self) -> float:
        return float(self.z[1] - self.z[0])

    @property
    def zmax(self) -> float:
        return float(self.z[-1])


def build_zgrid(nz: int = MIN_NZ, zmax: float = ZMAX) -> ZGrid:
    if nz < MIN_NZ:
        raise ConfigError(f"layer grid needs at least {MIN_NZ} nodes, got {nz}")
    if zmax < 20.0:
        raise ConfigError(f"layer grid needs zmax >= 20, got {zmax}")
    return ZGrid(z=np.linspace(0.0, zmax, nz))


def _ddx_rows(a: np.ndarray, Lx: float) -> np.ndarray:
    """Spectral d/dx along the last axis (rows are periodic samples)."""
    n = a.shape[-1]
    k = 2.0 * np.pi / Lx * np.fft.rfftfreq(n, d=1.0 / n)
    return np.fft.irfft(1j * k * np.fft.rfft(a, axis=-1), n=n, axis=-1)


def _antiderivative_x(row: np.ndarray, Lx: float) -> np.ndarray:
    """Zero-mean spectral antiderivative of a zero-mean periodic row."""
    n = row.shape[-1]
    k = 2.0 * np.pi / Lx * np.fft.rfftfreq(n, d=1.0 / n)
    hat = np.fft.rfft(row)
    hat[0] = 0.0
    hat[1:] = hat[1:] / (1j * k[1:])
    return np.fft.irfft(hat, n=n)


# ---------------------------------------------------------------- profiles

@dataclass(eq=False)
class InnerProfile:
    """Layer fields of one order at one time, sampled on (z, x).

    Order 0 is identically zero (the slip condition admits the trivial
    leading layer), and the pressure profile vanishes through order two.
    Every field must decay below DECAY_TOL by zmax.
    """
    order: int
    time: float
    z: np.ndarray
    U1: np.ndarray
    U2: np.ndarray
    Theta: np.ndarray
    P: np.ndarray
    _splines: dict = dfield(default_factory=dict, repr=False)

    def decay_max(self) -> float:
        return max(float(np.abs(f[-1, :]).max())
                   for f in (self.U1, self.U2, self.Theta, self.P))

    def check_decay(self):
        worst = self.decay_max()
        if worst > DECAY_TOL:
            raise ConfigError(
                f"order-{self.order} profile at t={self.time:g} reaches "
                f"{worst:.3e} at zmax; enlarge the layer domain")

    def sample(self, name: str, zs: np.ndarray) -> np.ndarray:
        """Cubic interpolation to arbitrary z >= 0; zero beyond zmax."""
        arr = getattr(self, name)
        if not arr.any():
            return np.zeros((zs.size, arr.shape[1]))
        if name not in self._splines:
            self._splines[name] = CubicSpline(self.z, arr, axis=0)
        out = np.zeros((zs.size, arr.shape[1]))
        inside = zs <= self.z[-1]
        out[inside] = self._splines[name](zs[inside])
        return out


def _shared_zeros(nz: int, nx: int) -> np.ndarray:
    z = np.zeros((nz, nx))
    z.setflags(write=False)
    return z


def leading_profiles(times, zgrid: ZGrid, nx: int) -> list:
    """Order-0 profiles: identically zero at every time."""
    zero = _shared_zeros(zgrid.nz, nx)
    return [InnerProfile(order=0, time=float(t), z=zgrid.z,
                         U1=zero, U2=zero, Theta=zero, P=zero)
            for t in times]


def slaved_vertical(zgrid: ZGrid, U1: np.ndarray, Lx: float) -> np.ndarray:
    """Vertical profile one order up: U2(z) = integral_z^inf dx U1 ds.

    This is the unique decaying solution of the layer divergence relation
    dx U1 + dz U2 = 0.
    """
    dxu = _ddx_rows(U1, Lx)
    ct = cumulative_trapezoid(dxu, zgrid.z, axis=0, initial=0.0)
    return ct[-1:, :] - ct


def layer_pressure(zgrid: ZGrid, Theta: np.ndarray) -> np.ndarray:
    """Pressure profile one order up: the decaying solution of the layer
    hydrostatic relation dz P = Theta."""
    ct = cumulative_trapezoid(Theta, zgrid.z, axis=0, initial=0.0)
    return ct - ct[-1:, :]


# ------------------------------------------------------------ outer traces

@dataclass(eq=False)
class OuterTraces:
    """Wall traces of the order-0 outer solution over the stored times."""
    times: np.ndarray
    u1: np.ndarray      # Gamma u1,   shape (nt, nx)
    dyu1: np.ndarray    # Gamma dy u1
    theta: np.ndarray   # Gamma theta
    Lx: float

    def lerp(self, t: float):
        ts = self.times
        k = min(max(int(np.searchsorted(ts, t) - 1), 0), ts.size - 2)
        w = (t - ts[k]) / (ts[k + 1] - ts[k])
        w = min(max(w, 0.0), 1.0)
        return ((1 - w) * self.u1[k] + w * self.u1[k + 1],
                (1 - w) * self.dyu1[k] + w * self.dyu1[k + 1],
                (1 - w) * self.theta[k] + w * self.theta[k + 1])


def outer_traces(g: Grid, traj: Trajectory) -> OuterTraces:
    u1 = np.stack([s.u1.values[0, :] for s in traj.states])
    dyu1 = np.stack([g.ddy_arr(s.u1.values)[0, :] for s in traj.states])
    th = np.stack([s.theta.values[0, :] for s in traj.states])
    return OuterTraces(times=np.asarray(traj.times, dtype=np.float64),
                       u1=u1, dyu1=dyu1, theta=th, Lx=g.Lx)


# ------------------------------------------------------------ layer solver

class _LayerStepper:
    """IMEX march of d_t U + a dx U - c z dz U + c U - dzz U = F on the
    half line, inhomogeneous Neumann flux at z=0, pinned zero at zmax.

    Same additive tableau as the main stepper; diffusion implicit through a
    banded factor, drift and reaction explicit.  The flux enters the wall
    row by a second-order ghost node, so the implicit solve carries an
    affine term -2 q / h alongside the Dirichlet-masked top row.
    """

    def __init__(self, zg: ZGrid, Lx: float, dt: float):
        self.zg, self.Lx, self.dt = zg, Lx, dt
        nz, h = zg.nz, zg.h
        lam = _GAM * dt / (h * h)
        ab = np.zeros((3, nz))
        ab[1, :] = 1.0 + 2.0 * lam
        ab[0, 1:] = -lam
        ab[2, :-1] = -lam
        ab[0, 1] = -2.0 * lam        # ghost-reflected wall row
        ab[1, -1] = 1.0              # pinned top row
        ab[0, -1] = 0.0
        ab[2, -2] = 0.0
        self._ab = ab
        self._wall_aff = 2.0 * _GAM * dt / h

    def implicit_solve(self, r: np.ndarray, q: np.ndarray) -> np.ndarray:
        rhs = r.copy()
        rhs[0, :] -= self._wall_aff * q
        rhs[-1, :] = 0.0
        return solve_banded((1, 1), self._ab, rhs)

    def stiff_rate(self, v: np.ndarray, q: np.ndarray) -> np.ndarray:
        h = self.zg.h
        out = np.empty_like(v)
        out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h)
        out[0] = 2.0 * (v[1] - v[0]) / (h * h) - 2.0 * q / h
        out[-1] = 0.0
        return out

    def drift(self, v: np.ndarray, a_row: np.ndarray, c_row: np.ndarray,
              react: bool) -> np.ndarray:
        """-a dx v + c z dz v, minus the reaction c v when present."""
        h = self.zg.h
        dzv = np.zeros_like(v)
        dzv[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)   # z=0 row multiplied by z=0
        out = -a_row[None, :] * _ddx_rows(v, self.Lx)
        out += c_row[None, :] * (self.zg.z[:, None] * dzv - (v if react else 0.0))
        return out

    def dz(self, v: np.ndarray) -> np.ndarray:
        h = self.zg.h
        out = np.empty_like(v)
        out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
        out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
        out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
        return out


def _march_profiles(traces: OuterTraces, alpha: float, zg: ZGrid,
                    order_max: int, cfl: float = 0.3):
    """Advance the coupled layer system through the trace times and return
    per-time dicts of the marched components: the first horizontal profile
    U1, the first temperature profile TH, and for order_max = 2 the second
    horizontal profile U1_2 (the slaved fields are rebuilt on demand)."""
    ts = traces.times
    nt, nx = traces.u1.shape

    amax = float(np.abs(traces.u1).max())
    cmax = float(np.abs(_ddx_rows(traces.u1, traces.Lx)).max())
    dx = traces.Lx / nx
    lim = cfl * min(dx / max(amax, 1e-12),
                    zg.h / max(cmax * zg.zmax, 1e-12),
                    1.0 / max(cmax, 1e-12))

    comps = {"U1": np.zeros((zg.nz, nx)), "TH": np.zeros((zg.nz, nx))}
    if order_max >= 2:
        comps["U1_2"] = np.zeros((zg.nz, nx))
    out = [{k: v.copy() for k, v in comps.items()}]

    for k in range(nt - 1):
        span = float(ts[k + 1] - ts[k])
        nsub = max(int(np.ceil(span / lim)), 1)
        dt = span / nsub
        stepper = _LayerStepper(zg, traces.Lx, dt)
        for j in range(nsub):
            t0 = float(ts[k]) + j * dt
            comps = _imex_layer_step(stepper, traces, alpha, comps, t0, dt)
        out.append({k2: v.copy() for k2, v in comps.items()})
    return out


def _layer_forcing2(stepper, U1, TH, dyrow):
    """Order-collected coupling that drives the second horizontal profile:
    Taylor growth of the outer shear across the layer, self-advection of
    the first profile, transport by the slaved vertical profile and by the
    wall value the cutoff lift cancels, and the slaved pressure gradient."""
    zg, Lx = stepper.zg, stepper.Lx
    z = zg.z[:, None]
    dx_dyrow = _ddx_rows(dyrow, Lx)
    dyyu2 = -dx_dyrow                       # outer divergence at the wall
    U2 = slaved_vertical(zg, U1, Lx)
    P2 = layer_pressure(zg, TH)
    dzU1 = stepper.dz(U1)
    return -((z * dyrow[None, :] + U1) * _ddx_rows(U1, Lx)
             + z * dx_dyrow[None, :] * U1
             + (0.5 * z * z * dyyu2[None, :] + U2 - U2[0:1, :]) * dzU1
             + U2 * dyrow[None, :]
             + _ddx_rows(P2, Lx))


def _imex_layer_step(stepper, traces, alpha, comps, t, dt):
    """One additive step of the coupled layer system.  The components are
    block triangular: each stage solves U1 implicitly, advances TH purely
    explicitly (its stiff part is empty), then solves U1_2 whose wall flux
    and forcing consume the same-stage values of the first-order pair."""
    second = "U1_2" in comps
    G = {k: [] for k in comps}
    S = {k: [] for k in comps}

    def seed(name, i):
        r = comps[name].copy()
        for j in range(i):
            if _A_EX[i, j]:
                r += dt * _A_EX[i, j] * G[name][j]
            if _A_IM[i, j]:
                r += dt * _A_IM[i, j] * S[name][j]
        return r

    for i in range(4):
        # wall fluxes travel with the stiff operator: implicit abscissae
        u1_im, dy_im, _ = traces.lerp(t + _C_IM[i] * dt)
        u1_ex, dy_ex, th_ex = traces.lerp(t + _C_EX[i] * dt)
        crow = _ddx_rows(u1_ex, traces.Lx)

        q1 = alpha * u1_im - dy_im
        v1 = stepper.implicit_solve(seed("U1", i), q1)
        S["U1"].append(stepper.stiff_rate(v1, q1))
        G["U1"].append(stepper.drift(v1, u1_ex, crow, react=True))

        vt = seed("TH", i)
        S["TH"].append(0.0)
        G["TH"].append(stepper.drift(vt, u1_ex, crow, react=False)
                       - v1 * _ddx_rows(th_ex, traces.Lx)[None, :])

        if second:
            q2 = alpha * v1[0, :]
            v2 = stepper.implicit_solve(seed("U1_2", i), q2)
            S["U1_2"].append(stepper.stiff_rate(v2, q2))
            G["U1_2"].append(stepper.drift(v2, u1_ex, crow, react=True)
                             + _layer_forcing2(stepper, v1, vt, dy_ex))

    new = {}
    for name in comps:
        val = comps[name].copy()
        for i in range(4):
            val += dt * _B[i] * (G[name][i] + S[name][i])
        val[-1, :] = 0.0
        new[name] = val
    return new


def solve_first_order_profile(traces: OuterTraces, alpha: float,
                              zgrid: ZGrid) -> list:
    """March the first horizontal layer profile from rest.

    The wall flux dz U1(t,x,0) = alpha Gamma u1 - Gamma dy u1 is the slip
    defect of the outer solution; perfectly prepared outer data keeps the
    profile identically zero.  The vertical, temperature, and pressure
    slots of this order all vanish (slaved to the zero order-0 profile,
    zero-data transport, and the collected pressure relation).
    """
    return solve_profiles(traces, alpha, zgrid, order_max=1)[1]


def solve_profiles(traces: OuterTraces, alpha: float, zgrid: ZGrid,
                   order_max: int) -> dict:
    """Profiles for orders 1..order_max, marched in one coupled pass.

    Order 1 carries the marched horizontal and temperature profiles; its
    vertical and pressure slots vanish (slaved to the zero leading order).
    Order 2 carries the marched horizontal profile plus the two slaved
    fields: the vertical profile closing the layer divergence of U1 and
    the pressure profile closing the layer hydrostatic balance of Theta.
    The order-2 temperature profile is dropped; it only enters the defect
    at the order the assembly leaves unresolved anyway.
    """
    if order_max not in (1, 2):
        raise ConfigError(f"layer expansion supports orders 1..2, "
                          f"got {order_max}")
    hist = _march_profiles(traces, alpha, zgrid, order_max=order_max)
    nx = traces.u1.shape[1]
    zero = _shared_zeros(zgrid.nz, nx)
    out = {io: [] for io in range(1, order_max + 1)}
    for k, t in enumerate(traces.times):
        h = hist[k]
        p1 = InnerProfile(order=1, time=float(t), z=zgrid.z, U1=h["U1"],
                          U2=zero, Theta=h["TH"], P=zero)
        p1.check_decay()
        out[1].append(p1)
        if order_max == 2:
            p2 = InnerProfile(order=2, time=float(t), z=zgrid.z,
                              U1=h["U1_2"],
                              U2=slaved_vertical(zgrid, h["U1"], traces.Lx),
                              Theta=zero,
                              P=layer_pressure(zgrid, h["TH"]))
            p2.check_decay()
            out[2].append(p2)
    return out


# ---------------------------------------------------------------- assembly

def _cutoff(g: Grid) -> np.ndarray:
    return np.exp(-g.y_nodes ** 2)[:, None]


def _wall_lift(g: Grid, wall_u2: np.ndarray):
    """Divergence-free cutoff field whose vertical trace is -wall_u2.

    Discrete curl of psi = -chi(y) Phi(x) with dx Phi = wall_u2: the two
    derivative operators commute, so the lift is solenoidal to rounding,
    and chi(0) = 1 cancels the layer's vertical wall value exactly.
    """
    phi = _antiderivative_x(wall_u2, g.Lx)
    psi = -_cutoff(g) * phi[None, :]
    return -g.ddy_arr(psi), g.ddx_arr(psi)


def assemble(outer: Trajectory, inner: dict, eps: float, K: int, g: Grid,
             t: float) -> State:
    """Sample the order-K composite field on the solver grid at a stored
    time: outer orders plus layer profiles at z = y/eps, one extra slaved
    vertical profile, and the wall lift that keeps u.n = 0."""
    k = _time_index(outer.times, t)
    if K not in (0, 1, 2):
        raise ConfigError(f"assembly supports K in {{0,1,2}}, got {K}")
    for io in range(K + 1):
        if io not in inner or len(inner[io]) != len(outer.times):
            raise ConfigError(f"order-{io} profiles missing at t={t:g}")

    s0 = outer.states[k]
    u1 = s0.u1.values.copy()
    u2 = s0.u2.values.copy()
    th = s0.theta.values.copy()
    p = s0.p.values.copy()
    zs = g.y_nodes / eps

    profK = inner[K][k]
    for io in range(1, K + 1):
        pr = inner[io][k]
        sc = eps ** io
        u1 += sc * pr.sample("U1", zs)
        u2 += sc * pr.sample("U2", zs)
        th += sc * pr.sample("Theta", zs)
        p += sc * pr.sample("P", zs)
        if io >= 2 and pr.U2.any():
            l1, l2 = _wall_lift(g, pr.U2[0, :])
            u1 += sc * l1
            u2 += sc * l2

    extra = slaved_vertical(ZGrid(z=profK.z), profK.U1, g.Lx)
    if extra.any():
        sc = eps ** (K + 1)
        u2 += sc * _profile_sample(profK.z, extra, zs)
        l1, l2 = _wall_lift(g, extra[0, :])
        u1 += sc * l1
        u2 += sc * l2

    u2[0, :] = 0.0   # wall values cancel analytically; pin the rounding
    return State(Field.on(g, u1), Field.on(g, u2), Field.on(g, th),
                 Field.on(g, p), float(outer.times[k]))


def _profile_sample(z: np.ndarray, arr: np.ndarray,
                    zs: np.ndarray) -> np.ndarray:
    out = np.zeros((zs.size, arr.shape[1]))
    inside = zs <= z[-1]
    out[inside] = CubicSpline(z, arr, axis=0)(zs[inside])
    return out


def _time_index(times, t: float) -> int:
    ts = np.asarray(times)
    k = int(np.argmin(np.abs(ts - t)))
    if abs(ts[k] - t) > 1e-9 * max(1.0, abs(t)):
        raise ConfigError(f"t={t:g} is not a stored time")
    return k


# ------------------------------------------------------------ approx object

@dataclass(eq=False)
class ApproxSolution:
    """Assembled order-K approximation with the sample/remainder protocol
    the linearized stepper consumes.  Between stored times both the fields
    and the defect are interpolated linearly."""
    g: Grid
    eps: float
    K: int
    alpha: float
    outer: Trajectory
    zgrid: ZGrid
    inner: dict
    _fields: dict = dfield(default_factory=dict, repr=False)
    _defects: dict = dfield(default_factory=dict, repr=False)

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self.outer.times, dtype=np.float64)

    def state_at(self, t: float) -> State:
        return assemble(self.outer, self.inner, self.eps, self.K, self.g, t)

    def _at(self, k: int):
        if k not in self._fields:
            s = self.state_at(float(self.times[k]))
            self._fields[k] = (s.u1.values, s.u2.values, s.theta.values,
                               s.p.values)
        return self._fields[k]

    def _bracket(self, t: float):
        ts = self.times
        if t < ts[0] - 1e-9 or t > ts[-1] + 1e-9:
            raise ConfigError(f"t={t:g} outside stored range "
                              f"[{ts[0]:g}, {ts[-1]:g}]")
        k = min(max(int(np.searchsorted(ts, t) - 1), 0), ts.size - 2)
        w = (t - ts[k]) / (ts[k + 1] - ts[k])
        return k, min(max(w, 0.0), 1.0)

    def sample(self, g: Grid, t: float):
        k, w = self._bracket(t)
        a = self._at(k)
        b = self._at(k + 1)
        return tuple((1.0 - w) * x + w * y for x, y in zip(a[:3], b[:3]))

    def _defect(self, k: int):
        """Defect of the composite field in the viscous system at stored
        time k; time derivative by second-order differences of neighbours."""
        if k in self._defects:
            return self._defects[k]
        g, ts = self.g, self.times
        n = ts.size
        if n < 3:
            raise ConfigError("defect evaluation needs at least 3 snapshots")
        if k == 0:
            ks, wts = (0, 1, 2), (-3.0, 4.0, -1.0)
            dt2 = ts[2] - ts[0]
        elif k == n - 1:
            ks, wts = (n - 3, n - 2, n - 1), (1.0, -4.0, 3.0)
            dt2 = ts[-1] - ts[-3]
        else:
            ks, wts = (k - 1, k, k + 1), (-1.0, 0.0, 1.0)
            dt2 = ts[k + 1] - ts[k - 1]
        parts = [self._at(i) for i in ks]
        du = [sum(w * p[j] for w, p in zip(wts, parts)) / dt2
              for j in range(4)]
        a1, a2, ath, ap = self._at(k)
        nu = self.eps ** 2
        d1 = (du[0] + a1 * g.ddx_arr(a1) + a2 * g.ddy_arr(a1)
              + g.ddx_arr(ap) - nu * g.ddy_arr(g.ddy_arr(a1)))
        d2 = (du[1] + a1 * g.ddx_arr(a2) + a2 * g.ddy_arr(a2)
              + g.ddy_arr(ap) - nu * g.ddy_arr(g.ddy_arr(a2)) - ath)
        dt_ = du[2] + a1 * g.ddx_arr(ath) + a2 * g.ddy_arr(ath)
        self._defects[k] = (d1, d2, dt_)
        return self._defects[k]

    def remainder(self, g: Grid, t: float):
        """Forcing the error system inherits: minus the composite defect."""
        k, w = self._bracket(t)
        a = self._defect(k)
        b = self._defect(k + 1)
        return tuple(-((1.0 - w) * x + w * y) for x, y in zip(a, b))

    def theta_layer_max(self) -> float:
        """Largest first-order temperature profile over all stored times.

        Whether the temperature grows a layer at first order depends on
        the data; callers surface this so runs with a genuinely nonzero
        Theta profile are visible.
        """
        if 1 not in self.inner:
            return 0.0
        return max(float(np.abs(p.Theta).max()) for p in self.inner[1])


def residual(a: ApproxSolution, g: Grid, t: float, params: PhysParams):
    """Defect of the composite field in the viscous system, divided by
    eps^K (the normalized remainder of the error equation, up to sign).

    The defect is cached per stored time in the regime the expansion was
    built for, so params must describe that regime.
    """
    if not (np.isclose(params.nu2, a.eps ** 2, rtol=1e-12, atol=0.0)
            and params.nu1 == 0.0 and params.kappa1 == 0.0
            and params.kappa2 == 0.0):
        raise ConfigError(
            "residual expects the vertical-viscosity regime the expansion "
            f"was built for (nu2=eps^2 with eps={a.eps:g}, no other "
            "dissipation)")
    k = _time_index(a.times, t)
    d1, d2, dth = a._defect(k)
    sc = a.eps ** a.K
    return ((Field.on(g, d1 / sc), Field.on(g, d2 / sc)),
            Field.on(g, dth / sc))


def matching_defects(a: ApproxSolution, t: float) -> dict:
    """Trace residuals of the matched wall conditions at a stored time.

    impermeability[i]: vertical outer + layer wall values, order i;
    slip[i]: dy u1^i + dz U1^{i+1} - alpha(u1^i + U1^i) at the wall,
    i <= K-1; leading_flux: dz U1^0(x,0).
    """
    k = _time_index(a.times, t)
    g, zg = a.g, a.zgrid

    def dz0(arr):
        return (-3.0 * arr[0] + 4.0 * arr[1] - arr[2]) / (2.0 * zg.h)

    s0 = a.outer.states[k]
    out = {"impermeability": {}, "slip": {},
           "leading_flux": float(np.abs(dz0(a.inner[0][k].U1)).max())}

    for io in range(a.K + 1):
        pr = a.inner[io][k]
        if io == 0:
            wall_outer = s0.u2.values[0, :]
        elif pr.U2.any():
            # the order-io outer partner is the cutoff lift at that order
            wall_outer = _wall_lift(g, pr.U2[0, :])[1][0, :]
        else:
            wall_outer = np.zeros(pr.U2.shape[1])
        out["impermeability"][io] = float(
            np.abs(wall_outer + pr.U2[0, :]).max())

    for io in range(a.K):
        nxt = a.inner[io + 1][k]
        if io == 0:
            gu1 = s0.u1.values[0, :]
            gdy = g.ddy_arr(s0.u1.values)[0, :]
            res = gdy + dz0(nxt.U1) - a.alpha * (gu1 + a.inner[0][k].U1[0, :])
        else:
            res = dz0(nxt.U1) - a.alpha * a.inner[io][k].U1[0, :]
        out["slip"][io] = float(np.abs(res).max())
    return out


def build_approx(g: Grid, traj: Trajectory, eps: float, K: int, alpha: float,
                 nz: int = MIN_NZ, zmax: float = ZMAX) -> ApproxSolution:
    """Construct the full order-K approximation from an inviscid run."""
    if K not in (0, 1, 2):
        raise ConfigError(f"expansion order must be 0, 1 or 2, got {K}")
    if len(traj.times) < 3:
        raise ConfigError("approximate solution needs at least 3 snapshots")
    spans = np.diff(np.asarray(traj.times, dtype=np.float64))
    if spans.max() - spans.min() > 1e-9 * spans.max():
        raise ConfigError("stored times must be uniformly spaced (the "
                          "defect differencing assumes it)")
    zg = build_zgrid(nz, zmax)
    nx = g.shape[1]
    inner = {0: leading_profiles(traj.times, zg, nx)}
    if K >= 1:
        traces = outer_traces(g, traj)
        inner.update(solve_profiles(traces, alpha, zg, order_max=K))
    return ApproxSolution(g=g, eps=eps, K=K, alpha=alpha, outer=traj,
                          zgrid=zg, inner=inner)


# ----------------------------------------------------------------- file I/O

def profile_to_snapshot(path, p: InnerProfile) -> None:
    meta = {"kind": "inner_profile", "axis": "z_fast", "order": p.order,
            "time": p.time, "nz": int(p.z.size), "zmax": float(p.z[-1])}
    write_snapshot(path, {"U1": p.U1, "U2": p.U2, "Theta": p.Theta,
                          "P": p.P}, meta)


def profile_from_snapshot(path) -> InnerProfile:
    meta, fields = read_snapshot(path)
    if meta.get("axis") != "z_fast":
        raise ValueError("snapshot does not carry a fast-axis profile")
    z = np.linspace(0.0, float(meta["zmax"]), int(meta["nz"]))
    return InnerProfile(order=int(meta["order"]), time=float(meta["time"]),
                        z=z, U1=fields["U1"], U2=fields["U2"],
                        Theta=fields["Theta"], P=fields["P"])
