"""Field/state containers, well-prepared initial data, projection, wall BCs.

Velocity corrections from :func:`project_div_free` live in the W-adjoint
gradient space (the quadrature-weighted orthogonal complement of the
discretely divergence-free fields), so removing them is an exact
W-orthogonal projection: the output is unchanged by a second application
and the removed part is W-perpendicular to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError
from .grid import Grid, _unwrap
from .snapshots import read_snapshot, write_snapshot

DIV_TOL = 1e-10
_PROJ_KL = 3
_PROJ_KU = 3


class Field:
    """Scalar samples on a grid: values[j, i] = f(x_i, y_j), x fastest."""

    __slots__ = ("values", "grid_id")

    def __init__(self, values: np.ndarray, grid_id: int):
        values = np.asarray(values, dtype=np.float64)
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        self.values = values
        self.grid_id = grid_id

    @classmethod
    def on(cls, g: Grid, values) -> "Field":
        return cls(g.check_shape(np.asarray(values, dtype=np.float64)), g.gid)

    @classmethod
    def zeros(cls, g: Grid) -> "Field":
        return cls(np.zeros(g.shape), g.gid)

    def like(self, values: np.ndarray) -> "Field":
        return Field(values, self.grid_id)

    def __repr__(self):
        return f"Field(shape={self.values.shape}, grid_id={self.grid_id})"


@dataclass
class State:
    """Prognostic unknowns at one instant: velocity, buoyancy, pressure."""

    u1: Field
    u2: Field
    theta: Field
    p: Field
    time: float

    def fields(self) -> dict[str, np.ndarray]:
        return {"u1": self.u1.values, "u2": self.u2.values,
                "theta": self.theta.values, "p": self.p.values}


@dataclass(frozen=True)
class PhysParams:
    """Dissipation coefficients and the wall condition.

    The headline regime is nu2 = eps^2 with every other coefficient zero
    and the slip wall; the inviscid limit keeps only u.n = 0.  The
    impermeable_only variant is rejected together with vertical dissipation
    because without a slip condition the vertical-diffusion wall flux is
    undetermined.
    """

    eps: float
    alpha: float
    nu1: float = 0.0
    nu2: float = 0.0
    kappa1: float = 0.0
    kappa2: float = 0.0
    bc_variant: str = "navier"

    def __post_init__(self):
        if not (0.0 < self.eps <= 1.0):
            raise ConfigError(f"eps must lie in (0, 1], got {self.eps}")
        for name in ("nu1", "nu2", "kappa1", "kappa2"):
            v = getattr(self, name)
            if v < 0 or not np.isfinite(v):
                raise ConfigError(f"{name} must be a finite nonnegative scalar, got {v}")
        if not np.isfinite(self.alpha):
            raise ConfigError(f"alpha must be finite, got {self.alpha}")
        if self.bc_variant not in ("navier", "impermeable_only"):
            raise ConfigError(f"unknown bc_variant {self.bc_variant!r}")
        if self.bc_variant == "impermeable_only" and (self.nu2 > 0 or self.kappa2 > 0):
            raise ConfigError(
                "impermeable_only requires nu2 = kappa2 = 0; vertical dissipation "
                "needs the slip condition to close the wall flux")

    @classmethod
    def headline(cls, eps: float, alpha: float) -> "PhysParams":
        return cls(eps=eps, alpha=alpha, nu2=eps * eps)

    @classmethod
    def inviscid(cls, alpha: float = 0.0) -> "PhysParams":
        return cls(eps=1.0, alpha=alpha, bc_variant="impermeable_only")


# ------------------------------------------------------------------ basics

def divergence(g: Grid, u1, u2) -> np.ndarray:
    return g.ddx_arr(_unwrap(g, u1)) + g.ddy_arr(_unwrap(g, u2))


def check_state(g: Grid, s: State, div_tol: float = DIV_TOL) -> None:
    """Raise if s violates the state invariants on g."""
    for name, arr in s.fields().items():
        g.check_shape(arr)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"state field {name} contains non-finite values")
    if np.any(s.u2.values[0] != 0.0):
        raise ValueError("u2 is not identically zero on the wall row")
    scale = max(1.0, np.abs(s.u1.values).max(), np.abs(s.u2.values).max())
    dmax = np.abs(divergence(g, s.u1, s.u2)).max()
    if dmax > div_tol * scale:
        raise ValueError(f"divergence {dmax:.3e} exceeds tolerance {div_tol:.1e}")


def zero_state(g: Grid, time: float = 0.0) -> State:
    z = Field.zeros(g)
    return State(z, z, z, z, time)


# -------------------------------------------------------------- projection

def _proj_factors(g: Grid):
    """Factored per-mode correction systems C_k = k^2 I + D3 P0 W^-1 D3^T W.

    Built once per grid; the band template depends only on the y-nodes and
    the mode set is fixed by Nx, so the whole batched LU is cacheable.
    """
    if g._proj_cache is not None:
        return g._proj_cache
    Ny = g.Ny
    D3 = np.zeros((Ny, Ny))
    for j in range(1, Ny - 1):
        D3[j, j - 1] = g.d3_cm[j]
        D3[j, j] = g.d3_c0[j]
        D3[j, j + 1] = g.d3_cp[j]
    D3[0, 0:3] = g.d3_row0
    D3[-1, -3:] = g.d3_rowN

    adj = (D3.T * g.wy[None, :]) / g.wy[:, None]  # W^-1 D3^T W
    adj[0, :] = 0.0  # keep the wall value of u2 untouched
    M = D3 @ adj
    band = kernels.dense_to_band(M, _PROJ_KL, _PROJ_KU)
    if not np.allclose(kernels.band_to_dense(band, _PROJ_KL, _PROJ_KU), M):
        raise AssertionError("projection operator exceeds assumed bandwidth")

    ks = g.kx[1:-1]  # interior modes; mean and Nyquist handled directly
    B = ks.size
    ab = np.repeat(band[None, :, :], B, axis=0)
    ab[:, _PROJ_KL + _PROJ_KU, :] += (ks ** 2)[:, None]
    lu, piv = kernels.gbtrf(ab, _PROJ_KL, _PROJ_KU)
    g._proj_cache = (lu, piv, adj)
    return g._proj_cache


def project_div_free(g: Grid, u1, u2):
    """Remove the W-adjoint gradient part so the discrete divergence vanishes.

    The wall value of u2 and the x-mean / Nyquist content of u1 are left
    untouched; the x-mean and Nyquist parts of u2 are set to zero (the only
    divergence-free, wall-respecting choice for them).
    """
    v1 = _unwrap(g, u1).copy()
    v2 = _unwrap(g, u2).copy()
    lu, piv, adj = _proj_factors(g)

    dhat = np.fft.rfft(divergence(g, v1, v2), axis=1)
    B = g.kx.size - 2
    rhs = np.empty((B, g.Ny, 2))
    rhs[:, :, 0] = dhat[:, 1:-1].real.T
    rhs[:, :, 1] = dhat[:, 1:-1].imag.T
    lam = kernels.gbtrs(lu, piv, rhs, _PROJ_KL, _PROJ_KU)
    lam_hat = (lam[:, :, 0] + 1j * lam[:, :, 1]).T  # (Ny, B)

    u1h = np.fft.rfft(v1, axis=1)
    u2h = np.fft.rfft(v2, axis=1)
    u1h[:, 1:-1] -= -g.ik[1:-1] * lam_hat
    u2h[:, 1:-1] -= adj @ lam_hat
    u2h[:, 0] = 0.0
    u2h[:, -1] = 0.0
    w1 = np.fft.irfft(u1h, n=g.Nx, axis=1)
    w2 = np.fft.irfft(u2h, n=g.Nx, axis=1)
    if hasattr(u1, "like"):
        return u1.like(w1), u2.like(w2)
    return w1, w2


# ------------------------------------------------------------ initial data

def _vortex_profile(y: np.ndarray, alpha: float):
    """g(y) = (y + alpha/2 y^2 + y^3/2) exp(-y^2/2) and derivatives.

    Normalized so g(0)=0, g'(0)=1, g''(0)=alpha (exact slip) and g'''(0)=0.
    The vanishing third derivative keeps the one-sided/centered truncation
    jump out of composed traces: D3(D3 psi) at the wall stays O(h^2).
    """
    E = np.exp(-0.5 * y * y)
    P = y + 0.5 * alpha * y * y + 0.5 * y ** 3
    P1 = 1.0 + alpha * y + 1.5 * y * y
    P2 = alpha + 3.0 * y
    P3 = 3.0
    gv = P * E
    g1 = (P1 - y * P) * E
    g2 = (P2 - P - 2.0 * y * P1 + y * y * P) * E
    g3 = (P3 - 3.0 * P1 - 3.0 * y * P2 + 3.0 * y * P + 3.0 * y * y * P1 - y ** 3 * P) * E
    return gv, g1, g2, g3


def manufactured_solution(g: Grid, t: float, amplitude: float, alpha: float):
    """Traveling-wave exact fields (u1, u2, theta, p) used by the MMS tests."""
    y = g.y_nodes[:, None]
    x = g.x_nodes[None, :]
    gv, g1, _, _ = _vortex_profile(g.y_nodes, alpha)
    s = np.sin(x + t)
    c = np.cos(x + t)
    A = amplitude
    u1 = A * s * g1[:, None]
    u2 = -A * c * gv[:, None]
    th = A * s * np.exp(-0.5 * y * y)
    p = -0.5 * A * A * (gv ** 2)[:, None] * np.ones_like(x)
    p = p - g.integral(p) / (g.Lx * g.Ly)
    return u1, u2, th, p


def manufactured_forcing(g: Grid, t: float, amplitude: float, alpha: float,
                         nu1: float = 0.0, nu2: float = 0.0,
                         kappa1: float = 0.0, kappa2: float = 0.0):
    """Closed-form source terms that make the traveling wave exact.

    Derived by substituting the fields of :func:`manufactured_solution`
    (with pressure -A^2 g^2/2 absorbing the x-independent advection part)
    into the momentum and transport equations.
    """
    yv = g.y_nodes
    x = g.x_nodes[None, :]
    gv, g1, g2, g3 = _vortex_profile(yv, alpha)
    E = np.exp(-0.5 * yv * yv)
    h1 = -yv * E
    h2 = (yv * yv - 1.0) * E
    s = np.sin(x + t)
    c = np.cos(x + t)
    A = amplitude
    col = lambda a: a[:, None]

    f1 = (A * c * col(g1)
          + A * A * s * c * col(g1 * g1 - gv * g2)
          - nu2 * A * s * col(g3)
          + nu1 * A * s * col(g1))
    f2 = (A * s * col(gv)
          - A * s * col(E)
          + nu2 * A * c * col(g2)
          - nu1 * A * c * col(gv))
    fth = (A * c * col(E)
           + A * A * s * c * col(g1 * E - gv * h1)
           + kappa1 * A * s * col(E)
           - kappa2 * A * s * col(h2))
    return f1, f2, fth


def make_initial_data(g: Grid, recipe: str, amplitude: float, alpha: float) -> State:
    """Well-prepared data: discretely divergence-free, u2(wall)=0, exact slip
    for the closed forms, theta decaying below 1e-8 by the top.

    The streamfunction recipes take the discrete curl (D3 in y, spectral in
    x): the two operators commute exactly, so the divergence vanishes to
    rounding without any projection, and the slip defect of the samples is
    a clean O(h^2).
    """
    if amplitude < 0 or not np.isfinite(amplitude):
        raise ConfigError(f"amplitude must be a finite nonnegative scalar, got {amplitude}")
    y = g.y_nodes[:, None]
    x = g.x_nodes[None, :]
    A = amplitude

    if recipe in ("vortex_pair", "manufactured"):
        gv, _, _, _ = _vortex_profile(g.y_nodes, alpha)
        psi = A * np.sin(x) * gv[:, None]
        u1 = g.ddy_arr(psi)
        u2 = -g.ddx_arr(psi)
        th = A * np.sin(x) * np.exp(-0.5 * y * y) * np.ones_like(x)
    elif recipe == "shear_jet":
        u1 = A * (1.0 + alpha * g.y_nodes)[:, None] * np.exp(-0.5 * y * y) * np.ones_like(x)
        u2 = np.zeros(g.shape)
        th = np.zeros(g.shape)
    else:
        raise ConfigError(f"unknown initial-data recipe {recipe!r}")

    s = State(Field.on(g, u1), Field.on(g, u2), Field.on(g, th),
              Field.zeros(g), 0.0)
    check_state(g, s)
    return s


# ------------------------------------------------------------------- walls

def apply_navier_bc(g: Grid, s: State, params: PhysParams) -> State:
    """Enforce the wall conditions on the discrete trace.

    u2 is pinned to zero on the wall row.  For the slip variant the wall
    value of u1 is moved so the one-sided derivative satisfies
    d_y u1 = alpha u1 exactly; on fields already compatible to O(h^2) this
    is an O(h^3) touch-up.
    """
    u1 = s.u1.values.copy()
    u2 = s.u2.values.copy()
    u2[0, :] = 0.0
    if params.bc_variant == "navier":
        r0 = g.d3_row0
        denom = params.alpha - r0[0]
        if abs(denom) > 1e-14:
            u1[0, :] = (r0[1] * u1[1, :] + r0[2] * u1[2, :]) / denom
    return State(Field.on(g, u1), Field.on(g, u2), s.theta, s.p, s.time)


def slip_defect(g: Grid, u1, alpha: float) -> np.ndarray:
    """Wall trace of d_y u1 - alpha u1 (the slip-condition residual)."""
    v = _unwrap(g, u1)
    r0 = g.d3_row0
    return r0[0] * v[0] + r0[1] * v[1] + r0[2] * v[2] - alpha * v[0]


# ---------------------------------------------------------------- file I/O

def state_to_snapshot(path, g: Grid, s: State) -> None:
    meta = {"time": s.time, "Lx": g.Lx, "Ly": g.Ly, "Nx": g.Nx, "Ny": g.Ny,
            "stretch": g.stretch, "eps_hint": g.eps_hint, "kind": "state"}
    write_snapshot(path, s.fields(), meta)


def state_from_snapshot(path, g: Grid) -> State:
    meta, fields = read_snapshot(path)
    if (meta.get("Nx"), meta.get("Ny")) != (g.Nx, g.Ny):
        raise ValueError(
            f"snapshot grid {meta.get('Nx')}x{meta.get('Ny')} does not match "
            f"{g.Nx}x{g.Ny}")
    return State(Field.on(g, fields["u1"]), Field.on(g, fields["u2"]),
                 Field.on(g, fields["theta"]), Field.on(g, fields["p"]),
                 float(meta["time"]))
