"""Truncated half-plane grid and the discrete operator toolbox.

The domain is [0, Lx)-periodic in x and [0, Ly] in y, with y-nodes clustered
near the wall y = 0 by a tanh map.  Differentiation is Fourier in x and
finite-difference in y.  Two distinct y-derivatives coexist on purpose:

* ``ddy`` (``Grid.ddy_arr``): 3-point Lagrange derivative on the stretched
  nodes, one-sided at both walls.  Second-order accurate, exact on
  quadratics.  Used for diagnostics, traces, divergence, and elliptic flux
  rows.

* ``Grid.dadv_arr``: the wide centered derivative W^{-1} Q with trapezoid
  weights W and skew Q satisfying Q + Q^T = diag(-1, 0, ..., 0, 1).  Its
  summation-by-parts identity

      <f, dadv g>_W + <dadv f, g>_W = dx * sum_x (f g |_top - f g |_wall)

  holds to machine precision and is what makes the skew-form advection in
  the solver exactly energy-neutral.  It is used only inside advection and
  dissipation quadratic forms, never for pointwise derivative values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridSizingError

_GRID_TOKEN = itertools.count(1)

STRETCH_STEP = 0.25
STRETCH_CAP = 18.0  # tanh saturates in float64 slightly above this
LAYER_NODES = 8


@dataclass(frozen=True)
class ConormalIndex:
    """Multi-index (b1, b2): apply Z1 = d/dx b1 times and Z2 = phi(y) d/dy
    b2 times, Z2 innermost."""

    b1: int
    b2: int

    def __post_init__(self):
        if self.b1 < 0 or self.b2 < 0:
            raise ValueError(f"conormal index must be nonnegative, got ({self.b1}, {self.b2})")

    @property
    def order(self) -> int:
        return self.b1 + self.b2


def _tanh_nodes(Ly: float, Ny: int, s: float) -> tuple[np.ndarray, np.ndarray]:
    xi = np.linspace(0.0, 1.0, Ny)
    if s == 0.0:
        return Ly * xi, np.full(Ny, Ly)
    t = math.tanh(s)
    y = Ly * (1.0 - np.tanh(s * (1.0 - xi)) / t)
    metric = Ly * s / (t * np.cosh(s * (1.0 - xi)) ** 2)
    y[0] = 0.0
    y[-1] = Ly
    return y, metric


def _lagrange3_d1(a: float, b: float, c: float, t: float) -> tuple[float, float, float]:
    """Derivative weights at t of the quadratic through nodes a, b, c.

    The weight at the evaluation node is pinned to minus the sum of the other
    two so constants are annihilated exactly in floating point.
    """
    wa = ((t - b) + (t - c)) / ((a - b) * (a - c))
    wb = ((t - a) + (t - c)) / ((b - a) * (b - c))
    wc = ((t - a) + (t - b)) / ((c - a) * (c - b))
    if t == a:
        wa = -(wb + wc)
    elif t == b:
        wb = -(wa + wc)
    else:
        wc = -(wa + wb)
    return wa, wb, wc


def _lagrange3_d2(a: float, b: float, c: float) -> tuple[float, float, float]:
    """Second-derivative weights (constant) of the quadratic through a, b, c.

    Middle weight pinned so constants map to exactly zero.
    """
    wa = 2.0 / ((a - b) * (a - c))
    wc = 2.0 / ((c - a) * (c - b))
    wb = -(wa + wc)
    return wa, wb, wc


class Grid:
    """Immutable discrete domain.  Construct through :func:`build_grid`."""

    def __init__(self, Lx, Ly, Nx, Ny, y_nodes, metric, stretch, eps_hint):
        self.Lx = float(Lx)
        self.Ly = float(Ly)
        self.Nx = int(Nx)
        self.Ny = int(Ny)
        self.stretch = float(stretch)
        self.eps_hint = None if eps_hint is None else float(eps_hint)
        self.gid = next(_GRID_TOKEN)

        self.y_nodes = np.asarray(y_nodes, dtype=np.float64)
        self.metric = np.asarray(metric, dtype=np.float64)
        self.x_nodes = np.arange(Nx) * (self.Lx / Nx)
        self.dx = self.Lx / Nx

        y = self.y_nodes
        self.hface = np.diff(y)
        self.min_dy = float(np.min(self.hface))
        self.max_dy = float(np.max(self.hface))

        wy = np.empty(Ny)
        wy[0] = 0.5 * self.hface[0]
        wy[-1] = 0.5 * self.hface[-1]
        wy[1:-1] = 0.5 * (y[2:] - y[:-2])
        self.wy = wy

        self.phi = y / (1.0 + y)

        kx = 2.0 * np.pi / self.Lx * np.arange(Nx // 2 + 1)
        self.kx = kx
        ik = 1j * kx
        ik[-1] = 0.0  # odd operator has no consistent Nyquist derivative
        self.ik = ik
        self.k2 = kx ** 2

        # 3-point Lagrange first derivative, one-sided at both walls
        cm = np.zeros(Ny)
        c0 = np.zeros(Ny)
        cp = np.zeros(Ny)
        for j in range(1, Ny - 1):
            cm[j], c0[j], cp[j] = _lagrange3_d1(y[j - 1], y[j], y[j + 1], y[j])
        self.d3_cm, self.d3_c0, self.d3_cp = cm, c0, cp
        self.d3_row0 = np.array(_lagrange3_d1(y[0], y[1], y[2], y[0]))
        self.d3_rowN = np.array(_lagrange3_d1(y[-3], y[-2], y[-1], y[-1]))

        # 3-point second derivative (exact on quadratics)
        dm = np.zeros(Ny)
        d0 = np.zeros(Ny)
        dp = np.zeros(Ny)
        for j in range(1, Ny - 1):
            dm[j], d0[j], dp[j] = _lagrange3_d2(y[j - 1], y[j], y[j + 1])
        self.d2_cm, self.d2_c0, self.d2_cp = dm, d0, dp
        self.d2_row0 = np.array(_lagrange3_d2(y[0], y[1], y[2]))
        self.d2_rowN = np.array(_lagrange3_d2(y[-3], y[-2], y[-1]))

        for arr in (self.y_nodes, self.metric, self.x_nodes, self.hface,
                    self.wy, self.phi, self.kx, self.ik, self.k2,
                    self.d3_cm, self.d3_c0, self.d3_cp, self.d3_row0,
                    self.d3_rowN, self.d2_cm, self.d2_c0, self.d2_cp,
                    self.d2_row0, self.d2_rowN):
            arr.flags.writeable = False

        self._proj_cache = None  # band template for the divergence projection
        self._neumann_cache = None  # per-mode pressure factorizations

    # -- shape helpers -------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        """(Ny, Nx): y is the leading axis so x is fastest in C order."""
        return (self.Ny, self.Nx)

    def check_shape(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        if values.shape != self.shape:
            raise ValueError(
                f"field shape {values.shape} does not match grid shape {self.shape}")
        return values

    # -- x derivatives (spectral) ---------------------------------------

    def ddx_arr(self, v: np.ndarray) -> np.ndarray:
        vh = np.fft.rfft(v, axis=1)
        vh *= self.ik
        return np.fft.irfft(vh, n=self.Nx, axis=1)

    def ddx2_arr(self, v: np.ndarray) -> np.ndarray:
        vh = np.fft.rfft(v, axis=1)
        vh *= -self.k2
        return np.fft.irfft(vh, n=self.Nx, axis=1)

    # -- y derivatives ---------------------------------------------------

    def ddy_arr(self, v: np.ndarray) -> np.ndarray:
        # difference form anchored at the evaluation node: since the weights
        # sum to zero by construction, constants map to exactly zero
        out = np.empty_like(v)
        out[1:-1] = (self.d3_cm[1:-1, None] * (v[:-2] - v[1:-1])
                     + self.d3_cp[1:-1, None] * (v[2:] - v[1:-1]))
        r0 = self.d3_row0
        rN = self.d3_rowN
        out[0] = r0[1] * (v[1] - v[0]) + r0[2] * (v[2] - v[0])
        out[-1] = rN[0] * (v[-3] - v[-1]) + rN[1] * (v[-2] - v[-1])
        return out

    def ddy_t_arr(self, v: np.ndarray) -> np.ndarray:
        """Transpose of ddy_arr (plain matrix transpose, no weights)."""
        out = np.zeros_like(v)
        out[:-2] += self.d3_cm[1:-1, None] * v[1:-1]
        out[1:-1] += self.d3_c0[1:-1, None] * v[1:-1]
        out[2:] += self.d3_cp[1:-1, None] * v[1:-1]
        out[0:3] += self.d3_row0[:, None] * v[0]
        out[-3:] += self.d3_rowN[:, None] * v[-1]
        return out

    def d2y_arr(self, v: np.ndarray) -> np.ndarray:
        # anchored at the stencil middle, where the pinned weight lives
        out = np.empty_like(v)
        out[1:-1] = (self.d2_cm[1:-1, None] * (v[:-2] - v[1:-1])
                     + self.d2_cp[1:-1, None] * (v[2:] - v[1:-1]))
        r0 = self.d2_row0
        rN = self.d2_rowN
        out[0] = r0[0] * (v[0] - v[1]) + r0[2] * (v[2] - v[1])
        out[-1] = rN[0] * (v[-3] - v[-2]) + rN[2] * (v[-1] - v[-2])
        return out

    def dadv_arr(self, v: np.ndarray) -> np.ndarray:
        """Wide SBP derivative W^{-1} Q; see module docstring."""
        out = np.empty_like(v)
        out[1:-1] = (v[2:] - v[:-2]) / (2.0 * self.wy[1:-1, None])
        out[0] = (v[1] - v[0]) / (2.0 * self.wy[0])
        out[-1] = (v[-1] - v[-2]) / (2.0 * self.wy[-1])
        return out

    # -- quadrature -------------------------------------------------------

    def integral(self, v: np.ndarray) -> float:
        return float(self.dx * np.sum(self.wy @ v))

    def l2(self, v: np.ndarray) -> float:
        return math.sqrt(max(self.integral(np.asarray(v) ** 2), 0.0))

    def linf(self, v: np.ndarray) -> float:
        return float(np.max(np.abs(v)))

    def __repr__(self):
        return (f"Grid(Lx={self.Lx:g}, Ly={self.Ly:g}, Nx={self.Nx}, Ny={self.Ny}, "
                f"stretch={self.stretch:g}, min_dy={self.min_dy:.3e})")


def _layer_counts(y: np.ndarray, eps_hint: float) -> tuple[int, int]:
    strict = int(np.count_nonzero(y < eps_hint))
    inside = int(np.count_nonzero(y <= eps_hint))
    covering = inside + (1 if inside < y.size else 0)
    return strict, covering


def build_grid(Lx: float, Ly: float, Nx: int, Ny: int,
               stretch: float = 0.0, eps_hint: float | None = None) -> Grid:
    """Build the computational grid.

    ``eps_hint``, when given, is the smallest boundary-layer width the grid
    must resolve: the wall region [0, eps_hint] has to be covered by at
    least 8 nodes (counting the first node at or beyond eps_hint as the
    closing node of the covered interval).  For stretch > 0 the clustering
    parameter is raised automatically until 8 nodes lie strictly below
    eps_hint; for stretch = 0 the spacing stays uniform and an unreachable
    guarantee is an error.  With eps_hint omitted no layer guarantee is
    enforced and the requested stretch is used as-is.
    """
    if Nx < 8 or Nx % 2 != 0:
        raise GridSizingError(f"Nx must be even and >= 8, got {Nx}")
    if Ny < 8:
        raise GridSizingError(f"Ny must be >= 8, got {Ny}")
    if not (Lx > 0 and Ly > 0):
        raise GridSizingError(f"domain lengths must be positive, got Lx={Lx}, Ly={Ly}")
    if stretch < 0 or not math.isfinite(stretch):
        raise GridSizingError(f"stretch must be finite and >= 0, got {stretch}")
    if eps_hint is not None and not (0.0 < eps_hint <= 1.0):
        raise GridSizingError(f"eps_hint must lie in (0, 1], got {eps_hint}")

    s = float(stretch)
    if s == 0.0:
        y, metric = _tanh_nodes(Ly, Ny, 0.0)
        if eps_hint is not None:
            _, covering = _layer_counts(y, eps_hint)
            if covering < LAYER_NODES:
                raise GridSizingError(
                    f"uniform grid with Ny={Ny} places only {covering} nodes over "
                    f"[0, {eps_hint}]; need {LAYER_NODES} (raise Ny or use stretch > 0)")
        return Grid(Lx, Ly, Nx, Ny, y, metric, 0.0, eps_hint)

    while True:
        y, metric = _tanh_nodes(Ly, Ny, s)
        if eps_hint is None:
            break
        strict, _ = _layer_counts(y, eps_hint)
        if strict >= LAYER_NODES:
            break
        s += STRETCH_STEP
        if s > STRETCH_CAP:
            raise GridSizingError(
                f"cannot place {LAYER_NODES} nodes below {eps_hint} with Ny={Ny} "
                f"at any stretch <= {STRETCH_CAP}; raise Ny")
    if np.any(np.diff(y) <= 0):
        raise GridSizingError(
            f"stretch {s} degenerates node spacing at Ny={Ny}; raise Ny")
    return Grid(Lx, Ly, Nx, Ny, y, metric, s, eps_hint)


# ----------------------------------------------------------------------
# Field-polymorphic operator front ends.  They accept either a plain
# (Ny, Nx) array or any object with .values / .like(values).
# ----------------------------------------------------------------------

def _unwrap(g: Grid, f) -> np.ndarray:
    v = f.values if hasattr(f, "values") else f
    return g.check_shape(v)


def _rewrap(f, values: np.ndarray):
    return f.like(values) if hasattr(f, "like") else values


def ddx(g: Grid, f):
    """Spectral x-derivative; exact for resolved Fourier modes."""
    return _rewrap(f, g.ddx_arr(_unwrap(g, f)))


def ddy(g: Grid, f):
    """Second-order y-derivative on the stretched nodes (one-sided at walls)."""
    return _rewrap(f, g.ddy_arr(_unwrap(g, f)))


def conormal_apply(g: Grid, f, beta, m_max: int = 7):
    """Apply Z1^b1 Z2^b2 with Z1 = d/dx, Z2 = phi(y) d/dy, phi = y/(1+y).

    Z2 is applied first (innermost); since [Z1, Z2] = 0 analytically the
    order is a convention, pinned here for bit-stable results.
    """
    if not isinstance(beta, ConormalIndex):
        beta = ConormalIndex(*beta)
    if beta.order > m_max:
        raise ValueError(f"conormal order {beta.order} exceeds cap m_max={m_max}")
    v = _unwrap(g, f)
    for _ in range(beta.b2):
        v = g.phi[:, None] * g.ddy_arr(v)
    for _ in range(beta.b1):
        v = g.ddx_arr(v)
    return _rewrap(f, v)
