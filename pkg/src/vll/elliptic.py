"""Poisson/Neumann pressure solves and the two-part pressure splitting.

Fourier in x reduces the problem to one banded 1-D system per mode:
interior rows are the 3-point second derivative minus k^2, the wall and top
rows impose the Neumann data through the same one-sided 3-point stencil the
rest of the package uses for traces.  The x-mean mode is singular (pure
Neumann); its right-hand side is mean-corrected for compatibility, the top
flux row gives way to a point pin, and the gauge is restored afterwards by
subtracting the weighted mean.  Everything is a direct solve; the residual
is checked a posteriori in the backward-error sense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import SolveError
from .grid import Grid, _unwrap

_KL = 2
_KU = 2
BACKWARD_TOL = 1e-10


@dataclass
class NeumannProblem:
    """Laplace(p) = rhs with d_y p given on the wall and top rows."""

    rhs: object  # Field or (Ny, Nx) array
    bottom_flux: np.ndarray  # (Nx,), d_y p at y = 0
    top_flux: np.ndarray  # (Nx,), d_y p at y = Ly


def _mode_matrix(g: Grid, k2: float, pin_top: bool) -> np.ndarray:
    Ny = g.Ny
    A = np.zeros((Ny, Ny))
    for j in range(1, Ny - 1):
        A[j, j - 1] = g.d2_cm[j]
        A[j, j] = g.d2_c0[j] - k2
        A[j, j + 1] = g.d2_cp[j]
    A[0, 0:3] = g.d3_row0
    if pin_top:
        A[-1, -1] = 1.0
    else:
        A[-1, -3:] = g.d3_rowN
    return A


def _band_stack(g: Grid) -> np.ndarray:
    """(B, 2kl+ku+1, Ny) bands for every rfft mode; mode 0 gets the pin row."""
    Ny = g.Ny
    base = kernels.dense_to_band(_mode_matrix(g, 0.0, pin_top=False), _KL, _KU)
    B = g.kx.size
    ab = np.repeat(base[None, :, :], B, axis=0)
    diag = _KL + _KU
    ab[:, diag, 1:Ny - 1] -= (g.kx ** 2)[:, None]
    ab[0] = kernels.dense_to_band(_mode_matrix(g, 0.0, pin_top=True), _KL, _KU)
    return ab


def solve_neumann(g: Grid, prob: NeumannProblem) -> np.ndarray:
    """Solve the Neumann problem; returns the zero-mean pressure samples."""
    rhs = _unwrap(g, prob.rhs)
    bot = np.asarray(prob.bottom_flux, dtype=np.float64)
    top = np.asarray(prob.top_flux, dtype=np.float64)
    if bot.shape != (g.Nx,) or top.shape != (g.Nx,):
        raise ValueError(f"flux arrays must have shape ({g.Nx},)")

    rhat = np.fft.rfft(rhs, axis=1)
    bhat = np.fft.rfft(bot)
    that = np.fft.rfft(top)

    # compatibility of the singular mean mode: shift its rhs by a constant
    # so the discrete integral matches the net boundary flux
    mean_rhs = float(g.wy @ rhat[:, 0].real) / g.Ly
    mean_flux = (that[0].real - bhat[0].real) / g.Ly
    rhat[:, 0] -= mean_rhs - mean_flux

    B = g.kx.size
    b = np.empty((B, g.Ny, 2))
    b[:, :, 0] = rhat.real.T
    b[:, :, 1] = rhat.imag.T
    b[:, 0, 0] = bhat.real
    b[:, 0, 1] = bhat.imag
    b[:, -1, 0] = that.real
    b[:, -1, 1] = that.imag
    b[0, -1, :] = 0.0  # pinned gauge row for the mean mode

    if g._neumann_cache is None:
        ab = _band_stack(g)
        lu, piv = kernels.gbtrf(ab.copy(), _KL, _KU)
        g._neumann_cache = (ab, lu, piv)
    ab, lu, piv = g._neumann_cache
    x = kernels.gbtrs(lu, piv, b, _KL, _KU)

    _check_backward_error(ab, b, x)

    phat = (x[:, :, 0] + 1j * x[:, :, 1]).T
    p = np.fft.irfft(phat, n=g.Nx, axis=1)
    p -= g.integral(p) / (g.Lx * g.Ly)
    if hasattr(prob.rhs, "like"):
        return prob.rhs.like(p)
    return p


def _band_matvec(ab: np.ndarray, x: np.ndarray) -> np.ndarray:
    """y = A x for the padded band stack; x has shape (B, n, m)."""
    n = ab.shape[2]
    out = np.zeros_like(x)
    for d in range(-_KU, _KL + 1):
        i0, i1 = max(0, d), n + min(0, d)
        out[:, i0:i1] += ab[:, _KL + _KU + d, i0 - d:i1 - d, None] * x[:, i0 - d:i1 - d]
    return out


def _check_backward_error(ab, b, x) -> None:
    res = np.abs(_band_matvec(ab, x) - b)
    scale = _band_matvec(np.abs(ab), np.abs(x)) + np.abs(b)
    worst = float((res / np.maximum(scale, 1e-300)).max())
    if worst > BACKWARD_TOL:
        raise SolveError(
            f"pressure solve backward error {worst:.3e} exceeds {BACKWARD_TOL:.1e}")


def split_pressure(g: Grid, F, u1, params):
    """Split p into the forced part and the slip-induced harmonic part.

    p1 absorbs the body-force divergence with the force's own wall flux;
    p2 is harmonic, driven purely by the wall data -alpha nu2 d_x u1(x,0).
    Returns (p1, p2, p) with p = p1 + p2.
    """
    F1, F2 = (_unwrap(g, f) for f in F)
    v1 = _unwrap(g, u1)
    rhs1 = g.ddx_arr(F1) + g.ddy_arr(F2)
    p1 = solve_neumann(g, NeumannProblem(rhs1, F2[0].copy(), F2[-1].copy()))

    gamma = -params.alpha * params.nu2
    if gamma == 0.0:
        p2 = np.zeros(g.shape)
    else:
        wall = gamma * g.ddx_arr(v1)[0]
        p2 = solve_neumann(g, NeumannProblem(np.zeros(g.shape), wall,
                                             np.zeros(g.Nx)))
    p = p1 + p2
    p -= g.integral(p) / (g.Lx * g.Ly)
    if hasattr(u1, "like"):
        return u1.like(p1), u1.like(p2), u1.like(p)
    return p1, p2, p
