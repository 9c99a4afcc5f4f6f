"""Batched banded linear solvers used by the elliptic, projection, and
implicit-diffusion paths.

Matrices are stored in LAPACK ``gbsv`` band layout with ``kl`` fill rows on
top: a batch is an array ``ab`` of shape ``(B, 2*kl+ku+1, n)`` where matrix
entry ``A[i, j]`` lives at ``ab[b, kl+ku+i-j, j]``.  Factorization uses
partial pivoting (the flux and Robin boundary rows are not diagonally
dominant, so pivot-free elimination is unsafe).

Two implementations are provided:

* a numba-compiled kernel operating batch element by batch element, and
* a pure-numpy kernel vectorized across the batch axis.

Both run the same elimination order per system; results agree to roundoff.
The active path is chosen at import time: numba when importable unless the
environment variable ``VLL_NUMBA`` is ``0``/``false``/``off``.  Every public
function also accepts ``force="numba"|"numpy"`` so tests and benchmarks can
pin a path explicitly.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import SolveError

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is an install requirement
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


def _env_wants_numba() -> bool:
    flag = os.environ.get("VLL_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


USE_NUMBA = HAS_NUMBA and _env_wants_numba()


# ----------------------------------------------------------------------
# numba path: straightforward scalar loops, one batch element at a time.
# ----------------------------------------------------------------------

@njit(cache=True, fastmath=False)
def _gbtrf_nb(ab, kl, ku, piv):  # pragma: no cover - exercised via wrapper
    B, nb, n = ab.shape
    bad = 0
    for b in range(B):
        for j in range(n):
            lead = kl + ku
            # pivot search over rows j .. min(n-1, j+kl)
            mlo = min(kl, n - 1 - j)
            p = 0
            best = abs(ab[b, lead, j])
            for r in range(1, mlo + 1):
                v = abs(ab[b, lead + r, j])
                if v > best:
                    best = v
                    p = r
            piv[b, j] = j + p
            if best == 0.0:
                if bad == 0:
                    bad = j + 1
                continue
            jhi = min(n - 1, j + kl + ku)
            if p != 0:
                for c in range(j, jhi + 1):
                    r1 = lead + j - c
                    r2 = lead + j + p - c
                    tmp = ab[b, r1, c]
                    ab[b, r1, c] = ab[b, r2, c]
                    ab[b, r2, c] = tmp
            pivval = ab[b, lead, j]
            for r in range(1, mlo + 1):
                m = ab[b, lead + r, j] / pivval
                ab[b, lead + r, j] = m
                for c in range(j + 1, jhi + 1):
                    ab[b, lead + r + j - c, c] -= m * ab[b, lead + j - c, c]
    return bad


@njit(cache=True, fastmath=False)
def _gbtrs_nb(ab, kl, ku, piv, rhs):  # pragma: no cover - exercised via wrapper
    B, nb, n = ab.shape
    nrhs = rhs.shape[2]
    lead = kl + ku
    for b in range(B):
        for j in range(n):
            p = piv[b, j]
            if p != j:
                for k in range(nrhs):
                    tmp = rhs[b, j, k]
                    rhs[b, j, k] = rhs[b, p, k]
                    rhs[b, p, k] = tmp
            mlo = min(kl, n - 1 - j)
            for r in range(1, mlo + 1):
                m = ab[b, lead + r, j]
                for k in range(nrhs):
                    rhs[b, j + r, k] -= m * rhs[b, j, k]
        for j in range(n - 1, -1, -1):
            jhi = min(n - 1, j + kl + ku)
            for k in range(nrhs):
                acc = rhs[b, j, k]
                for c in range(j + 1, jhi + 1):
                    acc -= ab[b, lead + j - c, c] * rhs[b, c, k]
                rhs[b, j, k] = acc / ab[b, lead, j]


# ----------------------------------------------------------------------
# numpy path: same elimination, vectorized across the batch axis.
# ----------------------------------------------------------------------

def _gbtrf_np(ab, kl, ku, piv):
    B, nb, n = ab.shape
    lead = kl + ku
    bidx = np.arange(B)
    bad = 0
    for j in range(n):
        mlo = min(kl, n - 1 - j)
        cand = np.abs(ab[:, lead:lead + mlo + 1, j])
        p = np.argmax(cand, axis=1)
        piv[:, j] = j + p
        pivabs = cand[bidx, p]
        if bad == 0 and np.any(pivabs == 0.0):
            bad = j + 1
        jhi = min(n - 1, j + kl + ku)
        cs = np.arange(j, jhi + 1)
        if np.any(p != 0):
            rows_j = lead + j - cs
            rows_p = (lead + j - cs)[None, :] + p[:, None]
            vj = ab[:, rows_j, cs].copy()
            vp = ab[bidx[:, None], rows_p, cs[None, :]].copy()
            ab[:, rows_j, cs] = vp
            ab[bidx[:, None], rows_p, cs[None, :]] = vj
        pivval = ab[:, lead, j]
        safe = np.where(pivval == 0.0, 1.0, pivval)
        if mlo > 0:
            m = ab[:, lead + 1:lead + mlo + 1, j] / safe[:, None]
            ab[:, lead + 1:lead + mlo + 1, j] = m
            if jhi > j:
                cs2 = np.arange(j + 1, jhi + 1)
                urow = ab[:, lead + j - cs2, cs2]
                rr = (lead + j - cs2)[None, :] + np.arange(1, mlo + 1)[:, None]
                ab[:, rr, cs2[None, :]] -= m[:, :, None] * urow[:, None, :]
    return bad


def _gbtrs_np(ab, kl, ku, piv, rhs):
    B, nb, n = ab.shape
    lead = kl + ku
    bidx = np.arange(B)
    for j in range(n):
        p = piv[:, j]
        if np.any(p != j):
            vj = rhs[:, j, :].copy()
            vp = rhs[bidx, p, :].copy()
            rhs[:, j, :] = vp
            rhs[bidx, p, :] = vj
        mlo = min(kl, n - 1 - j)
        if mlo > 0:
            m = ab[:, lead + 1:lead + mlo + 1, j]
            rhs[:, j + 1:j + mlo + 1, :] -= m[:, :, None] * rhs[:, j, :][:, None, :]
    for j in range(n - 1, -1, -1):
        jhi = min(n - 1, j + kl + ku)
        if jhi > j:
            cs = np.arange(j + 1, jhi + 1)
            u = ab[:, lead + j - cs, cs]
            rhs[:, j, :] -= np.einsum("bc,bck->bk", u, rhs[:, cs, :])
        rhs[:, j, :] /= ab[:, lead, j][:, None]


# ----------------------------------------------------------------------
# public API
# ----------------------------------------------------------------------

def _pick(force: str | None) -> bool:
    if force is None:
        return USE_NUMBA
    if force == "numba":
        if not HAS_NUMBA:
            raise SolveError("numba path requested but numba is not importable")
        return True
    if force == "numpy":
        return False
    raise ValueError(f"force must be 'numba', 'numpy', or None, got {force!r}")


def gbtrf(ab: np.ndarray, kl: int, ku: int, force: str | None = None):
    """Factor a batch of band matrices in place (partial pivoting).

    ``ab`` has shape ``(B, 2*kl+ku+1, n)`` and is overwritten with the LU
    factors; returns ``(ab, piv)``.  Raises SolveError on an exactly zero
    pivot.
    """
    ab = np.ascontiguousarray(ab, dtype=np.float64)
    B, nb, n = ab.shape
    if nb != 2 * kl + ku + 1:
        raise ValueError(f"band storage has {nb} rows, expected {2 * kl + ku + 1}")
    piv = np.empty((B, n), dtype=np.int64)
    if _pick(force):
        bad = _gbtrf_nb(ab, kl, ku, piv)
    else:
        bad = _gbtrf_np(ab, kl, ku, piv)
    if bad:
        raise SolveError(f"zero pivot in banded factorization at column {bad - 1}")
    return ab, piv


def gbtrs(lu: np.ndarray, piv: np.ndarray, rhs: np.ndarray, kl: int, ku: int,
          force: str | None = None) -> np.ndarray:
    """Solve with factors from :func:`gbtrf`.  ``rhs`` shape ``(B, n, nrhs)``."""
    x = np.ascontiguousarray(rhs, dtype=np.float64).copy()
    if _pick(force):
        _gbtrs_nb(lu, kl, ku, piv, x)
    else:
        _gbtrs_np(lu, kl, ku, piv, x)
    return x


def solve_banded_many(ab: np.ndarray, rhs: np.ndarray, kl: int, ku: int,
                      force: str | None = None) -> np.ndarray:
    """Factor and solve a batch: ``ab (B, 2kl+ku+1, n)``, ``rhs (B, n, nrhs)``."""
    lu, piv = gbtrf(ab.copy(), kl, ku, force=force)
    return gbtrs(lu, piv, rhs, kl, ku, force=force)


def dense_to_band(A: np.ndarray, kl: int, ku: int) -> np.ndarray:
    """Pack a dense matrix into the padded band layout used here."""
    n = A.shape[0]
    ab = np.zeros((2 * kl + ku + 1, n))
    for i in range(n):
        for j in range(max(0, i - kl), min(n, i + ku + 1)):
            ab[kl + ku + i - j, j] = A[i, j]
    return ab


def band_to_dense(ab: np.ndarray, kl: int, ku: int) -> np.ndarray:
    """Inverse of :func:`dense_to_band` (ignores the fill rows)."""
    nb, n = ab.shape
    A = np.zeros((n, n))
    for j in range(n):
        for i in range(max(0, j - ku), min(n, j + kl + 1)):
            A[i, j] = ab[kl + ku + i - j, j]
    return A


def warmup() -> None:
    """Trigger JIT compilation on a tiny system so timings stay honest."""
    ab = np.zeros((2, 7, 8))
    ab[4] = 2.0
    ab[3, 1:] = -1.0
    ab[5, :-1] = -1.0
    rhs = np.ones((2, 8, 3))
    solve_banded_many(ab, rhs, 2, 2)
