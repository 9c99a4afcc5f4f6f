"""Banded-solver kernels against dense numpy oracles, both dispatch paths."""

import numpy as np
import pytest

from vll.errors import SolveError
from vll.kernels import (
    HAS_NUMBA,
    band_to_dense,
    dense_to_band,
    gbtrf,
    gbtrs,
    solve_banded_many,
)

PATHS = ["numpy"] + (["numba"] if HAS_NUMBA else [])


def random_banded(rng, n, kl, ku, dominant=True):
    A = np.zeros((n, n))
    for i in range(n):
        lo, hi = max(0, i - kl), min(n, i + ku + 1)
        A[i, lo:hi] = rng.standard_normal(hi - lo)
        if dominant:
            A[i, i] = np.sum(np.abs(A[i])) + 1.0
    return A


@pytest.mark.parametrize("force", PATHS)
@pytest.mark.parametrize("kl,ku", [(1, 1), (2, 2), (3, 3), (2, 1)])
def test_matches_dense_solve(force, kl, ku):
    rng = np.random.default_rng(7)
    n, B, nrhs = 24, 5, 3
    dense = [random_banded(rng, n, kl, ku) for _ in range(B)]
    ab = np.stack([dense_to_band(A, kl, ku) for A in dense])
    rhs = rng.standard_normal((B, n, nrhs))
    x = solve_banded_many(ab, rhs, kl, ku, force=force)
    for b in range(B):
        expect = np.linalg.solve(dense[b], rhs[b])
        assert np.max(np.abs(x[b] - expect)) < 1e-10


@pytest.mark.parametrize("force", PATHS)
def test_pivoting_required(force):
    # zero leading diagonal entry: elimination without row swaps would divide
    # by zero, solve must still succeed
    n = 10
    rng = np.random.default_rng(3)
    A = random_banded(rng, n, 2, 2)
    A[0, 0] = 0.0
    rhs = rng.standard_normal((1, n, 2))
    ab = dense_to_band(A, 2, 2)[None]
    x = solve_banded_many(ab, rhs, 2, 2, force=force)
    expect = np.linalg.solve(A, rhs[0])
    assert np.max(np.abs(x[0] - expect)) < 1e-10


@pytest.mark.parametrize("force", PATHS)
def test_factor_reuse(force):
    rng = np.random.default_rng(11)
    n = 16
    A = random_banded(rng, n, 1, 1)
    ab = dense_to_band(A, 1, 1)[None]
    lu, piv = gbtrf(ab.copy(), 1, 1, force=force)
    for seed in (1, 2):
        rhs = np.random.default_rng(seed).standard_normal((1, n, 1))
        x = gbtrs(lu, piv, rhs, 1, 1, force=force)
        assert np.max(np.abs(x[0] - np.linalg.solve(A, rhs[0]))) < 1e-11


@pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")
def test_paths_agree():
    rng = np.random.default_rng(19)
    n, B = 30, 4
    dense = [random_banded(rng, n, 2, 2, dominant=False) + 6 * np.eye(n)
             for _ in range(B)]
    ab = np.stack([dense_to_band(A, 2, 2) for A in dense])
    rhs = rng.standard_normal((B, n, 2))
    xa = solve_banded_many(ab, rhs, 2, 2, force="numpy")
    xb = solve_banded_many(ab, rhs, 2, 2, force="numba")
    assert np.max(np.abs(xa - xb)) < 1e-12


@pytest.mark.parametrize("force", PATHS)
def test_singular_raises(force):
    n = 6
    A = np.eye(n)
    A[3, 3] = 0.0  # structurally singular: column 3 empty below diagonal too
    A[4, 3] = 0.0
    ab = dense_to_band(A, 1, 1)[None]
    with pytest.raises(SolveError):
        solve_banded_many(ab, np.ones((1, n, 1)), 1, 1, force=force)


def test_band_roundtrip():
    rng = np.random.default_rng(2)
    A = random_banded(rng, 12, 2, 3)
    assert np.array_equal(band_to_dense(dense_to_band(A, 2, 3), 2, 3), A)


def test_determinism_within_path():
    rng = np.random.default_rng(5)
    A = random_banded(rng, 20, 2, 2)
    ab = dense_to_band(A, 2, 2)[None]
    rhs = rng.standard_normal((1, 20, 1))
    x1 = solve_banded_many(ab, rhs, 2, 2)
    x2 = solve_banded_many(ab, rhs, 2, 2)
    assert x1.tobytes() == x2.tobytes()
