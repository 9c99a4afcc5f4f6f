"""Pressure solves against closed-form Neumann oracles.

All oracles below were worked out independently of the solver: single-mode
harmonic extensions cosh(y-Ly)/sinh(Ly), an exponential manufactured problem
with nonzero rhs, a pure x-mean quadratic that the 3-point stencils reproduce
exactly, and an ODE closed form for the buoyancy-driven split example.
"""

import numpy as np
import pytest

import vll.elliptic as elliptic
from vll.elliptic import NeumannProblem, solve_neumann, split_pressure
from vll.errors import SolveError
from vll.fields import Field, PhysParams
from vll.grid import build_grid


def _zero_mean(g, arr):
    return arr - g.integral(arr) / (g.Lx * g.Ly)


def _solve_err(g, expected, rhs, bot, top):
    p = solve_neumann(g, NeumannProblem(rhs, bot, top))
    return float(np.max(np.abs(p - _zero_mean(g, expected))))


# ------------------------------------------------------------- solve_neumann

def test_zero_data_gives_zero_pressure():
    g = build_grid(2 * np.pi, 2.0, 16, 24)
    p = solve_neumann(g, NeumannProblem(np.zeros(g.shape), np.zeros(g.Nx),
                                        np.zeros(g.Nx)))
    assert np.all(p == 0.0)


def test_harmonic_manufactured_second_order():
    # p* = cos(x) cosh(y-Ly) is harmonic; feed its exact fluxes, rhs = 0
    errs = []
    for Ny in (48, 96, 192):
        g = build_grid(2 * np.pi, 2.0, 16, Ny)
        x, y = g.x_nodes, g.y_nodes
        expected = np.cos(x)[None, :] * np.cosh(y - g.Ly)[:, None]
        bot = -np.sinh(g.Ly) * np.cos(x)
        errs.append(_solve_err(g, expected, np.zeros(g.shape), bot,
                               np.zeros(g.Nx)))
    assert errs[-1] <= 2e-4
    for e0, e1 in zip(errs, errs[1:]):
        assert 2.8 <= e0 / e1 <= 5.6


def test_cosine_wall_flux_analytic_mode():
    # rhs = 0, d_y p(x,0) = cos(x), top flux 0: the unique zero-mean solution
    # is -cos(x) cosh(y-Ly) / sinh(Ly)
    g = build_grid(2 * np.pi, 2.0, 32, 128)
    x, y = g.x_nodes, g.y_nodes
    p = solve_neumann(g, NeumannProblem(np.zeros(g.shape), np.cos(x),
                                        np.zeros(g.Nx)))
    expected = -np.cos(x)[None, :] * np.cosh(y - g.Ly)[:, None] / np.sinh(g.Ly)
    scale = np.max(np.abs(expected))
    assert np.max(np.abs(p - _zero_mean(g, expected))) <= 2e-4 * scale
    # single x-mode data: x-mean of p vanishes at every height
    assert np.max(np.abs(p.mean(axis=1))) <= 1e-12 * scale


def test_exponential_mms_second_order():
    # p* = cos(x) e^{-2y}: Lap p* = 3 cos(x) e^{-2y}, fluxes -2cos(x) e^{-2y}
    errs = []
    for Ny in (48, 96, 192):
        g = build_grid(2 * np.pi, 2.0, 16, Ny)
        x, y = g.x_nodes, g.y_nodes
        expected = np.cos(x)[None, :] * np.exp(-2.0 * y)[:, None]
        rhs = 3.0 * expected
        bot = -2.0 * np.cos(x)
        top = -2.0 * np.exp(-2.0 * g.Ly) * np.cos(x)
        errs.append(_solve_err(g, expected, rhs, bot, top))
    assert errs[-1] <= 5e-4
    for e0, e1 in zip(errs, errs[1:]):
        assert 2.8 <= e0 / e1 <= 5.6


def test_exponential_mms_on_stretched_grid():
    g = build_grid(2 * np.pi, 2.0, 16, 128, stretch=3.0)
    x, y = g.x_nodes, g.y_nodes
    expected = np.cos(x)[None, :] * np.exp(-2.0 * y)[:, None]
    err = _solve_err(g, expected, 3.0 * expected, -2.0 * np.cos(x),
                     -2.0 * np.exp(-2.0 * g.Ly) * np.cos(x))
    assert err <= 5e-4


def test_mean_mode_quadratic_recovered_to_rounding():
    # rhs = 1/Ly, wall flux -1, top flux 0 -> p = (y-Ly)^2 / (2 Ly); the
    # interior and flux stencils are exact on quadratics
    g = build_grid(2 * np.pi, 3.0, 16, 80, stretch=2.0)
    y = g.y_nodes
    expected = (y - g.Ly)[:, None] ** 2 / (2.0 * g.Ly) * np.ones((1, g.Nx))
    err = _solve_err(g, expected, np.full(g.shape, 1.0 / g.Ly),
                     -np.ones(g.Nx), np.zeros(g.Nx))
    assert err <= 1e-10


def test_incompatible_mean_is_projected_out():
    # pure-constant rhs with zero fluxes violates compatibility; the mean
    # correction removes it entirely and the solve returns zero
    g = build_grid(2 * np.pi, 2.0, 16, 48)
    p = solve_neumann(g, NeumannProblem(np.full(g.shape, 0.7), np.zeros(g.Nx),
                                        np.zeros(g.Nx)))
    assert np.max(np.abs(p)) <= 1e-12


def test_output_mean_is_zero_and_rhs_constant_invisible():
    rng = np.random.default_rng(7)
    g = build_grid(2 * np.pi, 2.0, 16, 48)
    rhs = rng.standard_normal(g.shape)
    bot = rng.standard_normal(g.Nx)
    top = rng.standard_normal(g.Nx)
    p_a = solve_neumann(g, NeumannProblem(rhs, bot, top))
    scale = np.max(np.abs(p_a))
    assert abs(g.integral(p_a)) <= 1e-12 * scale * g.Lx * g.Ly
    p_b = solve_neumann(g, NeumannProblem(rhs + 5.0, bot, top))
    assert np.max(np.abs(p_a - p_b)) <= 1e-10 * scale


def test_linearity_on_random_data():
    rng = np.random.default_rng(23)
    g = build_grid(2 * np.pi, 2.0, 16, 48)
    probs = [NeumannProblem(rng.standard_normal(g.shape),
                            rng.standard_normal(g.Nx),
                            rng.standard_normal(g.Nx)) for _ in range(2)]
    a, b = 1.3, -0.6
    combined = NeumannProblem(
        a * probs[0].rhs + b * probs[1].rhs,
        a * probs[0].bottom_flux + b * probs[1].bottom_flux,
        a * probs[0].top_flux + b * probs[1].top_flux)
    p_sum = a * solve_neumann(g, probs[0]) + b * solve_neumann(g, probs[1])
    p_comb = solve_neumann(g, combined)
    scale = np.max(np.abs(p_comb))
    assert np.max(np.abs(p_comb - p_sum)) <= 1e-10 * scale


def test_flux_shape_mismatch_rejected():
    g = build_grid(2 * np.pi, 2.0, 16, 48)
    with pytest.raises(ValueError):
        solve_neumann(g, NeumannProblem(np.zeros(g.shape),
                                        np.zeros(g.Nx + 1), np.zeros(g.Nx)))


def test_backward_error_guard_raises(monkeypatch):
    g = build_grid(2 * np.pi, 2.0, 16, 48)
    x = g.x_nodes
    monkeypatch.setattr(elliptic, "BACKWARD_TOL", 0.0)
    with pytest.raises(SolveError):
        solve_neumann(g, NeumannProblem(np.zeros(g.shape), np.cos(x),
                                        np.zeros(g.Nx)))


def test_field_in_field_out():
    g = build_grid(2 * np.pi, 2.0, 16, 48)
    x = g.x_nodes
    prob_arr = NeumannProblem(np.zeros(g.shape), np.cos(x), np.zeros(g.Nx))
    p_arr = solve_neumann(g, prob_arr)
    prob_fld = NeumannProblem(Field.zeros(g), np.cos(x),
                              np.zeros(g.Nx))
    p_fld = solve_neumann(g, prob_fld)
    assert isinstance(p_fld, Field)
    assert np.array_equal(p_fld.values, p_arr)


# ------------------------------------------------------------ split_pressure

def _buoyancy_profile(Ly, y):
    # closed form for q'' - q = -e^{-y}, q'(0) = 1, q'(Ly) = e^{-Ly}
    a = (np.exp(-Ly) * (1.0 + Ly) / 2.0 - np.cosh(Ly) / 2.0) / np.sinh(Ly)
    return y * np.exp(-y) / 2.0 + a * np.cosh(y) + np.sinh(y) / 2.0


def test_split_alpha_zero_buoyancy_oracle():
    # F = (0, theta) with theta = cos(x) e^{-y} and alpha = 0: p2 vanishes
    # identically and p = p1 = cos(x) q(y) up to the gauge constant
    g = build_grid(2 * np.pi, 2.0, 16, 192)
    x, y = g.x_nodes, g.y_nodes
    params = PhysParams(eps=0.5, alpha=0.0, nu2=0.25)
    theta = np.cos(x)[None, :] * np.exp(-y)[:, None]
    F = (Field.zeros(g), Field.on(g, theta))
    u1 = Field.on(g, np.sin(x)[None, :] * np.exp(-y)[:, None])
    p1, p2, p = split_pressure(g, F, u1, params)
    assert isinstance(p, Field)
    assert np.all(p2.values == 0.0)
    expected = np.cos(x)[None, :] * _buoyancy_profile(g.Ly, y)[:, None]
    scale = np.max(np.abs(expected))
    assert np.max(np.abs(p1.values - _zero_mean(g, expected))) <= 3e-3 * scale
    assert np.max(np.abs(p.values - p1.values)) <= 1e-12 * scale


def test_split_pure_slip_harmonic_oracle():
    # F = 0, u1 = sin(x) e^{-y}: p1 = 0 and p2 is the harmonic extension of
    # the wall datum -alpha*nu2*cos(x)
    g = build_grid(2 * np.pi, 2.0, 16, 128)
    x, y = g.x_nodes, g.y_nodes
    params = PhysParams(eps=0.2, alpha=1.0, nu2=0.04)
    F = (Field.zeros(g), Field.zeros(g))
    u1 = Field.on(g, np.sin(x)[None, :] * np.exp(-y)[:, None])
    p1, p2, p = split_pressure(g, F, u1, params)
    assert np.all(p1.values == 0.0)
    gamma = params.alpha * params.nu2
    expected = gamma * np.cos(x)[None, :] \
        * np.cosh(y - g.Ly)[:, None] / np.sinh(g.Ly)
    scale = np.max(np.abs(expected))
    assert np.max(np.abs(p2.values - _zero_mean(g, expected))) <= 2e-3 * scale
    assert np.max(np.abs(p.values - p2.values)) <= 1e-12 * scale


def test_split_identity_matches_combined_solve():
    rng = np.random.default_rng(41)
    g = build_grid(2 * np.pi, 2.0, 24, 64)
    x, y = g.x_nodes, g.y_nodes
    cx = rng.standard_normal(3)
    wave = cx[0] + cx[1] * np.cos(x) + cx[2] * np.sin(2 * x)
    F1 = np.sin(x)[None, :] * np.exp(-y)[:, None]
    F2 = wave[None, :] * (np.exp(-y) * (1.0 + y))[:, None]
    u1 = np.cos(x)[None, :] * np.exp(-0.5 * y * y)[:, None]
    params = PhysParams(eps=0.3, alpha=0.7, nu2=0.09)
    p1, p2, p = split_pressure(g, (F1, F2), u1, params)
    gamma = -params.alpha * params.nu2
    rhs = g.ddx_arr(F1) + g.ddy_arr(F2)
    combined = solve_neumann(g, NeumannProblem(
        rhs, F2[0] + gamma * g.ddx_arr(u1)[0], F2[-1]))
    scale = np.max(np.abs(p))
    assert np.max(np.abs(p - combined)) <= 1e-10 * scale
    assert np.max(np.abs(p - (p1 + p2 - g.integral(p1 + p2)
                              / (g.Lx * g.Ly)))) <= 1e-12 * scale
