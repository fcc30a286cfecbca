import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from racetrack import (Grid, ModelParams, build_kernel, equilibrium, homogeneous_state, kernel_for,
                       nominal_wage, price_index, real_wage, rotate, uniform_field)

# mpmath (30 digits): (2 (1/2pi)(1 - e^{-pi}))^{-1/4}, and 1.32 - 0.6 ln of it
G_BAR = 1.34611993513133035408326362354
OMEGA_BAR = 1.14166420073679931641495873908


@pytest.fixture
def p():
    return ModelParams(sigma=5.0, tau=0.25)


def test_params_defaults_and_alpha(p):
    assert p.alpha == 1.0
    assert p.replace(tau=0.5).alpha == 2.0
    assert ModelParams().to_dict()["Phi"] == 10.0


@pytest.mark.parametrize("bad", [dict(sigma=1.0), dict(mu=1.0), dict(mu=-0.1), dict(F=0.0),
                                 dict(Lambda=-1.0), dict(Phi=0.0), dict(rho=0.0), dict(tau=-0.1),
                                 dict(a=-1.0), dict(d=-1e-3), dict(v=0.0), dict(sigma=math.nan)])
def test_params_validation(bad):
    with pytest.raises(ValueError):
        ModelParams(**bad)


def test_params_type_check():
    with pytest.raises(TypeError):
        ModelParams(sigma="5")


def test_homogeneous_state(p):
    s = homogeneous_state(p)
    assert s.lambda_bar == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    assert s.lambda_bar * 2 * math.pi * p.rho == pytest.approx(p.Lambda, rel=1e-15)
    assert s.phi_bar * 2 * math.pi * p.rho == pytest.approx(p.Phi, rel=1e-15)
    assert s.w_bar == pytest.approx(1.32, rel=1e-15)
    assert s.G_bar == pytest.approx(G_BAR, rel=1e-14)
    assert s.omega_bar == pytest.approx(OMEGA_BAR, rel=1e-14)
    # F = 1 makes the CP index coincide with the QLLU one
    assert s.G_bar_cp == pytest.approx(s.G_bar, rel=1e-14)
    assert homogeneous_state(p.replace(F=2.0)).G_bar_cp == pytest.approx(s.G_bar_cp)


def test_homogeneous_state_rejects_zero_tau():
    with pytest.raises(ValueError):
        homogeneous_state(ModelParams(tau=0.0))


@pytest.mark.parametrize("n_nodes", [8, 64, 256, 1000])
@pytest.mark.parametrize("method", ["direct", "recursive"])
def test_uniform_fixed_point(p, n_nodes, method):
    grid = Grid(n_nodes)
    s = homogeneous_state(p, grid)
    G, w, omega = equilibrium(uniform_field(grid, s.lambda_bar), uniform_field(grid, s.phi_bar),
                              kernel_for(p, grid), p, method)
    assert np.max(np.abs(G / s.G_bar - 1)) <= 1e-10
    assert np.max(np.abs(w / s.w_bar - 1)) <= 1e-10
    assert np.max(np.abs(omega / s.omega_bar - 1)) <= 1e-10


def test_gridded_state_converges_to_closed_form(p):
    exact = homogeneous_state(p)
    errs = [abs(homogeneous_state(p, Grid(n)).G_bar / exact.G_bar - 1) for n in (64, 128, 256, 512)]
    assert errs[-1] < 1e-5
    for coarse, fine in zip(errs, errs[1:]):
        assert coarse / fine == pytest.approx(4.0, rel=0.05)
    assert homogeneous_state(p, Grid(64)).w_bar == exact.w_bar


def test_gridded_state_uses_params_radius():
    p = ModelParams(rho=2.0, tau=0.3)
    assert homogeneous_state(p, Grid(128)).G_bar == homogeneous_state(p, Grid(128, rho=2.0)).G_bar


def test_price_index_flat_kernel(grid):
    p = ModelParams(tau=0.0, Lambda=2.0, F=0.5)
    G = price_index(uniform_field(grid, p.lambda_bar), kernel_for(p, grid), p)
    assert np.allclose(G, (p.Lambda / p.F) ** (1 / (1 - p.sigma)), rtol=1e-13)


def test_zero_mu_gives_zero_wage(grid):
    p = ModelParams(mu=0.0, tau=0.3)
    lam = uniform_field(grid, p.lambda_bar) * (1 + 0.1 * np.cos(grid.nodes))
    G, w, omega = equilibrium(lam, uniform_field(grid, p.phi_bar), kernel_for(p, grid), p)
    assert np.all(w == 0) and np.all(omega == w)


def test_wage_invariant_under_joint_scaling(grid):
    p = ModelParams(tau=0.25)
    q = p.replace(Lambda=2.0, Phi=20.0)
    assert homogeneous_state(q).w_bar == pytest.approx(homogeneous_state(p).w_bar, rel=1e-15)
    G, w, _ = equilibrium(uniform_field(grid, q.lambda_bar), uniform_field(grid, q.phi_bar),
                          kernel_for(q, grid), q)
    assert np.allclose(w, 1.32, rtol=1e-12)


def test_real_wage_identities():
    w = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(real_wage(w, np.ones(3), 0.6), w)
    assert np.array_equal(real_wage(w, np.array([2.0, 3.0, 4.0]), 0.0), w)
    with pytest.raises(ValueError):
        real_wage(w, np.array([1.0, 0.0, 1.0]), 0.6)


def test_degenerate_density_rejected(grid, p):
    k = kernel_for(p, grid)
    with pytest.raises(ValueError):
        price_index(np.zeros(grid.n_nodes), k, p)
    with pytest.raises(ValueError):
        price_index(np.full(grid.n_nodes, np.nan), k, p)
    with pytest.raises(ValueError):
        price_index(np.ones(10), k, p)


def test_kernel_parameter_mismatch(grid, p):
    with pytest.raises(ValueError):
        price_index(np.ones(grid.n_nodes), build_kernel(grid, 2.0), p)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 63))
def test_rotation_equivariance(seed, m):
    grid = Grid(64)
    p = ModelParams(sigma=3.0, tau=0.4)
    rng = np.random.default_rng(seed)
    lam = rng.random(64) + 0.1
    phi = rng.random(64) + 0.5
    k = kernel_for(p, grid)
    base = equilibrium(lam, phi, k, p)
    moved = equilibrium(rotate(lam, m), rotate(phi, m), k, p)
    for a, b in zip(base, moved):
        assert np.max(np.abs(rotate(a, m) - b)) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1.01, 4.0))
def test_price_index_decreases_with_mass(seed, c):
    grid = Grid(32)
    p = ModelParams(sigma=4.0, tau=0.3)
    lam = np.random.default_rng(seed).random(32) + 0.01
    k = kernel_for(p, grid)
    assert np.all(price_index(c * lam, k, p) < price_index(lam, k, p))


def test_nominal_wage_positive(grid, p):
    lam = uniform_field(grid, p.lambda_bar) * (1 + 0.5 * np.sin(3 * grid.nodes))
    phi = uniform_field(grid, p.phi_bar)
    k = kernel_for(p, grid)
    G = price_index(lam, k, p)
    assert np.all(nominal_wage(lam, phi, G, k, p) > 0)
