import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from fkdv.errors import ConfigurationError, IncompatibleGridError, InvalidFieldError
from fkdv.spectral import (
    Field,
    Grid,
    apply_multiplier,
    bessel,
    boundary_fraction,
    combined_symbol,
    derivative_symbol,
    frac_deriv,
    hilbert,
    hilbert_symbol,
    inner,
    lp_norm,
    make_grid,
    riesz,
    sobolev_norm,
    spectral_l2_squared,
    x_derivative,
)

from conftest import mean_zero_field


@pytest.mark.parametrize("n, L", [(7, 1.0), (6, 1.0), (0, 1.0), (64, 0.0), (64, -2.0), (64, float("nan"))])
def test_grid_rejects_bad_parameters(n, L):
    with pytest.raises(ConfigurationError):
        Grid(n, L)


def test_grid_layout():
    g = make_grid(16, math.pi)
    assert g.x[0] == -math.pi
    assert np.isclose(g.spacing, 2 * math.pi / 16)
    assert g.index[g.nyquist] == 8
    assert sorted(g.index.tolist()) == list(range(-7, 9))
    assert np.allclose(g.wavenumbers, g.index)  # L = pi gives integer wavenumbers
    assert make_grid(16, math.pi) == g and hash(make_grid(16, math.pi)) == hash(g)


def test_field_is_read_only_and_checked(grid):
    f = Field(grid, np.ones(grid.n_points))
    with pytest.raises(ValueError):
        f.values[0] = 2.0
    bad = np.ones(grid.n_points)
    bad[3] = np.nan
    with pytest.raises(InvalidFieldError):
        Field(grid, bad)
    with pytest.raises(IncompatibleGridError):
        Field(grid, np.ones(grid.n_points + 2))


def test_grid_mismatch_is_rejected(grid):
    other = make_grid(128, grid.half_length)
    f = Field(grid, np.zeros(grid.n_points))
    with pytest.raises(IncompatibleGridError):
        apply_multiplier(f, riesz(other, 0.5))
    with pytest.raises(IncompatibleGridError):
        f + Field(other, np.zeros(128))


mode = st.integers(min_value=1, max_value=127)
power = st.floats(min_value=0.0, max_value=3.0)


@given(k=mode, s=power)
def test_riesz_and_bessel_eigenvalues(grid, k, s):
    xi = math.pi * k / grid.half_length
    c = np.cos(xi * grid.x)
    u = Field(grid, c)
    assert np.max(np.abs(frac_deriv(u, s).values - xi**s * c)) <= 1e-12 * max(1.0, xi**s)
    jb = (1 + xi * xi) ** (s / 2)
    assert np.max(np.abs(bessel(u, s).values - jb * c)) <= 1e-12 * jb


@given(k=mode)
def test_hilbert_maps_cos_to_sin(grid, k):
    xi = math.pi * k / grid.half_length
    u = Field(grid, np.cos(xi * grid.x))
    assert np.max(np.abs(hilbert(u).values - np.sin(xi * grid.x))) <= 1e-12
    v = Field(grid, np.sin(xi * grid.x))
    assert np.max(np.abs(hilbert(v).values + np.cos(xi * grid.x))) <= 1e-12


@given(seed=st.integers(0, 2**32 - 1))
def test_hilbert_squared_is_minus_identity(grid, seed):
    u = mean_zero_field(grid, np.random.default_rng(seed), band=grid.n_points // 2 - 1)
    assert np.max(np.abs(hilbert(hilbert(u)).values + u.values)) <= 1e-12


@given(s=power, t=power, seed=st.integers(0, 1000))
def test_riesz_semigroup(grid, s, t, seed):
    u = mean_zero_field(grid, np.random.default_rng(seed), band=20)
    lhs = frac_deriv(frac_deriv(u, s), t).values
    rhs = frac_deriv(u, s + t).values
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-10 * max(1.0, np.max(np.abs(rhs))))


def test_zero_mode_conventions(grid):
    u = Field(grid, np.full(grid.n_points, 3.0))
    assert np.allclose(frac_deriv(u, 0.0).values, 3.0)
    assert np.allclose(frac_deriv(u, 0.7).values, 0.0)
    assert riesz(grid, -0.5).samples[0] == 0
    assert np.allclose(bessel(u, 1.3).values, 3.0)


def test_negative_riesz_inverts_on_mean_zero(grid, rng):
    u = mean_zero_field(grid, rng)
    back = frac_deriv(frac_deriv(u, 0.8), -0.8)
    assert np.allclose(back.values, u.values, atol=1e-12)


def test_odd_symbols_vanish_at_nyquist(grid):
    assert hilbert_symbol(grid).samples[grid.nyquist] == 0
    assert derivative_symbol(grid, 3).samples[grid.nyquist] == 0
    assert derivative_symbol(grid, 2).samples[grid.nyquist] != 0


@pytest.mark.parametrize("sym", [
    lambda g: riesz(g, 0.4), lambda g: hilbert_symbol(g), lambda g: derivative_symbol(g, 1),
    lambda g: combined_symbol(g, order=2, s=0.3, hilbert=True),
])
def test_symbols_have_real_output(grid, sym):
    assert sym(grid).is_real_output


def test_hilbert_is_skew_adjoint(grid, rng):
    f, g = mean_zero_field(grid, rng), mean_zero_field(grid, rng)
    assert math.isclose(inner(hilbert(f), g), -inner(f, hilbert(g)), abs_tol=1e-12)


def test_derivative_matches_analytic(grid):
    u = Field.from_function(grid, lambda x: np.exp(-x**2))
    exact = -2 * grid.x * np.exp(-grid.x**2)
    assert np.max(np.abs(x_derivative(u).values - exact)) < 1e-11


@pytest.mark.parametrize("s", [0.0, 0.5, 1.3, 2.0])
def test_sobolev_norm_of_gaussian(s):
    # |J^s e^{-x^2/2}|^2 = int (1 + xi^2)^s e^{-xi^2} dxi (unitary transform)
    g = make_grid(512, 20.0)
    u = Field.from_function(g, lambda x: np.exp(-x**2 / 2))
    exact = quad(lambda xi: (1 + xi * xi) ** s * np.exp(-xi * xi), -np.inf, np.inf, epsabs=0, epsrel=1e-13)[0]
    assert math.isclose(sobolev_norm(u, s) ** 2, exact, rel_tol=1e-10)


@given(seed=st.integers(0, 1000))
def test_parseval(grid, seed):
    u = Field(grid, np.random.default_rng(seed).normal(size=grid.n_points))
    assert math.isclose(lp_norm(u, 2) ** 2, spectral_l2_squared(u), rel_tol=1e-12)
    assert math.isclose(sobolev_norm(u, 0.0) ** 2, spectral_l2_squared(u), rel_tol=1e-12)


def test_lp_norms(grid):
    u = Field(grid, np.full(grid.n_points, -2.0))
    assert math.isclose(lp_norm(u, 1), 2.0 * 2 * grid.half_length)
    assert lp_norm(u, "inf") == 2.0
    with pytest.raises(ConfigurationError):
        lp_norm(u, 3)


def test_boundary_fraction(grid):
    centred = Field.from_function(grid, lambda x: np.exp(-x**2))
    assert boundary_fraction(centred) < 1e-20
    edge = Field.from_function(grid, lambda x: np.exp(-(x - grid.half_length + 0.5) ** 2))
    assert boundary_fraction(edge) > 0.4
    assert boundary_fraction(Field(grid, np.zeros(grid.n_points))) == 0.0
