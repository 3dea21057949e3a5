import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fkdv.errors import BlowUpError, ConfigurationError
from fkdv.solver import (
    SolverConfig,
    SolverState,
    conserved,
    default_half_length,
    linear_flow,
    nonlinear_term,
    output_steps,
    run,
    self_convergence_order,
    step,
)
from fkdv.spectral import Field, frac_deriv, inner, make_grid, x_derivative


@pytest.fixture(scope="module")
def small():
    g = make_grid(512, 20 * math.pi)
    return g, Field.from_function(g, lambda x: 0.8 * np.exp(-(x / 2) ** 2))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        SolverConfig(alpha=1.2, dt=0.1, t_final=1)
    with pytest.raises(ConfigurationError):
        SolverConfig(alpha=0.5, dt=0.0, t_final=1)
    with pytest.raises(ConfigurationError):
        SolverConfig(alpha=0.5, dt=0.1, t_final=1, scheme="rk45")
    with pytest.raises(ConfigurationError) as exc:
        SolverConfig(alpha=0.5, dt=0.3, t_final=1).n_steps()
    assert "t_final multiple of dt" in exc.value.rules
    assert SolverConfig(alpha=0.5, dt=0.1, t_final=1).n_steps() == 10


@given(k=st.integers(1, 60), t=st.floats(-3, 3), alpha=st.floats(0.05, 0.95))
def test_linear_flow_translates_modes(k, t, alpha):
    g = make_grid(128, math.pi)
    u = Field(g, np.cos(k * g.x))
    # u_t = D^alpha u_x moves cos(k x) to cos(k (x + k^alpha t))
    exact = np.cos(k * (g.x + k**alpha * t))
    assert np.max(np.abs(linear_flow(u, alpha, t).values - exact)) < 1e-11


def test_linear_stepping_is_exact(small):
    g, u0 = small
    cfg = SolverConfig(alpha=0.6, dt=0.05, t_final=1.0, nonlinear=False)
    out = run(u0, cfg)
    assert np.max(np.abs(out.u.values - linear_flow(u0, 0.6, 1.0).values)) < 1e-12


def test_nonlinear_term_is_dealiased():
    g = make_grid(64, math.pi)
    u = Field(g, np.cos(15 * g.x) + np.cos(3 * g.x))
    n = nonlinear_term(u, dealias=True)
    k = np.abs(g.index)
    assert np.max(np.abs(n.spectrum[k > 64 / 3])) < 1e-12
    # without truncation the product aliases back
    raw = nonlinear_term(u, dealias=False)
    assert np.max(np.abs(raw.spectrum[k > 64 / 3])) > 1.0


def test_nonlinear_term_of_smooth_field(small):
    g, u = small
    exact = -u.values * x_derivative(u).values
    assert np.max(np.abs(nonlinear_term(u).values - exact)) < 1e-10


def test_hamiltonian_gradient_generates_the_flow(small):
    # dH/du = D^alpha u - u^2/2 and d/dx of it is the right-hand side
    g, u = small
    alpha = 0.7
    rng = np.random.default_rng(5)
    v = Field.from_function(g, lambda x: np.exp(-((x - 1) / 3) ** 2) * np.cos(x))
    h = 1e-5
    dH = (conserved(u + v * h, alpha)[2] - conserved(u + v * (-h), alpha)[2]) / (2 * h)
    grad = frac_deriv(u, alpha).values - 0.5 * u.values**2
    assert math.isclose(dH, inner(Field(g, grad), v), rel_tol=1e-7)
    del rng


def test_short_run_conserves(small):
    g, u0 = small
    cfg = SolverConfig(alpha=0.75, dt=1e-2, t_final=2.0, cadence=10)
    out = run(u0, cfg)
    log = np.array(out.conserved_log)
    assert len(log) == 11
    assert np.max(np.abs(log[:, 1] - log[0, 1])) < 1e-12 * max(1, abs(log[0, 1]))
    assert np.max(np.abs(log[:, 2] / log[0, 2] - 1)) < 1e-6
    assert np.max(np.abs(log[:, 3] / log[0, 3] - 1)) < 1e-5
    assert out.strichartz_accum > 0
    assert out.t == 2.0 and out.step_count == 200


def test_etdrk4_is_fourth_order():
    g = make_grid(256, 20 * math.pi)
    u0 = Field.from_function(g, lambda x: 0.5 * np.exp(-(x / 2) ** 2))
    orders, _ = self_convergence_order(u0, 0.75, 1.0, [0.1, 0.05, 0.025, 0.0125])
    assert all(3.5 <= p <= 4.5 for p in orders), orders


def test_imex_is_second_order():
    g = make_grid(256, 20 * math.pi)
    u0 = Field.from_function(g, lambda x: 0.5 * np.exp(-(x / 2) ** 2))
    orders, _ = self_convergence_order(u0, 0.75, 1.0, [0.02, 0.01, 0.005, 0.0025], scheme="imex2")
    # the last ratio uses the reference run as its finer member and reads high
    assert 1.8 <= orders[0] <= 2.2 and all(p >= 1.7 for p in orders), orders


def test_restart_is_bitwise(small):
    g, u0 = small
    full = run(u0, SolverConfig(alpha=0.5, dt=0.01, t_final=1.0))
    half = run(u0, SolverConfig(alpha=0.5, dt=0.01, t_final=0.5))
    resumed = SolverState(t=half.t, u=Field(g, half.u.values.copy()), step_count=half.step_count)
    rest = run(resumed, SolverConfig(alpha=0.5, dt=0.01, t_final=1.0))
    assert np.array_equal(rest.u.values, full.u.values)
    assert rest.step_count == full.step_count


def test_blow_up_is_reported(small):
    g, u0 = small
    state = SolverState(0.0, u0)
    with pytest.raises(BlowUpError) as exc:
        step(state, SolverConfig(alpha=0.5, dt=0.1, t_final=1), lambda v: v * np.nan)
    assert exc.value.state is state and exc.value.t == pytest.approx(0.1)


def test_observers_and_output_steps(small):
    g, u0 = small
    seen = []
    run(u0, SolverConfig(alpha=0.5, dt=0.01, t_final=1.0, cadence=4), [lambda s: seen.append(s.t)])
    assert seen == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert output_steps(10, 3) == [3, 6, 9, 10]
    assert output_steps(0, 5) == []


def test_default_half_length():
    L = default_half_length(lambda x: np.exp(-x**2 / 50))
    x = np.linspace(-L, L, 8192)
    assert L >= 40 and np.exp(-(L - 5) ** 2 / 50) ** 2 < 1e-10 * np.sum(np.exp(-x**2 / 25)) * (x[1] - x[0])
