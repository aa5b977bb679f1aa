import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocal_nls import analytic as an
from nonlocal_nls.grid import SpectralField, l2_norm_sq, make_grid, spectral_derivative
from nonlocal_nls.integrator import nonlinear_substep_array
from nonlocal_nls.nonlinearity import (
    DEFOCUSING,
    FOCUSING,
    SignFlag,
    dealias,
    dealias_mask,
    evaluate_F,
    evaluate_F_x,
    exact_pair_flow,
    pair_ode_rhs,
)

complex_values = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


def test_sign_parsing():
    assert SignFlag.parse("focusing") is FOCUSING
    assert SignFlag.parse(" Defocusing ") is DEFOCUSING
    with pytest.raises(ValueError):
        SignFlag.parse("sideways")


def test_even_real_field_gives_pointwise_cube():
    g = make_grid(256, 20.0)
    phi = an.sample_exact(an.SolitonParams(1.0), 0.0, g)
    assert np.array_equal(evaluate_F(phi).samples, phi.samples**3)


def test_zero_field():
    g = make_grid(16, 1.0)
    z = SpectralField(g, np.zeros(16))
    assert not np.any(evaluate_F(z).samples)
    assert not np.any(evaluate_F_x(z).samples)


def test_matches_direct_closed_form():
    g = make_grid(2048, 80.0)
    u = an.sample_exact(an.one_param(0.5), 0.0, g)
    direct = an.eval_one_param(0.5, 0.0, g.nodes) ** 2 * np.conj(an.eval_one_param(0.5, 0.0, -g.nodes))
    assert np.max(np.abs(evaluate_F(u).samples - direct)) < 1e-14


@pytest.mark.parametrize("kind", [an.SolitonParams(1.0), an.one_param(0.5)])
def test_product_rule_derivative(kind):
    g = make_grid(4096, 40.0 / kind.decay_rate)
    f = an.sample_exact(kind, 0.0, g)
    err = evaluate_F_x(f).samples - spectral_derivative(evaluate_F(f), 1).samples
    assert np.max(np.abs(err)) < 1e-9


@given(st.lists(complex_values, min_size=32, max_size=32))
def test_sign_symmetry(values):
    f = SpectralField(make_grid(32, 3.0), np.array(values))
    assert np.array_equal(evaluate_F(f, DEFOCUSING).samples, -evaluate_F(f, FOCUSING).samples)


def test_dealias():
    g = make_grid(64, 5.0)
    top = SpectralField(g, np.exp(1j * g.k_max * g.nodes))
    assert np.max(np.abs(dealias(top).samples)) < 1e-13
    once = dealias(an.sample_exact(an.TwoSolitonParams(1.0, 0.5), 0.3, g))
    assert np.allclose(dealias(once).samples, once.samples, atol=1e-15)
    phi = an.sample_exact(an.SolitonParams(1.0), 0.0, make_grid(1024, 40.0))
    change = l2_norm_sq(phi - dealias(phi)) / l2_norm_sq(phi)
    assert change < 1e-12
    assert dealias_mask(g).sum() < g.num_points


def test_pair_rhs_examples():
    assert pair_ode_rhs(1, 1) == (1j, 1j)
    assert pair_ode_rhs(1, 0) == (0, 0)
    a, b = pair_ode_rhs(1, 1j)
    assert a == pytest.approx(1) and b == pytest.approx(-1j)


@given(complex_values, complex_values, st.floats(0.0, 0.3), st.sampled_from([FOCUSING, DEFOCUSING]))
def test_exact_pair_flow_solves_the_pair_system(a, b, dt, sign):
    h = 1e-6
    a1, b1 = exact_pair_flow(a, b, dt, sign)
    a2, b2 = exact_pair_flow(a, b, dt + h, sign)
    da, db = pair_ode_rhs(a1, b1, sign)
    scale = 1 + abs(da) + abs(db)
    assert abs((a2 - a1) / h - da) < 1e-4 * scale
    assert abs((b2 - b1) / h - db) < 1e-4 * scale


def _generic(g):
    x = g.nodes
    return (1.0 / np.cosh(x - 1.0)) * np.exp(0.5j * x) + 0.6 / np.cosh(1.5 * (x + 2.0)) * np.exp(-0.3j * x)


def test_product_p_is_invariant_but_moduli_move():
    """``p = u(x) conj(u(-x))`` is conserved by the substep; ``|u|`` is not when Im p != 0."""
    g = make_grid(128, 8.0)
    u = _generic(g)
    p0 = u * np.conj(u[g.reflection])
    assert np.max(np.abs(p0.imag)) > 0.1
    v = u.copy()
    for _ in range(200):
        v = nonlinear_substep_array(v, g, 1e-3, FOCUSING, "rk4")
    p1 = v * np.conj(v[g.reflection])
    assert np.max(np.abs(p1 - p0)) < 1e-12
    assert np.max(np.abs(np.abs(v) - np.abs(u))) > 1e-3


def test_even_real_data_reduce_to_local_rotation():
    g = make_grid(128, 8.0)
    u = an.sample_exact(an.SolitonParams(1.0), 0.0, g).samples
    v = nonlinear_substep_array(u, g, 1e-3, FOCUSING, "rk4")
    assert np.max(np.abs(v - u * np.exp(1j * np.abs(u) ** 2 * 1e-3))) < 1e-13
