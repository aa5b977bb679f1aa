import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocal_nls import analytic as an
from nonlocal_nls.grid import make_grid, reflect_conjugate_array


def test_equal_parameters_give_the_soliton():
    t = np.linspace(0, 3, 7)[:, None]
    x = np.linspace(-6, 6, 41)[None, :]
    u = an.eval_two_param(an.TwoSolitonParams(0.5, 0.5), t, x)
    assert np.max(np.abs(u - np.exp(1j * t) * an.soliton_profile(1.0, x))) < 1e-14


def test_origin_values():
    assert an.eval_two_param(an.TwoSolitonParams(1.0, 0.5), 0.0, 0.0) == pytest.approx(1.5 * math.sqrt(2))
    assert an.eval_one_param(0.5, 0.0, 0.0) == pytest.approx(1.0606601717798212)
    assert an.eval_soliton(an.SolitonParams(1.0), 0.0, 0.0) == pytest.approx(math.sqrt(2))
    assert an.eval_soliton(an.SolitonParams(4.0), 0.0, 0.0) == pytest.approx(2 * math.sqrt(2))
    assert an.eval_soliton(an.SolitonParams(1.0), math.pi / 2, 0.0) == pytest.approx(1j * math.sqrt(2))


def test_pole_is_reported():
    p = an.TwoSolitonParams(1.0, 0.5)
    with pytest.raises(an.PoleProximityError):
        an.eval_two_param(p, math.pi / 3, 0.0)
    with pytest.raises(an.PoleProximityError):
        an.sample_exact(p, math.pi / 3, make_grid(64, 10.0))
    assert abs(an.eval_two_param(p, math.pi / 3 - 1e-7, 0.0)) > 1e6


def test_point_values_against_high_precision(oracle):
    p = an.TwoSolitonParams(1.0, 0.5)
    for row in oracle["point_values"]["two_param_1_0.5"]:
        got = an.eval_two_param(p, row["t"], row["x"])
        assert got == pytest.approx(complex(row["re"], row["im"]), rel=1e-13)
    got = an.eval_perturbed_soliton_initial(an.PerturbedSolitonParams(1.0, 0.5), 0.0)
    assert got == pytest.approx(oracle["point_values"]["perturbed_1_0.5_at_0"], rel=1e-14)


def test_one_param_is_the_half_beta_member():
    t, x = 0.37, np.linspace(-5, 5, 11)
    assert np.allclose(an.eval_one_param(0.6, t, x), an.eval_two_param(an.one_param(0.6), t, x), rtol=1e-14)


def test_blowup_times():
    assert an.blow_up_times(an.TwoSolitonParams(1.0, 0.5), 0) == pytest.approx(math.pi / 3)
    assert an.blow_up_times(an.TwoSolitonParams(0.5, 0.25), 0) == pytest.approx(4 * math.pi / 3)
    with pytest.raises(an.NoBlowupError):
        an.blow_up_times(an.TwoSolitonParams(0.5, 0.5), 0)
    assert an.first_blowup_alpha(0.5) == pytest.approx(4.1887902047863905)
    assert an.first_blowup_alpha(0.75) == pytest.approx(math.pi / 1.6875)
    assert an.first_blowup_alpha(1.0) == an.blow_up_times(an.TwoSolitonParams(1.0, 0.5), 0)


def test_first_blowup_time_handles_beta_above_alpha():
    p = an.TwoSolitonParams(0.5, 1.0)
    assert an.first_blowup_time(p) == pytest.approx(math.pi / 3)


def test_perturbed_soliton():
    x = np.linspace(-10, 10, 101)
    assert np.array_equal(an.eval_perturbed_soliton_initial(an.PerturbedSolitonParams(1.0, 0.0), x),
                          an.soliton_profile(1.0, x))
    assert an.perturbed_soliton_blowup_time(an.PerturbedSolitonParams(1.0, 0.5)) == pytest.approx(2 * math.pi)
    assert an.perturbed_soliton_blowup_time(an.PerturbedSolitonParams(4.0, 0.1)) == pytest.approx(10 * math.pi)
    with pytest.raises(an.NoBlowupError):
        an.perturbed_soliton_blowup_time(an.PerturbedSolitonParams(1.0, 0.0))


def test_perturbed_datum_is_two_param_at_time_zero():
    p = an.PerturbedSolitonParams(1.0, 0.5)
    x = np.linspace(-8, 8, 33)
    assert np.allclose(an.eval_two_param(p.as_two_param(), 0.0, x), an.eval_perturbed_soliton_initial(p, x),
                       rtol=1e-14)


def test_blowup_time_matches_pole_scan():
    p = an.PerturbedSolitonParams(1.0, 0.5).as_two_param()
    t = np.linspace(0.0, 7.0, 70001)
    mod = np.abs(np.exp(-4j * p.alpha**2 * t) + np.exp(-4j * p.beta**2 * t))
    assert t[np.argmin(mod)] == pytest.approx(2 * math.pi, abs=1e-3)


def test_predicted_seminorms():
    assert an.predicted_seminorm_sq(0.5, 0) == pytest.approx(4 * math.pi * 0.5 / math.sqrt(3))
    assert an.predicted_seminorm_sq(0.5, 0, printed=True) == pytest.approx(2 * math.pi / 3)
    assert an.predicted_seminorm_sq(0.5, 1) == pytest.approx(math.pi / (3 * math.sqrt(3)))
    assert an.predicted_seminorm_sq(0.5, 2) == pytest.approx(0.4534498410585545)
    with pytest.raises(ValueError):
        an.predicted_seminorm_sq(0.5, 3)


@pytest.mark.parametrize("alpha", ["0.25", "0.5", "0.75"])
@pytest.mark.parametrize("k", [0, 1, 2])
def test_predicted_seminorms_match_quadrature_oracle(oracle, alpha, k):
    assert an.predicted_seminorm_sq(float(alpha), k) == pytest.approx(oracle["seminorm_sq"][alpha][str(k)], rel=1e-14)


def test_sample_exact_kinds():
    g = make_grid(1024, 40.0)
    phi = an.sample_exact(an.SolitonParams(1.0), 0.0, g)
    assert np.all(phi.samples.imag == 0)
    assert np.array_equal(reflect_conjugate_array(phi.samples, g), phi.samples)
    zero = an.sample_exact(an.ZeroData(), 1.0, g)
    assert not np.any(zero.samples)


def test_time_derivative_examples():
    assert an.eval_two_param_dt(an.TwoSolitonParams(0.5, 0.5), 0.0, 0.0) == pytest.approx(1j * math.sqrt(2))


@given(st.floats(0.0, 0.85), st.floats(-6.0, 6.0))
def test_time_derivative_matches_finite_difference(t, x):
    p = an.TwoSolitonParams(1.0, 0.5)
    h = 1e-6
    fd = (an.eval_two_param(p, t + h, x) - an.eval_two_param(p, t - h, x)) / (2 * h)
    assert abs(an.eval_two_param_dt(p, t, x) - fd) < 1e-6 * (1 + abs(fd))


def test_pde_residual_at_random_points():
    rng = np.random.default_rng(7)
    p = an.TwoSolitonParams(1.0, 0.5)
    t = rng.uniform(0, 0.9, 20)
    x = rng.uniform(-4, 4, 20)
    u = an.eval_two_param(p, t, x)
    ut = an.eval_two_param_dt(p, t, x)
    # closed-form second derivative in x of 2 sqrt2 (a+b) / (ea + eb)
    ea = np.exp(-4j * p.alpha**2 * t + 2 * p.alpha * x)
    eb = np.exp(-4j * p.beta**2 * t - 2 * p.beta * x)
    d1 = 2 * p.alpha * ea - 2 * p.beta * eb
    d2 = 4 * p.alpha**2 * ea + 4 * p.beta**2 * eb
    den = ea + eb
    c = 2 * math.sqrt(2) * (p.alpha + p.beta)
    uxx = c * (2 * d1**2 / den**3 - d2 / den**2)
    u_mirror = an.eval_two_param(p, t, -x)
    res = 1j * ut + uxx + u**2 * np.conj(u_mirror)
    assert np.max(np.abs(res)) < 1e-9


def test_origin_modulus_formula():
    t = np.linspace(0, 4, 9)
    assert np.allclose(an.origin_modulus_one_param(0.5, t), np.abs(an.eval_one_param(0.5, t, 0.0)), rtol=1e-13)


def test_parameter_validation():
    with pytest.raises(ValueError):
        an.TwoSolitonParams(-1.0, 0.5)
    with pytest.raises(ValueError):
        an.SolitonParams(0.0)
    with pytest.raises(ValueError):
        an.PerturbedSolitonParams(1.0, -0.1)
