import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocal_nls import analytic as an
from nonlocal_nls.grid import SpectralField, make_grid
from nonlocal_nls.invariants import (
    charge_local,
    charge_nonlocal,
    energy_local,
    energy_nonlocal,
    energy_terms,
    sample_invariants,
    sup_norm,
)
from nonlocal_nls.nonlinearity import DEFOCUSING


@pytest.fixture(scope="module")
def phi():
    return an.sample_exact(an.SolitonParams(1.0), 0.0, make_grid(4096, 40.0))


@pytest.fixture(scope="module")
def u0():
    return an.sample_exact(an.one_param(0.5), 0.0, make_grid(8192, 80.0))


def test_soliton_invariants(phi, oracle):
    assert charge_nonlocal(phi) == pytest.approx(2.0, abs=1e-10)
    assert energy_nonlocal(phi) == pytest.approx(-2 / 3, abs=1e-9)
    assert charge_local(phi) == pytest.approx(2.0, abs=1e-10)
    assert energy_local(phi) == pytest.approx(-2 / 3, abs=1e-9)
    assert oracle["invariants"]["soliton_1"]["E"] == pytest.approx(-2 / 3, abs=1e-12)


def test_zero_field():
    z = SpectralField(make_grid(64, 5.0), np.zeros(64))
    assert charge_nonlocal(z) == 0 and energy_nonlocal(z) == 0
    s = sample_invariants(z)
    assert (s.Q, s.E, s.sup_norm, s.l2, s.h1) == (0, 0, 0, 0, 0)


def test_small_data_invariants(u0, oracle):
    ref = oracle["invariants"]["one_param_0.5"]
    q, e = charge_nonlocal(u0), energy_nonlocal(u0)
    assert abs(q.imag) < 1e-14 and abs(e.imag) < 1e-12
    assert q.real == pytest.approx(ref["Q"], rel=1e-10)
    assert e.real == pytest.approx(ref["E"], rel=1e-9)
    assert charge_local(u0) == pytest.approx(oracle["seminorm_sq"]["0.5"]["0"] / 2, rel=1e-10)


def test_non_even_complex_data(oracle):
    ref = oracle["invariants"]["two_param_1_0.5_t0.3"]
    f = an.sample_exact(an.TwoSolitonParams(1.0, 0.5), 0.3, make_grid(4096, 40.0))
    q, e = charge_nonlocal(f), energy_nonlocal(f)
    assert q.real == pytest.approx(ref["Q"], rel=1e-10)
    assert e.real == pytest.approx(ref["E"], rel=1e-9)
    assert abs(q.imag) < 1e-13 and abs(e.imag) < 1e-12


def test_energy_terms_and_defocusing_sign(u0):
    terms = energy_terms(u0)
    assert energy_nonlocal(u0, DEFOCUSING) == pytest.approx(terms["kinetic"] + terms["quartic"])


@given(st.lists(st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False), min_size=64, max_size=64))
def test_imaginary_parts_are_rounding_only(values):
    f = SpectralField(make_grid(64, 4.0), np.array(values))
    q, e = charge_nonlocal(f), energy_nonlocal(f)
    assert abs(q.imag) < 1e-12 * (1 + abs(q))
    assert abs(e.imag) < 1e-10 * (1 + abs(e))


def test_sup_norm(phi, u0, oracle):
    assert sup_norm(phi) == pytest.approx(np.sqrt(2))
    assert sup_norm(u0) >= 1.0606601717798212
    assert sup_norm(u0) == pytest.approx(oracle["sup_dense"]["one_param_0.5_t0"]["value"], rel=1e-4)


def test_sample_records_norms(u0, oracle):
    s = sample_invariants(u0)
    ref = oracle["seminorm_sq"]["0.5"]
    assert s.l2 == pytest.approx(np.sqrt(ref["0"]), rel=1e-10)
    assert s.h1 == pytest.approx(np.sqrt(ref["0"] + ref["1"]), rel=1e-9)
