import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocal_nls import analytic as an
from nonlocal_nls.grid import SpectralField, l2_norm_sq, make_grid
from nonlocal_nls.integrator import (
    InsufficientTailError,
    StepperConfig,
    Termination,
    TrajectoryRecord,
    adapt_dt,
    estimate_blowup_time,
    linear_propagate,
    nonlinear_substep,
    nonlinear_substep_array,
    run,
    step,
)
from nonlocal_nls.invariants import InvariantSample
from nonlocal_nls.nonlinearity import FOCUSING

FIXED = StepperConfig(dt0=1e-3, adaptive=False)


@pytest.fixture(scope="module")
def soliton_grid():
    return make_grid(1024, 40.0)


@pytest.fixture(scope="module")
def phi(soliton_grid):
    return an.sample_exact(an.SolitonParams(1.0), 0.0, soliton_grid)


def _generic(g):
    x = g.nodes
    return (1.0 / np.cosh(x - 1.0)) * np.exp(0.5j * x) + 0.6 / np.cosh(1.5 * (x + 2.0)) * np.exp(-0.3j * x)


def test_config_validation():
    with pytest.raises(ValueError):
        StepperConfig(scheme="euler")
    with pytest.raises(ValueError):
        StepperConfig(dt0=1e-3, dt_min=1e-2)
    with pytest.raises(ValueError):
        StepperConfig(amplitude_threshold=1.0)
    with pytest.raises(ValueError):
        StepperConfig(monitor_stride=0)


def test_linear_propagation(phi):
    assert np.array_equal(linear_propagate(phi, 0.0).samples, phi.samples)
    g = make_grid(64, 2 * math.pi)
    k0 = g.wavenumbers[3]
    wave = SpectralField(g, np.exp(1j * k0 * g.nodes))
    moved = linear_propagate(wave, 0.37)
    assert np.max(np.abs(moved.samples - wave.samples * np.exp(-1j * k0**2 * 0.37))) < 1e-13
    assert moved.time == pytest.approx(0.37)
    f = SpectralField(make_grid(256, 10.0), _generic(make_grid(256, 10.0)))
    assert l2_norm_sq(linear_propagate(f, 1.3)) == pytest.approx(l2_norm_sq(f), rel=1e-13)


def test_substep_zero_and_rotation(phi):
    z = SpectralField(phi.grid, np.zeros(phi.grid.num_points))
    assert not np.any(nonlinear_substep(z, 0.1).samples)
    out = nonlinear_substep(phi, 1e-3).samples
    assert np.max(np.abs(out - phi.samples * np.exp(1j * np.abs(phi.samples) ** 2 * 1e-3))) < 1e-13


def test_substep_richardson_ratio():
    g = make_grid(256, 10.0)
    u = _generic(g)
    ref = nonlinear_substep_array(u, g, 1e-2, FOCUSING, "exact")
    one = nonlinear_substep_array(u, g, 1e-2, FOCUSING, "rk4")
    half = nonlinear_substep_array(nonlinear_substep_array(u, g, 5e-3, FOCUSING, "rk4"), g, 5e-3, FOCUSING, "rk4")
    ratio = np.max(np.abs(one - ref)) / np.max(np.abs(half - ref))
    # one step of size h has local error O(h^5): two half steps are 2 * 2^-5 = 1/16 as wrong
    assert ratio == pytest.approx(16, rel=0.2)


def test_numba_and_numpy_kernels_agree():
    g = make_grid(128, 8.0)
    u = _generic(g)
    a = nonlinear_substep_array(u, g, 0.02, FOCUSING, "rk4")
    b = nonlinear_substep_array(u, g, 0.02, FOCUSING, "rk4_numpy")
    assert np.max(np.abs(a - b)) < 1e-14


def test_tiny_step_is_continuous(phi):
    out = step(phi, 1e-8, StepperConfig())
    assert np.max(np.abs(out.samples - phi.samples)) < 1e-7
    assert out.time == pytest.approx(1e-8)


@pytest.mark.parametrize("scheme", ["strang_pair_rk4", "if_rk4", "strang_exact"])
def test_soliton_accuracy(phi, scheme):
    traj = run(phi, 1.0, StepperConfig(scheme=scheme, dt0=1e-3, adaptive=False))
    exact = an.exact_values(an.SolitonParams(1.0), 1.0, phi.grid.nodes)
    assert traj.termination is Termination.COMPLETED
    assert np.max(np.abs(traj.final_field.samples - exact)) < 1e-6


def test_schemes_agree(phi):
    a = run(phi, 1.0, FIXED).final_field.samples
    b = run(phi, 1.0, StepperConfig(scheme="if_rk4", dt0=1e-3, adaptive=False)).final_field.samples
    assert np.max(np.abs(a - b)) < 1e-6


def test_second_order_in_time(phi):
    exact = an.exact_values(an.SolitonParams(1.0), 1.0, phi.grid.nodes)
    errs = [
        np.max(np.abs(run(phi, 1.0, StepperConfig(dt0=dt, adaptive=False)).final_field.samples - exact))
        for dt in (1e-2, 5e-3)
    ]
    assert 3 <= errs[0] / errs[1] <= 5


def test_adapt_dt():
    g = make_grid(16, 1.0)
    cfg = StepperConfig(dt0=1e-2)
    ones = SpectralField(g, np.ones(16))
    assert adapt_dt(ones, cfg, 1.0) == cfg.dt0
    three = SpectralField(g, 3 * np.ones(16))
    dt = adapt_dt(three, cfg, 1.0)
    # rounded down onto the 2^(-1/8) ladder below the raw value dt0/5
    assert cfg.dt0 / 5 * 2 ** (-1 / 8) < dt <= cfg.dt0 / 5
    big = SpectralField(g, 1e6 * np.ones(16))
    assert adapt_dt(big, cfg, 1.0) < cfg.dt_min


@given(st.floats(0.0, 1e4))
def test_adapt_dt_is_monotone_and_bounded(sup):
    cfg = StepperConfig(dt0=1e-3)
    g = make_grid(8, 1.0)
    a = adapt_dt(SpectralField(g, np.full(8, sup)), cfg, 1.0)
    b = adapt_dt(SpectralField(g, np.full(8, sup * 1.5 + 1e-3)), cfg, 1.0)
    assert 0 < b <= a <= cfg.dt0
    # nearest ladder rung: within a factor 2**(1/16) of the exact law
    assert a <= 2 ** (1 / 16) * cfg.dt0 * 2 / (1 + sup * sup) + 1e-18 or sup <= 1


def test_long_soliton_run_conserves_charge(phi):
    traj = run(phi, 5.0, StepperConfig())
    assert traj.termination is Termination.COMPLETED
    assert traj.charge_drift < 1e-8 and traj.conservation_ok
    times = traj.times
    assert np.all(np.diff(times) > 0)
    assert traj.final_time == pytest.approx(5.0, abs=1e-12)


def test_small_data_blow_up_detected():
    g = make_grid(4096, 40 / 0.75)
    f0 = an.sample_exact(an.one_param(0.75), 0.0, g)
    traj = run(f0, 3.0, StepperConfig())
    assert traj.termination is Termination.BLOWUP_DETECTED
    assert traj.final_time < 3.0
    assert traj.blowup_estimate.time == pytest.approx(math.pi / 1.6875, rel=0.05)
    tail = traj.sup_norms[-8:]
    assert np.all(np.diff(tail) > 0)


def test_zero_field_run():
    g = make_grid(64, 5.0)
    traj = run(SpectralField(g, np.zeros(64)), 2.0, StepperConfig())
    assert traj.termination is Termination.COMPLETED
    assert all(s.sup_norm == 0 and s.Q == 0 for s in traj.samples)


def test_nonfinite_abort():
    g = make_grid(64, 5.0)
    f0 = SpectralField(g, 1e150 * np.exp(-g.nodes**2))
    traj = run(f0, 1.0, StepperConfig(adaptive=False, amplitude_threshold=1e300))
    assert traj.termination is Termination.NONFINITE_ABORT


def test_even_data_stay_even():
    g = make_grid(512, 20.0)
    u = (1.0 + 0.5j) / np.cosh(g.nodes) ** 2
    traj = run(SpectralField(g, u), 1.0, FIXED)
    v = traj.final_field.samples
    assert np.max(np.abs(v - v[g.reflection])) < 1e-10


def test_time_stamps_add_up():
    g = make_grid(256, 20.0)
    traj = run(an.sample_exact(an.SolitonParams(1.0), 0.0, g), 0.7, StepperConfig(dt0=3e-3))
    assert traj.final_time == pytest.approx(0.7, abs=1e-12)
    assert traj.steps == math.ceil(0.7 / 3e-3 - 1e-9)


def test_runs_are_deterministic():
    g = make_grid(256, 20.0)
    f0 = SpectralField(g, _generic(g))
    a = run(f0, 0.3, StepperConfig())
    b = run(f0, 0.3, StepperConfig())
    assert np.array_equal(a.final_field.samples, b.final_field.samples)
    assert [s.Q for s in a.samples] == [s.Q for s in b.samples]


def _synthetic(times, sups, termination=Termination.BLOWUP_DETECTED):
    samples = [InvariantSample(t, 0j, 0j, s, 0.0, 0.0) for t, s in zip(times, sups)]
    return TrajectoryRecord(samples=samples, termination=termination, final_time=times[-1])


def test_blowup_estimate_on_exact_reciprocal():
    t = np.linspace(1.5, 1.9, 41)
    est = estimate_blowup_time(_synthetic(t, 1.0 / (2.0 - t)))
    assert est.time == pytest.approx(2.0, abs=1e-6)
    assert est.uncertainty < 1e-6


def test_blowup_estimate_preconditions():
    t = np.linspace(0, 1, 20)
    with pytest.raises(InsufficientTailError):
        estimate_blowup_time(_synthetic(t, np.ones(20), Termination.COMPLETED))
    with pytest.raises(InsufficientTailError):
        estimate_blowup_time(_synthetic(t, np.r_[np.ones(18), 2.0, 3.0]))
