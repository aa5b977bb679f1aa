"""Time stepping for ``i u_t + u_xx + s u^2 conj(u)(-x) = 0`` on a periodic grid.

Schemes
-------
``strang_pair_rk4`` (default)
    Half a free-Schrodinger step, a full nonlinear step, half a free step.  The
    nonlinear step couples every node with its mirror image; the pair system is
    advanced with one classical RK4 step, except at the two reflection fixed
    points (boundary and origin) where the exact rotation ``a exp(i s |a|^2 dt)``
    is used.
``if_rk4``
    Integrating-factor RK4 in Fourier space: the linear part is integrated
    exactly and RK4 is applied to the nonlinear term in the interaction picture.
``strang_exact``
    Strang splitting with the closed-form pair flow ``a exp(i s a conj(b) dt)``.
    Used as an independent cross-check of the other two.

Blow-up is detected when the sup-norm exceeds ``amplitude_threshold`` times its
initial value; the singular time is then extrapolated from the tail of
``1/sup|u|``, which is asymptotically linear for the ``1/(T - t)`` growth of the
exact blow-up solutions.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Optional

import numba
import numpy as np
import scipy.fft as sfft

from .grid import GridSpec, NonFiniteFieldError, SpectralField, sup_norm_array
from .invariants import InvariantSample, sample_invariants_array
from .nonlinearity import FOCUSING, SignFlag, dealias_mask

logger = logging.getLogger(__name__)

SCHEMES = ("strang_pair_rk4", "if_rk4", "strang_exact")
MODELS = ("nonlocal", "local")


class Termination(str, enum.Enum):
    COMPLETED = "completed"
    BLOWUP_DETECTED = "blowup_detected"
    DT_UNDERFLOW = "dt_underflow"
    NONFINITE_ABORT = "nonfinite_abort"


class InsufficientTailError(ValueError):
    """Not enough monotonically growing monitor samples to extrapolate a blow-up time."""


@dataclass(frozen=True)
class StepperConfig:
    scheme: str = "strang_pair_rk4"
    dt0: float = 1e-3
    adaptive: bool = True
    dt_min: float = 1e-8
    amplitude_threshold: float = 10.0
    conservation_tol: float = 1e-8
    dealias: bool = True
    monitor_stride: int = 10

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.dt0 > 0:
            raise ValueError(f"dt0 must be positive, got {self.dt0}")
        if not 0 < self.dt_min < self.dt0:
            raise ValueError(f"need 0 < dt_min < dt0, got dt_min={self.dt_min}, dt0={self.dt0}")
        if not self.amplitude_threshold > 1:
            raise ValueError(f"amplitude_threshold must exceed 1, got {self.amplitude_threshold}")
        if not self.conservation_tol > 0:
            raise ValueError("conservation_tol must be positive")
        if int(self.monitor_stride) != self.monitor_stride or self.monitor_stride < 1:
            raise ValueError(f"monitor_stride must be a positive integer, got {self.monitor_stride}")

    def to_dict(self) -> dict:
        return asdict(self)


class BlowupEstimate(NamedTuple):
    time: float
    uncertainty: float


@dataclass
class TrajectoryRecord:
    samples: list
    termination: Termination
    final_time: float
    blowup_estimate: Optional[BlowupEstimate] = None
    final_field: Optional[SpectralField] = field(default=None, repr=False)
    steps: int = 0
    conservation_tol: float = 1e-8

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.samples])

    @property
    def sup_norms(self) -> np.ndarray:
        return np.array([s.sup_norm for s in self.samples])

    @property
    def charge_drift(self) -> float:
        """Largest relative deviation of Re Q from its initial value."""
        q = np.array([s.Q.real for s in self.samples])
        if q.size == 0:
            return 0.0
        scale = abs(q[0]) if q[0] != 0 else 1.0
        return float(np.max(np.abs(q - q[0])) / scale)

    @property
    def energy_drift(self) -> float:
        e = np.array([s.E.real for s in self.samples])
        if e.size == 0:
            return 0.0
        scale = abs(e[0]) if e[0] != 0 else 1.0
        return float(np.max(np.abs(e - e[0])) / scale)

    @property
    def conservation_ok(self) -> bool:
        return self.charge_drift < self.conservation_tol

    @property
    def conservation_violation(self) -> bool:
        """True for a completed run whose charge drift exceeds the tolerance."""
        return self.termination is Termination.COMPLETED and not self.conservation_ok


# -- substeps -----------------------------------------------------------------


def linear_propagate(f: SpectralField, dt: float) -> SpectralField:
    """Exact free evolution ``u_t = i u_xx``: mode k picks up ``exp(-i k^2 dt)``."""
    if dt == 0:
        return SpectralField(f.grid, f.samples.copy(), f.time)
    k = f.grid.wavenumbers
    return SpectralField(f.grid, np.fft.ifft(np.fft.fft(f.samples) * np.exp(-1j * k * k * dt)), f.time + dt)


def _rk4_nonlocal(u: np.ndarray, r: np.ndarray, dt: float, s: complex) -> np.ndarray:
    def rhs(v):
        return s * v * v * np.conj(v[r])

    k1 = rhs(u)
    k2 = rhs(u + 0.5 * dt * k1)
    k3 = rhs(u + 0.5 * dt * k2)
    k4 = rhs(u + dt * k3)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@numba.njit(cache=True)
def _pair_rk4_kernel(u, dt, sgn):
    # u[j] and u[N-j] form a closed 2-dimensional system; one RK4 step each
    n = u.shape[0]
    out = np.empty_like(u)
    s = 1j * sgn
    h = 0.5 * dt
    for j in (0, n // 2):
        a = u[j]
        out[j] = a * np.exp(s * (a.real * a.real + a.imag * a.imag) * dt)
    for j in range(1, n // 2):
        a = u[j]
        b = u[n - j]
        ka1 = s * a * a * np.conj(b)
        kb1 = s * b * b * np.conj(a)
        a2 = a + h * ka1
        b2 = b + h * kb1
        ka2 = s * a2 * a2 * np.conj(b2)
        kb2 = s * b2 * b2 * np.conj(a2)
        a3 = a + h * ka2
        b3 = b + h * kb2
        ka3 = s * a3 * a3 * np.conj(b3)
        kb3 = s * b3 * b3 * np.conj(a3)
        a4 = a + dt * ka3
        b4 = b + dt * kb3
        ka4 = s * a4 * a4 * np.conj(b4)
        kb4 = s * b4 * b4 * np.conj(a4)
        out[j] = a + (dt / 6.0) * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4)
        out[n - j] = b + (dt / 6.0) * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4)
    return out


def nonlinear_substep_array(
    u: np.ndarray, grid: GridSpec, dt: float, sign: SignFlag = FOCUSING, method: str = "rk4"
) -> np.ndarray:
    """Array form of :func:`nonlinear_substep`.

    ``method`` is ``"rk4"`` (compiled pair kernel), ``"rk4_numpy"`` (the same
    scheme written with whole-array operations) or ``"exact"`` (closed-form
    pair flow).
    """
    s = 1j * sign.multiplier
    if method == "exact":
        return u * np.exp(s * u * np.conj(u[grid.reflection]) * dt)
    if method == "rk4":
        return _pair_rk4_kernel(np.ascontiguousarray(u, dtype=np.complex128), float(dt), float(sign.multiplier))
    if method != "rk4_numpy":
        raise ValueError(f"unknown substep method {method!r}")
    out = _rk4_nonlocal(u, grid.reflection, dt, s)
    # |a| is constant at the fixed points of the reflection
    for j in (0, grid.num_points // 2):
        a = u[j]
        out[j] = a * np.exp(s * (a.real * a.real + a.imag * a.imag) * dt)
    return out


def nonlinear_substep(f: SpectralField, dt: float, sign: SignFlag = FOCUSING) -> SpectralField:
    """Advance ``u_t = i s u^2 conj(u)(-x)`` by ``dt`` (pair RK4, exact at fixed points)."""
    out = nonlinear_substep_array(f.samples, f.grid, dt, sign)
    return SpectralField(f.grid, out, f.time + dt)


def local_rotation_array(u: np.ndarray, dt: float, sign: SignFlag = FOCUSING) -> np.ndarray:
    return u * np.exp(1j * sign.multiplier * (u.real * u.real + u.imag * u.imag) * dt)


class Stepper:
    """Precomputed state for stepping one grid with one configuration."""

    def __init__(self, grid: GridSpec, cfg: StepperConfig, sign: SignFlag = FOCUSING, model: str = "nonlocal"):
        if model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {model!r}")
        self.grid, self.cfg, self.sign, self.model = grid, cfg, sign, model
        self._k2 = grid.wavenumbers**2
        self._mask = dealias_mask(grid) if cfg.dealias else None
        self._phase_cache: dict = {}

    def _phases(self, dt):
        hit = self._phase_cache.get(dt)
        if hit is None:
            if len(self._phase_cache) >= 64:
                self._phase_cache.clear()
            half = np.exp(-0.5j * self._k2 * dt)
            hit = self._phase_cache[dt] = (half, half * half)
        return hit

    def _nonlinear(self, u, dt):
        if self.model == "local":
            return local_rotation_array(u, dt, self.sign)
        method = "exact" if self.cfg.scheme == "strang_exact" else "rk4"
        return nonlinear_substep_array(u, self.grid, dt, self.sign, method)

    def _term(self, u):
        s = 1j * self.sign.multiplier
        if self.model == "local":
            return s * u * u * np.conj(u)
        return s * u * u * np.conj(u[self.grid.reflection])

    def step_array(self, u: np.ndarray, dt: float) -> np.ndarray:
        half, full = self._phases(dt)
        if self.cfg.scheme == "if_rk4":
            return self._if_rk4(u, dt, half, full)
        v = sfft.ifft(sfft.fft(u) * half)
        v = self._nonlinear(v, dt)
        vh = sfft.fft(v)
        if self._mask is not None:
            vh *= self._mask
        return sfft.ifft(vh * half)

    def _if_rk4(self, u, dt, e, e2):
        fft, ifft = sfft.fft, sfft.ifft
        mask = self._mask

        def nl(vh):
            out = fft(self._term(ifft(vh)))
            if mask is not None:
                out *= mask
            return dt * out

        uh = fft(u)
        k1 = nl(uh)
        k2 = nl(e * (uh + 0.5 * k1))
        k3 = nl(e * uh + 0.5 * k2)
        k4 = nl(e2 * uh + e * k3)
        uh = e2 * uh + (e2 * k1 + 2.0 * e * (k2 + k3) + k4) / 6.0
        return ifft(uh)


def step(
    f: SpectralField, dt: float, cfg: StepperConfig, sign: SignFlag = FOCUSING, model: str = "nonlocal"
) -> SpectralField:
    """One step of the configured scheme; the result is stamped ``f.time + dt``."""
    out = Stepper(f.grid, cfg, sign, model).step_array(f.samples, dt)
    return SpectralField(f.grid, out, f.time + dt)


DT_LADDER_STEPS = 8


def adapt_dt(f: SpectralField, cfg: StepperConfig, initial_sup: float) -> float:
    """``min(dt0, dt0 (1 + sup0^2) / (1 + sup^2))`` rounded to the nearest ``dt0 * 2^(-m/8)``.

    The rounding keeps the number of distinct step sizes small so the linear
    propagators can be reused.  The result may fall below ``dt_min``.
    """
    return _adapt(sup_norm_array(f.samples), cfg, initial_sup)


def _adapt(sup: float, cfg: StepperConfig, initial_sup: float) -> float:
    ratio = (1.0 + sup * sup) / (1.0 + initial_sup * initial_sup)
    if ratio <= 1.0:
        return cfg.dt0
    m = round(DT_LADDER_STEPS * math.log2(ratio))
    return cfg.dt0 * 2.0 ** (-m / DT_LADDER_STEPS)


def run(
    f0: SpectralField,
    t_end: float,
    cfg: StepperConfig,
    sign: SignFlag = FOCUSING,
    model: str = "nonlocal",
    observer: Optional[Callable[[SpectralField], None]] = None,
) -> TrajectoryRecord:
    """Integrate from ``f0`` until ``t_end`` or until a singularity is detected.

    ``observer`` is called with the field at every monitored time; it may record
    anything but cannot influence the integration.
    """
    if not t_end > f0.time:
        raise ValueError(f"t_end={t_end} must exceed the initial time {f0.time}")
    grid = f0.grid
    stepper = Stepper(grid, cfg, sign, model)
    u = f0.samples.copy()
    t = f0.time
    sup0 = sup_norm_array(u)
    threshold = cfg.amplitude_threshold * sup0
    samples: list[InvariantSample] = []

    def monitor(v, time):
        samples.append(sample_invariants_array(v, grid, time, sign))
        if observer is not None:
            observer(SpectralField(grid, v, time))

    monitor(u, t)
    steps = 0
    termination = Termination.COMPLETED
    eps = 1e-12 * max(1.0, abs(t_end))
    sup = sup0
    while t_end - t > eps:
        dt = _adapt(sup, cfg, sup0) if cfg.adaptive else cfg.dt0
        if dt < cfg.dt_min:
            termination = Termination.DT_UNDERFLOW
            break
        remaining = t_end - t
        if dt >= remaining or remaining - dt < 1e-3 * dt:
            dt = remaining
        v = stepper.step_array(u, dt)
        new_sup = sup_norm_array(v)
        if not math.isfinite(new_sup):
            termination = Termination.NONFINITE_ABORT
            break
        u, sup = v, new_sup
        t += dt
        steps += 1
        if sup > threshold:
            termination = Termination.BLOWUP_DETECTED
            monitor(u, t)
            break
        if steps % cfg.monitor_stride == 0:
            monitor(u, t)
    if samples[-1].time != t:
        monitor(u, t)

    traj = TrajectoryRecord(
        samples=samples,
        termination=termination,
        final_time=t,
        final_field=SpectralField(grid, u, t),
        steps=steps,
        conservation_tol=cfg.conservation_tol,
    )
    if termination in (Termination.BLOWUP_DETECTED, Termination.DT_UNDERFLOW):
        try:
            traj.blowup_estimate = estimate_blowup_time(traj)
        except InsufficientTailError as exc:
            logger.info("no blow-up estimate: %s", exc)
    if traj.conservation_violation:
        logger.warning("charge drift %.3e exceeds tolerance %.1e", traj.charge_drift, cfg.conservation_tol)
    return traj


def _fit_zero(t: np.ndarray, y: np.ndarray) -> float:
    slope, intercept = np.polyfit(t, y, 1)
    if not slope < 0:
        raise InsufficientTailError("reciprocal amplitude is not decreasing")
    return float(-intercept / slope)


def estimate_blowup_time(traj: TrajectoryRecord, K: int = 8) -> BlowupEstimate:
    """Extrapolate the zero of a straight-line fit to ``1/sup|u|`` over the last ``K`` samples.

    The uncertainty is the shift of the estimate when only the last ``K/2``
    samples are used.
    """
    if traj.termination not in (Termination.BLOWUP_DETECTED, Termination.DT_UNDERFLOW):
        raise InsufficientTailError(f"trajectory terminated {traj.termination.value}; no blow-up tail")
    t, sup = traj.times, traj.sup_norms
    n = 1
    while n < len(sup) and sup[-n - 1] < sup[-n]:
        n += 1
    if n < 4:
        raise InsufficientTailError(f"only {n} monotonically growing samples at the end of the trajectory")
    m = min(K, n)
    t_full = _fit_zero(t[-m:], 1.0 / sup[-m:])
    half = max(m // 2, 2)
    t_half = _fit_zero(t[-half:], 1.0 / sup[-half:])
    return BlowupEstimate(t_full, abs(t_full - t_half))
