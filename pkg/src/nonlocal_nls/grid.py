"""Periodic grid on [-L, L), Fourier differentiation, reflection x -> -x, and norms.

The node layout ``x_j = -L + j*dx`` (``-L`` included, ``+L`` excluded) makes the
reflection an exact index permutation ``r(j) = (N - j) mod N``, so ``u(-x)`` never
needs interpolation.  The fixed points of ``r`` are ``j = 0`` (the boundary, which
is identified with ``+L``) and ``j = N/2`` (the origin).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NonFiniteFieldError(ValueError):
    """Raised when a field would hold NaN or infinite samples."""


@dataclass(frozen=True, eq=False)
class GridSpec:
    num_points: int
    half_length: float
    spacing: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False)
    wavenumbers: np.ndarray = field(init=False, repr=False)
    reflection: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n, half = self.num_points, float(self.half_length)
        dx = 2.0 * half / n
        x = -half + dx * np.arange(n)
        k = (np.pi / half) * np.fft.fftfreq(n, d=1.0 / n)
        r = (n - np.arange(n)) % n
        for arr in (x, k, r):
            arr.setflags(write=False)
        object.__setattr__(self, "half_length", half)
        object.__setattr__(self, "spacing", dx)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "wavenumbers", k)
        object.__setattr__(self, "reflection", r)

    @property
    def origin_index(self) -> int:
        return self.num_points // 2

    @property
    def k_max(self) -> float:
        return np.pi * (self.num_points // 2) / self.half_length

    def __eq__(self, other):
        if not isinstance(other, GridSpec):
            return NotImplemented
        return self.num_points == other.num_points and self.half_length == other.half_length

    def __hash__(self):
        return hash((self.num_points, self.half_length))


def make_grid(N: int, L: float) -> GridSpec:
    """Build the uniform periodic grid with ``N`` nodes on ``[-L, L)``.

    ``N`` must be a power of two (at least 8) so that the grid is even and the
    FFT runs at full speed.
    """
    if isinstance(N, bool) or int(N) != N:
        raise ValueError(f"N must be an integer, got {N!r}")
    N = int(N)
    if N % 2:
        raise ValueError(f"N must be even, got {N}")
    if N < 8:
        raise ValueError(f"N must be at least 8, got {N}")
    if N & (N - 1):
        raise ValueError(f"N must be a power of two, got {N}")
    if not (np.isfinite(L) and L > 0):
        raise ValueError(f"L must be positive and finite, got {L}")
    return GridSpec(N, float(L))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex samples ``u(t, x_j)`` on a grid, stamped with time ``t``."""

    grid: GridSpec
    samples: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        u = np.asarray(self.samples, dtype=np.complex128)
        if u.shape != (self.grid.num_points,):
            raise ValueError(
                f"expected {self.grid.num_points} samples, got shape {u.shape}"
            )
        if not np.all(np.isfinite(u)):
            raise NonFiniteFieldError("field samples must be finite")
        object.__setattr__(self, "samples", u)
        object.__setattr__(self, "time", float(self.time))

    def with_samples(self, samples, time=None) -> "SpectralField":
        return SpectralField(self.grid, samples, self.time if time is None else time)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return self.with_samples(self.samples - other.samples)


def field_from_function(grid: GridSpec, func, time: float = 0.0) -> SpectralField:
    return SpectralField(grid, func(grid.nodes), time)


# -- array-level kernels (used directly by the time stepper) -----------------


def reflect_conjugate_array(u: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.conj(u[grid.reflection])


def derivative_array(u: np.ndarray, grid: GridSpec, order: int) -> np.ndarray:
    if order == 0:
        return np.array(u, dtype=np.complex128)
    symbol = (1j * grid.wavenumbers) ** order
    if order % 2:
        # odd derivatives of the Nyquist mode are not representable on the grid
        symbol[grid.num_points // 2] = 0.0
    return np.fft.ifft(symbol * np.fft.fft(u))


def l2_norm_sq_array(u: np.ndarray, grid: GridSpec) -> float:
    return float(np.sum(u.real**2 + u.imag**2) * grid.spacing)


# -- field-level operations --------------------------------------------------


def reflect_conjugate(f: SpectralField) -> SpectralField:
    """Return the field sampling ``conj(u(-x))``."""
    return f.with_samples(reflect_conjugate_array(f.samples, f.grid))


def spectral_derivative(f: SpectralField, order: int) -> SpectralField:
    """Differentiate ``order`` times by multiplying each Fourier mode by ``(ik)**order``."""
    if order < 0 or int(order) != order:
        raise ValueError(f"order must be a nonnegative integer, got {order}")
    return f.with_samples(derivative_array(f.samples, f.grid, int(order)))


def l2_norm_sq(f: SpectralField) -> float:
    return l2_norm_sq_array(f.samples, f.grid)


def l2_norm_sq_spectral(f: SpectralField) -> float:
    """The same quadrature evaluated from the Fourier coefficients (Parseval)."""
    uh = np.fft.fft(f.samples)
    return float(np.sum(np.abs(uh) ** 2) * f.grid.spacing / f.grid.num_points)


def seminorm_sq(f: SpectralField, k: int) -> float:
    """Squared L2 norm of the k-th derivative."""
    return l2_norm_sq_array(derivative_array(f.samples, f.grid, k), f.grid)


def sobolev_norm_sq(f: SpectralField, k: int) -> float:
    """Squared H^k norm: sum of squared L2 norms of derivatives 0..k."""
    if k < 0 or int(k) != k:
        raise ValueError(f"k must be a nonnegative integer, got {k}")
    return float(sum(seminorm_sq(f, m) for m in range(int(k) + 1)))


def sup_norm_array(u: np.ndarray) -> float:
    return float(np.max(np.abs(u))) if u.size else 0.0
