"""The nonlocal cubic term ``sign * u(x)^2 * conj(u(-x))`` and related kernels."""

from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np

from .grid import GridSpec, SpectralField, derivative_array, reflect_conjugate_array


class SignFlag(enum.Enum):
    FOCUSING = 1
    DEFOCUSING = -1

    @property
    def multiplier(self) -> int:
        return self.value

    @classmethod
    def parse(cls, value) -> "SignFlag":
        if isinstance(value, SignFlag):
            return value
        try:
            return cls[str(value).strip().upper()]
        except KeyError:
            raise ValueError(f"equation must be 'focusing' or 'defocusing', got {value!r}") from None


FOCUSING = SignFlag.FOCUSING
DEFOCUSING = SignFlag.DEFOCUSING


@lru_cache(maxsize=32)
def dealias_mask(grid: GridSpec) -> np.ndarray:
    """Boolean mask keeping modes with ``|k| <= 2/3 k_max``."""
    mask = np.abs(grid.wavenumbers) <= (2.0 / 3.0) * grid.k_max
    mask.setflags(write=False)
    return mask


def dealias_array(u: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.fft.ifft(np.fft.fft(u) * dealias_mask(grid))


def dealias(f: SpectralField) -> SpectralField:
    """Two-thirds rule: zero every Fourier mode above two thirds of the largest wavenumber."""
    return f.with_samples(dealias_array(f.samples, f.grid))


def nonlocal_term_array(u: np.ndarray, grid: GridSpec, sign: SignFlag = FOCUSING) -> np.ndarray:
    return sign.multiplier * u * u * reflect_conjugate_array(u, grid)


def local_term_array(u: np.ndarray, sign: SignFlag = FOCUSING) -> np.ndarray:
    return sign.multiplier * u * u * np.conj(u)


def evaluate_F(f: SpectralField, sign: SignFlag = FOCUSING, dealiased: bool = False) -> SpectralField:
    out = nonlocal_term_array(f.samples, f.grid, sign)
    if dealiased:
        out = dealias_array(out, f.grid)
    return f.with_samples(out)


def evaluate_F_x(f: SpectralField, sign: SignFlag = FOCUSING) -> SpectralField:
    """x-derivative of the nonlinearity by the product rule.

    ``[u^2 conj(u)(-x)]_x = 2 u u_x conj(u)(-x) - u^2 conj(u_x)(-x)``; the minus sign
    comes from differentiating through the reflection.
    """
    u, grid = f.samples, f.grid
    ux = derivative_array(u, grid, 1)
    g = 2.0 * u * ux * reflect_conjugate_array(u, grid)
    h = u * u * reflect_conjugate_array(ux, grid)
    return f.with_samples(sign.multiplier * (g - h))


def pair_ode_rhs(a: complex, b: complex, sign: SignFlag = FOCUSING):
    """Right-hand side of the nonlinear substep for a mirrored pair ``a = u(x)``, ``b = u(-x)``."""
    s = 1j * sign.multiplier
    return s * a * a * np.conj(b), s * b * b * np.conj(a)


def exact_pair_flow(a, b, dt: float, sign: SignFlag = FOCUSING):
    """Exact solution of the pair system after time ``dt``.

    ``p = a * conj(b)`` is invariant under the pair flow, so
    ``a -> a exp(i s p dt)`` and ``b -> b exp(i s conj(p) dt)``.  When ``p`` is not
    real the moduli of ``a`` and ``b`` change, unlike the local cubic rotation.
    """
    s = 1j * sign.multiplier
    p = a * np.conj(b)
    return a * np.exp(s * p * dt), b * np.exp(s * np.conj(p) * dt)
