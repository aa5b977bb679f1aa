"""Charge, energy and norm monitors.

The nonlocal charge and energy are

    Q(u) = 1/2 int u(x) conj(u)(-x) dx
    E(u) = 1/2 int u_x(x) d/dx[conj(u)(-x)] dx - s/4 int u(x)^2 conj(u)(-x)^2 dx

where ``d/dx[conj(u)(-x)] = -conj(u_x)(-x)``; with this reading E is conserved
along the flow and reduces to the local energy for even data.  ``s = +1`` for
the focusing equation and ``-1`` for the defocusing one (the quartic sign is
flipped so that E is conserved by that flow).  On the reflection-symmetric grid each
quadrature sum pairs node ``j`` with ``r(j)``, whose terms are complex
conjugates, so the imaginary parts only carry rounding error.  They are kept
as diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    GridSpec,
    SpectralField,
    derivative_array,
    l2_norm_sq_array,
    reflect_conjugate_array,
    sup_norm_array,
)
from .nonlinearity import FOCUSING, SignFlag


@dataclass(frozen=True)
class InvariantSample:
    time: float
    Q: complex
    E: complex
    sup_norm: float
    l2: float
    h1: float


def charge_nonlocal(f: SpectralField) -> complex:
    u, g = f.samples, f.grid
    return complex(0.5 * np.sum(u * reflect_conjugate_array(u, g)) * g.spacing)


def _energy_terms(u: np.ndarray, ux: np.ndarray, g: GridSpec):
    kinetic = -0.5 * np.sum(ux * reflect_conjugate_array(ux, g)) * g.spacing
    p = u * reflect_conjugate_array(u, g)
    quartic = 0.25 * np.sum(p * p) * g.spacing
    return complex(kinetic), complex(quartic)


def energy_terms(f: SpectralField) -> dict:
    """The kinetic and quartic pieces of the nonlocal energy, before the sign is applied."""
    ux = derivative_array(f.samples, f.grid, 1)
    kinetic, quartic = _energy_terms(f.samples, ux, f.grid)
    return {"kinetic": kinetic, "quartic": quartic}


def energy_nonlocal(f: SpectralField, sign: SignFlag = FOCUSING) -> complex:
    ux = derivative_array(f.samples, f.grid, 1)
    kinetic, quartic = _energy_terms(f.samples, ux, f.grid)
    return kinetic - sign.multiplier * quartic


def charge_local(f: SpectralField) -> float:
    return 0.5 * l2_norm_sq_array(f.samples, f.grid)


def energy_local(f: SpectralField, sign: SignFlag = FOCUSING) -> float:
    ux = derivative_array(f.samples, f.grid, 1)
    mod2 = f.samples.real**2 + f.samples.imag**2
    kinetic = 0.5 * l2_norm_sq_array(ux, f.grid)
    quartic = 0.25 * float(np.sum(mod2 * mod2)) * f.grid.spacing
    return kinetic - sign.multiplier * quartic


def sup_norm(f: SpectralField) -> float:
    return sup_norm_array(f.samples)


def sample_invariants_array(
    u: np.ndarray, grid: GridSpec, time: float, sign: SignFlag = FOCUSING
) -> InvariantSample:
    ux = derivative_array(u, grid, 1)
    q = 0.5 * np.sum(u * reflect_conjugate_array(u, grid)) * grid.spacing
    kinetic, quartic = _energy_terms(u, ux, grid)
    l2sq = l2_norm_sq_array(u, grid)
    h1sq = l2sq + l2_norm_sq_array(ux, grid)
    return InvariantSample(
        time=float(time),
        Q=complex(q),
        E=kinetic - sign.multiplier * quartic,
        sup_norm=sup_norm_array(u),
        l2=float(np.sqrt(l2sq)),
        h1=float(np.sqrt(h1sq)),
    )


def sample_invariants(f: SpectralField, sign: SignFlag = FOCUSING) -> InvariantSample:
    return sample_invariants_array(f.samples, f.grid, f.time, sign)
