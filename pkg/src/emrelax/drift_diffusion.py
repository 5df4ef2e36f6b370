"""Drift-diffusion limit: ``dn/dt = lap P(n) + div(n grad phi)``, ``lap phi = b - n``.

Time stepping is the two-stage, second-order, L-stable IMEX scheme
ARS(2,2,2). The implicit part is ``c lap n`` with the frozen coefficient
``c = P'(mean n)``; the remainder ``lap(P(n) - c n) + div(n grad phi)`` is
explicit. Both parts are in divergence form, so the mean density is conserved
to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibrium import enthalpy_field
from .errors import NonPositiveDensity
from .grid import PeriodicGrid
from .laws import PressureLaw, doping_field

_GAMMA = 1.0 - 1.0 / np.sqrt(2.0)
_DELTA = 1.0 - 1.0 / (2.0 * _GAMMA)
MAX_HALVINGS = 8


@dataclass
class DDState:
    n_bar: np.ndarray
    t: float = 0.0


def potential(grid: PeriodicGrid, b: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Zero-mean ``phi`` with ``lap phi = b - n``."""
    return grid.poisson_solve(b - n, scale=float(np.max(np.abs(b))))


def reconstruct_fields(state: DDState, grid: PeriodicGrid, b, law: PressureLaw):
    """Return ``(phi_bar, E_bar, u_bar)`` for a limit density.

    ``E_bar = grad phi_bar`` and ``u_bar = -grad h(n_bar) - grad phi_bar``, the
    velocity that makes ``grad P(n) = -n E - n u`` hold.
    """
    b = doping_field(b, grid)
    n = state.n_bar
    if np.min(n) <= 0:
        raise NonPositiveDensity("limit density must be positive")
    phi = potential(grid, b, n)
    E = grid.gradient(phi)
    u = -grid.gradient(enthalpy_field(grid, law, n)) - E
    return phi, E, u


def _explicit(grid, law, b, n, c):
    phi = potential(grid, b, n)
    drift = grid.dealias(n * grid.gradient(phi))
    return grid.laplacian(grid.dealias(law.P(n)) - c * n) + grid.divergence(drift)


def dd_stable_dt(state: DDState, grid: PeriodicGrid, b, law: PressureLaw) -> float:
    """Step guard for the explicit drift and pressure-correction terms.

    ``0.5 / (max|grad phi| k_max + max n + max|P'(n) - c| k_max^2)``; the last
    term vanishes for the isothermal law.
    """
    b = doping_field(b, grid)
    n = state.n_bar
    c = law.dP(float(np.mean(n)))
    kmax = grid.kmax_dealiased
    gphi = np.max(np.abs(grid.gradient(potential(grid, b, n))))
    stiff = np.max(np.abs(law.dP(n) - c)) * kmax**2
    return 0.5 / (gphi * kmax + np.max(n) + stiff)


def _ars222(grid, law, b, n, dt):
    c = law.dP(float(np.mean(n)))
    denom = 1.0 + dt * _GAMMA * c * grid.k2

    def implicit_solve(rhs):
        return grid.ifft(grid.fft(rhs) / denom)

    k1 = _explicit(grid, law, b, n, c)
    y2 = implicit_solve(n + dt * _GAMMA * k1)
    if np.min(y2) <= 0:
        return None
    k2 = _explicit(grid, law, b, y2, c)
    f2 = c * grid.laplacian(y2)
    y3 = implicit_solve(n + dt * (_DELTA * k1 + (1 - _DELTA) * k2) + dt * (1 - _GAMMA) * f2)
    if np.min(y3) <= 0:
        return None
    return y3


def dd_step(state: DDState, grid: PeriodicGrid, b, law: PressureLaw, dt: float) -> DDState:
    """Advance the limit density by ``dt``.

    A step that would produce ``n <= 0`` is rejected and retried as two half
    steps, recursively, at most ``MAX_HALVINGS`` levels deep.
    """
    b = doping_field(b, grid)
    if np.min(state.n_bar) <= 0:
        raise NonPositiveDensity("limit density must be positive")

    def advance(n, h, depth):
        out = _ars222(grid, law, b, n, h)
        if out is not None:
            return out
        if depth >= MAX_HALVINGS:
            raise NonPositiveDensity(f"step rejected after {MAX_HALVINGS} halvings (dt={dt})")
        mid = advance(n, h / 2, depth + 1)
        return advance(mid, h / 2, depth + 1)

    return DDState(advance(state.n_bar, dt, 0), state.t + dt)


def stream_potential(grid: PeriodicGrid, n_bar: np.ndarray, u_bar: np.ndarray) -> np.ndarray:
    """Zero-mean solution of ``lap H = curl(n_bar u_bar)``.

    Scalar (out-of-plane) in 2-D, divergence-free vector in 3-D. Then
    ``curl H = P_grad(j) - (j - mean j)`` for the current ``j = n_bar u_bar``.
    """
    if grid.dim == 1:
        raise ValueError("the stream potential needs dim >= 2")
    j = grid.dealias(n_bar * u_bar)
    return grid.poisson_solve(grid.curl(j))


def stream_identity_residual(grid, E_minus, E_plus, dt2, n_bar, u_bar) -> np.ndarray:
    """``dE/dt - n u - curl H`` with ``dE/dt = (E_plus - E_minus)/dt2``."""
    H = stream_potential(grid, n_bar, u_bar)
    return (E_plus - E_minus) / dt2 - grid.dealias(n_bar * u_bar) - grid.curl(H)
