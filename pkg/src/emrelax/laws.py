"""Pressure laws and doping profiles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import PeriodicGrid


@dataclass(frozen=True)
class PressureLaw:
    """gamma-law pressure ``P(n) = K n**gamma`` with enthalpy ``h' = P'/n``.

    The enthalpy is normalised by ``h(1) = 0``:
    ``h(n) = K*gamma*(n**(gamma-1) - 1)/(gamma-1)`` for ``gamma > 1`` and
    ``h(n) = K log n`` in the isothermal case. The normalisation keeps ``h``
    accurate as ``gamma -> 1``; only gradients of ``h`` enter the equations.
    """

    K: float = 1.0
    gamma: float = 1.0
    model: str = "gamma_law"

    def __post_init__(self):
        if self.model != "gamma_law":
            raise ValueError(f"unknown pressure model {self.model!r}")
        if not self.K > 0:
            raise ValueError("pressure constant K must be positive")
        if not self.gamma >= 1:
            raise ValueError("gamma must be >= 1")

    @property
    def isothermal(self) -> bool:
        return self.gamma == 1.0

    def P(self, n):
        return self.K * n**self.gamma

    def dP(self, n):
        return self.K * self.gamma * n ** (self.gamma - 1)

    def d2P(self, n):
        return self.K * self.gamma * (self.gamma - 1) * n ** (self.gamma - 2)

    def h(self, n):
        logn = np.log(n)
        if self.isothermal:
            return self.K * logn
        g = self.gamma
        return self.K * g * np.expm1((g - 1) * logn) / (g - 1)

    def dh(self, n):
        return self.K * self.gamma * n ** (self.gamma - 2)

    def d2h(self, n):
        g = self.gamma
        return self.K * g * (g - 2) * n ** (g - 3)

    def sound_speed(self, n):
        return np.sqrt(self.dP(n))


@dataclass(frozen=True)
class DopingMode:
    wavevector: tuple[int, ...]
    amplitude: float
    phase: float = 0.0


def _as_mode(m) -> DopingMode:
    if isinstance(m, DopingMode):
        return m
    if isinstance(m, dict):
        return DopingMode(tuple(int(k) for k in m["k"]), float(m["amplitude"]),
                          float(m.get("phase", 0.0)))
    k, amp, *rest = m
    return DopingMode(tuple(int(x) for x in k), float(amp), float(rest[0]) if rest else 0.0)


def cosine_series(grid: PeriodicGrid, base: float, modes) -> np.ndarray:
    """``base + sum a cos(k.x + phase)`` sampled on the grid."""
    out = np.full(grid.shape, float(base))
    for m in map(_as_mode, modes):
        wv = tuple(m.wavevector)
        if any(wv[grid.dim:]):
            raise ValueError(f"wavevector {wv} has more components than dim {grid.dim}")
        k = (wv + (0,) * grid.dim)[: grid.dim]
        arg = sum(kj * grid.k_scale * xj for kj, xj in zip(k, grid.coords))
        out = out + m.amplitude * np.cos(arg + m.phase)
    return out


@dataclass(frozen=True)
class DopingProfile:
    """Background density ``b(x) = base + sum amplitude*cos(k.x + phase)``.

    The constructor rejects profiles whose guaranteed lower bound
    ``base - sum |amplitude|`` is not positive.
    """

    base: float
    modes: tuple[DopingMode, ...] = field(default_factory=tuple)

    def __post_init__(self):
        modes = tuple(_as_mode(m) for m in self.modes)
        object.__setattr__(self, "modes", modes)
        for m in modes:
            if not any(m.wavevector):
                raise ValueError("doping modes need a non-zero wavevector; put constants in base")
        if not self.lower_bound > 0:
            raise ValueError(
                f"doping profile not bounded below by a positive constant "
                f"(base {self.base} - sum|a| = {self.lower_bound})"
            )

    @property
    def lower_bound(self) -> float:
        return self.base - sum(abs(m.amplitude) for m in self.modes)

    @property
    def is_constant(self) -> bool:
        return all(m.amplitude == 0 for m in self.modes)

    def evaluate(self, grid: PeriodicGrid) -> np.ndarray:
        return cosine_series(grid, self.base, self.modes)


def doping_field(b, grid: PeriodicGrid) -> np.ndarray:
    """Accept either a `DopingProfile` or a sampled array."""
    if isinstance(b, DopingProfile):
        return b.evaluate(grid)
    b = np.asarray(b, dtype=float)
    grid.check_scalar(b)
    return b
