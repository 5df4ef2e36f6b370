"""Experiment configuration loaded from TOML.

Schema (every table optional except where noted)::

    system = "euler_poisson"   # euler_poisson | euler_maxwell | drift_diffusion
                               # | equilibrium_only | structure_audit
    seed = 0

    [grid]          dim = 1, points = 128, length = 6.283185307179586
    [law]           model = "gamma_law", K = 1.0, gamma = 1.0
    [doping]        base = 1.0
                    modes = [{k = [1], amplitude = 0.2, phase = 0.0}]
    [perturbation]  amplitude = 1e-2          # delta, at most 0.1 * doping base
                    modes = [{k = [1], amplitude = 1.0}]
                    random_modes = 0          # extra cosine modes drawn from seed
                    velocity = "rest"         # rest (u0 = 0) | limit (u0 = u_bar0)
    [run]           epsilon_list = [0.4, 0.2, 0.1, 0.05]   # strictly decreasing
                    t_end = 1.0, dt = 2.5e-4, dd_dt = 2.5e-3, cfl = 0.4
                    constraint_tol = 1e-8, snapshots = 50, B_e = [0.0]
                    bench_t_end = 0.05, bench_repeats = 3
    [diagnostics]   sobolev_order = 2         # s - 1 in the error functionals
                    rate_orders = [0, 1, 2]
                    bootstrap = 2000
    [structure]     gammas = [1.0, 1.4, 2.0, 3.0]
    [output]        dir = "out", save_snapshots = false, snapshot_stride = 10

The perturbation of the limit density is
``n_bar0 = n_e + amplitude * sum_m a_m cos(k_m . x + phase_m)``.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .grid import PeriodicGrid
from .laws import DopingMode, DopingProfile, PressureLaw, _as_mode

SYSTEMS = ("euler_poisson", "euler_maxwell", "drift_diffusion", "equilibrium_only",
           "structure_audit")


@dataclass
class ExperimentConfig:
    system: str = "euler_poisson"
    seed: int = 0
    dim: int = 1
    points: int = 128
    length: float = 2 * np.pi
    K: float = 1.0
    gamma: float = 1.0
    model: str = "gamma_law"
    doping_base: float = 1.0
    doping_modes: list = field(default_factory=lambda: [{"k": [1], "amplitude": 0.2}])
    delta: float = 1e-2
    perturbation_modes: list = field(default_factory=lambda: [{"k": [1], "amplitude": 1.0}])
    random_modes: int = 0
    velocity: str = "rest"
    epsilon_list: list = field(default_factory=lambda: [0.4, 0.2, 0.1, 0.05])
    t_end: float = 1.0
    dt: float = 2.5e-4
    dd_dt: float = 2.5e-3
    cfl: float = 0.4
    constraint_tol: float = 1e-8
    snapshots: int = 50
    B_e: list = field(default_factory=lambda: [0.0])
    bench_t_end: float = 0.05
    bench_repeats: int = 3
    sobolev_order: int = 2
    rate_orders: list = field(default_factory=lambda: [0, 1, 2])
    bootstrap: int = 2000
    gammas: list = field(default_factory=lambda: [1.0, 1.4, 2.0, 3.0])
    out_dir: str = "out"
    save_snapshots: bool = False
    snapshot_stride: int = 10

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.system not in SYSTEMS:
            raise ValueError(f"system must be one of {SYSTEMS}, got {self.system!r}")
        eps = list(self.epsilon_list)
        if not eps or any(not 0 < e <= 1 for e in eps):
            raise ValueError("epsilon_list entries must lie in (0, 1]")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon_list must be strictly decreasing")
        if self.delta > 0.1 * self.doping_base:
            raise ValueError(f"perturbation amplitude {self.delta} exceeds 0.1 * doping base")
        if self.velocity not in ("limit", "rest"):
            raise ValueError("velocity must be 'limit' or 'rest'")
        if self.sobolev_order < 0:
            raise ValueError("sobolev_order must be non-negative")
        if self.system == "euler_maxwell" and self.dim == 1:
            raise ValueError("euler_maxwell needs dim 2 or 3")
        self.doping()

    def grid(self) -> PeriodicGrid:
        return PeriodicGrid(self.dim, self.points, self.length)

    def law(self, gamma: float | None = None) -> PressureLaw:
        return PressureLaw(self.K, self.gamma if gamma is None else gamma, self.model)

    def doping(self) -> DopingProfile:
        return DopingProfile(self.doping_base, tuple(self.doping_modes))

    def perturbation(self) -> list[DopingMode]:
        """Deterministic modes plus ``random_modes`` extra ones drawn from ``seed``.

        Random modes use phase 0 so that even symmetry is kept (see the sweep
        notes on the mean current).
        """
        modes = [_as_mode(m) for m in self.perturbation_modes]
        rng = np.random.default_rng(self.seed)
        for _ in range(self.random_modes):
            k = tuple(int(v) for v in rng.integers(-2, 3, size=self.dim))
            if not any(k):
                k = (1,) + (0,) * (self.dim - 1)
            modes.append(DopingMode(k, float(rng.uniform(-0.5, 0.5))))
        return modes

    def magnetic(self) -> np.ndarray:
        return np.asarray(self.B_e, dtype=float)

    def to_dict(self) -> dict:
        return asdict(self)


_TABLES = {
    "grid": {"dim": "dim", "points": "points", "length": "length"},
    "law": {"model": "model", "K": "K", "gamma": "gamma"},
    "doping": {"base": "doping_base", "modes": "doping_modes"},
    "perturbation": {"amplitude": "delta", "modes": "perturbation_modes",
                     "random_modes": "random_modes", "velocity": "velocity"},
    "run": {"epsilon_list": "epsilon_list", "t_end": "t_end", "dt": "dt", "dd_dt": "dd_dt",
            "cfl": "cfl", "constraint_tol": "constraint_tol", "snapshots": "snapshots",
            "B_e": "B_e", "bench_t_end": "bench_t_end", "bench_repeats": "bench_repeats"},
    "diagnostics": {"sobolev_order": "sobolev_order", "rate_orders": "rate_orders",
                    "bootstrap": "bootstrap"},
    "structure": {"gammas": "gammas"},
    "output": {"dir": "out_dir", "save_snapshots": "save_snapshots",
               "snapshot_stride": "snapshot_stride"},
}


def config_from_dict(data: dict) -> ExperimentConfig:
    kwargs = {}
    for key in ("system", "seed"):
        if key in data:
            kwargs[key] = data[key]
    for table, mapping in _TABLES.items():
        section = data.get(table, {})
        unknown = set(section) - set(mapping)
        if unknown:
            raise ValueError(f"unknown keys in [{table}]: {sorted(unknown)}")
        for key, attr in mapping.items():
            if key in section:
                kwargs[attr] = section[key]
    unknown = set(data) - set(_TABLES) - {"system", "seed"}
    if unknown:
        raise ValueError(f"unknown top-level keys: {sorted(unknown)}")
    return ExperimentConfig(**kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        return config_from_dict(tomllib.load(fh))
