"""Non-constant equilibria: ``-lap h(n_e) + n_e = b`` on the torus.

The electric field follows from force balance, ``E_e = -grad h(n_e)``, and the
potential is fixed by ``E_e = grad phi_e`` with zero mean, so
``phi_e = -h(n_e) + mean(h(n_e))``. The magnetic field is any constant vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import NegativeDensityIterate, NoConvergence
from .grid import PeriodicGrid
from .laws import DopingProfile, PressureLaw, doping_field
from .snapshot import read_snapshot, write_snapshot

MIN_STEP = 2.0**-10


def enthalpy_field(grid: PeriodicGrid, law: PressureLaw, n: np.ndarray) -> np.ndarray:
    """Dealiased enthalpy ``h(n)``; every solver uses this same discretisation."""
    return grid.dealias(law.h(n))


def magnetic_components(dim: int) -> int:
    return {1: 0, 2: 1, 3: 3}[dim]


def constant_magnetic_field(grid: PeriodicGrid, B_e) -> np.ndarray:
    """Field array for a constant magnetic vector (scalar in 2-D TE mode)."""
    B_e = np.atleast_1d(np.asarray(B_e, dtype=float))
    if grid.dim == 2:
        return np.full(grid.shape, B_e[0])
    return B_e.reshape(-1, *([1] * grid.dim)) * np.ones((1, *grid.shape))


@dataclass
class EquilibriumState:
    grid: PeriodicGrid
    n_e: np.ndarray
    phi_e: np.ndarray
    E_e: np.ndarray
    B_e: np.ndarray
    b: np.ndarray
    iterations: int = 0
    residual: float = 0.0
    history: list = field(default_factory=list)

    def magnetic_field(self) -> np.ndarray:
        return constant_magnetic_field(self.grid, self.B_e)


def _default_B(dim: int, B_e) -> np.ndarray:
    ncomp = magnetic_components(dim)
    if B_e is None:
        return np.zeros(ncomp)
    B_e = np.atleast_1d(np.asarray(B_e, dtype=float))
    if B_e.size != ncomp:
        raise ValueError(f"B_e needs {ncomp} components in dim {dim}")
    return B_e


def equilibrium_from_density(grid, n_e, b, law, B_e=None, **info) -> EquilibriumState:
    hn = enthalpy_field(grid, law, n_e)
    E_e = -grid.gradient(hn)
    phi_e = -(hn - grid.mean(hn))
    return EquilibriumState(grid, n_e, phi_e, E_e, _default_B(grid.dim, B_e), b, **info)


def elliptic_residual(grid, law, n, b) -> np.ndarray:
    return -grid.laplacian(enthalpy_field(grid, law, n)) + n - b


def solve_equilibrium(
    doping: DopingProfile | np.ndarray,
    law: PressureLaw,
    grid: PeriodicGrid,
    tol: float = 1e-10,
    max_iter: int = 50,
    B_e=None,
) -> EquilibriumState:
    """Damped Newton for ``-lap h(n) + n = b`` starting from ``n = b``.

    Each Newton correction is found in the enthalpy variable
    ``w = h'(n) dn``, where the linearisation ``-lap w + w / h'(n) = -R`` is
    symmetric positive definite; it is solved by conjugate gradients with the
    spectral preconditioner ``(-lap + 1/h'(mean n))^-1``.

    Raises
    ------
    NoConvergence
        Residual did not reach ``tol * ||b||`` within ``max_iter`` iterations,
        or the line search stalled.
    NegativeDensityIterate
        No step length down to ``2**-10`` kept the iterate positive.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    b = doping_field(doping, grid)
    if np.min(b) <= 0:
        raise ValueError("doping must be positive")
    bnorm = grid.l2_norm(b)
    mask = grid.dealias_mask
    size = grid.size

    n = b.copy()
    r = elliptic_residual(grid, law, n, b)
    rnorm = grid.l2_norm(r)
    history = [rnorm]
    it = 0
    while rnorm > tol * bnorm:
        if it >= max_iter:
            raise NoConvergence(max_iter, rnorm / bnorm)
        it += 1
        inv_a = 1.0 / law.dh(n)

        def matvec(w, inv_a=inv_a):
            w = w.reshape(grid.shape)
            return (grid.ifft(grid.k2 * mask * grid.fft(w)) + inv_a * w).ravel()

        abar = law.dh(float(np.mean(n)))
        prec_symbol = 1.0 / (grid.k2 * mask + 1.0 / abar)

        def psolve(v):
            return grid.ifft(prec_symbol * grid.fft(v.reshape(grid.shape))).ravel()

        op = LinearOperator((size, size), matvec=matvec, dtype=float)
        pre = LinearOperator((size, size), matvec=psolve, dtype=float)
        w, info = cg(op, -r.ravel(), rtol=1e-13, atol=1e-14 * bnorm, maxiter=10 * size, M=pre)
        dn = w.reshape(grid.shape) * inv_a

        step, positive_seen = 1.0, False
        while step >= MIN_STEP:
            trial = n + step * dn
            if np.min(trial) > 0:
                positive_seen = True
                r_trial = elliptic_residual(grid, law, trial, b)
                rn_trial = grid.l2_norm(r_trial)
                if rn_trial < rnorm:
                    break
            step *= 0.5
        else:
            if not positive_seen:
                raise NegativeDensityIterate(
                    f"iterate {it}: no step >= 2^-10 keeps the density positive"
                )
            raise NoConvergence(it, rnorm / bnorm)
        n, r, rnorm = trial, r_trial, rn_trial
        history.append(rnorm)

    return equilibrium_from_density(
        grid, n, b, law, B_e, iterations=it, residual=rnorm / bnorm, history=history
    )


def equilibrium_residuals(
    eq: EquilibriumState, doping, law: PressureLaw
) -> tuple[float, float, float, float]:
    """Relative L2 residuals ``(elliptic, force, gauss, curl)``.

    Each is normalised by ``||b||_{L2}``:

    * elliptic: ``-lap h(n_e) + n_e - b``
    * force:    ``grad P(n_e) + n_e E_e``
    * gauss:    ``div E_e - (b - n_e)``
    * curl:     ``curl E_e`` (identically zero in 1-D)
    """
    grid = eq.grid
    b = doping_field(doping, grid)
    scale = grid.l2_norm(b)
    n = eq.n_e
    r_ell = grid.l2_norm(elliptic_residual(grid, law, n, b))
    r_force = grid.l2_norm(grid.gradient(grid.dealias(law.P(n))) + grid.dealias(n * eq.E_e))
    r_gauss = grid.l2_norm(grid.divergence(eq.E_e) - (b - n))
    r_curl = 0.0 if grid.dim == 1 else grid.l2_norm(grid.curl(eq.E_e))
    return (r_ell / scale, r_force / scale, r_gauss / scale, r_curl / scale)


def save_equilibrium(path: str | Path, eq: EquilibriumState, law: PressureLaw,
                     doping: DopingProfile | None = None) -> None:
    """Directory with ``header.json`` plus one snapshot per field."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    res = equilibrium_residuals(eq, eq.b, law)
    header = {
        "format": "emrelax-equilibrium",
        "version": 1,
        "law": {"model": law.model, "K": law.K, "gamma": law.gamma},
        "doping": None if doping is None else {
            "base": doping.base,
            "modes": [{"k": list(m.wavevector), "amplitude": m.amplitude, "phase": m.phase}
                      for m in doping.modes],
        },
        "B_e": eq.B_e.tolist(),
        "iterations": eq.iterations,
        "residuals": dict(zip(["elliptic", "force", "gauss", "curl"], res)),
    }
    (path / "header.json").write_text(json.dumps(header, indent=2))
    for name in ("n_e", "phi_e", "E_e", "b"):
        write_snapshot(path / f"{name}.snap", eq.grid, getattr(eq, name))


def load_equilibrium(path: str | Path) -> tuple[EquilibriumState, PressureLaw]:
    path = Path(path)
    header = json.loads((path / "header.json").read_text())
    law = PressureLaw(header["law"]["K"], header["law"]["gamma"], header["law"]["model"])
    grid, n_e = read_snapshot(path / "n_e.snap")
    fields = {name: read_snapshot(path / f"{name}.snap")[1] for name in ("phi_e", "E_e", "b")}
    eq = EquilibriumState(grid, n_e, fields["phi_e"], fields["E_e"],
                          np.asarray(header["B_e"], dtype=float), fields["b"],
                          iterations=header["iterations"])
    return eq, law
