"""Pointwise matrix structure of the symmetrized Euler part.

With ``U = (N, u)`` and ``N = n - n_e`` the Euler equations read
``D0 dU/dt + sum_j A_j dU/dx_j + L_hat U = f`` where::

    A_j   = [[u_j,        n e_j^T     ],
             [h'(n) e_j,  eps^2 u_j I ]]
    L_hat = [[0,              grad n_e^T],
             [grad h'(n_e),   0         ]]
    A0    = diag(h'(n), n, n, n),   Atilde_j = A0 A_j

and the energy identity produces ``B = sum_j d_j Atilde_j - 2 A0 L_hat`` with
off-diagonal blocks::

    B12 = (grad P'(n) - 2 h'(n) grad n_e)^T
    B21 =  grad P'(n) - 2 n grad h'(n_e)

At ``n = n_e`` one has ``B21 = -B12^T`` because ``n h''(n) = P''(n) - h'(n)``.

Matrices are stored as arrays of shape ``(*grid.shape, 4, 4)``; in 1-D and 2-D
the missing velocity components and derivatives are zero. Gradients of
functions of ``n`` use the chain rule on the spectral ``grad n`` so that the
algebraic cancellations hold to round-off.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import NonPositiveDensity
from .grid import PeriodicGrid
from .laws import PressureLaw


@dataclass
class StructureMatrices:
    A0: np.ndarray
    A: np.ndarray
    Atilde: np.ndarray
    Bmat: np.ndarray
    L_hat: np.ndarray
    epsilon: float = 1.0

    @property
    def B12(self) -> np.ndarray:
        return self.Bmat[..., 0, 1:]

    @property
    def B21(self) -> np.ndarray:
        return self.Bmat[..., 1:, 0]


def _pad3(grid: PeriodicGrid, v: np.ndarray) -> np.ndarray:
    """Move the component axis last and pad it to length 3."""
    out = np.zeros((*grid.shape, 3))
    out[..., : v.shape[0]] = np.moveaxis(v, 0, -1)
    return out


def build_structure(grid: PeriodicGrid, n: np.ndarray, u: np.ndarray, n_e: np.ndarray,
                    law: PressureLaw, epsilon: float = 1.0) -> StructureMatrices:
    """Evaluate ``A0, A_j, Atilde_j, B, L_hat`` at every grid point."""
    if np.min(n) <= 0 or np.min(n_e) <= 0:
        raise NonPositiveDensity("structure matrices need positive densities")
    grid.check_vector(u)
    eps2 = epsilon**2
    hp = law.dh(n)
    uu = _pad3(grid, u)
    grad_n = _pad3(grid, grid.gradient(n))
    grad_ne = _pad3(grid, grid.gradient(n_e))
    grad_dP = law.d2P(n)[..., None] * grad_n
    grad_hp_e = law.d2h(n_e)[..., None] * grad_ne

    shape = (*grid.shape, 4, 4)
    A0 = np.zeros(shape)
    A0[..., 0, 0] = hp
    for i in range(1, 4):
        A0[..., i, i] = n

    A = np.zeros((3, *shape))
    for j in range(3):
        A[j, ..., 0, 0] = uu[..., j]
        A[j, ..., 0, j + 1] = n
        A[j, ..., j + 1, 0] = hp
        for i in range(1, 4):
            A[j, ..., i, i] = eps2 * uu[..., j]
    Atilde = A0[None] @ A

    L_hat = np.zeros(shape)
    L_hat[..., 0, 1:] = grad_ne
    L_hat[..., 1:, 0] = grad_hp_e

    Bmat = np.zeros(shape)
    div_hpu = grid.divergence(grid.dealias(hp * u))
    div_nu = grid.divergence(grid.dealias(n * u))
    Bmat[..., 0, 0] = div_hpu
    Bmat[..., 0, 1:] = grad_dP - 2 * hp[..., None] * grad_ne
    Bmat[..., 1:, 0] = grad_dP - 2 * n[..., None] * grad_hp_e
    for i in range(1, 4):
        Bmat[..., i, i] = eps2 * div_nu
    return StructureMatrices(A0, A, Atilde, Bmat, L_hat, epsilon)


def symmetry_defect(M: np.ndarray) -> float:
    """Largest entrywise ``|M - M^T|`` over all points (and leading axes)."""
    return float(np.max(np.abs(M - np.swapaxes(M, -1, -2))))


def min_eigenvalue(M: np.ndarray) -> float:
    return float(np.min(np.linalg.eigvalsh(M)))


def antisymmetry_defect(mats: StructureMatrices) -> float:
    """``max_x ||B12^T + B21||``; zero up to round-off when built at ``n = n_e``."""
    return float(np.max(np.linalg.norm(mats.B12 + mats.B21, axis=-1)))


def taylor_remainder(grid: PeriodicGrid, n_e: np.ndarray, N: np.ndarray, law: PressureLaw) -> float:
    """L2 norm of ``r = (h'(n_e+N) - h'(n_e) - h''(n_e) N) grad n_e``."""
    n = n_e + N
    if np.min(n) <= 0:
        raise NonPositiveDensity("n_e + N must be positive")
    coef = law.dh(n) - law.dh(n_e) - law.d2h(n_e) * N
    return grid.l2_norm(coef * grid.gradient(n_e))


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def _upper(name, value, threshold, detail=""):
    return CheckResult(name, float(value), float(threshold), bool(value <= threshold), detail)


def structure_audit(grid: PeriodicGrid, eq_by_gamma: dict, *, epsilon: float = 1.0,
                    amplitudes=(1e-3, 1e-2, 1e-1), seed: int = 0) -> list[CheckResult]:
    """Run the structural checks on a set of equilibria.

    Parameters
    ----------
    eq_by_gamma : dict
        Maps ``gamma`` to ``(law, n_e)``.
    amplitudes : sequence of float
        Perturbation sizes for the remainder-scaling and defect-growth sweeps.

    Returns
    -------
    list of CheckResult
        Symmetry of ``A0`` and ``Atilde_j`` (at a random nearby state), positive
        definiteness of ``A0``, the anti-symmetry defect at equilibrium and the
        log-log slopes of the Taylor remainder (2) and the off-equilibrium
        defect (1).
    """
    rng = np.random.default_rng(seed)
    results = []
    x = grid.coords[0]
    for gamma, (law, n_e) in eq_by_gamma.items():
        tag = f"gamma={gamma:g}"
        u = 0.1 * rng.standard_normal((grid.dim, *grid.shape))
        u = grid.dealias(u)
        n = n_e * (1 + 0.05 * np.cos(x))
        mats = build_structure(grid, n, u, n_e, law, epsilon)
        results.append(_upper(f"A0_symmetric[{tag}]", symmetry_defect(mats.A0), 1e-12))
        results.append(_upper(f"Atilde_symmetric[{tag}]",
                              symmetry_defect(mats.Atilde) / max(1.0, np.max(np.abs(mats.Atilde))),
                              1e-12, "relative to max entry"))
        lam = min_eigenvalue(mats.A0)
        results.append(CheckResult(f"A0_positive_definite[{tag}]", lam, 0.0, lam > 0,
                                   "minimum eigenvalue"))

        eq_mats = build_structure(grid, n_e, np.zeros((grid.dim, *grid.shape)), n_e, law, epsilon)
        scale = max(1.0, float(np.max(np.abs(grid.gradient(n_e)))))
        results.append(_upper(f"antisymmetry_defect[{tag}]", antisymmetry_defect(eq_mats),
                              1e-11 * scale))

        rem = [taylor_remainder(grid, n_e, a * np.cos(x), law) for a in amplitudes]
        if law.gamma in (2.0, 3.0):
            # h' is affine in n, so the remainder is zero up to round-off
            results.append(_upper(f"taylor_remainder_zero[{tag}]", max(rem), 1e-12,
                                  "h' affine: remainder vanishes identically"))
        else:
            norms = [grid.l2_norm(a * np.cos(x)) for a in amplitudes]
            slope = loglog_slope(norms, rem)
            results.append(CheckResult(f"taylor_remainder_slope[{tag}]", slope, 2.0,
                                       abs(slope - 2.0) <= 0.2, "expected 2 +- 0.2"))
        defects = []
        for a in amplitudes:
            m = build_structure(grid, n_e + a * np.cos(x), np.zeros((grid.dim, *grid.shape)),
                                n_e, law, epsilon)
            defects.append(antisymmetry_defect(m))
        slope = loglog_slope(amplitudes, defects)
        results.append(CheckResult(f"defect_growth_slope[{tag}]", slope, 1.0,
                                   abs(slope - 1.0) <= 0.1, "expected 1 +- 0.1"))
    return results
