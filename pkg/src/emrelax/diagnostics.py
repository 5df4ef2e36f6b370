"""Error functionals between relaxation and limit trajectories, and rate fits.

With ``N = n - n_bar``, ``U = u - u_bar``, ``F = E - E_bar``, ``G = B - B_e`` and
``k = s - 1``::

    E_T = max_t ( ||N||_k^2 + eps^2 ||U||_k^2 + ||F||_k^2 + ||G||_k^2 )
    D_T = int_0^T ( ||N||_k^2 + ||U||_k^2 + ||F||_k^2 + ||curl G||_{k-1}^2 ) dt

The time integral is a trapezoid over the snapshots, the curl term uses order
``max(k - 1, 0)``, and the G terms are absent for Euler-Poisson.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .errors import DegenerateFit, GridMismatch
from .relaxation import Trajectory


def interpolate_fields(traj: Trajectory, times) -> dict:
    """Fields of ``traj`` linearly interpolated in time at ``times``."""
    src = np.asarray(traj.times)
    out = {}
    for name, arrs in traj.fields.items():
        stack = np.stack(arrs)
        vals = []
        for t in times:
            j = int(np.searchsorted(src, t - 1e-12))
            if j < len(src) and abs(src[j] - t) <= 1e-12 * max(1.0, abs(t)):
                vals.append(stack[j])
                continue
            if j == 0 or j >= len(src):
                raise ValueError(f"time {t} outside the limit trajectory")
            w = (t - src[j - 1]) / (src[j] - src[j - 1])
            vals.append((1 - w) * stack[j - 1] + w * stack[j])
        out[name] = vals
    return out


@dataclass
class ErrorBreakdown:
    times: np.ndarray
    N: np.ndarray
    U: np.ndarray
    F: np.ndarray
    G: np.ndarray
    curl_G: np.ndarray
    sup_N: float
    sup_U: float
    sup_F: float
    sup_G: float
    epsilon: float
    order: int
    extra: dict = field(default_factory=dict)

    @property
    def E_T(self) -> float:
        return float(np.max(self.N + self.epsilon**2 * self.U + self.F + self.G))

    @property
    def D_T(self) -> float:
        return float(trapezoid(self.N + self.U + self.F + self.curl_G, self.times))

    @property
    def curl_G_integral(self) -> float:
        return float(trapezoid(self.curl_G, self.times))


def error_breakdown(relax: Trajectory, limit: Trajectory, order: int = 2) -> ErrorBreakdown:
    """Squared ``H^order`` error norms of each field at every relaxation snapshot."""
    grid = relax.grid
    if limit.grid != grid:
        raise GridMismatch(f"relaxation grid {grid} differs from limit grid {limit.grid}")
    times = np.asarray(relax.times)
    ref = interpolate_fields(limit, times)
    eps = relax.epsilon if relax.epsilon is not None else 1.0
    has_B = "B" in relax.fields and relax.B_ref is not None
    curl_order = max(order - 1, 0)
    sq = {k: np.zeros(len(times)) for k in ("N", "U", "F", "G", "curl_G")}
    sup = dict.fromkeys(("N", "U", "F", "G"), 0.0)
    for i in range(len(times)):
        diffs = {
            "N": relax.fields["n"][i] - ref["n"][i],
            "U": relax.fields["u"][i] - ref["u"][i],
            "F": relax.fields["E"][i] - ref["E"][i],
        }
        if has_B:
            diffs["G"] = relax.fields["B"][i] - relax.B_ref
        for name, d in diffs.items():
            sq[name][i] = grid.sobolev_norm_sq(d, order)
            sup[name] = max(sup[name], grid.max_norm(d))
        if has_B:
            sq["curl_G"][i] = grid.sobolev_norm_sq(grid.curl(diffs["G"]), curl_order)
    return ErrorBreakdown(times, sq["N"], sq["U"], sq["F"], sq["G"], sq["curl_G"],
                          sup["N"], sup["U"], sup["F"], sup["G"], eps, order)


def error_functionals(relax: Trajectory, limit: Trajectory, s_minus_1: int = 2) -> tuple[float, float]:
    """``(E_T, D_T)`` measured in ``H^{s-1}``."""
    b = error_breakdown(relax, limit, s_minus_1)
    return b.E_T, b.D_T


@dataclass
class RateFit:
    slope: float
    intercept: float
    ci: tuple[float, float]
    n_rows: int

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "ci_low": self.ci[0], "ci_high": self.ci[1], "rows": self.n_rows}

    def __str__(self) -> str:
        return f"slope {self.slope:.4f} (95% CI [{self.ci[0]:.4f}, {self.ci[1]:.4f}])"


def fit_rate(rows, *, n_boot: int = 2000, seed: int = 0) -> RateFit:
    """Least-squares fit ``log(error) = slope log(eps) + intercept``.

    The interval is a percentile bootstrap over resampled rows; resamples with
    fewer than two distinct ``eps`` values are skipped. Raises `DegenerateFit`
    for fewer than three rows or any non-positive error.
    """
    rows = [(float(e), float(v)) for e, v in rows]
    if len(rows) < 3:
        raise DegenerateFit(f"need at least 3 rows, got {len(rows)}")
    eps, err = np.array(rows).T
    if np.any(err <= 0) or not np.all(np.isfinite(err)) or np.any(eps <= 0):
        raise DegenerateFit("errors and epsilons must be positive and finite")
    x, y = np.log(eps), np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    rng = np.random.default_rng(seed)
    boot = []
    for _ in range(n_boot):
        idx = rng.integers(0, len(x), size=len(x))
        if np.unique(x[idx]).size < 2:
            continue
        boot.append(np.polyfit(x[idx], y[idx], 1)[0])
    ci = (float(np.percentile(boot, 2.5)), float(np.percentile(boot, 97.5))) if boot \
        else (float(slope), float(slope))
    return RateFit(float(slope), float(intercept), ci, len(rows))
