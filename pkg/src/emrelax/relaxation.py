"""Scaled Euler-Maxwell and Euler-Poisson systems in slow time.

Velocity form of the Euler-Maxwell system::

    dn/dt = -div(n u)
    du/dt = -(u.grad)u - [grad h(n) + E + eps u x B + u] / eps^2
    dE/dt =  curl(B)/eps + n u
    dB/dt = -curl(E)/eps

The Euler-Poisson system drops B and replaces E by ``grad phi`` with
``lap phi = b - n``.

One step is a Strang splitting ``S(dt/2) X(dt) S(dt/2)``:

* ``S`` (stiff, exact): the Maxwell pair rotates modewise in Fourier space
  (an L2 isometry), and the velocity relaxes towards ``-(grad h(n) + E)``
  through the exact solution of ``eps^2 du/dt = -u - g`` with ``n, E`` frozen.
  Neither substep limits the step size, whatever eps is.
* ``X`` (explicit SSP-RK2): transport ``-div(n u)``, the current ``n u`` in
  Ampere's law, advection ``(u.grad)u`` and the Lorentz force.

``div E + n`` is a linear invariant of both substeps, so the Gauss law holds to
round-off for as long as it held initially.

Supported dimensions: Euler-Poisson in 1-3 D; Euler-Maxwell in 3-D and in
2-D TE mode (``E = (E1, E2)``, scalar ``B``).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .drift_diffusion import DDState, potential, reconstruct_fields
from .equilibrium import EquilibriumState, enthalpy_field
from .errors import CflViolation, ConstraintDrift, NonPositiveDensity
from .grid import PeriodicGrid
from .laws import PressureLaw
from .snapshot import write_snapshot


@dataclass
class EMState:
    n: np.ndarray
    u: np.ndarray
    E: np.ndarray
    B: np.ndarray
    t: float = 0.0

    def copy(self) -> "EMState":
        return copy.deepcopy(self)


@dataclass
class EPState:
    n: np.ndarray
    u: np.ndarray
    t: float = 0.0

    def copy(self) -> "EPState":
        return copy.deepcopy(self)


@dataclass
class RelaxationConfig:
    """Run parameters.

    ``raw_initial_data`` is an expert switch: it lets `initial_data_from_raw`
    build ``u0/eps`` data instead of well-prepared data. With
    ``abort_on_drift=False`` constraint drift is only recorded, not raised.
    """

    epsilon: float
    dt: float
    t_end: float = 1.0
    constraint_tol: float = 1e-8
    cfl: float = 0.4
    check_cfl: bool = True
    raw_initial_data: bool = False
    abort_on_drift: bool = True

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")


# -- pointwise helpers ----------------------------------------------------

def _require_positive(n):
    if not np.all(np.isfinite(n)) or np.min(n) <= 0:
        raise NonPositiveDensity(f"density minimum {np.nanmin(n):.3e}")


def cross(grid: PeriodicGrid, u: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``u x B``; in 2-D TE mode ``B`` is the scalar out-of-plane component."""
    if grid.dim == 2:
        return np.stack([u[1] * B, -u[0] * B])
    return np.cross(u, B, axis=0)


def advection(grid: PeriodicGrid, u: np.ndarray) -> np.ndarray:
    """Dealiased ``(u.grad) u``."""
    out = np.zeros_like(u)
    for j in range(grid.dim):
        out += u[j] * grid.partial(u, j)
    return grid.dealias(out)


def _check_em_dim(grid):
    if grid.dim == 1:
        raise ValueError("Euler-Maxwell needs dim 2 (TE mode) or 3")


def gauss_residual(grid, b, n, E) -> float:
    return grid.l2_norm(grid.divergence(E) - (b - n))


def divB_residual(grid, B) -> float:
    return grid.l2_norm(grid.divergence(B)) if grid.dim == 3 else 0.0


# -- right-hand sides -----------------------------------------------------

def em_rhs(state: EMState, eq: EquilibriumState, law: PressureLaw, epsilon: float) -> EMState:
    """Tendencies of all four unknowns, returned as an `EMState` (``t`` unused)."""
    grid = eq.grid
    _check_em_dim(grid)
    _require_positive(state.n)
    n, u, E, B = state.n, state.u, state.E, state.B
    eps = epsilon
    flux = grid.dealias(n * u)
    g = grid.gradient(enthalpy_field(grid, law, n)) + E
    lorentz = grid.dealias(cross(grid, u, B))
    return EMState(
        n=-grid.divergence(flux),
        u=-advection(grid, u) - (g + eps * lorentz + u) / eps**2,
        E=grid.curl(B) / eps + flux,
        B=-grid.curl(E) / eps,
    )


def ep_field(eq: EquilibriumState, n: np.ndarray) -> np.ndarray:
    """``grad phi`` with ``lap phi = b - n`` and zero-mean phi."""
    return eq.grid.gradient(potential(eq.grid, eq.b, n))


def ep_rhs(state: EPState, eq: EquilibriumState, law: PressureLaw, epsilon: float) -> EPState:
    grid = eq.grid
    _require_positive(state.n)
    n, u = state.n, state.u
    flux = grid.dealias(n * u)
    g = grid.gradient(enthalpy_field(grid, law, n)) + ep_field(eq, n)
    return EPState(n=-grid.divergence(flux), u=-advection(grid, u) - (g + u) / epsilon**2)


# -- stiff substeps -------------------------------------------------------

def relax_velocity(u: np.ndarray, g: np.ndarray, tau: float, epsilon: float) -> np.ndarray:
    """Exact solution of ``eps^2 du/dt = -u - g`` over ``tau`` with ``g`` frozen.

    With ``g = 0`` this is the pure decay ``u exp(-tau/eps^2)``.
    """
    a = tau / epsilon**2
    return np.exp(-a) * u + np.expm1(-a) * g


def maxwell_rotation(grid: PeriodicGrid, E: np.ndarray, B: np.ndarray, theta: float):
    """Exact flow of ``dE/dt = curl B``, ``dB/dt = -curl E`` over time ``theta``.

    Longitudinal parts are untouched; the transverse parts of each Fourier mode
    rotate at frequency ``|k|``. Slow-time callers pass ``theta = tau/eps``.
    """
    ks = grid.deriv_wavenumbers
    Eh = grid.fft(E)
    Bh = grid.fft(B)
    if grid.dim == 2:
        kabs = np.sqrt(ks[0] ** 2 + ks[1] ** 2)
        safe = np.where(kabs > 0, kabs, 1.0)
        t1 = np.where(kabs > 0, ks[1] / safe, 0.0)
        t2 = np.where(kabs > 0, -ks[0] / safe, 0.0)
        eT = t1 * Eh[0] + t2 * Eh[1]
        c, s = np.cos(kabs * theta), np.sin(kabs * theta)
        eT_new = c * eT + 1j * s * Bh
        B_new = c * Bh + 1j * s * eT
        dE = eT_new - eT
        E_new = np.stack([Eh[0] + dE * t1, Eh[1] + dE * t2])
        return grid.ifft(E_new), grid.ifft(B_new)
    if grid.dim == 3:
        kabs = np.sqrt(sum(k**2 for k in ks))
        safe = np.where(kabs > 0, kabs, 1.0)
        khat = [np.where(kabs > 0, k / safe, 0.0) for k in ks]

        def split(X):
            par = sum(kj * X[j] for j, kj in enumerate(khat))
            L = np.stack([kj * par for kj in khat])
            return L, X - L

        def kcross(X):
            return np.stack([
                khat[1] * X[2] - khat[2] * X[1],
                khat[2] * X[0] - khat[0] * X[2],
                khat[0] * X[1] - khat[1] * X[0],
            ])

        EL, ET = split(Eh)
        BL, BT = split(Bh)
        c, s = np.cos(kabs * theta), np.sin(kabs * theta)
        E_new = EL + c * ET + 1j * s * kcross(Bh)
        B_new = BL + c * BT - 1j * s * kcross(Eh)
        return grid.ifft(E_new), grid.ifft(B_new)
    raise ValueError("Maxwell rotation needs dim 2 or 3")


# -- step-size control ----------------------------------------------------

def stable_dt(grid: PeriodicGrid, law: PressureLaw, n, u, B=None, epsilon=1.0, cfl=0.4) -> float:
    """Largest admissible step for the explicit substep.

    Minimum of the advective/acoustic limit ``cfl dx / (max|u| + max c_s)``, the
    transport-of-relaxed-velocity limit ``1 / (max P'(n) k_max^2 + max n)`` and,
    when ``B`` is present, the gyration limit ``cfl eps / max|B|``.
    """
    c2 = float(np.max(law.dP(n)))
    umax = float(np.max(np.sqrt(np.sum(u**2, axis=0))))
    limits = [
        cfl * grid.spacing / (umax + np.sqrt(c2)),
        1.0 / (c2 * grid.kmax_dealiased**2 + float(np.max(n))),
    ]
    if B is not None:
        bmax = float(np.max(np.abs(B)))
        if bmax > 0:
            limits.append(cfl * epsilon / bmax)
    return min(limits)


def _check_cfl(grid, law, cfg, n, u, B=None):
    if not cfg.check_cfl:
        return
    limit = stable_dt(grid, law, n, u, B, cfg.epsilon, cfg.cfl)
    if cfg.dt > limit * (1 + 1e-9):
        raise CflViolation(f"dt={cfg.dt:.3e} exceeds stable limit {limit:.3e}")


# -- steppers -------------------------------------------------------------

def _em_stiff(grid, law, n, u, E, B, tau, eps, maxwell_first):
    if maxwell_first:
        E, B = maxwell_rotation(grid, E, B, tau / eps)
    g = grid.gradient(enthalpy_field(grid, law, n)) + E
    u = relax_velocity(u, g, tau, eps)
    if not maxwell_first:
        E, B = maxwell_rotation(grid, E, B, tau / eps)
    return u, E, B


def em_step(state: EMState, eq: EquilibriumState, law: PressureLaw,
            cfg: RelaxationConfig) -> EMState:
    """Advance the Euler-Maxwell state by ``cfg.dt``.

    Raises `CflViolation` before stepping, and `NonPositiveDensity` or
    `ConstraintDrift` (Gauss-law or ``div B`` residual above
    ``cfg.constraint_tol``) after.
    """
    grid = eq.grid
    _check_em_dim(grid)
    _require_positive(state.n)
    eps, dt = cfg.epsilon, cfg.dt
    _check_cfl(grid, law, cfg, state.n, state.u, state.B)

    n = state.n
    u, E, B = _em_stiff(grid, law, n, state.u, state.E, state.B, dt / 2, eps, True)

    def explicit(n, u, E):
        flux = grid.dealias(n * u)
        du = -advection(grid, u) - grid.dealias(cross(grid, u, B)) / eps
        return -grid.divergence(flux), du, flux

    dn1, du1, dE1 = explicit(n, u, E)
    n1, u1, E1 = n + dt * dn1, u + dt * du1, E + dt * dE1
    _require_positive(n1)
    dn2, du2, dE2 = explicit(n1, u1, E1)
    n = 0.5 * (n + n1 + dt * dn2)
    u = 0.5 * (u + u1 + dt * du2)
    E = 0.5 * (E + E1 + dt * dE2)
    _require_positive(n)

    u, E, B = _em_stiff(grid, law, n, u, E, B, dt / 2, eps, False)
    out = EMState(n, u, E, B, state.t + dt)
    rg, rb = gauss_residual(grid, eq.b, n, E), divB_residual(grid, B)
    if cfg.abort_on_drift and max(rg, rb) > cfg.constraint_tol:
        raise ConstraintDrift(f"t={out.t:.4g}: gauss {rg:.3e}, div B {rb:.3e}")
    return out


def ep_step(state: EPState, eq: EquilibriumState, law: PressureLaw,
            cfg: RelaxationConfig) -> EPState:
    """Advance the Euler-Poisson state by ``cfg.dt`` (same splitting, no Maxwell)."""
    grid = eq.grid
    _require_positive(state.n)
    eps, dt = cfg.epsilon, cfg.dt
    _check_cfl(grid, law, cfg, state.n, state.u)

    def stiff(n, u, tau):
        g = grid.gradient(enthalpy_field(grid, law, n)) + ep_field(eq, n)
        return relax_velocity(u, g, tau, eps)

    def explicit(n, u):
        return -grid.divergence(grid.dealias(n * u)), -advection(grid, u)

    n = state.n
    u = stiff(n, state.u, dt / 2)
    dn1, du1 = explicit(n, u)
    n1, u1 = n + dt * dn1, u + dt * du1
    _require_positive(n1)
    dn2, du2 = explicit(n1, u1)
    n = 0.5 * (n + n1 + dt * dn2)
    u = 0.5 * (u + u1 + dt * du2)
    _require_positive(n)
    u = stiff(n, u, dt / 2)
    return EPState(n, u, state.t + dt)


# -- initial data ---------------------------------------------------------

def well_prepared_initial_data(
    eq: EquilibriumState,
    n_bar0: np.ndarray,
    law: PressureLaw,
    *,
    system: str = "em",
    velocity: str = "limit",
    delta: float | None = None,
    s: int = 2,
):
    """Initial data compatible with the limit density ``n_bar0``.

    ``n0 = n_bar0``, ``E0 = grad psi`` with ``lap psi = b - n_bar0`` (curl-free,
    Gauss law exact), ``B0 = B_e``. The velocity is either the reconstructed
    limit velocity (``velocity="limit"``) or zero (``velocity="rest"``). Both
    make ``eps||u0|| + ||E0 - E_bar0|| + ||B0 - B_e||`` vanish to all orders in
    eps; the rest state carries an O(eps) velocity initial layer.

    ``delta``, if given, bounds ``||n_bar0 - n_e||_{H^s}``.
    """
    grid = eq.grid
    _require_positive(n_bar0)
    if delta is not None:
        dev = grid.sobolev_norm(n_bar0 - eq.n_e, s)
        if dev > delta:
            raise ValueError(f"||n_bar0 - n_e||_{s} = {dev:.3e} exceeds delta = {delta:.3e}")
    _, E0, u_bar = reconstruct_fields(DDState(n_bar0), grid, eq.b, law)
    if velocity == "limit":
        u0 = u_bar
    elif velocity == "rest":
        u0 = np.zeros_like(u_bar)
    else:
        raise ValueError(f"velocity must be 'limit' or 'rest', got {velocity!r}")
    n0 = np.array(n_bar0, dtype=float)
    if system == "ep":
        return EPState(n0, u0)
    if system == "em":
        _check_em_dim(grid)
        return EMState(n0, u0, E0, eq.magnetic_field())
    raise ValueError(f"system must be 'em' or 'ep', got {system!r}")


def initial_data_from_raw(eq: EquilibriumState, cfg: RelaxationConfig, n0, u0, E0=None, B0=None,
                          system: str = "em"):
    """Unscaled data ``(n0, u0/eps, E0, B0)``; only allowed in expert mode."""
    if not cfg.raw_initial_data:
        raise ValueError("raw initial data needs RelaxationConfig(raw_initial_data=True)")
    grid = eq.grid
    u = np.asarray(u0, dtype=float) / cfg.epsilon
    if E0 is None:
        E0 = grid.gradient(potential(grid, eq.b, n0))
    if system == "ep":
        return EPState(np.array(n0, dtype=float), u)
    return EMState(np.array(n0, dtype=float), u, np.asarray(E0, dtype=float),
                   eq.magnetic_field() if B0 is None else np.asarray(B0, dtype=float))


# -- trajectories ---------------------------------------------------------

@dataclass
class Trajectory:
    """Snapshots of a run. ``fields`` maps a name to one array per snapshot.

    Relaxation runs record ``n, u, E`` (``E = grad phi`` for Euler-Poisson) and
    ``B`` for Euler-Maxwell; limit runs record ``n, u, E`` (the reconstructed
    ``n_bar, u_bar, E_bar``) and ``phi``.
    """

    grid: PeriodicGrid
    system: str
    epsilon: float | None
    times: list = field(default_factory=list)
    fields: dict = field(default_factory=dict)
    B_ref: np.ndarray | None = None
    dt: float = 0.0
    steps: int = 0
    drift_E: float = 0.0
    drift_B: float = 0.0

    def record(self, t, **arrays):
        self.times.append(float(t))
        for k, v in arrays.items():
            self.fields.setdefault(k, []).append(np.array(v, copy=True))

    def __len__(self):
        return len(self.times)

    def save(self, path: str | Path, stride: int = 1) -> None:
        """``index.csv`` (snapshot, t) plus ``<field>_<snapshot>.snap`` files."""
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        rows = ["snapshot,t"]
        for i in range(0, len(self.times), stride):
            rows.append(f"{i},{self.times[i]!r}")
            for name, arrs in self.fields.items():
                write_snapshot(path / f"{name}_{i:05d}.snap", self.grid, arrs[i])
        (path / "index.csv").write_text("\n".join(rows) + "\n")


def step_schedule(t_end: float, dt: float, snapshots: int) -> tuple[int, float, int]:
    """Step count, adjusted step (<= dt) and stride giving >= ``snapshots`` records."""
    steps = int(np.ceil(t_end / dt - 1e-9))
    dt = t_end / steps
    stride = max(1, steps // snapshots)
    return steps, dt, stride


def record_steps(steps: int, dt: float, stride: int, layer: float, per_layer: int = 50) -> set:
    """Step indices to record: every ``stride``-th step, the last step, and
    ``per_layer`` evenly spaced steps inside the initial layer ``[0, layer]``."""
    marks = set(range(stride, steps + 1, stride)) | {steps}
    layer_steps = min(steps, int(np.ceil(layer / dt)))
    if layer_steps > 0:
        sub = max(1, layer_steps // per_layer)
        marks |= set(range(sub, layer_steps + 1, sub))
    return marks


def integrate(state, eq: EquilibriumState, law: PressureLaw, cfg: RelaxationConfig,
              *, snapshots: int = 50, layer: float | None = None, callback=None) -> Trajectory:
    """Run ``em_step``/``ep_step`` from ``state`` to ``cfg.t_end``.

    Records the initial state, every ``stride``-th step, the final state and
    about 50 extra snapshots inside the velocity initial layer of width
    ``layer`` (default ``5 eps^2``), so that time integrals over the snapshots
    resolve the ``exp(-t/eps^2)`` transient. Pass ``layer=0`` to disable.
    Constraint residuals are tracked at every step.
    """
    grid = eq.grid
    is_em = isinstance(state, EMState)
    steps, dt, stride = step_schedule(cfg.t_end, cfg.dt, snapshots)
    cfg = replace(cfg, dt=dt)
    traj = Trajectory(grid, "em" if is_em else "ep", cfg.epsilon, dt=dt, steps=steps,
                      B_ref=eq.magnetic_field() if is_em else None)
    marks = record_steps(steps, dt, stride, 5 * cfg.epsilon**2 if layer is None else layer)

    def rec(s):
        if is_em:
            traj.record(s.t, n=s.n, u=s.u, E=s.E, B=s.B)
            traj.drift_E = max(traj.drift_E, gauss_residual(grid, eq.b, s.n, s.E))
            traj.drift_B = max(traj.drift_B, divB_residual(grid, s.B))
        else:
            traj.record(s.t, n=s.n, u=s.u, E=ep_field(eq, s.n))

    if is_em:
        r0 = max(gauss_residual(grid, eq.b, state.n, state.E), divB_residual(grid, state.B))
        if cfg.abort_on_drift and r0 > cfg.constraint_tol:
            raise ConstraintDrift(f"initial constraint residual {r0:.3e}")
    step = em_step if is_em else ep_step
    rec(state)
    for i in range(1, steps + 1):
        state = step(state, eq, law, cfg)
        if is_em:
            traj.drift_E = max(traj.drift_E, gauss_residual(grid, eq.b, state.n, state.E))
            traj.drift_B = max(traj.drift_B, divB_residual(grid, state.B))
        if i in marks:
            rec(state)
        if callback is not None:
            callback(i, state)
    return traj


def integrate_limit(n_bar0: np.ndarray, eq: EquilibriumState, law: PressureLaw,
                    times, dt_max: float) -> Trajectory:
    """Drift-diffusion run landing exactly on each requested snapshot time."""
    from .drift_diffusion import dd_stable_dt, dd_step

    grid = eq.grid
    traj = Trajectory(grid, "dd", None, dt=dt_max)
    state = DDState(np.array(n_bar0, dtype=float), float(times[0]))

    def rec(s):
        phi, E, u = reconstruct_fields(s, grid, eq.b, law)
        traj.record(s.t, n=s.n_bar, u=u, E=E, phi=phi)

    rec(state)
    for t_next in times[1:]:
        span = t_next - state.t
        h = min(dt_max, dd_stable_dt(state, grid, eq.b, law))
        k = max(1, int(np.ceil(span / h - 1e-9)))
        for _ in range(k):
            state = dd_step(state, grid, eq.b, law, span / k)
            traj.steps += 1
        state.t = float(t_next)
        rec(state)
    return traj
