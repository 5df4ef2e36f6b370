"""epsilon sweeps, error reports and timing benchmarks."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .diagnostics import error_breakdown, fit_rate
from .drift_diffusion import DDState, dd_step, reconstruct_fields, stream_identity_residual
from .equilibrium import equilibrium_residuals, magnetic_components, solve_equilibrium
from .errors import DegenerateFit, SweepFailure
from .laws import cosine_series
from .relaxation import (RelaxationConfig, integrate, integrate_limit,
                         well_prepared_initial_data)
from .structure import structure_audit

CSV_COLUMNS = ("epsilon", "E_T", "D_T", "sup_N", "sup_U", "sup_F", "sup_G",
               "drift_E", "drift_B", "wall_s")
CSV_VERSION = 1


@dataclass
class SweepRow:
    epsilon: float
    E_T: float
    D_T: float
    sup_N: float
    sup_U: float
    sup_F: float
    sup_G: float
    drift_E: float
    drift_B: float
    wall_s: float
    curl_G_integral: float = 0.0
    by_order: dict = field(default_factory=dict)
    bound_ratio: float = 1.0
    valid: bool = True
    steps: int = 0
    dt: float = 0.0
    stride: int = 1
    snapshots: int = 0


@dataclass
class ErrorReport:
    system: str
    config: dict
    rows: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([repr(float(getattr(r, c))) for c in CSV_COLUMNS])
        return buf.getvalue()

    def as_dict(self) -> dict:
        return {
            "csv_version": CSV_VERSION,
            "system": self.system,
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
            "fits": self.fits,
            "extra": self.extra,
        }

    def rate_text(self) -> str:
        main = self.fits.get("E_T")
        if main is None or "error" in main:
            reason = "no fit" if main is None else main["error"]
            return f"E_T rate: unavailable ({reason})\n"
        lines = []
        for name, fit in self.fits.items():
            if "error" in fit:
                lines.append(f"{name}: unavailable ({fit['error']})")
            else:
                half = 0.5 * (fit["ci_high"] - fit["ci_low"])
                lines.append(f"{name}: slope {fit['slope']:.4f} +- {half:.4f} "
                             f"(95% CI [{fit['ci_low']:.4f}, {fit['ci_high']:.4f}])")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(self.csv_text())
        (out / "report.json").write_text(json.dumps(self.as_dict(), indent=2, default=float))
        (out / "rate.txt").write_text(self.rate_text())


# -- setup shared by every sweep entry --------------------------------------

def _B_e(cfg: ExperimentConfig):
    if cfg.system != "euler_maxwell":
        return None
    ncomp = magnetic_components(cfg.dim)
    B = cfg.magnetic()
    if B.size != ncomp and not np.any(B):
        B = np.zeros(ncomp)
    return B


def prepare(cfg: ExperimentConfig):
    """Grid, law, equilibrium and the shared limit density ``n_bar0``."""
    grid = cfg.grid()
    law = cfg.law()
    eq = solve_equilibrium(cfg.doping(), law, grid, B_e=_B_e(cfg))
    n_bar0 = eq.n_e + cfg.delta * cosine_series(grid, 0.0, cfg.perturbation())
    return grid, law, eq, n_bar0


def deviation_norm_sq(eq, epsilon, s, n, u, E, B=None) -> float:
    """``||(n - n_e, eps u, E - E_e, B - B_e)||_s^2``."""
    grid = eq.grid
    total = (grid.sobolev_norm_sq(n - eq.n_e, s) + epsilon**2 * grid.sobolev_norm_sq(u, s)
             + grid.sobolev_norm_sq(E - eq.E_e, s))
    if B is not None:
        total += grid.sobolev_norm_sq(B - eq.magnetic_field(), s)
    return total


def run_epsilon(cfg: ExperimentConfig, epsilon: float, out_dir: str | Path | None = None,
                setup=None) -> SweepRow:
    """One sweep entry: relaxation run, limit run on the same times, diagnostics."""
    grid, law, eq, n_bar0 = setup or prepare(cfg)
    system = "em" if cfg.system == "euler_maxwell" else "ep"
    state = well_prepared_initial_data(eq, n_bar0, law, system=system, velocity=cfg.velocity)
    rcfg = RelaxationConfig(epsilon, cfg.dt, cfg.t_end, cfg.constraint_tol, cfg.cfl,
                            abort_on_drift=False)
    t0 = time.perf_counter()
    traj = integrate(state, eq, law, rcfg, snapshots=cfg.snapshots)
    limit = integrate_limit(n_bar0, eq, law, traj.times, cfg.dd_dt)
    wall = time.perf_counter() - t0

    orders = sorted(set(cfg.rate_orders) | {cfg.sobolev_order})
    breakdowns = {k: error_breakdown(traj, limit, k) for k in orders}
    main = breakdowns[cfg.sobolev_order]

    s = cfg.sobolev_order + 1
    dev = [deviation_norm_sq(eq, epsilon, s, traj.fields["n"][i], traj.fields["u"][i],
                             traj.fields["E"][i],
                             traj.fields["B"][i] if "B" in traj.fields else None)
           for i in range(len(traj))]
    bound_ratio = float(np.sqrt(max(dev) / dev[0])) if dev[0] > 0 else float("inf")

    if out_dir is not None and cfg.save_snapshots:
        run_dir = Path(out_dir) / "runs" / f"eps_{epsilon:g}"
        traj.save(run_dir / "relaxation", stride=cfg.snapshot_stride)
        limit.save(run_dir / "limit", stride=cfg.snapshot_stride)

    return SweepRow(
        epsilon=float(epsilon), E_T=main.E_T, D_T=main.D_T,
        sup_N=main.sup_N, sup_U=main.sup_U, sup_F=main.sup_F, sup_G=main.sup_G,
        drift_E=traj.drift_E, drift_B=traj.drift_B, wall_s=wall,
        curl_G_integral=main.curl_G_integral,
        by_order={str(k): {"E_T": b.E_T, "D_T": b.D_T, "curl_G_integral": b.curl_G_integral}
                  for k, b in breakdowns.items()},
        bound_ratio=bound_ratio,
        valid=max(traj.drift_E, traj.drift_B) <= cfg.constraint_tol,
        steps=traj.steps, dt=traj.dt, stride=max(1, traj.steps // cfg.snapshots),
        snapshots=len(traj),
    )


def _worker(args):
    cfg_dict, epsilon, out_dir = args
    try:
        return run_epsilon(ExperimentConfig(**cfg_dict), epsilon, out_dir)
    except Exception as exc:  # re-raised with the failing epsilon in the parent
        return ("error", epsilon, f"{type(exc).__name__}: {exc}")


def _fit(rows, key, cfg) -> dict:
    try:
        return fit_rate([(r.epsilon, key(r)) for r in rows], n_boot=cfg.bootstrap,
                        seed=cfg.seed).as_dict()
    except DegenerateFit as exc:
        return {"error": f"DegenerateFit: {exc}"}


def _monotone(values, slack=0.1) -> bool:
    """Non-increasing as epsilon decreases; the last pair gets ``slack``."""
    ok = True
    for i in range(len(values) - 1):
        tol = slack if i == len(values) - 2 else 0.0
        ok &= values[i + 1] <= values[i] * (1 + tol)
    return bool(ok)


def run_sweep(cfg: ExperimentConfig, workers: int = 1, out_dir: str | Path | None = None) -> ErrorReport:
    """Run every epsilon in ``cfg.epsilon_list`` and fit the convergence rates.

    Rows come back in epsilon order whatever the worker count. Rows whose
    constraint drift exceeded ``constraint_tol`` are kept but marked invalid and
    left out of the fits.
    """
    report = ErrorReport(cfg.system, cfg.to_dict())
    if cfg.system == "equilibrium_only":
        grid, law = cfg.grid(), cfg.law()
        eq = solve_equilibrium(cfg.doping(), law, grid)
        report.extra["equilibrium"] = equilibrium_summary(eq, law)
        return report
    if cfg.system == "structure_audit":
        report.extra["structure"] = [r.as_dict() for r in run_structure(cfg)]
        return report
    if cfg.system == "drift_diffusion":
        report.extra["drift_diffusion"] = run_drift_diffusion(cfg)
        return report

    jobs = [(cfg.to_dict(), eps, None if out_dir is None else str(out_dir))
            for eps in cfg.epsilon_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, jobs))
    else:
        setup = prepare(cfg)
        results = []
        for _, eps, od in jobs:
            try:
                results.append(run_epsilon(cfg, eps, od, setup))
            except Exception as exc:
                raise SweepFailure(eps, exc) from exc
    for res in results:
        if isinstance(res, tuple):
            raise SweepFailure(res[1], res[2])
    report.rows = results

    valid = [r for r in results if r.valid]
    report.fits["E_T"] = _fit(valid, lambda r: r.E_T, cfg)
    report.fits["D_T"] = _fit(valid, lambda r: r.D_T, cfg)
    if cfg.system == "euler_maxwell":
        report.fits["curl_G_integral"] = _fit(valid, lambda r: r.curl_G_integral, cfg)
    for k in cfg.rate_orders:
        for name in ("E_T", "D_T"):
            report.fits[f"{name}[s-1={k}]"] = _fit(valid, lambda r: r.by_order[str(k)][name], cfg)
    report.extra["monotone_E_T"] = _monotone([r.E_T for r in results])
    report.extra["monotone_D_T"] = _monotone([r.D_T for r in results])
    report.extra["max_bound_ratio"] = max(r.bound_ratio for r in results)
    report.extra["snapshot_stride"] = {repr(r.epsilon): r.stride for r in results}
    report.extra["invalid_epsilons"] = [r.epsilon for r in results if not r.valid]
    return report


# -- other experiment kinds ------------------------------------------------

def equilibrium_summary(eq, law) -> dict:
    names = ("elliptic", "force", "gauss", "curl")
    return {
        "iterations": eq.iterations,
        "residuals": dict(zip(names, equilibrium_residuals(eq, eq.b, law))),
        "n_min": float(np.min(eq.n_e)),
        "n_max": float(np.max(eq.n_e)),
        "history": [float(h) for h in eq.history],
    }


def run_structure(cfg: ExperimentConfig):
    grid = cfg.grid()
    eqs = {}
    for g in cfg.gammas:
        law = cfg.law(g)
        eqs[g] = (law, solve_equilibrium(cfg.doping(), law, grid).n_e)
    return structure_audit(grid, eqs, seed=cfg.seed)


def run_drift_diffusion(cfg: ExperimentConfig) -> dict:
    """Limit run alone: mass drift and the stream-function identity residual."""
    grid, law, eq, n_bar0 = prepare(cfg)
    state = DDState(n_bar0)
    steps = int(np.ceil(cfg.t_end / cfg.dd_dt - 1e-9))
    dt = cfg.t_end / steps
    mass0 = grid.integrate(n_bar0)
    stream = 0.0
    prev_state = None
    for _ in range(steps):
        new = dd_step(state, grid, eq.b, law, dt)
        if grid.dim >= 2 and prev_state is not None:
            _, E_minus, _ = reconstruct_fields(prev_state, grid, eq.b, law)
            _, E_plus, _ = reconstruct_fields(new, grid, eq.b, law)
            _, _, u_mid = reconstruct_fields(state, grid, eq.b, law)
            res = stream_identity_residual(grid, E_minus, E_plus, 2 * dt, state.n_bar, u_mid)
            stream = max(stream, grid.l2_norm(res))
        prev_state, state = state, new
    return {
        "steps": steps,
        "dt": dt,
        "mass_drift": float(abs(grid.integrate(state.n_bar) - mass0) / mass0),
        "stream_identity_residual": stream if grid.dim >= 2 else None,
    }


@dataclass
class BenchRow:
    system: str
    epsilon: float | None
    steps: int
    median_s: float
    s_per_unit_time: float
    s_per_step: float


def benchmark(cfg: ExperimentConfig) -> list[BenchRow]:
    """Median wall time over ``bench_repeats`` runs of length ``bench_t_end``."""
    grid, law, eq, n_bar0 = prepare(cfg)
    rows = []
    repeats = max(3, cfg.bench_repeats)
    if cfg.system in ("euler_poisson", "euler_maxwell"):
        system = "em" if cfg.system == "euler_maxwell" else "ep"
        for eps in cfg.epsilon_list:
            state = well_prepared_initial_data(eq, n_bar0, law, system=system,
                                               velocity=cfg.velocity)
            rcfg = RelaxationConfig(eps, cfg.dt, cfg.bench_t_end, cfg.constraint_tol, cfg.cfl,
                                    abort_on_drift=False)
            integrate(state, eq, law, replace(rcfg, t_end=rcfg.dt), snapshots=1)  # warm-up
            times, steps = [], 0
            for _ in range(repeats):
                t0 = time.perf_counter()
                traj = integrate(state, eq, law, rcfg, snapshots=1)
                times.append(time.perf_counter() - t0)
                steps = traj.steps
            med = float(np.median(times))
            rows.append(BenchRow(cfg.system, float(eps), steps, med, med / cfg.bench_t_end,
                                 med / steps))
    times = []
    steps = int(np.ceil(cfg.bench_t_end / cfg.dd_dt - 1e-9))
    for _ in range(repeats):
        t0 = time.perf_counter()
        integrate_limit(n_bar0, eq, law, np.linspace(0.0, cfg.bench_t_end, steps + 1), cfg.dd_dt)
        times.append(time.perf_counter() - t0)
    med = float(np.median(times))
    rows.append(BenchRow("drift_diffusion", None, steps, med, med / cfg.bench_t_end, med / steps))
    return rows


def write_bench(rows: list[BenchRow], out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ("system", "epsilon", "steps", "median_s", "s_per_unit_time", "s_per_step")
    w.writerow(cols)
    for r in rows:
        w.writerow(["" if getattr(r, c) is None else getattr(r, c) for c in cols])
    (out / "bench.csv").write_text(buf.getvalue())
    (out / "bench.json").write_text(json.dumps([asdict(r) for r in rows], indent=2))
