"""Command line entry point: ``emrelax {equilibrium,sweep,structure,bench}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ExperimentConfig, load_config
from .equilibrium import save_equilibrium, solve_equilibrium
from .errors import EmRelaxError
from .experiments import benchmark, equilibrium_summary, run_structure, run_sweep, write_bench

log = logging.getLogger("emrelax")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _out(args, cfg) -> Path:
    return Path(args.out or cfg.out_dir)


def cmd_equilibrium(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    law = cfg.law()
    eq = solve_equilibrium(cfg.doping(), law, cfg.grid())
    save_equilibrium(out / "equilibrium", eq, law, cfg.doping())
    summary = equilibrium_summary(eq, law)
    (out / "equilibrium.json").write_text(json.dumps(summary, indent=2))
    for name, value in summary["residuals"].items():
        print(f"{name:9s} residual {value:.3e}")
    print(f"newton iterations {eq.iterations}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    report = run_sweep(cfg, workers=args.workers, out_dir=out)
    report.write(out)
    sys.stdout.write(report.csv_text())
    sys.stdout.write(report.rate_text())
    return 0


def cmd_structure(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    results = run_structure(cfg)
    (out / "structure.json").write_text(json.dumps([r.as_dict() for r in results], indent=2))
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.value:.3e} (threshold {r.threshold:.3e})")
    return 0 if all(r.passed for r in results) else 1


def cmd_bench(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    rows = benchmark(cfg)
    write_bench(rows, out)
    for r in rows:
        eps = "-" if r.epsilon is None else f"{r.epsilon:g}"
        print(f"{r.system:16s} eps={eps:6s} {r.s_per_step * 1e3:8.3f} ms/step "
              f"{r.s_per_unit_time:8.2f} s/unit time")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emrelax", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in [
        ("equilibrium", cmd_equilibrium, "solve for the equilibrium and save it"),
        ("sweep", cmd_sweep, "epsilon sweep with error functionals and rate fits"),
        ("structure", cmd_structure, "symmetrizer and anti-symmetry audit"),
        ("bench", cmd_bench, "wall-clock cost of each solver"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="TOML experiment file")
        p.add_argument("--out", type=Path, help="output directory (default from config)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, default=1, help="parallel sweep entries")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (EmRelaxError, ValueError, OSError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
