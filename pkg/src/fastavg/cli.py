"""``fastavg <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]``

Exit status: 0 when every check of the run passed, 2 when a check failed,
1 on an execution error (bad config, solver failure, hypothesis rejection).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import experiments as ex
from .averaged import write_scalar_csv
from .coefficients import HypothesisError
from .config import KINDS, ConfigError, load_config
from .fluctuation import write_report_csv
from .spde import IntegrationError, write_modes_csv

log = logging.getLogger("fastavg")


def _print_checks(checks):
    for name, ok in checks.items():
        print(f"  [{'PASS' if ok else 'FAIL'}] {name}")


def _eigen(cfg, out, threads):
    rep = ex.run_eigen(cfg)
    ex.write_csv(os.path.join(out, "report.csv"), ["k", "alpha", "e_k(x_a)", "e_k(x_b)"], rep.rows())
    print(f"eigen: K={len(rep.alphas)} gap={rep.gap:.6g} gram_error={rep.gram_error:.3g} "
          f"({'analytic' if rep.analytic else 'numeric'} branch)")
    return rep.checks


def _simulate(cfg, out, threads):
    res = ex.run_simulate(cfg)
    pdir = os.path.join(out, "paths")
    os.makedirs(pdir, exist_ok=True)
    for r, (up, vp) in enumerate(zip(res.spde_paths, res.sde_paths)):
        write_modes_csv(up, os.path.join(pdir, f"spde_r{r:04d}.csv"))
        write_scalar_csv(vp, os.path.join(pdir, f"sde_r{r:04d}.csv"))
    ex.write_csv(os.path.join(out, "report.csv"), ["replica", "eps", "final_hmu_error"],
                 ([r, float(cfg.eps), float(e)] for r, e in enumerate(res.final_errors)))
    print(f"simulate: eps={cfg.eps:g} replicas={cfg.replicas} mean final error={res.final_errors.mean():.6g}")
    return res.checks


def _converge(cfg, out, threads):
    rep = ex.run_converge(cfg, threads=threads)
    ex.write_csv(os.path.join(out, "rate.csv"), ["eps", "rms_sup_error"],
                 ([float(e), float(r)] for e, r in zip(rep.eps, rep.rms)))
    ex.write_csv(os.path.join(out, "report.csv"),
                 ["slope", "intercept", "r2", "replicas", "t_start", "monotone", "failures"],
                 [[rep.slope, rep.intercept, rep.r2, rep.replicas, float(rep.t_start),
                   int(rep.monotone), len(rep.failures)]])
    if rep.failures:
        ex.write_csv(os.path.join(out, "failures.csv"), ["eps", "replica", "error"], rep.failures)
    for e, r in zip(rep.eps, rep.rms):
        print(f"  eps={e:<10.6g} rms sup error={r:.6g}")
    print(f"converge: slope={rep.slope:.4f} intercept={rep.intercept:.4f} R^2={rep.r2:.4f}")
    return rep.checks


def _bound(cfg, out, threads):
    tab = ex.run_bound(cfg, threads=threads)
    ex.write_csv(os.path.join(out, "report.csv"), ["eps", "E_sup_boundary_ou_sq", "E_sup_u_sq"],
                 ([float(e), float(b), float(u)] for e, b, u in zip(tab.eps, tab.boundary_ou, tab.solution)))
    for e, b, u in zip(tab.eps, tab.boundary_ou, tab.solution):
        print(f"  eps={e:<10.6g} E sup|w_AB|^2={b:.6g} E sup|u|^2={u:.6g}")
    return tab.checks


def _fluctuate(cfg, out, threads):
    res = ex.run_fluctuate(cfg, threads=threads)
    write_report_csv(res.reports, os.path.join(out, "report.csv"), labels=list(res.eps))
    for e, r in zip(res.eps, res.reports):
        print(f"  eps={e:<10.6g} discrepancy={r.discrepancy:.4f} rel_err={[round(float(v), 4) for v in r.rel_err]}")
    return res.checks


def _validate(cfg, out, threads):
    rows = ex.run_validate(cfg)
    ex.write_csv(os.path.join(out, "report.csv"), ["hypothesis", "holds", "detail"],
                 ([h, int(ok), msg] for h, ok, msg in rows))
    for h, ok, msg in rows:
        print(f"  {h:6s} {'holds' if ok else 'FAILS'}: {msg}")
    return {f"{h}: {msg}": ok for h, ok, msg in rows}


_RUNNERS = {"eigen": _eigen, "simulate": _simulate, "converge": _converge,
            "bound": _bound, "fluctuate": _fluctuate, "validate": _validate}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fastavg", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=KINDS)
    p.add_argument("--config", required=True, help="JSON experiment configuration")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=None, help="override noise.seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads for replica batches")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if cfg.kind is not None and cfg.kind != args.subcommand:
            raise ConfigError(f"config is for {cfg.kind!r}, not {args.subcommand!r}")
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = cfg.with_seed(args.seed)
        os.makedirs(args.out, exist_ok=True)
        checks = _RUNNERS[args.subcommand](cfg, args.out, max(1, args.threads))
    except (ConfigError, HypothesisError, IntegrationError, OSError, ValueError) as exc:
        print(f"fastavg {args.subcommand}: error: {exc}", file=sys.stderr)
        return 1
    _print_checks(checks)
    return 0 if all(checks.values()) else 2


if __name__ == "__main__":
    sys.exit(main())
