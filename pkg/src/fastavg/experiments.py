"""Monte Carlo experiments: averaging rate, uniform bounds, fluctuations,
plus the eigen / simulate / validate utilities behind the CLI.

Replicas are processed in fixed batches (``batch_size``); batches may run
on a thread pool but results are always reduced in replica order, so the
output does not depend on the number of threads.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import averaged, spde
from .coefficients import ScalarField, check_hypotheses, validate, zero
from .config import ExperimentConfig
from .fluctuation import ComparisonReport, gaussian_compare, i0_covariance, z_modes
from .noise import sample_batch, sample_path
from .operator import SpectralBasis, eigensolve, invariant_density
from .spde import CSV_HEADER, IntegrationError

__all__ = [
    "fit_rate",
    "RateReport",
    "BoundTable",
    "FluctuationResult",
    "EigenReport",
    "Setup",
    "setup",
    "run_eigen",
    "run_simulate",
    "run_converge",
    "run_bound",
    "run_fluctuate",
    "run_validate",
    "write_csv",
]

log = logging.getLogger(__name__)


def write_csv(filename, header: Sequence[str], rows) -> None:
    """CSV with the versioned comment line; floats written with ``repr``."""
    with open(filename, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def fit_rate(eps, errors) -> Tuple[float, float, float]:
    """Least-squares line through ``(log eps, log err)``: slope, intercept, R^2."""
    x = np.log(np.asarray(eps, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + icpt)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss if ss > 0 else 1.0
    return float(slope), float(icpt), float(r2)


@dataclass(frozen=True, eq=False)
class Setup:
    cfg: ExperimentConfig
    basis: SpectralBasis
    measure: object
    noise: object

    @property
    def u0(self):
        return self.cfg.u0_value(self.basis.grid)

    def spde_config(self, eps: float, exact_variance: bool = False, **over) -> spde.SpdeConfig:
        kw = dict(eps=eps, T=self.cfg.T, dt=self.cfg.dt, basis=self.basis, measure=self.measure,
                  noise=self.noise, f=self.cfg.f, g=self.cfg.g, sigma=self.cfg.sigma, u0=self.u0,
                  exact_variance=exact_variance)
        kw.update(over)
        return spde.SpdeConfig(**kw)

    def averaged_model(self) -> averaged.AveragedModel:
        return averaged.build(self.cfg.f, self.cfg.g, self.cfg.sigma, self.basis, self.measure, self.noise)

    def v0(self) -> float:
        return averaged.initial_value(self.measure, self.u0)


def setup(cfg: ExperimentConfig) -> Setup:
    op = cfg.operator()
    basis = eigensolve(op, cfg.K, cfg.grid_n)
    measure = invariant_density(op, cfg.grid_n)
    return Setup(cfg, basis, measure, cfg.noise_spec())


def _batches(M: int, size: int) -> List[range]:
    return [range(s, min(s + size, M)) for s in range(0, M, size)]


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _hmu_sq(s: Setup, u: np.ndarray, v) -> np.ndarray:
    d = u - np.asarray(v)[..., None] * s.basis.mean_coeffs
    return np.sum(d * d, axis=-1) / s.basis.op.length


# -- eigen ------------------------------------------------------------------

@dataclass
class EigenReport:
    alphas: np.ndarray
    traces: np.ndarray
    gram_error: float
    gap: float
    analytic: bool
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def rows(self):
        for k, (a, tr) in enumerate(zip(self.alphas, self.traces)):
            yield [k, float(a), float(tr[0]), float(tr[1])]


def run_eigen(cfg: ExperimentConfig) -> EigenReport:
    s = setup(cfg)
    b = s.basis
    gerr = float(np.max(np.abs(b.gram() - np.eye(b.K))))
    tol = 1e-8 if b.analytic else 1e-4
    rep = EigenReport(alphas=b.alphas, traces=b.traces, gram_error=gerr, gap=b.gap, analytic=b.analytic)
    rep.checks = {
        "orthonormal": gerr <= tol,
        "alpha0_zero": b.alphas[0] == 0.0,
        "gap_positive": b.alphas[1] > 0.0,
        "sorted": bool(np.all(np.diff(b.alphas) >= 0)),
        "trace_sign": bool(np.all(b.traces[:, 0] > 0)),
    }
    return rep


# -- simulate ---------------------------------------------------------------

@dataclass
class SimulationResult:
    eps: float
    spde_paths: list
    sde_paths: list
    final_errors: np.ndarray
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def run_simulate(cfg: ExperimentConfig) -> SimulationResult:
    """Paired SPDE / averaged-SDE runs at ``cfg.eps``, one per replica."""
    s = setup(cfg)
    sc = s.spde_config(cfg.eps, exact_variance=bool(cfg.exact_variance))
    am = s.averaged_model()
    paths, spaths, errs = [], [], []
    for r in range(cfg.replicas):
        nz = sample_path(s.noise, cfg.dt, sc.n_steps, replica=r)
        up = spde.integrate(sc, nz)
        vp = averaged.integrate_coupled(am, s.v0(), nz)
        paths.append(up)
        spaths.append(vp)
        errs.append(float(np.sqrt(_hmu_sq(s, up.modes[-1], vp.values[-1]))))
    errs = np.asarray(errs)
    res = SimulationResult(cfg.eps, paths, spaths, errs)
    res.checks = {"finite": bool(np.all(np.isfinite(errs))),
                  "coupled": all(p.noise_checksum == q.noise_checksum for p, q in zip(paths, spaths))}
    return res


# -- converge ---------------------------------------------------------------

@dataclass
class RateReport:
    eps: np.ndarray
    rms: np.ndarray
    slope: float
    intercept: float
    r2: float
    replicas: int
    t_start: float
    slope_range: Tuple[float, float] = (0.35, 0.65)
    failures: List[Tuple[float, int, str]] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        order = np.argsort(self.eps)[::-1]
        r = self.rms[order]
        return bool(np.all(np.diff(r) < 0))

    @property
    def checks(self) -> Dict[str, bool]:
        lo, hi = self.slope_range
        return {"monotone": self.monotone,
                "slope": bool(np.isfinite(self.slope) and lo <= self.slope <= hi),
                "no_failures": not self.failures}

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def sup_errors(s: Setup, eps: float, replicas: Sequence[int], t_start: float = 0.0,
               exact_variance: bool = False) -> np.ndarray:
    """Per-replica ``sup_{t >= t_start} |u_eps(t) - v(t)|_{H_mu}^2`` on one shared noise batch."""
    sc = s.spde_config(eps, exact_variance=exact_variance)
    nz = sample_batch(s.noise, s.cfg.dt, sc.n_steps, replicas)
    v = averaged.integrate_coupled(s.averaged_model(), s.v0(), nz).values
    n0 = int(np.ceil(t_start / s.cfg.dt - 1e-9))
    sup = np.zeros(len(replicas))
    for n, u in spde.iterate(sc, nz):
        if n >= n0:
            np.maximum(sup, _hmu_sq(s, u, v[n]), out=sup)
    return sup


def run_converge(cfg: ExperimentConfig, threads: int = 1, errors_fn: Optional[Callable] = None) -> RateReport:
    """RMS of the sup-in-time ``H_mu`` error along the eps ladder and its log-log slope.

    ``errors_fn(eps) -> rms`` replaces the simulation; used to check the
    regression on synthetic inputs.
    """
    ladder = np.asarray(cfg.eps_ladder, dtype=float)
    if ladder.size < 2:
        raise ValueError("converge needs an eps_ladder with at least two values")
    t_start = 0.0 if cfg.u0_constant else (cfg.delta_cut if cfg.delta_cut is not None else cfg.T / 10)
    failures: List[Tuple[float, int, str]] = []
    rms = []
    if errors_fn is not None:
        rms = [float(errors_fn(e)) for e in ladder]
    else:
        s = setup(cfg)
        batches = _batches(cfg.replicas, cfg.batch_size)
        for eps in ladder:
            def job(rg, eps=eps):
                try:
                    return sup_errors(s, eps, rg, t_start, bool(cfg.exact_variance))
                except IntegrationError as exc:
                    return exc
            parts = _map(job, batches, threads)
            good = []
            for rg, p in zip(batches, parts):
                if isinstance(p, Exception):
                    failures.extend((float(eps), r, str(p)) for r in rg)
                else:
                    good.append(p)
            sq = np.concatenate(good) if good else np.array([np.nan])
            rms.append(float(np.sqrt(np.mean(sq))))
            log.info("eps=%g rms=%.6g", eps, rms[-1])
    rms = np.asarray(rms)
    slope, icpt, r2 = fit_rate(ladder, rms) if np.all(np.isfinite(rms)) else (np.nan, np.nan, np.nan)
    return RateReport(eps=ladder, rms=rms, slope=slope, intercept=icpt, r2=r2, replicas=cfg.replicas,
                      t_start=t_start, slope_range=cfg.slope_range, failures=failures)


# -- bound ------------------------------------------------------------------

@dataclass
class BoundTable:
    eps: np.ndarray
    boundary_ou: np.ndarray  # estimate of E sup_t |w_AB^eps(t)|_H^2
    solution: np.ndarray     # estimate of E sup_t |u_eps(t)|_H^2
    ratio_limit: float = 10.0

    @staticmethod
    def _ratio(col: np.ndarray) -> float:
        if np.all(col == 0):
            return 1.0
        return float(np.max(col) / np.min(col)) if np.min(col) > 0 else np.inf

    @property
    def checks(self) -> Dict[str, bool]:
        finite = bool(np.all(np.isfinite(self.boundary_ou)) and np.all(np.isfinite(self.solution)))
        return {"finite": finite,
                "boundary_ou_ratio": self._ratio(self.boundary_ou) < self.ratio_limit,
                "solution_ratio": self._ratio(self.solution) < self.ratio_limit}

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _sup_norms(s: Setup, eps: float, replicas: Sequence[int], exact_variance: bool):
    sc = s.spde_config(eps, exact_variance=exact_variance)
    bc = s.spde_config(eps, exact_variance=exact_variance, f=zero(), g=zero(), u0=0.0)
    nz = sample_batch(s.noise, s.cfg.dt, sc.n_steps, replicas)
    out = []
    for c in (bc, sc):
        sup = np.zeros(len(replicas))
        for _, u in spde.iterate(c, nz):
            np.maximum(sup, np.sum(u * u, axis=-1), out=sup)
        out.append(sup)
    return out


def run_bound(cfg: ExperimentConfig, threads: int = 1) -> BoundTable:
    """Estimates of ``E sup_t |.|_H^2`` for the boundary convolution and the solution."""
    ladder = np.asarray(cfg.eps_ladder, dtype=float)
    s = setup(cfg)
    batches = _batches(cfg.replicas, cfg.batch_size)
    bo, so = [], []
    for eps in ladder:
        parts = _map(lambda rg, eps=eps: _sup_norms(s, eps, rg, bool(cfg.exact_variance)), batches, threads)
        bo.append(float(np.mean(np.concatenate([p[0] for p in parts]))))
        so.append(float(np.mean(np.concatenate([p[1] for p in parts]))))
    return BoundTable(ladder, np.asarray(bo), np.asarray(so), cfg.bound_ratio)


# -- fluctuate --------------------------------------------------------------

@dataclass
class FluctuationResult:
    eps: np.ndarray
    reports: List[ComparisonReport]
    covariance: object

    @property
    def checks(self) -> Dict[str, bool]:
        i_small = int(np.argmin(self.eps))
        i_large = int(np.argmax(self.eps))
        small = self.reports[i_small]
        out = {"covariance": small.checks["covariance"], "mean": small.checks["mean"]}
        if len(self.reports) > 1:
            out["eps_trend"] = self.reports[i_large].discrepancy > small.discrepancy
        return out

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def fluctuation_samples(s: Setup, eps: float, replicas: Sequence[int], exact_variance: bool = True) -> np.ndarray:
    """Mode coordinates of ``z_eps(T)`` for a batch of replicas, shape ``(len, K)``."""
    sc = s.spde_config(eps, exact_variance=exact_variance)
    nz = sample_batch(s.noise, s.cfg.dt, sc.n_steps, replicas)
    v = averaged.integrate_coupled(s.averaged_model(), s.v0(), nz).values
    u = None
    for _, u in spde.iterate(sc, nz):
        pass
    return z_modes(u, v[-1], eps, s.basis)


def run_fluctuate(cfg: ExperimentConfig, threads: int = 1) -> FluctuationResult:
    """Compare ``z_eps(T)`` with the analytic limit covariance along the eps ladder.

    The hypotheses for the fluctuation theorem are checked before any
    simulation.  The exact-variance noise treatment is the default here.
    """
    validate(cfg.f, cfg.g, cfg.sigma, purpose="fluctuate")
    s = setup(cfg)
    cov = i0_covariance(cfg.f, cfg.g, cfg.sigma, s.basis, s.noise, cfg.T)
    ev = True if cfg.exact_variance is None else cfg.exact_variance
    batches = _batches(cfg.replicas, cfg.batch_size)
    reports = []
    ladder = np.asarray(cfg.eps_ladder if cfg.eps_ladder else (cfg.eps,), dtype=float)
    for eps in ladder:
        z = np.concatenate(_map(lambda rg, eps=eps: fluctuation_samples(s, eps, rg, ev), batches, threads))
        reports.append(gaussian_compare(z, cov, n_modes=cfg.n_modes, cov_rtol=cfg.cov_rtol,
                                        mean_sigmas=cfg.mean_sigmas))
    return FluctuationResult(ladder, reports, cov)


# -- validate ---------------------------------------------------------------

def run_validate(cfg: ExperimentConfig) -> List[Tuple[str, bool, str]]:
    """Checklist of the standing hypotheses for the configured model."""
    rows: List[Tuple[str, bool, str]] = []
    try:
        op = cfg.operator()
    except ValueError as exc:
        return [("H1", False, str(exc))]
    rows.append(("H1", True, f"uniformly elliptic, a_0 = {op.ellipticity():.6g}"))
    meas = invariant_density(op, cfg.grid_n)
    rows.append(("H1", meas.gap > 0, f"unique invariant measure ({'uniform' if meas.uniform else 'drift'} density), "
                                     f"spectral gap {meas.gap:.6g}"))
    rep = check_hypotheses(cfg.f, cfg.g, cfg.sigma, cfg.purpose)
    rows.extend(rep.checks)
    rows.append(("H3", True, "vacuous in one dimension: Q = I (white noise) and any B on R^2 are admissible"))
    return rows
