"""Gaussian fluctuation limit of ``z_eps = (u_eps - v) / sqrt(eps)``.

The limiting field has, in eigenmode coordinates ``k, l >= 1``,

    C_kl = [ sum_j lambda_j^2 G_kj G_lj
             + sum_i theta_i^2 sigma(t, eta_i)^2 e_k(eta_i) e_l(eta_i) ] / (alpha_k + alpha_l)

with ``G_kj = <g(t, .) e_j, e_k>``; the centering projection removes mode 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import stats

from .coefficients import ScalarField, validate
from .noise import NoiseSpec
from .operator import SpectralBasis
from .spde import CSV_HEADER

__all__ = [
    "I0Covariance",
    "ComparisonReport",
    "i0_covariance",
    "z_modes",
    "z_field",
    "gaussian_compare",
    "write_report_csv",
]


@dataclass(frozen=True, eq=False)
class I0Covariance:
    t: float
    full: np.ndarray  # (K, K), row and column 0 identically zero

    @property
    def K(self) -> int:
        return self.full.shape[0]

    @property
    def C(self) -> np.ndarray:
        """Covariance over modes ``1 .. K-1``."""
        return self.full[1:, 1:]


def i0_covariance(f: ScalarField, g: ScalarField, sigma: ScalarField, basis: SpectralBasis,
                  noise: NoiseSpec, t: float) -> I0Covariance:
    """Analytic mode covariance of the limit field at time ``t``.

    Rejects models whose interior noise is multiplicative.
    """
    validate(f, g, sigma, purpose="fluctuate")
    x = basis.grid
    proj = basis.efuncs * basis.weights
    gx = g.eval(t, x, 0.0)
    G = (proj * gx) @ basis.efuncs.T  # G[k, j] = <g e_j, e_k>
    lam2 = noise.lambdas ** 2
    num = (G * lam2) @ G.T
    th = np.asarray(noise.theta)
    s = np.array([sigma.eval(t, basis.op.x_a, 0.0).item(), sigma.eval(t, basis.op.x_b, 0.0).item()])
    tr = basis.traces * (th * s)
    num += tr @ tr.T
    a = basis.alphas
    full = np.zeros_like(num)
    denom = a[1:, None] + a[None, 1:]
    full[1:, 1:] = num[1:, 1:] / denom
    full = 0.5 * (full + full.T)
    return I0Covariance(t=t, full=full)


def z_modes(u_modes, v, eps: float, basis: SpectralBasis) -> np.ndarray:
    """Mode coordinates ``<(u - v) / sqrt(eps), e_k>_H``.

    ``u_modes`` has the mode axis last; ``v`` broadcasts against the rest.
    """
    u_modes = np.asarray(u_modes, dtype=float)
    v = np.asarray(v, dtype=float)
    return (u_modes - v[..., None] * basis.mean_coeffs) / np.sqrt(eps)


def z_field(spde_path, scalar_path, eps: float, basis: SpectralBasis, grid: bool = False) -> np.ndarray:
    """Fluctuation trajectory from a paired SPDE / averaged-SDE run."""
    if spde_path.times.shape != scalar_path.times.shape or not np.allclose(spde_path.times, scalar_path.times):
        raise ValueError("SPDE and SDE paths are on different time grids")
    if spde_path.noise_checksum and scalar_path.noise_checksum and \
            spde_path.noise_checksum != scalar_path.noise_checksum:
        raise ValueError("SPDE and SDE paths were driven by different noise")
    z = z_modes(spde_path.modes, scalar_path.values, eps, basis)
    return basis.synthesize(z) if grid else z


@dataclass
class ComparisonReport:
    modes: List[int]
    c_analytic: np.ndarray
    c_empirical: np.ndarray
    rel_err: np.ndarray
    mean_z: np.ndarray
    skew_z: np.ndarray
    kurt_z: np.ndarray
    M: int
    level: float
    cov_rtol: Optional[float] = None
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def discrepancy(self) -> float:
        """Mean relative error of the diagonal covariances."""
        return float(np.mean(self.rel_err))


def gaussian_compare(samples, cov: I0Covariance, n_modes: int = 4, level: float = 0.01,
                     cov_rtol: Optional[float] = None, mean_sigmas: Optional[float] = None) -> ComparisonReport:
    """Compare fluctuation samples against the analytic limit.

    ``samples`` has shape ``(M, K-1)`` (modes ``1 .. K-1``) or ``(M, K)``
    (mode 0 included and dropped).  Only the first ``n_modes`` projections
    are tested.  Without explicit tolerances each statistic is tested at
    two-sided level ``level``.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape[1] == cov.K:
        samples = samples[:, 1:]
    M = samples.shape[0]
    if M < 500:
        raise ValueError(f"need at least 500 samples, got {M}")
    zs = samples[:, :n_modes]
    C = cov.C[:n_modes, :n_modes]
    emp = np.cov(zs, rowvar=False, ddof=1)
    diag = np.diag(C)
    rel = np.abs(np.diag(emp) - diag) / diag
    sd = zs.std(axis=0, ddof=1)
    mean_z = zs.mean(axis=0) / (sd / np.sqrt(M))
    skew = stats.skew(zs, axis=0)
    kurt = stats.kurtosis(zs, axis=0)

    q = stats.norm.ppf(1.0 - level / 2.0)
    checks = {
        "mean": bool(np.all(np.abs(mean_z) <= (mean_sigmas if mean_sigmas is not None else q))),
        "skew": bool(np.all(np.abs(skew) <= q * np.sqrt(6.0 / M))),
        "kurtosis": bool(np.all(np.abs(kurt) <= q * np.sqrt(24.0 / M))),
    }
    if cov_rtol is not None:
        checks["covariance"] = bool(np.all(rel <= cov_rtol))
    else:
        checks["covariance"] = bool(np.all(rel <= q * np.sqrt(2.0 / (M - 1))))
    return ComparisonReport(modes=list(range(1, n_modes + 1)), c_analytic=diag, c_empirical=np.diag(emp),
                            rel_err=rel, mean_z=mean_z, skew_z=skew, kurt_z=kurt, M=M, level=level,
                            cov_rtol=cov_rtol, checks=checks)


def write_report_csv(reports, filename, labels=None) -> None:
    """``mode, C_analytic, C_empirical, rel_err, mean_z`` per report; an
    optional ``eps`` label column is prepended when ``labels`` is given."""
    if isinstance(reports, ComparisonReport):
        reports = [reports]
    with open(filename, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        w = csv.writer(fh, lineterminator="\n")
        head = ["mode", "C_analytic", "C_empirical", "rel_err", "mean_z"]
        w.writerow((["eps"] if labels is not None else []) + head)
        for i, rep in enumerate(reports):
            for j, k in enumerate(rep.modes):
                row = [k, repr(float(rep.c_analytic[j])), repr(float(rep.c_empirical[j])),
                       repr(float(rep.rel_err[j])), repr(float(rep.mean_z[j]))]
                w.writerow(([repr(float(labels[i]))] if labels is not None else []) + row)
