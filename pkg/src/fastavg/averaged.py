"""Averaged one-dimensional SDE

    dv = Fhat(t, v) dt + <Ghat(t, v), dW> + <Sigmahat(t), dB>,   v(0) = <u0, mu>

and its law-equivalent scalar form ``dv = Fhat dt + Phi(t, v) dbeta`` with
``Phi^2 = |Q Ghat|^2 + |B Sigmahat|^2``.

All averages are trapezoid quadratures against the invariant density on
the basis grid, so ``v`` may be a vector of replicas.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import simpson

from .coefficients import ScalarField
from .neumann import DELTA0, solve_neumann
from .noise import NoisePath, NoiseSpec
from .operator import InvariantMeasure, SpectralBasis
from .spde import CSV_HEADER, IntegrationError

__all__ = [
    "AveragedModel",
    "ScalarPath",
    "build",
    "sigmahat_quadrature",
    "integrate_coupled",
    "integrate_law",
    "initial_value",
    "write_scalar_csv",
]


@dataclass(frozen=True, eq=False)
class ScalarPath:
    times: np.ndarray
    values: np.ndarray
    noise_checksum: str = ""


@dataclass(frozen=True, eq=False)
class AveragedModel:
    f: ScalarField
    g: ScalarField
    sigma: ScalarField
    basis: SpectralBasis
    measure: InvariantMeasure
    lambdas: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        # weights of the mu-average and of the e_j-weighted mu-averages
        w = self.measure.weights * self.measure.density
        object.__setattr__(self, "_w", w)
        object.__setattr__(self, "_we", self.basis.efuncs * w)
        object.__setattr__(self, "_x", self.basis.grid)

    def fhat(self, t: float, v) -> np.ndarray:
        """``int f(t, x, v) mu(dx)``."""
        v = np.asarray(v, dtype=float)
        parts = self.f.affine_parts(t)
        if parts is not None:
            return parts[0] + parts[1] * v
        return self.f.eval(t, self._x, v[..., None]) @ self._w

    def ghat(self, t: float, v) -> np.ndarray:
        """``Ghat_j = int g(t, x, v) e_j(x) mu(dx)``, shape ``v.shape + (K,)``."""
        v = np.asarray(v, dtype=float)
        if not self.g.depends_on_u:
            row = self.g.eval(t, self._x, 0.0) @ self._we.T
            return np.broadcast_to(row, v.shape + row.shape)
        return self.g.eval(t, self._x, v[..., None]) @ self._we.T

    def sigmahat(self, t: float) -> np.ndarray:
        """``Sigmahat`` at the two endpoints; ``sigma(t, eta) m(eta)``."""
        x_a, x_b = self.basis.op.x_a, self.basis.op.x_b
        m = self.measure.density
        return np.array([self.sigma.eval(t, x_a, 0.0).item() * m[0],
                         self.sigma.eval(t, x_b, 0.0).item() * m[-1]])

    def phi(self, t: float, v) -> np.ndarray:
        """Effective scalar diffusion ``sqrt(sum lambda_j^2 Ghat_j^2 + sum theta_i^2 Sigmahat_i^2)``.

        The squared boundary norm is used, consistent with the variance of
        the combined martingale; a display with the unsquared norm would not
        be dimensionally consistent.
        """
        gq = np.sum((self.lambdas * self.ghat(t, v)) ** 2, axis=-1)
        bs = np.sum((self.theta * self.sigmahat(t)) ** 2)
        return np.sqrt(gq + bs)


def build(f: ScalarField, g: ScalarField, sigma: ScalarField, basis: SpectralBasis,
          measure: InvariantMeasure, noise: NoiseSpec) -> AveragedModel:
    if noise.K != basis.K:
        raise ValueError("noise and basis mode counts differ")
    return AveragedModel(f=f, g=g, sigma=sigma, basis=basis, measure=measure,
                         lambdas=noise.lambdas, theta=np.asarray(noise.theta, dtype=float))


def sigmahat_quadrature(model: AveragedModel, t: float, delta0: float = DELTA0,
                        grid_n: Optional[int] = None) -> np.ndarray:
    """``Sigmahat`` through its defining form ``delta0 <N_delta0[sigma f_i], mu>``.

    ``f_i`` is the indicator of endpoint ``i``.  Independent of the closed
    form used by :meth:`AveragedModel.sigmahat`.
    """
    op = model.basis.op
    n = grid_n or model.basis.grid_n
    x_a, x_b = op.x_a, op.x_b
    out = np.empty(2)
    for i, (eta, data) in enumerate(((x_a, (1.0, 0.0)), (x_b, (0.0, 1.0)))):
        s = model.sigma.eval(t, eta, 0.0).item()
        sol = solve_neumann(op, delta0, (s * data[0], s * data[1]), grid_n=n)
        if n == model.measure.grid.shape[0] - 1:
            dens = model.measure.density
        else:
            dens = np.interp(sol.grid, model.measure.grid, model.measure.density)
        out[i] = delta0 * simpson(dens * sol.values, x=sol.grid)
    return out


def initial_value(measure: InvariantMeasure, u0) -> float:
    """``v(0) = <u0, mu>``."""
    if np.ndim(u0) == 0:
        return float(u0)
    return float(measure.mean(u0))


def integrate_coupled(model: AveragedModel, v0, noise: NoisePath) -> ScalarPath:
    """Euler-Maruyama on the same colored increments the SPDE consumes."""
    n_steps, dt = noise.n_steps, noise.dt
    shape = (noise.replicas,) if noise.batched else ()
    out = np.empty((n_steps + 1,) + shape)
    v = np.broadcast_to(np.asarray(v0, dtype=float), shape).copy()
    out[0] = v
    g_zero, s_zero = model.g.is_zero, model.sigma.is_zero
    for n in range(n_steps):
        t = n * dt
        incr = model.fhat(t, v) * dt
        if not g_zero:
            incr = incr + np.sum(model.ghat(t, v) * noise.dW[n], axis=-1)
        if not s_zero:
            incr = incr + noise.dB[n] @ model.sigmahat(t)
        v = v + incr
        if not np.all(np.isfinite(v)):
            raise IntegrationError(n)
        out[n + 1] = v
    return ScalarPath(times=noise.times, values=out, noise_checksum=noise.checksum())


def integrate_law(model: AveragedModel, v0, dbeta, dt: float) -> ScalarPath:
    """Euler-Maruyama for ``dv = Fhat dt + Phi dbeta``; ``dbeta`` is ``(n_steps, [M])``."""
    dbeta = np.asarray(dbeta, dtype=float)
    n_steps = dbeta.shape[0]
    out = np.empty((n_steps + 1,) + dbeta.shape[1:])
    v = np.broadcast_to(np.asarray(v0, dtype=float), dbeta.shape[1:]).copy()
    out[0] = v
    for n in range(n_steps):
        t = n * dt
        v = v + model.fhat(t, v) * dt + model.phi(t, v) * dbeta[n]
        if not np.all(np.isfinite(v)):
            raise IntegrationError(n)
        out[n + 1] = v
    return ScalarPath(times=dt * np.arange(n_steps + 1), values=out)


def write_scalar_csv(path: ScalarPath, filename) -> None:
    if path.values.ndim != 1:
        raise ValueError("write one replica at a time")
    with open(filename, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "v"])
        for t, v in zip(path.times, path.values):
            w.writerow([repr(float(t)), repr(float(v))])
