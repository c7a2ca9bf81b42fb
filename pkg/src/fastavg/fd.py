"""Physical-space theta-scheme (Crank-Nicolson by default) for the same
equation, used as an independent oracle for the spectral solver.

Node ``i`` carries the dual-cell balance

    W_i du_i = -(1/eps) (S u)_i dt + W_i f dt + W_i g xi_i + boundary_i

with trapezoid weights ``W`` and the flux-form stiffness ``S``.  The
boundary increment is ``sigma(t, eta) dB`` (a stochastic flux enters as an
increment over the step, not as a rate) or ``h(t) dt`` for a deterministic
flux.  With drift ``b`` the balance is written for ``m u`` (symmetric
weighted form); that branch is meant for deterministic runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.linalg import solve_banded

from .coefficients import ScalarField, zero
from .noise import NoisePath
from .operator import (EllipticOperator1D, _stiffness_bands, invariant_density,
                       trapezoid_weights)
from .spde import IntegrationError

__all__ = ["FdConfig", "FdPath", "fd_integrate", "discrete_h_norm"]


@dataclass(frozen=True, eq=False)
class FdConfig:
    op: EllipticOperator1D
    grid_n: int
    dt: float
    eps: float
    T: float
    theta_scheme: float = 0.5
    f: ScalarField = field(default_factory=zero)
    g: ScalarField = field(default_factory=zero)
    sigma: ScalarField = field(default_factory=zero)
    u0: Union[float, np.ndarray] = 0.0
    flux: Optional[Callable[[float], Tuple[float, float]]] = None
    noise_modes: Optional[np.ndarray] = None  # (K, grid_n + 1) values of e_j on the grid

    def __post_init__(self):
        if not 0.5 <= self.theta_scheme <= 1.0:
            raise ValueError("theta_scheme must lie in [0.5, 1]")
        if not (self.dt > 0 and self.eps > 0 and self.T > 0):
            raise ValueError("dt, eps and T must be positive")

    @property
    def n_steps(self) -> int:
        n = int(round(self.T / self.dt))
        if abs(n * self.dt - self.T) > 1e-9 * self.T:
            raise ValueError(f"T={self.T} is not a multiple of dt={self.dt}")
        return n

    @property
    def grid(self) -> np.ndarray:
        return self.op.grid(self.grid_n)


@dataclass(frozen=True, eq=False)
class FdPath:
    times: np.ndarray
    grid: np.ndarray
    values: np.ndarray  # (n_steps + 1, [M,] grid_n + 1)


def discrete_h_norm(values, length: float) -> np.ndarray:
    """Trapezoid ``L^2`` norm over the last axis."""
    values = np.asarray(values, dtype=float)
    w = trapezoid_weights(values.shape[-1] - 1, length)
    return np.sqrt(np.sum(w * values * values, axis=-1))


def fd_integrate(cfg: FdConfig, noise: Optional[NoisePath] = None, record_every: int = 1) -> FdPath:
    """Integrate on the physical grid; ``noise=None`` gives a deterministic run."""
    op, n, dt = cfg.op, cfg.grid_n, cfg.dt
    x = cfg.grid
    w = trapezoid_weights(n, op.length)
    m = None
    if op.form == "drift":
        if noise is not None:
            raise ValueError("drift operators are supported for deterministic runs only")
        m = invariant_density(op, n).density
        w = w * m
    diag, off = _stiffness_bands(op, n, m)
    bscale = (1.0, 1.0) if m is None else (m[0], m[-1])

    th = cfg.theta_scheme
    r = dt / cfg.eps
    lhs = np.zeros((3, n + 1))
    lhs[0, 1:] = th * r * off
    lhs[1] = w + th * r * diag
    lhs[2, :-1] = th * r * off

    def explicit(u):
        su = diag * u
        su[..., :-1] += off * u[..., 1:]
        su[..., 1:] += off * u[..., :-1]
        return w * u - (1.0 - th) * r * su

    n_steps = cfg.n_steps
    if noise is not None:
        if noise.n_steps != n_steps or abs(noise.dt - dt) > 1e-12 * dt:
            raise ValueError("noise grid does not match the configuration")
        if not cfg.g.is_zero and cfg.noise_modes is None:
            raise ValueError("interior noise needs noise_modes to project dW onto the grid")
    batch = (noise.replicas,) if noise is not None and noise.batched else ()

    u = np.broadcast_to(np.asarray(cfg.u0, dtype=float) * np.ones(n + 1), batch + (n + 1,)).copy()
    keep = list(range(0, n_steps + 1, record_every))
    if keep[-1] != n_steps:
        keep.append(n_steps)
    out = np.empty((len(keep),) + u.shape)
    out[0] = u
    slot = 1
    for k in range(n_steps):
        t = k * dt
        rhs = explicit(u)
        if not cfg.f.is_zero:
            rhs += dt * w * cfg.f.eval(t, x, u)
        bnd = np.zeros(batch + (2,))
        if cfg.flux is not None:
            bnd += np.asarray(cfg.flux(t), dtype=float) * dt
        if noise is not None:
            if not cfg.g.is_zero:
                xi = noise.dW[k] @ cfg.noise_modes
                rhs += w * cfg.g.eval(t, x, u) * xi
            if not cfg.sigma.is_zero:
                sa = cfg.sigma.eval(t, op.x_a, 0.0).item()
                sb = cfg.sigma.eval(t, op.x_b, 0.0).item()
                bnd += noise.dB[k] * np.array([sa, sb])
        rhs[..., 0] += bscale[0] * bnd[..., 0]
        rhs[..., -1] += bscale[1] * bnd[..., 1]
        u = solve_banded((1, 1), lhs, rhs.T, check_finite=False).T
        if not np.all(np.isfinite(u)):
            raise IntegrationError(k)
        if slot < len(keep) and keep[slot] == k + 1:
            out[slot] = u
            slot += 1
    return FdPath(times=dt * np.asarray(keep, dtype=float), grid=x, values=out)
