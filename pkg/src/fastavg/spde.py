"""Exponential Euler integration of the fast-diffusion SPDE in eigenmode
coordinates.

With ``E_k = exp(-alpha_k dt / eps)`` one step of mode ``k`` reads::

    u_k <- E_k u_k + phi_k F_k + c_k (sum_j G_kj dW_j
                                      + sigma(t, x_a) e_k(x_a) dB_1
                                      + sigma(t, x_b) e_k(x_b) dB_2)

where ``phi_k = eps (1 - E_k) / alpha_k`` (``dt`` for ``alpha_k = 0``),
``F_k = <f(t, ., u), e_k>``, ``G_kj = <g(t, ., u) e_j, e_k>``.  The noise
factor ``c_k`` is ``E_k`` (damped increments, default) or the exact
Ornstein-Uhlenbeck one-step standard deviation
``sqrt(eps (1 - E_k^2) / (2 alpha_k dt))`` when ``exact_variance`` is set.
Mode 0 has ``E_0 = c_0 = 1`` in both variants.

The state may carry a leading replica axis; every replica of a batch is
advanced by the same arithmetic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Tuple, Union

import numpy as np

from .coefficients import ScalarField, zero
from .noise import NoisePath, NoiseSpec
from .operator import InvariantMeasure, SpectralBasis

__all__ = [
    "CSV_HEADER",
    "IntegrationError",
    "SpdeConfig",
    "SpdePath",
    "SpdeStepper",
    "step",
    "iterate",
    "integrate",
    "write_modes_csv",
    "write_grid_csv",
]

CSV_HEADER = "# fastavg-csv v1"

Flux = Callable[[float], Tuple[float, float]]


class IntegrationError(FloatingPointError):
    def __init__(self, step_index: int, message: str = "non-finite state"):
        super().__init__(f"step {step_index}: {message}")
        self.step_index = step_index


@dataclass(frozen=True, eq=False)
class SpdeConfig:
    eps: float
    T: float
    dt: float
    basis: SpectralBasis
    measure: InvariantMeasure
    noise: NoiseSpec
    f: ScalarField = field(default_factory=zero)
    g: ScalarField = field(default_factory=zero)
    sigma: ScalarField = field(default_factory=zero)
    u0: Union[float, np.ndarray] = 0.0
    exact_variance: bool = False
    flux: Optional[Flux] = None

    def __post_init__(self):
        if not (self.dt > 0 and self.eps > 0 and self.T > 0):
            raise ValueError("dt, eps and T must be positive")
        if self.noise.K != self.basis.K:
            raise ValueError(f"noise K={self.noise.K} differs from basis K={self.basis.K}")
        if self.basis.op.form != "divergence":
            raise ValueError("the spectral solver needs a divergence-form operator")

    @property
    def n_steps(self) -> int:
        n = int(round(self.T / self.dt))
        if abs(n * self.dt - self.T) > 1e-9 * self.T:
            raise ValueError(f"T={self.T} is not a multiple of dt={self.dt}")
        return n

    def initial_modes(self) -> np.ndarray:
        if np.ndim(self.u0) == 0:
            modes = np.zeros(self.basis.K)
            modes[0] = float(self.u0) * np.sqrt(self.basis.op.length)
            return modes
        return self.basis.project(self.u0)


@dataclass(frozen=True, eq=False)
class SpdePath:
    times: np.ndarray
    modes: np.ndarray
    noise_checksum: str = ""

    def grid_values(self, basis: SpectralBasis) -> np.ndarray:
        return basis.synthesize(self.modes)


class SpdeStepper:
    """Precomputed propagator factors and coefficient projections for one config."""

    def __init__(self, cfg: SpdeConfig):
        self.cfg = cfg
        b = cfg.basis
        a = b.alphas
        z = a * cfg.dt / cfg.eps
        self.E = np.exp(-z)
        with np.errstate(divide="ignore", invalid="ignore"):
            self.phi = np.where(a > 0, cfg.eps * -np.expm1(-z) / np.where(a > 0, a, 1.0), cfg.dt)
            if cfg.exact_variance:
                c = np.sqrt(cfg.eps * -np.expm1(-2 * z) / (2 * np.where(a > 0, a, 1.0) * cfg.dt))
                self.noise_factor = np.where(a > 0, c, 1.0)
            else:
                self.noise_factor = self.E.copy()
        self.proj = b.efuncs * b.weights
        self.ones = b.mean_coeffs
        self.x = b.grid
        self.xa, self.xb = b.op.x_a, b.op.x_b
        self.traces = b.traces

    def drift(self, t: float, u: np.ndarray) -> np.ndarray:
        f = self.cfg.f
        if f.is_zero:
            return np.zeros_like(u)
        parts = f.affine_parts(t)
        if parts is not None:
            c0, c1 = parts
            return c0 * self.ones + c1 * u
        grid = u @ self.cfg.basis.efuncs
        return f.eval(t, self.x, grid) @ self.proj.T

    def interior_noise(self, t: float, u: np.ndarray, dW: np.ndarray) -> np.ndarray:
        g = self.cfg.g
        if g.is_zero:
            return np.zeros_like(u)
        if not g.depends_on_x and not g.depends_on_u:
            # <c e_j, e_k> = c delta_jk for a grid-orthonormal basis
            return g.eval(t, 0.0, 0.0).item() * dW
        efuncs = self.cfg.basis.efuncs
        xi = dW @ efuncs
        return (g.eval(t, self.x, u @ efuncs) * xi) @ self.proj.T

    def boundary_noise(self, t: float, dB: np.ndarray) -> np.ndarray:
        s = self.cfg.sigma
        if s.is_zero:
            return np.zeros(dB.shape[:-1] + (self.traces.shape[0],))
        sa = s.eval(t, self.xa, 0.0).item()
        sb = s.eval(t, self.xb, 0.0).item()
        return (sa * dB[..., :1]) * self.traces[:, 0] + (sb * dB[..., 1:]) * self.traces[:, 1]

    def flux_forcing(self, t: float) -> np.ndarray:
        ha, hb = self.cfg.flux(t)
        return ha * self.traces[:, 0] + hb * self.traces[:, 1]

    def __call__(self, u: np.ndarray, t: float, dW: np.ndarray, dB: np.ndarray) -> np.ndarray:
        forcing = self.drift(t, u)
        if self.cfg.flux is not None:
            forcing = forcing + self.flux_forcing(t)
        kicks = self.interior_noise(t, u, dW) + self.boundary_noise(t, dB)
        return self.E * u + self.phi * forcing + self.noise_factor * kicks


def step(state, t_n: float, dW_row, dB_row, cfg: SpdeConfig) -> np.ndarray:
    """One exponential Euler step (convenience wrapper, rebuilds the factors)."""
    return SpdeStepper(cfg)(np.asarray(state, dtype=float), t_n, np.asarray(dW_row), np.asarray(dB_row))


def _check_noise(cfg: SpdeConfig, noise: NoisePath):
    if abs(noise.dt - cfg.dt) > 1e-12 * cfg.dt or noise.n_steps != cfg.n_steps:
        raise ValueError("noise grid does not match the configuration")
    if noise.K != cfg.basis.K:
        raise ValueError("noise mode count does not match the basis")


def iterate(cfg: SpdeConfig, noise: NoisePath) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield ``(n, modes)`` for ``n = 0 .. n_steps``; arrays are reused, copy to keep."""
    _check_noise(cfg, noise)
    stepper = SpdeStepper(cfg)
    u = cfg.initial_modes()
    if noise.batched:
        u = np.broadcast_to(u, (noise.replicas, cfg.basis.K)).copy()
    yield 0, u
    dt = cfg.dt
    for n in range(noise.n_steps):
        with np.errstate(over="ignore", invalid="ignore"):
            u = stepper(u, n * dt, noise.dW[n], noise.dB[n])
        if not np.all(np.isfinite(u)):
            raise IntegrationError(n)
        yield n + 1, u


def integrate(cfg: SpdeConfig, noise: NoisePath) -> SpdePath:
    """Full mode trajectory, shape ``(n_steps + 1, [M,] K)``."""
    out = None
    for n, u in iterate(cfg, noise):
        if out is None:
            out = np.empty((noise.n_steps + 1,) + u.shape)
        out[n] = u
    return SpdePath(times=noise.times, modes=out, noise_checksum=noise.checksum())


def _fmt(v: float) -> str:
    return repr(float(v))


def write_modes_csv(path: SpdePath, filename) -> None:
    """``t, mode_0 .. mode_{K-1}`` for a single-replica trajectory."""
    if path.modes.ndim != 2:
        raise ValueError("write one replica at a time")
    K = path.modes.shape[1]
    with open(filename, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"mode_{k}" for k in range(K)])
        for t, row in zip(path.times, path.modes):
            w.writerow([_fmt(t)] + [_fmt(v) for v in row])


def write_grid_csv(path: SpdePath, basis: SpectralBasis, filename) -> None:
    """``t, u(x_0) .. u(x_N)`` for a single-replica trajectory."""
    if path.modes.ndim != 2:
        raise ValueError("write one replica at a time")
    vals = path.grid_values(basis)
    with open(filename, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"u(x_{i})" for i in range(vals.shape[1])])
        for t, row in zip(path.times, vals):
            w.writerow([_fmt(t)] + [_fmt(v) for v in row])
