"""One-dimensional conormal elliptic operator and its spectral data.

The operator is ``A u = (a u')' + b u'`` on ``[x_a, x_b]`` with the flux
boundary condition ``a u' nu = 0``.  Everything downstream works in the
eigenbasis of ``-A`` (divergence form) sampled on a uniform grid, with
composite trapezoid quadrature as the one inner product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg as sla

__all__ = [
    "EllipticOperator1D",
    "SpectralBasis",
    "InvariantMeasure",
    "EllipticityError",
    "EigensolveError",
    "trapezoid_weights",
    "eigensolve",
    "invariant_density",
    "semigroup_apply",
    "hmu_norm",
]

Coefficient = Union[float, Callable[[np.ndarray], np.ndarray]]


class EllipticityError(ValueError):
    """Raised when the diffusion coefficient is not bounded away from zero."""


class EigensolveError(RuntimeError):
    """Raised when the discrete eigenproblem fails its residual check."""


def trapezoid_weights(n: int, length: float) -> np.ndarray:
    """Composite trapezoid weights on ``n + 1`` uniform nodes."""
    h = length / n
    w = np.full(n + 1, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _as_field(c: Optional[Coefficient]) -> Callable[[np.ndarray], np.ndarray]:
    if c is None:
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    if callable(c):
        return lambda x: np.broadcast_to(np.asarray(c(np.asarray(x, dtype=float)), dtype=float),
                                         np.shape(x)).astype(float)
    value = float(c)
    return lambda x: np.full(np.shape(x), value)


@dataclass(frozen=True)
class EllipticOperator1D:
    """``(a u')' + b u'`` on ``[x_a, x_b]`` with conormal boundary condition.

    ``a`` and ``b`` are either numbers or vectorized callables of ``x``.
    A numeric ``a`` with ``b`` absent or zero selects the closed-form
    cosine eigenbasis.
    """

    x_a: float
    x_b: float
    a: Coefficient = 1.0
    b: Optional[Coefficient] = None

    def __post_init__(self):
        if not self.x_a < self.x_b:
            raise ValueError(f"need x_a < x_b, got [{self.x_a}, {self.x_b}]")
        xs = np.linspace(self.x_a, self.x_b, 2049)
        a0 = float(np.min(self.a_field(xs)))
        if not np.isfinite(a0) or a0 <= 0.0:
            raise EllipticityError(f"a(x) must be strictly positive, min sampled value {a0:g}")

    @property
    def length(self) -> float:
        return self.x_b - self.x_a

    @property
    def form(self) -> str:
        if self.b is None:
            return "divergence"
        if not callable(self.b) and float(self.b) == 0.0:
            return "divergence"
        return "drift"

    @property
    def constant_a(self) -> Optional[float]:
        return None if callable(self.a) else float(self.a)

    def a_field(self, x):
        return _as_field(self.a)(x)

    def b_field(self, x):
        return _as_field(self.b)(x)

    def ellipticity(self) -> float:
        """Sampled lower bound ``a_0`` of ``a``."""
        xs = np.linspace(self.x_a, self.x_b, 2049)
        return float(np.min(self.a_field(xs)))

    def grid(self, n: int) -> np.ndarray:
        return np.linspace(self.x_a, self.x_b, n + 1)


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """First ``K`` eigenpairs of ``-A`` on an ``N + 1`` point grid.

    ``efuncs[k]`` holds ``e_k`` at the grid nodes, ``traces[k]`` the pair
    ``(e_k(x_a), e_k(x_b))``.  Modes are orthonormal in the trapezoid
    inner product on ``grid``.
    """

    op: EllipticOperator1D
    alphas: np.ndarray
    efuncs: np.ndarray
    traces: np.ndarray
    grid: np.ndarray
    weights: np.ndarray
    analytic: bool

    @property
    def K(self) -> int:
        return self.alphas.shape[0]

    @property
    def grid_n(self) -> int:
        return self.grid.shape[0] - 1

    @property
    def gap(self) -> float:
        return float(self.alphas[1])

    @property
    def mean_coeffs(self) -> np.ndarray:
        """``<1, e_k>_H`` for every mode."""
        return self.project(np.ones_like(self.grid))

    def project(self, h) -> np.ndarray:
        """Mode coefficients ``<h, e_k>_H``; ``h`` may carry leading batch axes."""
        h = np.asarray(h, dtype=float)
        return (h * self.weights) @ self.efuncs.T

    def synthesize(self, modes) -> np.ndarray:
        """Grid values of ``sum_k modes[..., k] e_k``."""
        return np.asarray(modes, dtype=float) @ self.efuncs

    def evaluate(self, x) -> np.ndarray:
        """Eigenfunctions at arbitrary points, shape ``(K, len(x))``.

        Exact for the cosine basis, piecewise-linear interpolation otherwise.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.analytic:
            return _cosine_modes(self.K, x - self.op.x_a, self.op.length)
        return np.stack([np.interp(x, self.grid, e) for e in self.efuncs])

    def gram(self) -> np.ndarray:
        return (self.efuncs * self.weights) @ self.efuncs.T


@dataclass(frozen=True, eq=False)
class InvariantMeasure:
    """Density ``m`` of the invariant measure on the grid, plus the spectral gap."""

    grid: np.ndarray
    density: np.ndarray
    weights: np.ndarray
    gap: float
    uniform: bool = field(default=False)

    @property
    def total(self) -> float:
        return float(np.dot(self.weights, self.density))

    def mean(self, h) -> np.ndarray:
        """``<h, mu>`` over the last axis."""
        return np.asarray(h, dtype=float) @ (self.weights * self.density)


def _cosine_modes(K: int, s: np.ndarray, length: float) -> np.ndarray:
    k = np.arange(K)[:, None]
    out = np.sqrt(2.0 / length) * np.cos(k * np.pi * s[None, :] / length)
    out[0] = 1.0 / np.sqrt(length)
    return out


def _stiffness_bands(op: EllipticOperator1D, n: int, weight: Optional[np.ndarray] = None):
    """Diagonal and off-diagonal of the flux-form stiffness matrix.

    The matrix is ``S`` with ``(S u)_i ~ -(p u')'`` integrated over the dual
    cell of node ``i``, where ``p = a * m`` (``m = 1`` in divergence form).
    """
    x = op.grid(n)
    h = op.length / n
    mid = 0.5 * (x[:-1] + x[1:])
    p = op.a_field(mid)
    if weight is not None:
        p = p * np.interp(mid, x, weight)
    diag = np.zeros(n + 1)
    diag[:-1] += p / h
    diag[1:] += p / h
    return diag, -p / h


def _fd_eigs(op: EllipticOperator1D, n: int, K: int, m: Optional[np.ndarray] = None):
    diag, off = _stiffness_bands(op, n, m)
    w = trapezoid_weights(n, op.length)
    if m is not None:
        w = w * m
    s = 1.0 / np.sqrt(w)
    vals, vecs = sla.eigh_tridiagonal(diag * s * s, off * s[:-1] * s[1:],
                                      select="i", select_range=(0, K - 1))
    vecs = vecs * s[:, None]
    # residual of S v = alpha W v, relative to the diagonal scale
    sv = diag[:, None] * vecs
    sv[:-1] += off[:, None] * vecs[1:]
    sv[1:] += off[:, None] * vecs[:-1]
    res = np.linalg.norm(sv - w[:, None] * vecs * vals, axis=0)
    scale = np.linalg.norm(diag[:, None] * vecs, axis=0) + 1e-300
    if not np.all(res / scale < 1e-8):
        raise EigensolveError(f"eigensolver residuals too large: {res / scale}")
    return vals, vecs.T


def eigensolve(op: EllipticOperator1D, K: int, grid_n: int, extrapolate: bool = True) -> SpectralBasis:
    """Eigenpairs ``-A e_k = alpha_k e_k``, sorted ascending, ``e_k(x_a) > 0``.

    Constant ``a`` uses the Neumann cosine basis.  Otherwise a symmetric
    three-point flux discretization is solved on ``grid_n`` and on a grid
    twice as fine, and the eigenvalues are Richardson-extrapolated
    (the discrete error expands in even powers of ``h``).  Eigenvectors
    come from the ``grid_n`` solve so that they stay exactly orthonormal
    in the grid quadrature.
    """
    if op.form != "divergence":
        raise ValueError("eigensolve needs a divergence-form operator (b == 0)")
    if K < 2:
        raise ValueError("need at least two modes to have a spectral gap")
    if 4 * K > grid_n:
        raise ValueError(f"K={K} exceeds grid_n/4 (grid_n={grid_n})")

    x = op.grid(grid_n)
    w = trapezoid_weights(grid_n, op.length)
    L = op.length
    if op.constant_a is not None:
        a = op.constant_a
        alphas = a * (np.arange(K) * np.pi / L) ** 2
        efuncs = _cosine_modes(K, x - op.x_a, L)
        analytic = True
    else:
        alphas, efuncs = _fd_eigs(op, grid_n, K)
        if extrapolate:
            fine, _ = _fd_eigs(op, 2 * grid_n, K)
            alphas = (4.0 * fine - alphas) / 3.0
        alphas = alphas.copy()
        alphas[0] = 0.0
        efuncs = efuncs.copy()
        efuncs[0] = 1.0 / np.sqrt(L)
        efuncs *= np.where(efuncs[:, :1] < 0, -1.0, 1.0)
        analytic = False

    traces = np.stack([efuncs[:, 0], efuncs[:, -1]], axis=1)
    return SpectralBasis(op=op, alphas=alphas, efuncs=efuncs, traces=traces,
                         grid=x, weights=w, analytic=analytic)


def invariant_density(op: EllipticOperator1D, grid_n: int) -> InvariantMeasure:
    """Invariant density of the reflected diffusion generated by ``A``.

    Divergence form gives the uniform density ``1/|D|``.  With drift the
    stationary adjoint problem ``(a m' - b m)' = 0`` with zero adjoint flux
    is solved by ``m ~ exp(int b/a)``.  The gap is ``alpha_1`` of the
    operator, which is self-adjoint in ``L^2(m dx)``.
    """
    x = op.grid(grid_n)
    w = trapezoid_weights(grid_n, op.length)
    if op.form == "divergence":
        m = np.full_like(x, 1.0 / op.length)
        if op.constant_a is not None:
            gap = op.constant_a * (np.pi / op.length) ** 2
        else:
            gap = float(eigensolve(op, 2, max(grid_n, 8)).alphas[1])
        return InvariantMeasure(grid=x, density=m, weights=w, gap=gap, uniform=True)

    ratio = op.b_field(x) / op.a_field(x)
    expo = np.concatenate([[0.0], np.cumsum(0.5 * (ratio[1:] + ratio[:-1]) * np.diff(x))])
    expo -= expo.max()
    m = np.exp(expo)
    total = float(np.dot(w, m))
    if not np.isfinite(total) or total <= 0.0 or not np.all(np.isfinite(m)):
        raise ArithmeticError("invariant density quadrature failed (b/a too wild for the grid)")
    m /= total
    vals, _ = _fd_eigs(op, grid_n, 2, m)
    return InvariantMeasure(grid=x, density=m, weights=w, gap=float(vals[1]))


def semigroup_apply(basis: SpectralBasis, meas: InvariantMeasure, t: float, h) -> np.ndarray:
    """``e^{tA} h`` truncated to the basis, returned on the grid."""
    if t < 0:
        raise ValueError("semigroup time must be non-negative")
    modes = basis.project(h)
    return basis.synthesize(np.exp(-basis.alphas * t) * modes)


def hmu_norm(meas: InvariantMeasure, h) -> float:
    """``(int |h|^2 m dx)^{1/2}`` by trapezoid quadrature."""
    h = np.asarray(h, dtype=float)
    return float(np.sqrt(np.dot(meas.weights * meas.density, h * h)))
