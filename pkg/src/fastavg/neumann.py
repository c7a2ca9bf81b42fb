"""Neumann map ``N_delta``: flux data at the two endpoints -> solution of
``(delta - A) v = 0`` with ``a v' nu = h`` on the boundary.

Sign convention: the outward normal is ``-1`` at ``x_a`` and ``+1`` at
``x_b``, so ``h = (h_a, h_b)`` means ``-a v'(x_a) = h_a`` and
``a v'(x_b) = h_b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.linalg import solve_banded

from .operator import (EllipticOperator1D, SpectralBasis, _stiffness_bands,
                       invariant_density, trapezoid_weights)

__all__ = [
    "DELTA0",
    "NeumannSolution",
    "solve_neumann",
    "adjoint_mode_coeff",
    "boundary_propagator_coeff",
]

# any positive shift makes delta - A invertible for a flux problem
DELTA0 = 1.0


@dataclass(frozen=True, eq=False)
class NeumannSolution:
    delta: float
    bdata: Tuple[float, float]
    grid: np.ndarray
    values: np.ndarray
    exact: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x):
        """Evaluate the solution; closed form when available, else interpolated."""
        x = np.asarray(x, dtype=float)
        if self.exact is not None:
            return self.exact(x)
        return np.interp(x, self.grid, self.values)


def solve_neumann(op: EllipticOperator1D, delta: float, bdata, grid_n: int = 256) -> NeumannSolution:
    """Solve ``(delta - A) v = 0`` with conormal flux ``bdata``.

    For constant ``a`` (no drift) the solution is
    ``v = [h_b cosh(k (x - x_a)) + h_a cosh(k (x_b - x))] / (a k sinh(k L))``
    with ``k = sqrt(delta / a)``.  Otherwise the flux-form finite-volume
    system ``(delta W + S) v = flux`` is solved; with drift the problem is
    written in its symmetric ``m``-weighted form.
    """
    h_a, h_b = (float(v) for v in bdata)
    if not delta > 0.0:
        raise np.linalg.LinAlgError(f"delta - A is singular for delta={delta} (need delta > 0)")
    x = op.grid(grid_n)

    if op.form == "divergence" and op.constant_a is not None:
        a = op.constant_a
        kap = np.sqrt(delta / a)
        L = op.length
        denom = a * kap * np.sinh(kap * L)

        def exact(y, h_a=h_a, h_b=h_b):
            y = np.asarray(y, dtype=float)
            return (h_b * np.cosh(kap * (y - op.x_a)) + h_a * np.cosh(kap * (op.x_b - y))) / denom

        return NeumannSolution(delta=delta, bdata=(h_a, h_b), grid=x, values=exact(x), exact=exact)

    m = None
    rhs = np.zeros(grid_n + 1)
    w = trapezoid_weights(grid_n, op.length)
    if op.form == "drift":
        m = invariant_density(op, grid_n).density
        w = w * m
        rhs[0], rhs[-1] = m[0] * h_a, m[-1] * h_b
    else:
        rhs[0], rhs[-1] = h_a, h_b
    diag, off = _stiffness_bands(op, grid_n, m)
    ab = np.zeros((3, grid_n + 1))
    ab[0, 1:] = off
    ab[1] = diag + delta * w
    ab[2, :-1] = off
    values = solve_banded((1, 1), ab, rhs)
    return NeumannSolution(delta=delta, bdata=(h_a, h_b), grid=x, values=values)


def adjoint_mode_coeff(basis: SpectralBasis, delta: float, bdata, k: int) -> float:
    """``<N_delta h, e_k>_H = (h_a e_k(x_a) + h_b e_k(x_b)) / (delta + alpha_k)``."""
    h = np.asarray(bdata, dtype=float)
    return float(np.dot(h, basis.traces[k]) / (delta + basis.alphas[k]))


def boundary_propagator_coeff(basis: SpectralBasis, delta0: float, t: float, bdata, k: int) -> float:
    """Mode-``k`` coefficient of ``(delta0 - A) e^{tA} N_delta0 h``.

    The ``delta0 + alpha_k`` factors cancel, leaving
    ``e^{-alpha_k t} (h_a e_k(x_a) + h_b e_k(x_b))``.
    """
    if t < 0:
        raise ValueError("propagator time must be non-negative")
    alpha = basis.alphas[k]
    return float((delta0 + alpha) * np.exp(-alpha * t) * adjoint_mode_coeff(basis, delta0, bdata, k))
