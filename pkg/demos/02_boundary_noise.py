"""Boundary white noise alone: the boundary Ornstein-Uhlenbeck process.

With f = g = 0 and sigma = 1 the solution is driven only through the two
endpoint fluxes.  Mode k >= 1 is an OU process relaxing at rate alpha_k / eps,
so its stationary variance shrinks like eps while mode 0 (the spatial mean)
is a Brownian motion that does not feel eps at all.
"""
import numpy as np

from fastavg import EllipticOperator1D, NoiseSpec, SpdeConfig, constant, eigensolve, integrate, invariant_density
from fastavg.noise import sample_batch

op = EllipticOperator1D(0.0, np.pi)
basis, meas = eigensolve(op, 8, 32), invariant_density(op, 32)
spec = NoiseSpec(K=8, seed=1)
M, dt = 2000, 1e-3
for eps in (1.0, 0.1, 0.01):
    cfg = SpdeConfig(eps=eps, T=1.0, dt=dt, basis=basis, measure=meas, noise=spec,
                     sigma=constant(1.0), exact_variance=True)
    modes = integrate(cfg, sample_batch(spec, dt, cfg.n_steps, range(M))).modes[-1]
    exact1 = (4 / np.pi) * eps * (1 - np.exp(-2 / eps)) / 2
    print(f"eps={eps:<5} Var mode0 {modes[:, 0].var():.4f} (exact {2 / np.pi:.4f})   "
          f"Var mode1 {modes[:, 1].var():.4f} (exact {exact1:.4f})")
