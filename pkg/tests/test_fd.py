import numpy as np
import pytest

from fastavg.coefficients import ScalarField
from fastavg.fd import FdConfig, discrete_h_norm, fd_integrate
from fastavg.neumann import solve_neumann
from fastavg.operator import EllipticOperator1D


def test_heat_cosine_separation_of_variables(unit_op):
    x = unit_op.grid(200)
    p = fd_integrate(FdConfig(op=unit_op, grid_n=200, dt=1e-3, eps=1.0, T=1.0, u0=np.cos(x)))
    assert np.max(np.abs(p.values[-1] - np.exp(-1) * np.cos(x))) < 1e-4
    assert p.times[-1] == pytest.approx(1.0)


def test_shifted_flux_reaches_neumann_steady_state(unit_op):
    delta = 1.0
    cfg = FdConfig(op=unit_op, grid_n=400, dt=0.05, eps=1.0, T=30.0, theta_scheme=1.0,
                   f=ScalarField.make("affine", c0=0.0, c1=-delta), flux=lambda t: (1.0, 0.0))
    p = fd_integrate(cfg, record_every=10 ** 9)
    ref = solve_neumann(unit_op, delta, (1.0, 0.0))(p.grid)
    assert np.max(np.abs(p.values[-1] - ref)) < 1e-4


def test_drift_form_steady_state():
    op = EllipticOperator1D(0.0, 1.0, 1.0, 1.0)
    cfg = FdConfig(op=op, grid_n=400, dt=0.05, eps=1.0, T=30.0, theta_scheme=1.0,
                   f=ScalarField.make("affine", c0=0.0, c1=-2.0), flux=lambda t: (1.0, 0.5))
    p = fd_integrate(cfg, record_every=10 ** 9)
    ref = solve_neumann(op, 2.0, (1.0, 0.5), grid_n=400).values
    assert np.max(np.abs(p.values[-1] - ref)) < 1e-6


def test_zero_everything(unit_op):
    p = fd_integrate(FdConfig(op=unit_op, grid_n=32, dt=0.01, eps=0.1, T=0.1))
    assert np.all(p.values == 0)


def test_norm_and_checks(unit_op):
    assert discrete_h_norm(np.ones(65), np.pi) == pytest.approx(np.sqrt(np.pi))
    with pytest.raises(ValueError):
        FdConfig(op=unit_op, grid_n=8, dt=0.1, eps=1, T=1, theta_scheme=0.2)
