import numpy as np
import pytest

from fastavg import fd, spde
from fastavg.coefficients import ScalarField, constant
from fastavg.noise import NoisePath, NoiseSpec, sample_batch, sample_path
from fastavg.operator import EllipticOperator1D, eigensolve, invariant_density


def quiet(n, K):
    return NoisePath(1.0, np.zeros((n, K)), np.zeros((n, 2)), np.ones(K), np.ones(2))


def make_cfg(basis, meas, **kw):
    kw.setdefault("eps", 1.0)
    kw.setdefault("T", 1.0)
    kw.setdefault("dt", 1e-2)
    return spde.SpdeConfig(basis=basis, measure=meas, noise=NoiseSpec(K=basis.K), **kw)


def zero_noise(cfg):
    n, K = cfg.n_steps, cfg.basis.K
    return NoisePath(cfg.dt, np.zeros((n, K)), np.zeros((n, 2)), np.ones(K), np.ones(2))


def test_single_step_pure_semigroup(basis8, measure32):
    cfg = make_cfg(basis8, measure32, eps=0.3, dt=0.01)
    u = spde.step(basis8.project(basis8.efuncs[1]), 0.0, np.zeros(8), np.zeros(2), cfg)
    expect = np.zeros(8)
    expect[1] = np.exp(-0.01 / 0.3)
    np.testing.assert_allclose(u, expect, atol=1e-13)


def test_constants_invariant(basis8, measure32):
    cfg = make_cfg(basis8, measure32, u0=2.5, eps=0.01)
    path = spde.integrate(cfg, zero_noise(cfg))
    np.testing.assert_allclose(path.grid_values(basis8), 2.5, atol=1e-13)


def test_linear_decay_ode(basis8, measure32):
    cfg = make_cfg(basis8, measure32, u0=1.5, dt=1e-3, f=ScalarField.make("affine", c0=0.0, c1=-1.0))
    path = spde.integrate(cfg, zero_noise(cfg))
    vals = path.grid_values(basis8)
    exact = 1.5 * np.exp(-path.times)
    assert np.max(np.abs(vals - exact[:, None])) < 1e-3


def test_boundary_ou_variance_exact_steps(unit_op):
    # damped-increment recursion: Var = (4/pi) dt sum_{j=1}^n E^{2j}
    b = eigensolve(unit_op, 4, 32)
    m = invariant_density(unit_op, 32)
    cfg = make_cfg(b, m, dt=0.05, T=0.5, sigma=constant(1.0))
    st = spde.SpdeStepper(cfg)
    E = np.exp(-0.05)
    assert st.E[1] == pytest.approx(E)
    n = cfg.n_steps
    expected = (4 / np.pi) * 0.05 * sum(E ** (2 * j) for j in range(1, n + 1))
    # propagate the covariance exactly through the linear recursion
    var = 0.0
    for _ in range(n):
        var = E ** 2 * var + E ** 2 * 0.05 * np.sum(b.traces[1] ** 2)
    assert var == pytest.approx(expected, rel=1e-13)


def test_batch_matches_single_replicas(basis8, measure32):
    f = ScalarField.make("relaxation", rate=1.0, target=1.0)
    cfg = make_cfg(basis8, measure32, eps=0.1, T=0.2, f=f, g=constant(0.5), sigma=constant(0.5), u0=1.0)
    spec = NoiseSpec(K=8, seed=5)
    batch = spde.integrate(cfg, sample_batch(spec, cfg.dt, cfg.n_steps, range(3)))
    for r in range(3):
        one = spde.integrate(cfg, sample_path(spec, cfg.dt, cfg.n_steps, replica=r))
        np.testing.assert_allclose(batch.modes[:, r], one.modes, rtol=0, atol=1e-14)


def test_multiplicative_noise_path_consistent(basis8, measure32):
    # g = 1 + 0 u through the general grid path equals the constant fast path
    g_slow = ScalarField.make("product", factors=[ScalarField.make("space", c0=1.0, c1=0.0, omega=1.0),
                                                  ScalarField.make("affine", c0=1.0, c1=0.0)])
    nz = sample_path(NoiseSpec(K=8, seed=1), 1e-2, 100)
    a = spde.integrate(make_cfg(basis8, measure32, g=constant(1.0)), nz).modes
    b = spde.integrate(make_cfg(basis8, measure32, g=g_slow), nz).modes
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_integration_error_reports_step(basis8, measure32):
    cfg = make_cfg(basis8, measure32, u0=1.0, f=ScalarField.make("affine", c0=0.0, c1=1e6))
    with pytest.raises(spde.IntegrationError) as info:
        spde.integrate(cfg, zero_noise(cfg))
    assert 0 < info.value.step_index < cfg.n_steps


def test_config_checks(basis8, measure32):
    with pytest.raises(ValueError):
        make_cfg(basis8, measure32, eps=0.0)
    with pytest.raises(ValueError):
        spde.SpdeConfig(eps=1, T=1, dt=0.1, basis=basis8, measure=measure32, noise=NoiseSpec(K=4))
    with pytest.raises(ValueError):
        make_cfg(basis8, measure32, T=1.0, dt=0.3).n_steps
    cfg = make_cfg(basis8, measure32)
    with pytest.raises(ValueError):
        spde.integrate(cfg, sample_path(NoiseSpec(K=8), 1e-2, 5))


def test_deterministic_flux_matches_fd():
    # the cosine series of a flux-driven profile converges like 1/K at the
    # endpoints, so the full-grid bound needs a large K
    K = 512
    op = EllipticOperator1D(0.0, np.pi)
    b, m = eigensolve(op, K, 4 * K), invariant_density(op, 4 * K)
    flux = lambda t: (0.5 * np.sin(np.pi * t), 0.25 * (1 - np.cos(np.pi * t)))
    cfg = spde.SpdeConfig(eps=1.0, T=0.5, dt=1e-4, basis=b, measure=m, noise=NoiseSpec(K=K), flux=flux)
    u = spde.integrate(cfg, zero_noise(cfg)).modes[-1]
    ref = fd.fd_integrate(fd.FdConfig(op=op, grid_n=4 * K, dt=1e-4, eps=1.0, T=0.5, flux=flux),
                          record_every=10 ** 9).values[-1]
    diff = np.abs(b.synthesize(u) - ref)
    assert diff.max() <= 1e-3
    inner = slice(K // 2, -K // 2)
    assert diff[inner].max() <= 1e-5


def test_csv_writers(tmp_path, basis8, measure32):
    cfg = make_cfg(basis8, measure32, T=0.05, sigma=constant(1.0))
    nz = sample_path(NoiseSpec(K=8, seed=2), cfg.dt, cfg.n_steps)
    p = spde.integrate(cfg, nz)
    spde.write_modes_csv(p, tmp_path / "a.csv")
    spde.write_modes_csv(spde.integrate(cfg, nz), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == spde.CSV_HEADER and lines[1].startswith("t,mode_0")
    assert len(lines) == 2 + 6
    back = np.loadtxt(tmp_path / "a.csv", delimiter=",", skiprows=2)
    assert np.array_equal(back[:, 1:], p.modes)
    spde.write_grid_csv(p, basis8, tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().splitlines()[1].count(",") == 33
