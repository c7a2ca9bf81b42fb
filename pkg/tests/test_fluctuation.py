import numpy as np
import pytest

from fastavg.coefficients import HypothesisError, ScalarField, constant, zero
from fastavg.fluctuation import gaussian_compare, i0_covariance, write_report_csv, z_field, z_modes
from fastavg.averaged import ScalarPath
from fastavg.noise import NoiseSpec
from fastavg.spde import SpdePath


def test_white_interior_noise_is_diagonal(basis8):
    cov = i0_covariance(zero(), constant(1.0), zero(), basis8, NoiseSpec(K=8), 1.0)
    np.testing.assert_allclose(cov.C, np.diag(1 / (2 * basis8.alphas[1:])), atol=1e-14)
    assert np.all(cov.full[0] == 0) and np.all(cov.full[:, 0] == 0)


def test_boundary_part(basis8):
    cov = i0_covariance(zero(), zero(), constant(2.0), basis8, NoiseSpec(K=8, theta=(1.0, 0.5)), 1.0)
    k, l = 1, 2
    tr = basis8.traces
    expect = 4 * (tr[k, 0] * tr[l, 0] + 0.25 * tr[k, 1] * tr[l, 1]) / (k ** 2 + l ** 2)
    assert cov.C[k - 1, l - 1] == pytest.approx(expect, rel=1e-13)


def test_psd_and_decay(basis8):
    g = ScalarField.make("space", c0=1.0, c1=0.5, omega=2.0)
    cov = i0_covariance(constant(0.0), g, constant(1.0), basis8, NoiseSpec(K=8), 0.5)
    assert np.allclose(cov.C, cov.C.T)
    assert np.linalg.eigvalsh(cov.C).min() > -1e-14
    d = np.diag(cov.C)
    assert d[-1] < d[0]


def test_rejects_multiplicative(basis8):
    with pytest.raises(HypothesisError) as info:
        i0_covariance(zero(), ScalarField.make("affine", c0=1, c1=1), zero(), basis8, NoiseSpec(K=8), 1.0)
    assert info.value.hypothesis == "H4(2)"


def test_z_modes_and_field(basis8):
    u = np.zeros((3, 8))
    u[:, 0] = 2 * np.sqrt(np.pi)
    u[:, 2] = 0.1
    v = np.full(3, 2.0)
    z = z_modes(u, v, 0.01, basis8)
    np.testing.assert_allclose(z[:, 0], 0, atol=1e-13)
    np.testing.assert_allclose(z[:, 2], 1.0)
    t = np.arange(3.0)
    zf = z_field(SpdePath(t, u, "x"), ScalarPath(t, v, "x"), 0.01, basis8, grid=True)
    assert zf.shape == (3, 33)
    with pytest.raises(ValueError):
        z_field(SpdePath(t, u, "x"), ScalarPath(t, v, "y"), 0.01, basis8)


def test_compare_accepts_gaussian_rejects_skewed(basis8):
    cov = i0_covariance(zero(), constant(1.0), zero(), basis8, NoiseSpec(K=8), 1.0)
    rng = np.random.default_rng(4)
    good = rng.multivariate_normal(np.zeros(7), cov.C, size=4000)
    rep = gaussian_compare(good, cov)
    assert rep.passed, rep.checks
    sd = np.sqrt(np.diag(cov.C))
    skewed = (rng.exponential(size=(4000, 7)) - 1) * sd
    assert not gaussian_compare(skewed, cov).checks["skew"]
    assert not gaussian_compare(2 * good, cov, cov_rtol=0.15).checks["covariance"]
    with pytest.raises(ValueError):
        gaussian_compare(good[:100], cov)


def test_report_csv(tmp_path, basis8):
    cov = i0_covariance(zero(), constant(1.0), zero(), basis8, NoiseSpec(K=8), 1.0)
    rng = np.random.default_rng(0)
    rep = gaussian_compare(rng.multivariate_normal(np.zeros(7), cov.C, size=600), cov, n_modes=2)
    write_report_csv([rep, rep], tmp_path / "r.csv", labels=[0.1, 0.01])
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[1] == "eps,mode,C_analytic,C_empirical,rel_err,mean_z" and len(lines) == 6
