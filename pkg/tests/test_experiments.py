import copy
import json
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from fastavg import experiments as ex
from fastavg.cli import main
from fastavg.config import ConfigError, load_config, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = {
    "operator": {"domain": [0, "pi"], "a": 1.0},
    "coefficients": {"f": {"family": "relaxation", "rate": 1.0, "target": 1.0}, "g": 0.5, "sigma": 0.5},
    "noise": {"seed": 9},
    "discretization": {"K": 8, "grid_n": 32, "dt": 1e-2, "T": 0.5, "u0": 1.0},
    "experiment": {"eps_ladder": [0.5, 0.1, 0.02], "replicas": 6, "batch_size": 2},
}


def write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def with_kind(kind, **extra):
    d = copy.deepcopy(SMALL)
    d["experiment"]["kind"] = kind
    d["experiment"].update(extra)
    return d


def test_config_parsing_and_pi_strings():
    cfg = parse_config(SMALL)
    assert cfg.x_b == pytest.approx(np.pi) and cfg.K == 8 and cfg.seed == 9
    d = copy.deepcopy(SMALL)
    d["operator"]["domain"] = ["pi/2", "2*pi"]
    c2 = parse_config(d)
    assert (c2.x_a, c2.x_b) == pytest.approx((np.pi / 2, 2 * np.pi))


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra=1),
    lambda d: d["noise"].update(colour="red"),
    lambda d: d["coefficients"].update(f={"family": "relaxation", "rate": 1, "target": 1, "x": 0}),
    lambda d: d["discretization"].update(K=1),
    lambda d: d["discretization"].update(grid_n=10),
    lambda d: d["noise"].update(seed=-1),
    lambda d: d["experiment"].update(eps_ladder=[2.0]),
    lambda d: d["experiment"].update(kind="plot"),
    lambda d: d["operator"].update(domain=[0]),
    lambda d: d["discretization"].update(dt="fast"),
])
def test_config_rejections(mutate):
    d = copy.deepcopy(SMALL)
    mutate(d)
    with pytest.raises(ConfigError):
        parse_config(d)


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_fit_rate_synthetic():
    eps = 2.0 ** -np.arange(2, 9)
    slope, icpt, r2 = ex.fit_rate(eps, 3.0 * eps ** 0.5)
    assert abs(slope - 0.5) < 1e-12 and abs(icpt - np.log(3.0)) < 1e-12 and r2 == pytest.approx(1.0)
    rep = ex.run_converge(parse_config(with_kind("converge")), errors_fn=lambda e: e ** 0.5)
    assert rep.passed and abs(rep.slope - 0.5) < 1e-12
    bad = ex.run_converge(parse_config(with_kind("converge")), errors_fn=lambda e: e ** 0.9)
    assert not bad.checks["slope"] and bad.checks["monotone"]


def test_thread_count_does_not_change_results():
    cfg = parse_config(with_kind("converge"))
    a = ex.run_converge(cfg, threads=1)
    b = ex.run_converge(cfg, threads=3)
    assert np.array_equal(a.rms, b.rms)
    assert a.t_start == 0.0


def test_bound_table_shapes():
    tab = ex.run_bound(parse_config(with_kind("bound")))
    assert tab.boundary_ou.shape == (3,) and np.all(tab.boundary_ou > 0)
    assert ex.BoundTable._ratio(np.zeros(3)) == 1.0


def test_validate_rows():
    rows = ex.run_validate(load_config(CONFIGS / "validate_drift.json"))
    names = [r[0] for r in rows]
    assert names[0] == "H1" and "H3" in names and all(ok for _, ok, _ in rows)


def run_cli(tmp_path, doc, kind, sub="out", extra=()):
    out = tmp_path / sub
    code = main([kind, "--config", write(tmp_path, doc, f"{sub}.json"), "--out", str(out), *extra])
    return code, out


def test_cli_exit_codes(tmp_path, capsys):
    code, out = run_cli(tmp_path, with_kind("eigen"), "eigen", "e")
    assert code == 0 and (out / "report.csv").exists()
    # an impossible slope window makes the converge check fail
    code, out = run_cli(tmp_path, with_kind("converge", slope_range=[5.0, 6.0]), "converge", "c")
    assert code == 2 and (out / "rate.csv").exists()
    code, _ = run_cli(tmp_path, with_kind("converge"), "bound", "mismatch")
    assert code == 1
    code = main(["fluctuate", "--config", str(CONFIGS / "fluctuate_reject.json"), "--out", str(tmp_path / "r")])
    assert code == 1
    assert "H4(2)" in capsys.readouterr().err


def test_cli_simulate_writes_paths(tmp_path):
    code, out = run_cli(tmp_path, with_kind("simulate", eps=0.1, replicas=2), "simulate", "s")
    assert code == 0
    assert sorted(p.name for p in (out / "paths").iterdir()) == [
        "sde_r0000.csv", "sde_r0001.csv", "spde_r0000.csv", "spde_r0001.csv"]


def test_cli_seed_override_changes_output(tmp_path):
    d = with_kind("simulate", eps=0.1, replicas=1)
    _, a = run_cli(tmp_path, d, "simulate", "a")
    _, b = run_cli(tmp_path, d, "simulate", "b", ("--seed", "1234"))
    assert (a / "report.csv").read_bytes() != (b / "report.csv").read_bytes()
    assert main(["simulate", "--config", str(tmp_path / "a.json"), "--seed", "-3",
                 "--out", str(tmp_path / "z")]) == 1


@pytest.mark.skipif(shutil.which("fastavg") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["fastavg", "eigen", "--config", str(CONFIGS / "eigen_variable.json"), "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert "numeric branch" in res.stdout
