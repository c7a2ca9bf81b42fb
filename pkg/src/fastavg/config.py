"""JSON experiment configuration.

Unknown keys anywhere in the document are rejected.  Numbers may be given
as JSON numbers or as the strings ``"pi"``, ``"2*pi"``, ``"pi/2"``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, List, Mapping, Optional, Tuple, Union

import numpy as np

from .coefficients import ScalarField, zero
from .noise import NoiseSpec
from .operator import EllipticOperator1D

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "KINDS"]

KINDS = ("eigen", "simulate", "converge", "bound", "fluctuate", "validate")


class ConfigError(ValueError):
    pass


_PI = re.compile(r"^\s*(?:(-?[0-9.eE+-]+)\s*\*\s*)?pi(?:\s*/\s*([0-9.eE+-]+))?\s*$")


def _num(v, where: str) -> float:
    if isinstance(v, bool):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        m = _PI.match(v)
        if m:
            return (float(m.group(1)) if m.group(1) else 1.0) * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
    raise ConfigError(f"{where}: expected a number, got {v!r}")


def _block(d: Any, where: str, required: Tuple[str, ...], optional: Tuple[str, ...] = ()) -> dict:
    if not isinstance(d, Mapping):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(d) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(d)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    return dict(d)


def _field(d: Any, where: str) -> ScalarField:
    if isinstance(d, (int, float, str)) and not isinstance(d, bool):
        return ScalarField.make("constant", value=_num(d, where))
    if not isinstance(d, Mapping):
        raise ConfigError(f"{where}: expected a coefficient family object")

    def convert(node, path):
        node = dict(node)
        if node.get("family") == "product":
            return {"family": "product",
                    "factors": [convert(f, f"{path}.factors[{i}]") for i, f in enumerate(node.get("factors", []))]}
        return {k: (v if k == "family" else _num(v, f"{path}.{k}")) for k, v in node.items()}

    try:
        return ScalarField.from_dict(convert(d, where))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    x_a: float
    x_b: float
    a: ScalarField
    b: Optional[ScalarField]
    f: ScalarField
    g: ScalarField
    sigma: ScalarField
    q_eigs: Union[str, Tuple[float, ...]]
    theta: Tuple[float, float]
    seed: int
    K: int
    grid_n: int
    dt: float
    T: float
    delta_cut: Optional[float]
    u0: Union[float, ScalarField]
    kind: Optional[str] = None
    eps: float = 1.0
    eps_ladder: Tuple[float, ...] = ()
    replicas: int = 1
    batch_size: int = 50
    exact_variance: Optional[bool] = None
    slope_range: Tuple[float, float] = (0.35, 0.65)
    bound_ratio: float = 10.0
    cov_rtol: float = 0.15
    mean_sigmas: float = 3.0
    n_modes: int = 4
    purpose: str = "simulate"
    theta_scheme: float = 0.5
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    # -- derived objects ----------------------------------------------------

    def operator(self) -> EllipticOperator1D:
        a = self.a
        if a.depends_on_u or a.depends_on_t:
            raise ConfigError("operator.a must depend on x only")
        a_val = a.p("value") if a.family == "constant" else (lambda x, a=a: a.eval(0.0, x, 0.0))
        b_val = None
        if self.b is not None and not self.b.is_zero:
            b = self.b
            if b.depends_on_u or b.depends_on_t:
                raise ConfigError("operator.b must depend on x only")
            b_val = b.p("value") if b.family == "constant" else (lambda x, b=b: b.eval(0.0, x, 0.0))
        return EllipticOperator1D(self.x_a, self.x_b, a_val, b_val)

    def noise_spec(self, seed: Optional[int] = None) -> NoiseSpec:
        return NoiseSpec(K=self.K, q_eigs=self.q_eigs, theta=self.theta,
                         seed=self.seed if seed is None else seed)

    def u0_value(self, grid: np.ndarray):
        if isinstance(self.u0, ScalarField):
            return self.u0.eval(0.0, grid, 0.0)
        return float(self.u0)

    @property
    def u0_constant(self) -> bool:
        return not isinstance(self.u0, ScalarField) or not self.u0.depends_on_x

    def with_seed(self, seed: int) -> "ExperimentConfig":
        from dataclasses import replace
        return replace(self, seed=int(seed))


def parse_config(doc: Mapping) -> ExperimentConfig:
    top = _block(doc, "config", ("operator", "coefficients", "noise", "discretization"), ("experiment",))
    op = _block(top["operator"], "operator", ("domain",), ("a", "b"))
    dom = op["domain"]
    if not isinstance(dom, list) or len(dom) != 2:
        raise ConfigError("operator.domain: expected [x_a, x_b]")
    x_a, x_b = _num(dom[0], "operator.domain[0]"), _num(dom[1], "operator.domain[1]")
    a = _field(op.get("a", 1.0), "operator.a")
    b = _field(op["b"], "operator.b") if op.get("b") is not None else None

    co = _block(top["coefficients"], "coefficients", (), ("f", "g", "sigma"))
    f = _field(co["f"], "coefficients.f") if "f" in co else zero()
    g = _field(co["g"], "coefficients.g") if "g" in co else zero()
    sigma = _field(co["sigma"], "coefficients.sigma") if "sigma" in co else zero()

    nz = _block(top["noise"], "noise", (), ("q_eigs", "theta", "seed"))
    q = nz.get("q_eigs", "identity")
    if isinstance(q, list):
        q = tuple(_num(v, "noise.q_eigs") for v in q)
    elif q != "identity":
        raise ConfigError("noise.q_eigs: expected \"identity\" or a list of numbers")
    theta = nz.get("theta", [1.0, 1.0])
    if not isinstance(theta, list) or len(theta) != 2:
        raise ConfigError("noise.theta: expected a pair")
    theta = tuple(_num(v, "noise.theta") for v in theta)
    seed = nz.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
        raise ConfigError("noise.seed: expected an unsigned 64-bit integer")

    di = _block(top["discretization"], "discretization", ("K", "dt", "T"), ("grid_n", "delta_cut", "u0"))
    K = di["K"]
    if not isinstance(K, int) or K < 2:
        raise ConfigError("discretization.K: expected an integer >= 2")
    grid_n = di.get("grid_n", 4 * K)
    if not isinstance(grid_n, int) or grid_n < 4 * K:
        raise ConfigError("discretization.grid_n: expected an integer >= 4 K")
    dt, T = _num(di["dt"], "discretization.dt"), _num(di["T"], "discretization.T")
    if not (dt > 0 and T > 0):
        raise ConfigError("discretization: dt and T must be positive")
    delta_cut = di.get("delta_cut")
    if delta_cut is not None:
        delta_cut = _num(delta_cut, "discretization.delta_cut")
        if not 0 < delta_cut < T:
            raise ConfigError("discretization.delta_cut must lie in (0, T)")
    u0 = di.get("u0", 0.0)
    u0 = _field(u0, "discretization.u0") if isinstance(u0, Mapping) else _num(u0, "discretization.u0")

    ex = _block(top.get("experiment", {}), "experiment", (),
                ("kind", "eps", "eps_ladder", "replicas", "batch_size", "exact_variance", "slope_range",
                 "bound_ratio", "cov_rtol", "mean_sigmas", "n_modes", "purpose", "theta_scheme"))
    kind = ex.get("kind")
    if kind is not None and kind not in KINDS:
        raise ConfigError(f"experiment.kind: expected one of {KINDS}")
    ladder = tuple(_num(v, "experiment.eps_ladder") for v in ex.get("eps_ladder", []))
    if any(not 0 < e <= 1 for e in ladder):
        raise ConfigError("experiment.eps_ladder: values must lie in (0, 1]")
    eps = _num(ex.get("eps", 1.0), "experiment.eps")
    replicas = ex.get("replicas", 1)
    batch = ex.get("batch_size", 50)
    for name, v in (("replicas", replicas), ("batch_size", batch)):
        if not isinstance(v, int) or v < 1:
            raise ConfigError(f"experiment.{name}: expected a positive integer")
    ev = ex.get("exact_variance")
    if ev is not None and not isinstance(ev, bool):
        raise ConfigError("experiment.exact_variance: expected true/false")
    sr = ex.get("slope_range", [0.35, 0.65])
    purpose = ex.get("purpose", "simulate")
    if purpose not in ("simulate", "fluctuate"):
        raise ConfigError("experiment.purpose: expected simulate or fluctuate")
    n_modes = ex.get("n_modes", 4)
    if not isinstance(n_modes, int) or not 1 <= n_modes < K:
        raise ConfigError("experiment.n_modes: expected an integer in [1, K)")

    return ExperimentConfig(
        x_a=x_a, x_b=x_b, a=a, b=b, f=f, g=g, sigma=sigma, q_eigs=q, theta=theta, seed=seed,
        K=K, grid_n=grid_n, dt=dt, T=T, delta_cut=delta_cut, u0=u0, kind=kind, eps=eps,
        eps_ladder=ladder, replicas=replicas, batch_size=batch, exact_variance=ev,
        slope_range=(_num(sr[0], "experiment.slope_range"), _num(sr[1], "experiment.slope_range")),
        bound_ratio=_num(ex.get("bound_ratio", 10.0), "experiment.bound_ratio"),
        cov_rtol=_num(ex.get("cov_rtol", 0.15), "experiment.cov_rtol"),
        mean_sigmas=_num(ex.get("mean_sigmas", 3.0), "experiment.mean_sigmas"),
        n_modes=n_modes, purpose=purpose,
        theta_scheme=_num(ex.get("theta_scheme", 0.5), "experiment.theta_scheme"),
        raw=dict(doc),
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc)
