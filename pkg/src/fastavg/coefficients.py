"""Closed family of coefficient fields ``f(t, x, u)``, ``g(t, x, u)``,
``sigma(t, x)`` and the hypothesis checks run before a simulation.

Families (JSON ``family`` key and parameters):

``constant``     ``value``                       -> c
``affine``       ``c0``, ``c1``                  -> c0 + c1 u
``relaxation``   ``rate``, ``target``            -> rate (target - u)
``space``        ``c0``, ``c1``, ``omega``       -> c0 + c1 sin(omega x)
``time``         ``kappa``, ``omega``            -> 1 + kappa sin(omega t)
``product``      ``factors`` (list of the above) -> product of the factors
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

__all__ = [
    "ScalarField",
    "HypothesisError",
    "ValidationReport",
    "check_hypotheses",
    "validate",
    "zero",
    "constant",
]

_PARAMS = {
    "constant": ("value",),
    "affine": ("c0", "c1"),
    "relaxation": ("rate", "target"),
    "space": ("c0", "c1", "omega"),
    "time": ("kappa", "omega"),
    "product": ("factors",),
}


class HypothesisError(ValueError):
    """A model violates one of the standing hypotheses."""

    def __init__(self, hypothesis: str, message: str):
        super().__init__(f"{hypothesis}: {message}")
        self.hypothesis = hypothesis
        self.detail = message


@dataclass(frozen=True)
class ScalarField:
    family: str
    params: Tuple[Tuple[str, float], ...] = ()
    factors: Tuple["ScalarField", ...] = ()

    def __post_init__(self):
        if self.family not in _PARAMS:
            raise ValueError(f"unknown coefficient family {self.family!r}")
        if self.family == "product":
            if not self.factors:
                raise ValueError("product needs at least one factor")
        else:
            got = {k for k, _ in self.params}
            need = set(_PARAMS[self.family])
            if got != need:
                raise ValueError(f"family {self.family!r} takes {sorted(need)}, got {sorted(got)}")

    # -- construction ------------------------------------------------------

    @classmethod
    def make(cls, family: str, **params) -> "ScalarField":
        if family == "product":
            return cls("product", (), tuple(params["factors"]))
        return cls(family, tuple(sorted((k, float(v)) for k, v in params.items())))

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScalarField":
        d = dict(d)
        family = d.pop("family", None)
        if family not in _PARAMS:
            raise ValueError(f"unknown coefficient family {family!r}")
        extra = set(d) - set(_PARAMS[family])
        if extra:
            raise ValueError(f"unknown keys for family {family!r}: {sorted(extra)}")
        if family == "product":
            return cls("product", (), tuple(cls.from_dict(f) for f in d["factors"]))
        missing = set(_PARAMS[family]) - set(d)
        if missing:
            raise ValueError(f"missing keys for family {family!r}: {sorted(missing)}")
        return cls.make(family, **d)

    def to_dict(self) -> dict:
        if self.family == "product":
            return {"family": "product", "factors": [f.to_dict() for f in self.factors]}
        return {"family": self.family, **dict(self.params)}

    def p(self, name: str) -> float:
        return dict(self.params)[name]

    # -- evaluation --------------------------------------------------------

    def eval(self, t, x, u):
        t, x, u = (np.asarray(v, dtype=float) for v in (t, x, u))
        shape = np.broadcast_shapes(t.shape, x.shape, u.shape)
        fam = self.family
        if fam == "constant":
            out = self.p("value")
        elif fam == "affine":
            out = self.p("c0") + self.p("c1") * u
        elif fam == "relaxation":
            out = self.p("rate") * (self.p("target") - u)
        elif fam == "space":
            out = self.p("c0") + self.p("c1") * np.sin(self.p("omega") * x)
        elif fam == "time":
            out = 1.0 + self.p("kappa") * np.sin(self.p("omega") * t)
        else:
            out = 1.0
            for fac in self.factors:
                out = out * fac.eval(t, x, u)
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def eval_du(self, t, x, u):
        """Partial derivative in ``u``."""
        t, x, u = (np.asarray(v, dtype=float) for v in (t, x, u))
        shape = np.broadcast_shapes(t.shape, x.shape, u.shape)
        fam = self.family
        if fam == "affine":
            out = self.p("c1")
        elif fam == "relaxation":
            out = -self.p("rate")
        elif fam in ("constant", "space", "time"):
            out = 0.0
        else:
            vals = [f.eval(t, x, u) for f in self.factors]
            ders = [f.eval_du(t, x, u) for f in self.factors]
            out = 0.0
            for i, d in enumerate(ders):
                term = d
                for j, v in enumerate(vals):
                    if j != i:
                        term = term * v
                out = out + term
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    __call__ = eval

    # -- structure ---------------------------------------------------------

    @property
    def depends_on_u(self) -> bool:
        if self.family == "product":
            return any(f.depends_on_u for f in self.factors)
        return self.family in ("affine", "relaxation") and self._u_slope() != 0.0

    @property
    def depends_on_x(self) -> bool:
        if self.family == "product":
            return any(f.depends_on_x for f in self.factors)
        return self.family == "space" and self.p("c1") != 0.0

    @property
    def depends_on_t(self) -> bool:
        if self.family == "product":
            return any(f.depends_on_t for f in self.factors)
        return self.family == "time" and self.p("kappa") != 0.0

    @property
    def is_zero(self) -> bool:
        if self.family == "product":
            return any(f.is_zero for f in self.factors)
        if self.family == "constant":
            return self.p("value") == 0.0
        if self.family == "affine":
            return self.p("c0") == 0.0 and self.p("c1") == 0.0
        if self.family == "relaxation":
            return self.p("rate") == 0.0
        if self.family == "space":
            return self.p("c0") == 0.0 and self.p("c1") == 0.0
        return False

    def _u_slope(self) -> float:
        if self.family == "affine":
            return self.p("c1")
        if self.family == "relaxation":
            return -self.p("rate")
        return 0.0

    def _n_u_factors(self) -> int:
        if self.family == "product":
            return sum(f._n_u_factors() for f in self.factors)
        return int(self.depends_on_u)

    def sup_abs(self) -> float:
        """Supremum of ``|value|`` over ``(t, x)``; infinite when ``u``-dependent."""
        if self.depends_on_u:
            return np.inf
        fam = self.family
        if fam == "constant":
            return abs(self.p("value"))
        if fam in ("affine", "relaxation"):
            return abs(self.eval(0.0, 0.0, 0.0).item())
        if fam == "space":
            return abs(self.p("c0")) + abs(self.p("c1"))
        if fam == "time":
            return 1.0 + abs(self.p("kappa"))
        return float(np.prod([f.sup_abs() for f in self.factors]))

    def lipschitz_u(self) -> float:
        """Global Lipschitz constant in ``u`` (infinite if superlinear)."""
        if self._n_u_factors() > 1:
            return np.inf
        if self.family != "product":
            return abs(self._u_slope())
        total = 1.0
        for f in self.factors:
            total *= f.lipschitz_u() if f.depends_on_u else f.sup_abs()
        return total if self.depends_on_u else 0.0

    def lipschitz_du(self) -> float:
        """Lipschitz constant of ``d/du``; zero for every family linear in ``u``."""
        if self._n_u_factors() > 1:
            return np.inf
        return 0.0

    def holder_t(self) -> Tuple[float, float]:
        """(exponent, seminorm bound) of ``t -> value`` for ``u``-independent fields.

        All families are smooth in ``t``; the exponent reported is 1.
        """
        if self.family == "time":
            return 1.0, abs(self.p("kappa") * self.p("omega"))
        if self.family == "product":
            const = 0.0
            sups = [f.sup_abs() for f in self.factors]
            for i, f in enumerate(self.factors):
                rest = float(np.prod([s for j, s in enumerate(sups) if j != i]))
                const += f.holder_t()[1] * rest
            return 1.0, const
        return 1.0, 0.0

    def affine_parts(self, t: float) -> Optional[Tuple[float, float]]:
        """``(c0, c1)`` with value ``c0 + c1 u`` when the field does not vary in ``x``."""
        if self.depends_on_x or self._n_u_factors() > 1:
            return None
        c0 = self.eval(t, 0.0, 0.0).item()
        c1 = self.eval_du(t, 0.0, 0.0).item()
        return c0, c1


def zero() -> ScalarField:
    return ScalarField.make("constant", value=0.0)


def constant(value: float) -> ScalarField:
    return ScalarField.make("constant", value=value)


@dataclass
class ValidationReport:
    purpose: str
    checks: List[Tuple[str, bool, str]] = field(default_factory=list)
    lipschitz: Dict[str, float] = field(default_factory=dict)
    holder: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    @property
    def failures(self) -> List[Tuple[str, str]]:
        return [(h, msg) for h, ok, msg in self.checks if not ok]


def check_hypotheses(f: ScalarField, g: ScalarField, sigma: ScalarField, purpose: str = "simulate") -> ValidationReport:
    """Evaluate H2 (and H4 for ``purpose="fluctuate"``) without raising."""
    if purpose not in ("simulate", "fluctuate"):
        raise ValueError(f"unknown purpose {purpose!r}")
    rep = ValidationReport(purpose)
    Lf, Lg = f.lipschitz_u(), g.lipschitz_u()
    rep.lipschitz = {"f": Lf, "g": Lg}
    rep.checks.append(("H2", np.isfinite(Lf), "f Lipschitz in u" if np.isfinite(Lf)
                       else "f is a product of several u-dependent factors (not Lipschitz)"))
    rep.checks.append(("H2", np.isfinite(Lg), "g Lipschitz in u" if np.isfinite(Lg)
                       else "g is a product of several u-dependent factors (not Lipschitz)"))
    rep.checks.append(("H2", not sigma.depends_on_u,
                       "sigma bounded, independent of u" if not sigma.depends_on_u
                       else "sigma must be a function of (t, x) only"))
    if purpose == "fluctuate":
        Ldf = f.lipschitz_du()
        rep.lipschitz["df/du"] = Ldf
        rep.checks.append(("H4(1)", np.isfinite(Ldf), "f is C^1 with Lipschitz derivative" if np.isfinite(Ldf)
                           else "df/du is not Lipschitz"))
        rep.checks.append(("H4(2)", not g.depends_on_u,
                           "g does not depend on u" if not g.depends_on_u
                           else "g must not depend on the third variable (additive noise)"))
        for name, fld in (("g", g), ("sigma", sigma)):
            if not fld.depends_on_u:
                rep.holder[name] = fld.holder_t()
        rep.checks.append(("H4(3)", True, "g and sigma are smooth in t"))
    return rep


def validate(f: ScalarField, g: ScalarField, sigma: ScalarField, purpose: str = "simulate") -> ValidationReport:
    """Like :func:`check_hypotheses` but raise :class:`HypothesisError` on the first failure."""
    rep = check_hypotheses(f, g, sigma, purpose)
    for hyp, msg in rep.failures:
        raise HypothesisError(hyp, msg)
    return rep
