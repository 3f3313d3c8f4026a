"""Numeric constants of the density-increment argument.

Two presets share one interface.  ``paper`` keeps every constant as an
exact monomial ``c * 2^e * delta^a * beta1^b * beta2^c`` so the ordering
relations the argument relies on can be verified in rational arithmetic.
``relaxed`` holds plain floats sized for desk-scale runs; only relaxed
profiles drive executable thresholds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .errors import InfeasibleProfile

PRESETS = ("paper", "relaxed")


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Monomial:
    """coef * 2^e2 * delta^a * beta1^b1 * beta2^b2 with rational exponents."""

    coef: Fraction = Fraction(1)
    e2: Fraction = Fraction(0)
    a: Fraction = Fraction(0)
    b1: Fraction = Fraction(0)
    b2: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("coef", "e2", "a", "b1", "b2"):
            object.__setattr__(self, name, _frac(getattr(self, name)))
        if self.coef <= 0:
            raise ValueError("coefficient must be positive")

    def __mul__(self, other):
        if not isinstance(other, Monomial):
            return replace(self, coef=self.coef * _frac(other))
        return Monomial(self.coef * other.coef, self.e2 + other.e2, self.a + other.a,
                        self.b1 + other.b1, self.b2 + other.b2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Monomial):
            return replace(self, coef=self.coef / _frac(other))
        return self * other ** -1

    def __pow__(self, p):
        p = _frac(p)
        if self.coef != 1 and p.denominator != 1:
            # keep coefficients rational: fold a power-of-two coefficient into e2
            num, den = self.coef.numerator, self.coef.denominator
            if num & (num - 1) or den & (den - 1):
                raise ValueError("fractional power of a non-dyadic coefficient")
            m = Monomial(1, self.e2 + num.bit_length() - den.bit_length(), self.a, self.b1, self.b2)
            return m ** p
        return Monomial(self.coef ** p.numerator if p.denominator == 1 else Fraction(1),
                        self.e2 * p, self.a * p, self.b1 * p, self.b2 * p)

    def log2(self, delta: float, beta1: float = 1.0, beta2: float = 1.0) -> float:
        return (math.log2(self.coef) + float(self.e2) + float(self.a) * math.log2(delta)
                + float(self.b1) * math.log2(beta1) + float(self.b2) * math.log2(beta2))

    def value(self, delta: float, beta1: float = 1.0, beta2: float = 1.0) -> float:
        """Float shadow; underflows to 0.0 for the tiny constants."""
        lg = self.log2(delta, beta1, beta2)
        return 0.0 if lg < -1074 else 2.0 ** lg

    def mantissa_exponent(self) -> tuple[Fraction, Fraction]:
        return self.coef, self.e2

    def to_json(self) -> dict:
        return {k: str(getattr(self, k)) for k in ("coef", "e2", "a", "b1", "b2")}

    def __str__(self) -> str:
        parts = [] if self.coef == 1 else [str(self.coef)]
        if self.e2:
            parts.append(f"2^{self.e2}")
        for sym, ex in (("delta", self.a), ("beta1", self.b1), ("beta2", self.b2)):
            if ex:
                parts.append(sym if ex == 1 else f"{sym}^{ex}")
        return "*".join(parts) or "1"


def _dyadic_at_most_one(coef: Fraction, e2: Fraction, strict: bool) -> bool:
    """coef * 2^e2 <= 1 (or < 1), exactly, for rational e2 = p/q."""
    p, q = e2.numerator, e2.denominator
    lhs = coef ** q * Fraction(2) ** p
    return lhs < 1 if strict else lhs <= 1


def dominated(m1: Monomial, m2: Monomial, strict: bool = False) -> bool:
    """m1 <= m2 (or <) for every delta, beta1, beta2 in (0, 1].

    The ratio m1/m2 is a monomial; it is bounded by its value at 1 iff all
    exponents are nonnegative, and that value is coef * 2^e2.
    """
    r = m1 / m2
    if r.a < 0 or r.b1 < 0 or r.b2 < 0:
        return False
    return _dyadic_at_most_one(r.coef, r.e2, strict)


@dataclass(frozen=True)
class Relation:
    name: str
    lhs: Monomial
    rhs: Monomial
    strict: bool = False

    @property
    def holds(self) -> bool:
        return dominated(self.lhs, self.rhs, self.strict)

    def to_json(self) -> dict:
        return {"name": self.name, "lhs": str(self.lhs), "rhs": str(self.rhs),
                "strict": self.strict, "holds": self.holds}


def _m(e2=0, a=0, b1=0, b2=0, coef=1) -> Monomial:
    return Monomial(coef, e2, a, b1, b2)


# displayed constants as monomials in (delta, beta1, beta2)
ALPHA0 = _m(-2000, 96, 48, 48)
ALPHA = _m(-100, 12)
ALPHA1 = _m(-7, 1)
ETA = _m(-100) * ALPHA ** 3
GAIN_THEOREM = _m(-500, 37)
GAIN_STEP = _m(-600, 37)
STEP_BUDGET = _m(700, -36)
BETA_RATIO = _m(-1500, 100)
ALPHA0_COUNTING = _m(-50) * ALPHA ** 2 * _m(0, 0, 12, 12)


def paper_relations() -> list[Relation]:
    """Every ordering relation between displayed constants the argument uses."""
    a0, a, a1, eta = ALPHA0, ALPHA, ALPHA1, ETA
    b = _m(0, 0, 1, 1)
    rels = [
        Relation("32 alpha0^(1/2) < alpha1", 32 * a0 ** Fraction(1, 2), a1, strict=True),
        Relation("alpha0^(1/4) <= alpha1 beta1 beta2", a0 ** Fraction(1, 4), a1 * b),
        Relation("16 alpha0^(1/4) <= alpha1", 16 * a0 ** Fraction(1, 4), a1),
        Relation("256 alpha0^(1/2) <= beta1^2 beta2^2 / 4", 256 * a0 ** Fraction(1, 2), b ** 2 / 4),
        Relation("16 alpha0^2 < eta beta1 beta2", 16 * a0 ** 2, eta * b, strict=True),
        Relation("eta <= 2^-50 alpha^2", eta, _m(-50) * a ** 2),
        Relation("2^10 alpha^(1/4) <= 2^-8 delta^3", _m(10) * a ** Fraction(1, 4), _m(-8, 3)),
        Relation("4 alpha0^(1/2) <= 2^-4 alpha1 eta beta1 beta2",
                 4 * a0 ** Fraction(1, 2), _m(-4) * a1 * eta * b),
        Relation("alpha0 <= counting-theorem alpha0", a0, ALPHA0_COUNTING),
        Relation("gain <= slice branch 2^-6 alpha1 eta", GAIN_THEOREM, _m(-6) * a1 * eta),
        Relation("gain <= triple branch eta / 32", GAIN_THEOREM, eta / 32),
        Relation("gain <= surplus branch 2^6 eta / alpha", GAIN_THEOREM, _m(6) * eta / a),
        Relation("gain <= fallback branch 2^-40 alpha^2", GAIN_THEOREM, _m(-40) * a ** 2),
        Relation("step gain <= theorem gain", GAIN_STEP, GAIN_THEOREM),
        Relation("fallback size 2^-25 alpha >= 2^-125 delta^12", _m(-125, 12), _m(-25) * a),
    ]
    return rels


# relaxed desk-scale values; names mirror the "paper" preset
RELAXED = {
    "alpha0": 1e-6,
    "alpha": 0.02,
    "alpha1": 0.25,
    "eta": 0.02,
    # attendant scales: eps for the increment hosts, eps_prime for uniformity tests
    "eps": 0.25,
    "eps_prime": 0.05,
    # sigma^2 must exceed the edge variance of an interval, about eps_prime / 12
    "sigma": 0.08,
    "tau": 0.9,
    "kappa": 0.1,
    "min_bohr": 5,
    "gain": 0.01,
    "step_budget": 100,
    "beta_floor": 1e-3,
    "delta_floor": 1e-3,
    "variance_relax": 0.9,
    "green_budget": 20000,
}


@dataclass(frozen=True)
class ConstantsProfile:
    """Named constants with a preset tag.

    For ``paper`` the monomials are bound to (delta, beta1, beta2) only when a
    float shadow is requested; for ``relaxed`` the floats are used directly.
    """

    preset: str = "relaxed"
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")

    @classmethod
    def relaxed(cls, **overrides) -> "ConstantsProfile":
        unknown = set(overrides) - set(RELAXED)
        if unknown:
            raise KeyError(f"unknown constants: {sorted(unknown)}")
        vals = dict(RELAXED)
        vals.update({k: type(RELAXED[k])(v) for k, v in overrides.items()})
        return cls("relaxed", vals)

    @classmethod
    def paper(cls) -> "ConstantsProfile":
        return cls("paper", {
            "alpha0": ALPHA0, "alpha": ALPHA, "alpha1": ALPHA1, "eta": ETA,
            "gain": GAIN_STEP, "gain_theorem": GAIN_THEOREM, "step_budget": STEP_BUDGET,
            "beta_ratio": BETA_RATIO,
        })

    @classmethod
    def named(cls, name: str, **overrides) -> "ConstantsProfile":
        if name in ("paper", "paper_faithful"):
            if overrides:
                raise KeyError("the 'paper' preset takes no overrides")
            return cls.paper()
        if name == "relaxed":
            return cls.relaxed(**overrides)
        raise KeyError(f"unknown profile {name!r}")

    @property
    def executable(self) -> bool:
        return self.preset == "relaxed"

    def require_executable(self, what: str = "this operation"):
        if not self.executable:
            raise InfeasibleProfile(
                f"{what} needs Bohr radii far beyond machine range under the 'paper' preset; "
                "use the relaxed profile")

    def __getitem__(self, name: str):
        return self.values[name]

    def get(self, name: str, delta: float = 1.0, beta1: float = 1.0, beta2: float = 1.0) -> float:
        v = self.values[name]
        if isinstance(v, Monomial):
            return v.value(delta, beta1, beta2)
        return float(v)

    def relations(self, beta1: float = 1.0, beta2: float = 1.0) -> list[Relation] | list[tuple]:
        """Exact relations (paper) or their float analogs at the given betas (relaxed)."""
        if self.preset == "paper":
            return paper_relations()
        v = self.values
        return [
            ("32 alpha0^(1/2) < alpha1", 32 * v["alpha0"] ** 0.5, v["alpha1"],
             32 * v["alpha0"] ** 0.5 < v["alpha1"]),
            ("alpha0^(1/4) <= alpha1 beta1 beta2", v["alpha0"] ** 0.25, v["alpha1"] * beta1 * beta2,
             v["alpha0"] ** 0.25 <= v["alpha1"] * beta1 * beta2),
            ("sigma <= tau beta1 beta2 / 10", v["sigma"], v["tau"] * beta1 * beta2 / 10,
             v["sigma"] <= v["tau"] * beta1 * beta2 / 10),
            ("16 alpha0^2 < eta beta1 beta2", 16 * v["alpha0"] ** 2, v["eta"] * beta1 * beta2,
             16 * v["alpha0"] ** 2 < v["eta"] * beta1 * beta2),
        ]

    def to_json(self) -> dict:
        out = {}
        for k, v in sorted(self.values.items()):
            if isinstance(v, Monomial):
                out[k] = {"monomial": v.to_json(), "text": str(v)}
            else:
                m, e = math.frexp(float(v))
                out[k] = {"mantissa": m, "exponent": e, "value": v}
        return {"preset": self.preset, "constants": out}
