"""Finite dynamical systems with two commuting maps: simultaneous-return
sets and their corner-free bound, recurrence constants and covering numbers."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import PreconditionViolated
from .grid import max_corner_free


@dataclass
class FiniteSystem:
    """Points 0..k-1 with a metric, two self-maps S, R and a probability measure."""

    metric: np.ndarray
    S: np.ndarray
    R: np.ndarray
    mu: np.ndarray | None = None
    commuting: bool = True
    tol: float = 1e-12

    def __post_init__(self):
        self.metric = np.asarray(self.metric, dtype=float)
        k = self.metric.shape[0]
        if self.metric.shape != (k, k):
            raise PreconditionViolated("metric must be square")
        self.S = np.asarray(self.S, dtype=np.int64)
        self.R = np.asarray(self.R, dtype=np.int64)
        for name, T in (("S", self.S), ("R", self.R)):
            if T.shape != (k,) or T.min(initial=0) < 0 or T.max(initial=0) >= k:
                raise PreconditionViolated(f"{name} is not a self-map of the {k} points")
        self.mu = np.full(k, 1 / k) if self.mu is None else np.asarray(self.mu, dtype=float)
        if self.mu.shape != (k,) or np.any(self.mu < 0) or abs(self.mu.sum() - 1) > 1e-9:
            raise PreconditionViolated("mu must be a probability vector on the points")
        D = self.metric
        if np.any(D < 0) or np.any(np.abs(D - D.T) > self.tol) or np.any(np.abs(np.diag(D)) > self.tol):
            raise PreconditionViolated("metric must be symmetric, nonnegative, zero on the diagonal")
        # d(x, z) <= d(x, y) + d(y, z) for all triples
        if np.any(D[:, None, :] > D[:, :, None] + D[None, :, :] + self.tol):
            raise PreconditionViolated("metric violates the triangle inequality")
        if self.commuting and not np.array_equal(self.S[self.R], self.R[self.S]):
            raise PreconditionViolated("S and R do not commute")

    @property
    def size(self) -> int:
        return len(self.mu)

    def preserves(self, T: np.ndarray) -> bool:
        """mu(T^-1 {y}) = mu({y}) for every point y."""
        push = np.bincount(T, weights=self.mu, minlength=self.size)
        return bool(np.all(np.abs(push - self.mu) <= 1e-9))

    def diameter(self) -> float:
        return float(self.metric.max()) if self.size else 0.0

    def to_json(self) -> dict:
        return {"points": self.size, "metric": self.metric.tolist(), "S": self.S.tolist(),
                "R": self.R.tolist(), "mu": self.mu.tolist()}

    @classmethod
    def from_json(cls, obj) -> "FiniteSystem":
        if isinstance(obj, str):
            obj = json.loads(obj)
        sys = cls(obj["metric"], obj["S"], obj["R"], obj.get("mu"))
        if sys.size != obj["points"]:
            raise PreconditionViolated("point count does not match the metric")
        return sys


def _circ(a: np.ndarray, m: int) -> np.ndarray:
    d = np.abs(a) % m
    return np.minimum(d, m - d)


def torus_system(m1: int, m2: int, a=(1, 0), b=(0, 1), mu=None) -> FiniteSystem:
    """Z_m1 x Z_m2 with translations S by a and R by b and the normalized sup torus metric.

    Point (x, y) has index x * m2 + y.
    """
    xs, ys = np.divmod(np.arange(m1 * m2), m2)
    dx = _circ(xs[:, None] - xs[None, :], m1) / max(m1 // 2, 1)
    dy = _circ(ys[:, None] - ys[None, :], m2) / max(m2 // 2, 1)
    metric = np.maximum(dx, dy)
    S = ((xs + a[0]) % m1) * m2 + (ys + a[1]) % m2
    R = ((xs + b[0]) % m1) * m2 + (ys + b[1]) % m2
    return FiniteSystem(metric, S, R, mu)


def random_translation_system(seed: int, max_side: int = 12) -> FiniteSystem:
    """Seeded commuting-translation system on a random torus with random steps."""
    rng = np.random.default_rng(seed)
    m1, m2 = (int(v) for v in rng.integers(2, max_side + 1, 2))
    a = tuple(int(v) for v in rng.integers(0, (m1, m2)))
    b = tuple(int(v) for v in rng.integers(0, (m1, m2)))
    return torus_system(m1, m2, a, b)


# ---------------------------------------------------------------------------
# simultaneous returns


@lru_cache(maxsize=None)
def exact_L(t: int) -> Fraction | None:
    """Largest corner-free density in [1, t]^2 (d > 0 corners) for t <= 4, else None."""
    if t < 1:
        raise PreconditionViolated("t must be at least 1")
    if t > 4:
        return None
    return max_corner_free(t, "positive_d").L


def _orbit_powers(T: np.ndarray, t: int) -> np.ndarray:
    """Rows i = 1..t: T^i as index arrays."""
    out = np.empty((t, len(T)), dtype=np.int64)
    cur = np.arange(len(T))
    for i in range(t):
        cur = T[cur]
        out[i] = cur
    return out


@dataclass
class ReturnReport:
    Yt: tuple
    mu_Yt: float
    bound: Fraction | float
    bound_source: str
    verdict: bool
    t: int
    checks: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.Yt, self.mu_Yt, self.bound, self.verdict))

    def to_json(self) -> dict:
        return {"Yt": list(self.Yt), "mu_Yt": self.mu_Yt, "bound": str(self.bound),
                "bound_source": self.bound_source, "verdict": self.verdict, "t": self.t,
                "checks": self.checks}


def _check_maps(sys: FiniteSystem):
    if not np.array_equal(sys.S[sys.R], sys.R[sys.S]):
        raise PreconditionViolated("S and R do not commute")
    if not (sys.preserves(sys.S) and sys.preserves(sys.R)):
        raise PreconditionViolated("S or R does not preserve the measure")


def return_mask(sys: FiniteSystem, Y, t: int) -> np.ndarray:
    """x in Y such that for every i in [1, t], S^i x or R^i x lies outside Y."""
    y = np.zeros(sys.size, dtype=bool)
    y[np.asarray(list(Y), dtype=np.int64)] = True
    Sp = _orbit_powers(sys.S, t)
    Rp = _orbit_powers(sys.R, t)
    both = y[Sp] & y[Rp]
    return y & ~both.any(axis=0)


def simultaneous_return_set(sys: FiniteSystem, Y, t: int, stored_bounds: dict | None = None) -> ReturnReport:
    """Y(t), its measure, and the corner-free bound L(t).

    L(t) is exact for t <= 4; otherwise the entry of ``stored_bounds`` for t
    is used, or the trivial bound 1.  When S = R the Poincare bound 1/t is
    reported as well.
    """
    if t < 1:
        raise PreconditionViolated("t must be at least 1")
    _check_maps(sys)
    m = return_mask(sys, Y, t)
    if t > 1 and np.any(m & ~return_mask(sys, Y, t - 1)):
        raise AssertionError("Y(t) is not inside Y(t - 1)")
    mu_yt = float(sys.mu[m].sum())
    L = exact_L(t)
    if L is not None:
        bound, source = L, "exact"
    elif stored_bounds and t in stored_bounds:
        bound, source = stored_bounds[t], "stored"
    else:
        bound, source = Fraction(1), "trivial"
    checks = {"corner_bound": mu_yt <= float(bound) + 1e-12}
    if np.array_equal(sys.S, sys.R):
        checks["poincare_bound"] = mu_yt <= 1 / t + 1e-12
    return ReturnReport(tuple(int(i) for i in np.flatnonzero(m)), mu_yt, bound, source,
                        all(checks.values()), t, checks)


# ---------------------------------------------------------------------------
# recurrence constants and covering numbers


@dataclass
class RecurrenceConstants:
    single: np.ndarray
    simultaneous: np.ndarray

    def to_json(self) -> dict:
        return {"single": self.single.tolist(), "simultaneous": self.simultaneous.tolist()}


def recurrence_constants(sys: FiniteSystem, N: int, single_map=None) -> RecurrenceConstants:
    """C_N(x) = min_n d(T^n x, x) (T = single_map, default S) and
    C_N^{S,R}(x) = min_n max(d(S^n x, x), d(R^n x, x)), n = 1..N."""
    if N < 1:
        raise PreconditionViolated("N must be at least 1")
    T = sys.S if single_map is None else np.asarray(single_map, dtype=np.int64)
    x = np.arange(sys.size)
    D = sys.metric
    Tp = _orbit_powers(T, N)
    Sp = _orbit_powers(sys.S, N)
    Rp = _orbit_powers(sys.R, N)
    single = D[Tp, x[None, :]].min(axis=0)
    simul = np.maximum(D[Sp, x[None, :]], D[Rp, x[None, :]]).min(axis=0)
    return RecurrenceConstants(single, simul)


@dataclass
class CoverResult:
    size: int
    centers: tuple
    exact: bool

    def to_json(self) -> dict:
        return {"size": self.size, "centers": list(self.centers), "exact": self.exact}


def covering_number(G, sys: FiniteSystem, eps: float, exact_limit: int = 20) -> CoverResult:
    """Smallest set of centers in X within distance eps (closed balls) of every point of G.

    Exhaustive over center sets of increasing size when |X| <= exact_limit,
    otherwise greedy (an upper bound, flagged exact=False).
    """
    if eps <= 0:
        raise PreconditionViolated("eps must be positive")
    G = sorted(set(int(g) for g in G))
    if not G:
        return CoverResult(0, (), True)
    covers = [sum(1 << j for j, g in enumerate(G) if sys.metric[c, g] <= eps) for c in range(sys.size)]
    full = (1 << len(G)) - 1
    if sys.size <= exact_limit:
        useful = [c for c in range(sys.size) if covers[c]]
        for r in range(1, len(G) + 1):
            for combo in itertools.combinations(useful, r):
                acc = 0
                for c in combo:
                    acc |= covers[c]
                if acc == full:
                    return CoverResult(r, combo, True)
    chosen, acc = [], 0
    while acc != full:
        c = max(range(sys.size), key=lambda c: (bin(covers[c] & ~acc).count("1"), -c))
        chosen.append(c)
        acc |= covers[c]
    return CoverResult(len(chosen), tuple(chosen), False)
