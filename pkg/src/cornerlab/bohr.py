"""Bohr sets {|n| <= N, ||n theta_j|| < eps} and their local averaging lemmas.

Frequencies given as ``Fraction`` are handled in exact integer arithmetic.
Float frequencies use float distances; elements whose distance lies within
``GUARD`` of the threshold are re-decided exactly from the float's binary
value and reported in ``BohrSet.flagged``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import NotFound, PreconditionViolated
from .sets import GridSet, GridWindow, IntSet, SuppFn

GUARD = 1e-12
PROBES = 33
EPS_GRID = 64


def _as_theta(t):
    if isinstance(t, Fraction):
        return t
    if isinstance(t, str):
        return Fraction(t)
    return float(t)


@dataclass(frozen=True)
class BohrSpec:
    theta: tuple
    eps: float
    N: int
    offset: int = 0

    def __post_init__(self):
        th = tuple(_as_theta(t) for t in self.theta)
        object.__setattr__(self, "theta", th)
        if not (0 < self.eps <= 1):
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if int(self.N) != self.N or self.N < 0:
            raise ValueError("N must be a nonnegative integer")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "offset", int(self.offset))
        for t in th:
            if not (0 <= t < 1):
                raise ValueError(f"theta component {t} outside [0, 1)")

    @property
    def dim(self) -> int:
        return len(self.theta)

    def shifted(self, n: int) -> "BohrSpec":
        return BohrSpec(self.theta, self.eps, self.N, self.offset + n)

    def to_json(self) -> dict:
        th = [str(t) if isinstance(t, Fraction) else t for t in self.theta]
        return {"theta": th, "eps": float(self.eps), "N": self.N, "offset": self.offset}

    @classmethod
    def from_json(cls, obj) -> "BohrSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(tuple(obj.get("theta", [])), obj["eps"], obj["N"], obj.get("offset", 0))


def dim_factor(d: int) -> int:
    """Denominator 100 d of the attendant scale; d = 0 is treated as d = 1."""
    return 100 * max(d, 1)


def _dist_float(theta, n: np.ndarray) -> np.ndarray:
    """max_j ||n theta_j|| as floats (zeros when d = 0)."""
    D = np.zeros(n.shape, dtype=float)
    for t in theta:
        if isinstance(t, Fraction) and t.denominator < 2**31 and (n.size == 0 or np.abs(n).max() < 2**31):
            p, q = t.numerator, t.denominator
            r = (n * p) % q
            dj = np.minimum(r, q - r) / q
        else:
            x = n * float(t)
            dj = np.abs(x - np.rint(x))
        D = np.maximum(D, dj)
    return D


def exact_norm(n: int, t) -> Fraction:
    """||n t|| in exact rational arithmetic (floats are read as their binary value)."""
    r = (n * Fraction(t)) % 1
    return min(r, 1 - r)


def is_member(spec: BohrSpec, n: int) -> bool:
    m = n - spec.offset
    if abs(m) > spec.N:
        return False
    e = Fraction(spec.eps)
    return all(exact_norm(m, t) < e for t in spec.theta)


@dataclass(frozen=True, eq=False)
class BohrSet:
    spec: BohrSpec
    elements: np.ndarray
    flagged: tuple = ()

    def __len__(self):
        return len(self.elements)

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def lo(self) -> int:
        return self.spec.offset - self.spec.N

    @property
    def hi(self) -> int:
        return self.spec.offset + self.spec.N

    def __contains__(self, n) -> bool:
        i = np.searchsorted(self.elements, n)
        return bool(i < len(self.elements) and self.elements[i] == n)

    def mask_on(self, lo: int, hi: int) -> np.ndarray:
        out = np.zeros(hi - lo + 1, dtype=bool)
        e = self.elements[(self.elements >= lo) & (self.elements <= hi)]
        out[e - lo] = True
        return out

    def intset(self) -> IntSet:
        return IntSet(tuple(int(v) for v in self.elements), self.lo, self.hi)

    def indicator(self) -> SuppFn:
        return SuppFn(self.lo, self.mask_on(self.lo, self.hi).astype(complex))

    def translate(self, n: int) -> "BohrSet":
        return BohrSet(self.spec.shifted(n), self.elements + n, tuple(f + n for f in self.flagged))

    def square(self, x: tuple[int, int] = (0, 0)) -> GridSet:
        """(Lambda + x1) x (Lambda + x2) as a GridSet."""
        win = GridWindow(self.lo + x[0], self.hi + x[0], self.lo + x[1], self.hi + x[1])
        m = self.mask_on(self.lo, self.hi)
        return GridSet(win, np.outer(m, m))


def build_bohr(spec: BohrSpec) -> BohrSet:
    n = np.arange(-spec.N, spec.N + 1, dtype=np.int64)
    D = _dist_float(spec.theta, n)
    keep = D < spec.eps
    near = np.abs(D - spec.eps) <= 1e-9
    flagged = []
    exact_input = all(isinstance(t, Fraction) for t in spec.theta)
    for i in np.flatnonzero(near):
        m = int(n[i])
        keep[i] = is_member(BohrSpec(spec.theta, spec.eps, spec.N), m)
        if not exact_input and abs(D[i] - spec.eps) <= GUARD:
            flagged.append(m + spec.offset)
    el = n[keep] + spec.offset
    el.setflags(write=False)
    return BohrSet(spec, el, tuple(flagged))


def bohr(theta: Sequence = (), eps: float = 1.0, N: int = 1, offset: int = 0) -> BohrSet:
    return build_bohr(BohrSpec(tuple(theta), eps, N, offset))


def size_bound_check(b: BohrSet) -> tuple[bool, int, float]:
    """|Lambda| >= eps^d N / 2 for untranslated Bohr sets."""
    if b.spec.offset != 0:
        raise PreconditionViolated("size bound is stated for offset 0")
    rhs = 0.5 * b.spec.eps ** b.dim * b.spec.N
    return len(b) >= rhs, len(b), rhs


# ---------------------------------------------------------------------------
# regularity


@dataclass
class RegularityReport:
    kappa: float
    eps: float
    N: int
    size: int
    probes: list = field(default_factory=list)
    extremes: tuple = ()
    verdict: bool = False
    resolution: int = PROBES

    def to_json(self) -> dict:
        return {"kappa": self.kappa, "eps": self.eps, "N": self.N, "size": self.size,
                "resolution": self.resolution, "extremes": list(self.extremes),
                "verdict": self.verdict, "n_probes": len(self.probes)}


class _SizeTable:
    """Sizes of Lambda_{theta, e, M} for many (e, M) from one distance table."""

    def __init__(self, theta, n_max: int):
        self.theta = theta
        self.n = np.arange(0, n_max + 1, dtype=np.int64)
        self.D = _dist_float(theta, self.n)
        self.n_max = n_max

    def counts(self, e: float, strict: bool = True) -> np.ndarray:
        """cum[M] = |{|n| <= M : D(n) < e}| (or <= e when not strict)."""
        ok = self.D < e if strict else self.D <= e
        c = np.cumsum(ok.astype(np.int64)) * 2 - int(ok[0])
        return c

    def size(self, e: float, M: int, strict: bool = True) -> int:
        if M < 0:
            return 0
        M = min(M, self.n_max)
        ok = self.D[:M + 1] < e if strict else self.D[:M + 1] <= e
        return int(2 * ok.sum() - ok[0])


def _window(eps: float, N: int, kappa: float, d: int):
    """Extremes of the regularity window; N' ranges over integers, eps' over reals."""
    c = kappa / dim_factor(d)
    e_hi = eps * (1 + c)
    e_lo = eps * (1 - c)
    N_hi = max(math.ceil(N * (1 + c)) - 1, N)
    N_lo = min(math.floor(N * (1 - c)) + 1, N)
    return c, e_lo, e_hi, N_lo, N_hi


def probe_regularity(theta, eps: float, N: int, kappa: float, table: _SizeTable | None = None,
                     resolution: int = PROBES) -> RegularityReport:
    """Regularity test over the (eps', N') window, N' integral.

    The verdict uses the window extremes: sizes are monotone in both
    parameters, so the largest size is the strict-threshold count at
    eps(1+c), N'max and the smallest the closed-threshold count at eps(1-c),
    N'min.  A probe grid of up to ``resolution`` x ``resolution`` points is
    recorded as well.
    """
    d = len(theta)
    c, e_lo, e_hi, N_lo, N_hi = _window(eps, N, kappa, d)
    if table is None or table.n_max < N_hi:
        table = _SizeTable(theta, N_hi)
    base = table.size(eps, N)
    rep = RegularityReport(kappa, eps, N, base, resolution=resolution)
    if base == 0:
        return rep
    big = table.size(e_hi, N_hi, strict=True)
    small = table.size(e_lo, N_lo, strict=False)
    rep.extremes = (small / base, big / base)
    ok = (1 - kappa) < small / base and big / base < (1 + kappa)
    ts = np.linspace(-1, 1, resolution) * (1 - 1e-9)
    Ms = sorted(set(np.linspace(N_lo, N_hi, resolution).round().astype(int).tolist()))
    for te in ts:
        e = eps * (1 + te * c)
        for M in Ms:
            r = table.size(e, M) / base
            rep.probes.append((float(e), M, r))
            ok = ok and (1 - kappa) < r < (1 + kappa)
    rep.verdict = bool(ok)
    return rep


def is_regular(spec: BohrSpec, kappa: float) -> bool:
    return probe_regularity(spec.theta, spec.eps, spec.N, kappa, resolution=3).verdict


def _eps_grid(lo: float, hi: float, count: int = EPS_GRID, closed: bool = False) -> list[float]:
    """Geometric grid from hi down to lo; open interval unless ``closed``."""
    if closed:
        return [hi * (lo / hi) ** (k / (count - 1)) for k in range(count)] if count > 1 else [hi]
    return [hi * (lo / hi) ** (k / (count + 1)) for k in range(1, count + 1)]


def _search(theta, eps_grid, N_range, kappa) -> tuple[float, int, RegularityReport]:
    d = len(theta)
    N_top = max(N_range) if len(N_range) else 0
    c = kappa / dim_factor(d)
    table = _SizeTable(theta, math.ceil(N_top * (1 + c)) + 1)
    cum_mid = {e: table.counts(e, True) for e in eps_grid}
    cum_hi = {e: table.counts(e * (1 + c), True) for e in eps_grid}
    cum_lo = {e: table.counts(e * (1 - c), False) for e in eps_grid}
    for M in N_range:
        _, _, _, M_lo, M_hi = _window(1.0, M, kappa, d)
        for e in eps_grid:
            base = cum_mid[e][M]
            if base == 0:
                continue
            if (1 - kappa) < cum_lo[e][M_lo] / base and cum_hi[e][M_hi] / base < (1 + kappa):
                rep = probe_regularity(theta, e, M, kappa, table)
                if rep.verdict:
                    return e, M, rep
    raise NotFound("no regular pair on the probe grid")


def find_regular(theta, eps: float, N: int, kappa: float) -> tuple[float, int, RegularityReport]:
    """Regular (eps1, N1) with eps/2 < eps1 < eps and N/2 < N1 < N.

    N1 is scanned downward from N - 1 and eps1 over a 64-point geometric grid,
    descending; the first pair passing the regularity test is returned.
    """
    if not (0 < kappa < 1):
        raise ValueError("kappa must lie in (0, 1)")
    theta = tuple(_as_theta(t) for t in theta)
    N_range = [M for M in range(N - 1, N // 2, -1) if 2 * M > N]
    return _search(theta, _eps_grid(eps / 2, eps), N_range, kappa)


def attendant(lam: BohrSet, eps_a: float, extra_thetas: Sequence = (), kappa: float = 0.1) -> BohrSet:
    """Regular Bohr set with frequencies theta ++ extra inside the attendant window.

    eps' in [eps_a eps0 / 2, eps_a eps0], N' in [eps_a N0 / 2, eps_a N0]; the
    result is untranslated (an attendant of Lambda + n is one of Lambda).
    """
    if not (0 < eps_a <= 1):
        raise ValueError("eps_a must lie in (0, 1]")
    spec = lam.spec
    theta = tuple(spec.theta) + tuple(_as_theta(t) for t in extra_thetas)
    e_hi = eps_a * spec.eps
    n_hi = math.floor(eps_a * spec.N + 1e-12)
    n_lo = math.ceil(eps_a * spec.N / 2 - 1e-12)
    n_lo = max(n_lo, 1)
    if n_hi < n_lo:
        raise NotFound(f"attendant window [{eps_a * spec.N / 2}, {eps_a * spec.N}] holds no positive integer")
    e, M, rep = _search(theta, _eps_grid(e_hi / 2, e_hi, EPS_GRID, closed=True),
                        list(range(n_hi, n_lo - 1, -1)), kappa)
    return build_bohr(BohrSpec(theta, e, M, 0))


def in_attendant_window(lam: BohrSpec, att: BohrSpec, eps_a: float, tol: float = 1e-12) -> bool:
    return (tuple(att.theta[:lam.dim]) == tuple(lam.theta)
            and eps_a * lam.eps / 2 - tol <= att.eps <= eps_a * lam.eps + tol
            and eps_a * lam.N / 2 - tol <= att.N <= eps_a * lam.N + tol)


# ---------------------------------------------------------------------------
# convolution lemmas


def convolve(f: SuppFn, g: SuppFn) -> SuppFn:
    """(f * g)(n) = sum_s f(s) conj(g(n - s))."""
    return SuppFn(f.offset + g.offset, np.convolve(f.values, np.conj(g.values)))


def _int_conv(a: BohrSet, b: BohrSet) -> tuple[int, np.ndarray]:
    ma = a.mask_on(a.lo, a.hi).astype(np.int64)
    mb = b.mask_on(b.lo, b.hi).astype(np.int64)
    return a.lo + b.lo, np.convolve(ma, mb)


@dataclass
class Check:
    ref: str
    lhs: float
    rhs: float
    ok: bool

    def to_json(self):
        return {"ref": self.ref, "lhs": self.lhs, "rhs": self.rhs, "ok": self.ok}


@dataclass
class Lemma27Profile:
    count_pos: int
    count_full: int
    l1_residual: float
    lam_plus: BohrSet
    lam_minus: BohrSet
    sumset_size: int
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


def lemma27_profile(lam: BohrSet, lam_att: BohrSet, kappa: float, strict: bool = True) -> Lemma27Profile:
    """Support, full-overlap and L1 statistics of Lambda * Lambda'.

    With ``strict`` the attendant must sit inside the kappa/(100 d) window;
    otherwise the statistics are computed and the window check is reported.
    """
    d = lam.dim
    c = kappa / dim_factor(d)
    in_window = (tuple(lam_att.spec.theta[:d]) == tuple(lam.spec.theta)
                 and lam_att.spec.eps <= c * lam.spec.eps + 1e-15
                 and lam_att.spec.N <= c * lam.spec.N + 1e-12)
    if strict and not in_window:
        raise PreconditionViolated("attendant parameters exceed the kappa/(100d) window")
    off, conv = _int_conv(lam, lam_att)
    size, size_att = len(lam), len(lam_att)
    count_pos = int(np.count_nonzero(conv > 0))
    count_full = int(np.count_nonzero(conv == size_att))
    lam_mask = np.zeros_like(conv)
    idx = lam.elements - off
    lam_mask[idx] = 1
    l1 = float(np.abs(conv / size_att - lam_mask).sum())
    sp = lam.spec
    plus = build_bohr(BohrSpec(sp.theta, min(1.0, sp.eps * (1 + c)), math.floor(sp.N * (1 + c)), sp.offset))
    minus = build_bohr(BohrSpec(sp.theta, sp.eps * (1 - c), math.floor(sp.N * (1 - c)), sp.offset))
    lam_set = set(lam.elements.tolist())
    plus_set = set(plus.elements.tolist())
    minus_set = set(minus.elements.tolist())
    minus_in_shifts = all(minus_set <= {v + int(s) for v in lam_set} for s in lam_att.elements)
    checks = [
        Check("bohr.attendant_window", float(lam_att.spec.N), c * lam.spec.N, in_window),
        Check("bohr.support_upper", count_pos, (1 + kappa) * size, count_pos <= (1 + kappa) * size),
        Check("bohr.full_overlap_lower", count_full, (1 - kappa) * size, count_full > (1 - kappa) * size),
        Check("bohr.l1_smoothing", l1, 2 * kappa * size, l1 < 2 * kappa * size),
        Check("bohr.nested_minus_plus", float(minus_set <= lam_set <= plus_set), 1.0, minus_set <= lam_set <= plus_set),
        Check("bohr.plus_size", len(plus), (1 + kappa) * size, len(plus) <= (1 + kappa) * size),
        Check("bohr.minus_size", len(minus), (1 - kappa) * size, len(minus) >= (1 - kappa) * size),
        Check("bohr.minus_in_translates", float(minus_in_shifts), 1.0, minus_in_shifts),
        Check("bohr.sumset_lower", count_pos, size, count_pos >= size),
        Check("bohr.sumset_upper", count_pos, (1 + 2 * kappa) * size, count_pos <= (1 + 2 * kappa) * size),
    ]
    return Lemma27Profile(count_pos, count_full, l1, plus, minus, count_pos, checks)


# ---------------------------------------------------------------------------
# local densities


def translate_counts_1d(mask: np.ndarray, lo: int, att: BohrSet, targets: np.ndarray) -> np.ndarray:
    """|E cap (att + n)| for each n in ``targets``; ``mask`` is E on [lo, lo + len - 1]."""
    out = np.zeros(len(targets), dtype=np.int64)
    hi = lo + len(mask) - 1
    for a in att.elements:
        pos = targets + int(a)
        ok = (pos >= lo) & (pos <= hi)
        out[ok] += mask[pos[ok] - lo]
    return out


def translate_counts_2d(mask: np.ndarray, win: GridWindow, att: BohrSet,
                        xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """C[i, j] = |E cap ((att + xs[i]) x (att + ys[j]))| with E given by ``mask`` on ``win``."""
    rows = np.zeros((len(xs), mask.shape[1]), dtype=np.int64)
    for a in att.elements:
        pos = xs + int(a)
        ok = (pos >= win.x_lo) & (pos <= win.x_hi)
        rows[ok] += mask[pos[ok] - win.x_lo]
    out = np.zeros((len(xs), len(ys)), dtype=np.int64)
    for b in att.elements:
        pos = ys + int(b)
        ok = (pos >= win.y_lo) & (pos <= win.y_hi)
        out[:, ok] += rows[:, pos[ok] - win.y_lo]
    return out


@dataclass
class LocalDensity:
    density: float
    avg_of_local: float
    residual: float


def local_density_residual(E, lam: BohrSet, lam_att: BohrSet, x=0) -> LocalDensity:
    """|density of E on Lambda + x - mean over n in Lambda + x of density on Lambda' + n|.

    Works on IntSet (x an integer) and GridSet (x a pair, squares of Bohr sets).
    """
    if isinstance(E, GridSet):
        x1, x2 = x
        xs = lam.elements + x1
        ys = lam.elements + x2
        m = E.mask
        inside = E.mask_on(GridWindow(lam.lo + x1, lam.hi + x1, lam.lo + x2, lam.hi + x2))
        lm = lam.mask_on(lam.lo, lam.hi)
        dens = (inside & np.outer(lm, lm)).sum() / len(lam) ** 2
        C = translate_counts_2d(m, E.window, lam_att, xs, ys)
        avg = C.sum() / len(lam_att) ** 2 / len(lam) ** 2
    else:
        xs = lam.elements + x
        m = E.mask if len(E.mask) else np.zeros(1, bool)
        dens = sum(1 for v in xs if v in E) / len(lam)
        C = translate_counts_1d(E.mask, E.lo, lam_att, xs)
        avg = C.sum() / len(lam_att) / len(lam)
    return LocalDensity(float(dens), float(avg), float(abs(dens - avg)))
