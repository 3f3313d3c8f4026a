"""Test-instance generators: progression-free sets, the corner-free sets they
induce, and random and product instances with their corner-count reports."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionViolated
from .grid import count_corners, full_grid_corner_count, is_corner_free
from .sets import GridSet, GridWindow, IntSet


# ---------------------------------------------------------------------------
# progression-free sets


def three_ap(values) -> tuple[int, int, int] | None:
    """A nontrivial progression (a, b, c), a < b < c, b - a = c - b, inside ``values``, or None."""
    v = np.unique(np.asarray(list(values), dtype=np.int64))
    if len(v) < 3:
        return None
    lo = int(v[0])
    mask = np.zeros(int(v[-1]) - lo + 1, dtype=bool)
    mask[v - lo] = True
    for i, a in enumerate(v[:-2]):
        c = v[i + 2:]
        s = a + c
        even = (s % 2) == 0
        mids = s[even] // 2
        hit = mask[mids - lo]
        if hit.any():
            j = int(np.flatnonzero(hit)[0])
            return int(a), int(mids[j]), int(c[even][j])
    return None


def digit_set(N: int) -> list[int]:
    """Integers in [0, N - 1] whose base-3 digits are all 0 or 1."""
    out = []
    k = 0
    while 3 ** k < N:
        k += 1
    for bits in range(2 ** max(k, 1)):
        v = 0
        p = 1
        b = bits
        while b:
            v += (b & 1) * p
            b >>= 1
            p *= 3
        if v < N:
            out.append(v)
    return sorted(set(out))


def _shell_candidates(N: int, k: int, b: int, limit: int):
    """Most populous norm shell among k-digit base-b numbers below N with digits <= (b-1)//2."""
    dmax = (b - 1) // 2
    if (dmax + 1) ** k > limit:
        return None
    digits = np.indices((dmax + 1,) * k).reshape(k, -1).T.astype(np.int64)
    vals = digits @ (b ** np.arange(k, dtype=np.int64))
    keep = vals < N
    vals, digits = vals[keep], digits[keep]
    if not len(vals):
        return None
    norms = (digits ** 2).sum(axis=1)
    shells, counts = np.unique(norms, return_counts=True)
    r = int(shells[int(np.argmax(counts))])
    return sorted(vals[norms == r].tolist()), r


def sphere_layer_set(N: int, max_dim: int | None = None, limit: int = 500_000) -> tuple[list[int], dict]:
    """Best norm shell over (dimension k, base b) with b^k >= N; ties go to smaller k."""
    best, info = [0] if N >= 1 else [], {"k": 1, "b": max(N, 1), "shell": 0}
    max_dim = max_dim or max(1, math.ceil(math.log2(max(N, 2))))
    for k in range(1, max_dim + 1):
        b0 = max(2, math.ceil(N ** (1 / k) - 1e-9))
        while b0 ** k < N:
            b0 += 1
        for b in range(b0, b0 + 3):
            got = _shell_candidates(N, k, b, limit)
            if got is not None and len(got[0]) > len(best):
                best, info = got[0], {"k": k, "b": b, "shell": got[1]}
    return best, info


def behrend_set(N: int) -> IntSet:
    """Progression-free subset of [0, N - 1]: the larger of the base-3 digit set and the best sphere shell."""
    if N < 1:
        raise PreconditionViolated("N must be at least 1")
    digits = digit_set(N)
    shell, _ = sphere_layer_set(N)
    best = shell if len(shell) > len(digits) else digits
    if N <= 100_000 and three_ap(best) is not None:
        raise AssertionError("generator produced a 3-term progression")
    return IntSet.from_iter(best, 0, N - 1)


# ---------------------------------------------------------------------------
# induced corner-free sets


def _diagonal_sizes(B: np.ndarray, N: int, cs: np.ndarray) -> np.ndarray:
    """|{(x, y) in [1, N]^2 : x - y in B - c}| for each c, exact."""
    diff = B[None, :] - cs[:, None]
    return np.clip(N - np.abs(diff), 0, None).sum(axis=1)


def corner_free_from_ap_free(B: IntSet, N: int) -> GridSet:
    """A = {(x, y) in [1, N]^2 : x - y in B - c}, c maximizing |A| (smallest c on ties).

    A corner with difference d at (k, m) puts k - m - d, k - m, k - m + d
    in B - c, so a progression-free B gives a corner-free A.
    """
    if three_ap(B.values) is not None:
        raise PreconditionViolated(f"B contains the progression {three_ap(B.values)}")
    win = GridWindow.square(1, N)
    if not len(B):
        return GridSet.empty(win)
    b = B.array()
    cs = np.arange(int(b.min()) - N + 1, int(b.max()) + N)
    sizes = _diagonal_sizes(b, N, cs)
    c = int(cs[int(np.argmax(sizes))])
    x = np.arange(1, N + 1)
    diff = x[:, None] - x[None, :]
    mask = np.isin(diff, b - c)
    A = GridSet(win, mask)
    if len(A) != int(sizes.max()):
        raise AssertionError("diagonal size formula disagrees with the mask")
    return A


# ---------------------------------------------------------------------------
# random and product instances


def random_grid_set(N: int, delta: float, seed: int) -> GridSet:
    """Each point of [1, N]^2 independently with probability delta."""
    if not 0 <= delta <= 1:
        raise PreconditionViolated("delta must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    win = GridWindow.square(1, N)
    return GridSet(win, rng.random(win.shape) < delta)


def random_int_set(N: int, beta: float, rng) -> IntSet:
    return IntSet.from_mask(rng.random(N) < beta, 1)


@dataclass
class CornerReport:
    N: int
    trials: int
    counts: list
    mean: float
    stderr: float
    expected: float
    z: float
    details: dict

    @property
    def within(self) -> bool:
        return self.within_k(5)

    def within_k(self, k: float) -> bool:
        if self.stderr == 0:
            return self.mean == self.expected
        return abs(self.z) <= k

    def to_json(self) -> dict:
        return {"N": self.N, "trials": self.trials, "mean": self.mean, "stderr": self.stderr,
                "expected": self.expected, "z": self.z, "within_5se": self.within,
                "details": self.details}


def _report(N, counts, expected, details) -> CornerReport:
    c = np.asarray(counts, dtype=float)
    mean = float(c.mean())
    se = float(c.std(ddof=1) / math.sqrt(len(c))) if len(c) > 1 else 0.0
    z = (mean - expected) / se if se > 0 else (0.0 if mean == expected else math.inf)
    return CornerReport(N, len(c), [int(v) for v in counts], mean, se, expected, z, details)


def expected_corner_report(N: int, delta: float, trials: int, seed: int = 0) -> CornerReport:
    """Mean exact corner count of random sets (seeds seed..seed+trials-1) against delta^3 T(N)."""
    counts = [count_corners(random_grid_set(N, delta, seed + i), "positive_d") for i in range(trials)]
    T = full_grid_corner_count(N)
    return _report(N, counts, delta ** 3 * T, {"delta": delta, "T": T, "seed": seed})


def product_grid_set(E1: IntSet, E2: IntSet) -> GridSet:
    """E1 x E2 on the window [1, N]^2 containing both factors."""
    lo = min(E1.lo, E2.lo, 1)
    hi = max(E1.hi, E2.hi)
    win = GridWindow.square(lo, hi)
    return GridSet(win, np.outer(E1.mask_on(lo, hi), E2.mask_on(lo, hi)))


def difference_counts(E: IntSet, dmax: int) -> np.ndarray:
    """r[d] = #{k : k, k + d in E} for d = 0..dmax."""
    m = E.mask.astype(np.int64)
    r = np.zeros(dmax + 1, dtype=np.int64)
    for d in range(min(dmax, len(m) - 1) + 1):
        r[d] = int(np.dot(m[:len(m) - d], m[d:]))
    return r


@dataclass
class ProductCount:
    direct: int
    formula: int

    @property
    def agree(self) -> bool:
        return self.direct == self.formula


def product_corner_count(E1: IntSet, E2: IntSet) -> ProductCount:
    """Exact corner count of E1 x E2, directly and as sum_{d>0} r_E1(d) r_E2(d)."""
    direct = count_corners(product_grid_set(E1, E2), "positive_d")
    dmax = max(E1.hi - E1.lo, E2.hi - E2.lo, 0)
    r1 = difference_counts(E1, dmax)
    r2 = difference_counts(E2, dmax)
    return ProductCount(int(direct), int(np.dot(r1[1:], r2[1:])))


def product_corner_report(N: int, beta1: float, beta2: float, trials: int, seed: int = 0) -> CornerReport:
    """Random E1, E2 inside [1, N]: exact counts against beta1^2 beta2^2 T(N).

    The report also lists the value (beta1 beta2)^3 T(N) a uniform set of the
    same density would have, and whether the identity held in every trial.
    """
    counts, identity = [], True
    for i in range(trials):
        rng = np.random.default_rng(seed + i)
        E1 = random_int_set(N, beta1, rng)
        E2 = random_int_set(N, beta2, rng)
        pc = product_corner_count(E1, E2)
        identity &= pc.agree
        counts.append(pc.direct)
    T = full_grid_corner_count(N)
    rep = _report(N, counts, beta1 ** 2 * beta2 ** 2 * T,
                  {"beta": [beta1, beta2], "T": T, "uniform_value": (beta1 * beta2) ** 3 * T,
                   "identity_all": identity, "seed": seed})
    rep.details["z_uniform"] = ((rep.mean - rep.details["uniform_value"]) / rep.stderr
                                if rep.stderr > 0 else math.inf)
    return rep


def behrend_corner_free(N: int) -> GridSet:
    """Corner-free set in [1, N]^2 induced by ``behrend_set``, verified."""
    A = corner_free_from_ap_free(behrend_set(N), N)
    if not is_corner_free(A, "nonzero_d"):
        raise AssertionError("induced set has a corner")
    return A
