"""Exact corner combinatorics on finite grids.

A corner is {(k,m), (k+d,m), (k,m+d)}.  ``positive_d`` counts d > 0,
``nonzero_d`` counts d != 0 and ``include_zero_d`` adds the |A| degenerate
triples with d = 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.signal import fftconvolve

from .errors import BudgetExceeded, PreconditionViolated
from .sets import GridSet, GridWindow, as_grid_fn

MODES = ("positive_d", "nonzero_d", "include_zero_d")
_MODE_ALIASES = {"posd": "positive_d", "nzd": "nonzero_d", "zd": "include_zero_d"}


def _mode(mode: str) -> str:
    mode = _MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ValueError(f"unknown corner mode {mode!r}")
    return mode


@dataclass(frozen=True, order=True)
class Corner:
    k: int
    m: int
    d: int

    def __post_init__(self):
        if self.d == 0:
            raise ValueError("corner difference must be nonzero")

    def points(self):
        return ((self.k, self.m), (self.k + self.d, self.m), (self.k, self.m + self.d))


def _positive_counts(mask: np.ndarray) -> np.ndarray:
    """counts[d] = number of d-corners in mask for d = 1..min(shape)-1 (index 0 unused)."""
    w, h = mask.shape
    top = min(w, h)
    counts = np.zeros(max(top, 1), dtype=np.int64)
    for d in range(1, top):
        base = mask[:w - d, :h - d]
        counts[d] = np.count_nonzero(base & mask[d:, :h - d] & mask[:w - d, d:])
    return counts


def _positive_witnesses(A: GridSet, sign: int):
    mask = A.mask if sign > 0 else A.mask[::-1, ::-1]
    w, h = mask.shape
    out = []
    for d in range(1, min(w, h)):
        hit = mask[:w - d, :h - d] & mask[d:, :h - d] & mask[:w - d, d:]
        for i, j in np.argwhere(hit):
            if sign > 0:
                out.append(Corner(int(i) + A.window.x_lo, int(j) + A.window.y_lo, d))
            else:
                # index (i, j) of the flipped mask is the point (x_hi - i, y_hi - j)
                out.append(Corner(A.window.x_hi - int(i), A.window.y_hi - int(j), -d))
    return out


def count_corners(A: GridSet, mode: str = "positive_d", enumerate_witnesses: bool = False):
    """Exact corner count of ``A``; with ``enumerate_witnesses`` also the sorted Corner list."""
    mode = _mode(mode)
    n = int(_positive_counts(A.mask).sum())
    if mode != "positive_d":
        n += int(_positive_counts(A.mask[::-1, ::-1]).sum())
    if mode == "include_zero_d":
        n += len(A)
    if not enumerate_witnesses:
        return n
    wit = _positive_witnesses(A, +1)
    if mode != "positive_d":
        wit += _positive_witnesses(A, -1)
    return n, sorted(wit)


def corner_counts_by_d(A: GridSet) -> dict[int, int]:
    """Nonzero per-difference corner counts for d > 0 and d < 0."""
    out = {}
    for d, c in enumerate(_positive_counts(A.mask)):
        if d and c:
            out[d] = int(c)
    for d, c in enumerate(_positive_counts(A.mask[::-1, ::-1])):
        if d and c:
            out[-d] = int(c)
    return out


def is_corner_free(A: GridSet, mode: str = "positive_d") -> bool:
    mode = _mode(mode)
    if mode == "include_zero_d":
        return len(A) == 0
    return count_corners(A, mode) == 0


def full_grid_corner_count(N: int) -> int:
    """Placements of a positive corner inside [1,N]^2: sum_{d=1}^{N-1} (N-d)^2."""
    return sum((N - d) ** 2 for d in range(1, N))


# ---------------------------------------------------------------------------
# exact extremal search


@dataclass(frozen=True)
class MaxCornerFreeResult:
    size: int
    witness: GridSet
    L: Fraction
    exact: bool
    nodes: int


def _grid_corner_masks(N: int, mode: str) -> tuple[list, list]:
    """Bit masks (row-major point index on [1,N]^2) of every corner fitting in the grid."""
    def idx(x, y):
        return (x - 1) * N + (y - 1)

    corners = []
    for d in range(1, N):
        for k in range(1, N - d + 1):
            for m in range(1, N - d + 1):
                corners.append((1 << idx(k, m)) | (1 << idx(k + d, m)) | (1 << idx(k, m + d)))
    if mode == "nonzero_d":
        for d in range(1, N):
            for k in range(d + 1, N + 1):
                for m in range(d + 1, N + 1):
                    corners.append((1 << idx(k, m)) | (1 << idx(k - d, m)) | (1 << idx(k, m - d)))
    by_point = [[] for _ in range(N * N)]
    for c in corners:
        for p in range(N * N):
            if c >> p & 1:
                by_point[p].append(c & ~(1 << p))
    return corners, by_point


def max_corner_free(N: int, mode: str = "positive_d", budget: int = 2_000_000) -> MaxCornerFreeResult:
    """Largest corner-free subset of [1,N]^2 by branch and bound.

    Points are decided in row-major order, inclusion first, and the incumbent
    is replaced only by strictly larger sets, so the witness is the
    lexicographically least maximum set.  The bound subtracts a greedy packing
    of disjoint pending constraints from the undecided count.

    Raises BudgetExceeded (with the best-known result, ``exact=False``) when the
    node budget runs out.
    """
    mode = _mode(mode)
    if N < 1:
        raise ValueError("N must be positive")
    if mode == "include_zero_d":
        raise ValueError("include_zero_d admits only the empty set")
    P = N * N
    corners, by_point = _grid_corner_masks(N, mode)
    full = (1 << P) - 1
    best = [-1, 0]
    nodes = [0]

    def upper(i: int, inc: int) -> int:
        decided = (1 << i) - 1
        excluded = decided & ~inc
        rest = full & ~decided
        pending = []
        for c in corners:
            if c & excluded:
                continue
            r = c & rest
            pending.append(r)
        pending.sort(key=int.bit_count)
        used = 0
        packed = 0
        for r in pending:
            if not r & used:
                used |= r
                packed += 1
        return inc.bit_count() + rest.bit_count() - packed

    def rec(i: int, inc: int):
        nodes[0] += 1
        if nodes[0] > budget:
            raise _OutOfBudget
        if i == P:
            size = inc.bit_count()
            if size > best[0]:
                best[0], best[1] = size, inc
            return
        if upper(i, inc) <= best[0]:
            return
        if all((inc & o) != o for o in by_point[i]):
            rec(i + 1, inc | (1 << i))
        rec(i + 1, inc)

    exact = True
    try:
        rec(0, 0)
    except _OutOfBudget:
        exact = False
    size, inc = best
    if size < 0:
        size, inc = 0, 0
    pts = [(p // N + 1, p % N + 1) for p in range(P) if inc >> p & 1]
    res = MaxCornerFreeResult(size, GridSet.from_points(pts, GridWindow.square(1, N)),
                              Fraction(size, N * N), exact, nodes[0])
    if not exact:
        raise BudgetExceeded(f"node budget {budget} exhausted at N={N}", best=res)
    return res


class _OutOfBudget(Exception):
    pass


def max_corner_free_enumerate(N: int, mode: str = "positive_d") -> tuple[int, tuple]:
    """Plain subset enumeration; only usable for N <= 4."""
    mode = _mode(mode)
    if N > 4:
        raise ValueError("enumeration oracle is limited to N <= 4")
    cells = [(x, y) for x in range(1, N + 1) for y in range(1, N + 1)]
    triples = []
    for i, j, k in combinations(range(len(cells)), 3):
        pts = {cells[i], cells[j], cells[k]}
        for (a, b) in pts:
            for d in (range(1, N) if mode == "positive_d" else [e for e in range(1 - N, N) if e]):
                if {(a, b), (a + d, b), (a, b + d)} == pts:
                    triples.append((1 << i) | (1 << j) | (1 << k))
    triples = np.array(sorted(set(triples)), dtype=np.int64)
    subsets = np.arange(1 << len(cells), dtype=np.int64)
    ok = np.ones(subsets.shape, dtype=bool)
    for t in triples:
        ok &= (subsets & t) != t
    sizes = np.array([int(s).bit_count() for s in range(1 << len(cells))])
    sizes[~ok] = -1
    top = sizes.max()
    cands = []
    for s in subsets[sizes == top]:
        cands.append(tuple(cells[p] for p in range(len(cells)) if int(s) >> p & 1))
    return int(top), min(cands)


# ---------------------------------------------------------------------------
# symmetrization


@dataclass(frozen=True)
class SymmetrizeResult:
    v: tuple[int, int]
    A1: GridSet
    bound: float
    holds_size: bool
    holds_free: bool


def symmetrize(A: GridSet, N: int) -> SymmetrizeResult:
    """Pick v maximizing |A ∩ (v - A)| and return A1 = A ∩ (v - A).

    A1 has no corners for any nonzero difference when A has none with d > 0.
    """
    box = GridWindow.square(-N, N)
    if len(A) and not all(box.contains(x, y) for x, y in A.points):
        raise PreconditionViolated("A must lie in [-N, N]^2")
    if not is_corner_free(A, "positive_d"):
        raise PreconditionViolated("A contains a corner with d > 0")
    m = A.mask_on(box).astype(float)
    # c[v + 2N] = #{a in A : v - a in A}, v in [-2N, 2N]^2
    c = np.rint(fftconvolve(m, m, mode="full")).astype(np.int64)
    flat = int(np.argmax(c))
    i, j = divmod(flat, c.shape[1])
    v = (i - 2 * N, j - 2 * N)
    inv = A.mask_on(box)[::-1, ::-1]  # v - A on box, up to translation by v
    shifted = GridSet(GridWindow(v[0] - N, v[0] + N, v[1] - N, v[1] + N), inv)
    A1 = GridSet(box, A.mask_on(box) & shifted.mask_on(box))
    if len(A1) != c[i, j]:
        raise AssertionError("autoconvolution count disagrees with the explicit intersection")
    delta = len(A) / (2 * N + 1) ** 2
    bound = delta ** 2 * (2 * N + 1) ** 2 / 4
    return SymmetrizeResult(v, A1, bound, len(A1) >= bound, is_corner_free(A1, "nonzero_d"))


# ---------------------------------------------------------------------------
# coefficient-space triple sum


def _shifted(arr: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """S[k, m] = arr[k + dx, m + dy], zero outside."""
    w, h = arr.shape
    out = np.zeros_like(arr)
    xs, xe = max(0, -dx), min(w, w - dx)
    ys, ye = max(0, -dy), min(h, h - dy)
    if xs < xe and ys < ye:
        out[xs:xe, ys:ye] = arr[xs + dx:xe + dx, ys + dy:ye + dy]
    return out


def corner_sum_sigma0(H, G, f) -> complex:
    """sum_{k,m,r} H(k,m) G(k+r, m+r) f(k, m+r), over all integers r (r = 0 included).

    Arguments are GridSets or GridFns in coefficient coordinates.
    """
    Hf, Gf, Ff = as_grid_fn(H), as_grid_fn(G), as_grid_fn(f)
    win = Hf.window.union(Gf.window).union(Ff.window)
    h, g, F = Hf.on(win), Gf.on(win), Ff.on(win)
    w, hh = win.shape
    rmax = max(w, hh)
    total = 0j
    for r in range(-rmax + 1, rmax):
        total += np.sum(h * _shifted(g, r, r) * _shifted(F, 0, r))
    return complex(total)
