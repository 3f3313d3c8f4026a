"""Fourier analysis on Z and the uniformity tests built on it.

Conventions: f^(x) = sum_s f(s) e(-s x) with e(t) = exp(2 pi i t).  Sup norms
over the circle are bracketed (grid plus Lipschitz certificate) and every
verdict uses the upper end of the bracket, so verdicts are never optimistic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bohr import BohrSet, Check, translate_counts_1d
from .errors import BudgetExceeded, ModulusTooSmall, PreconditionViolated
from .grid import corner_sum_sigma0, count_corners
from .sets import GridFn, GridSet, GridWindow, IntSet, SuppFn, product_set, to_coefficients

TWO_PI = 2 * np.pi


# ---------------------------------------------------------------------------
# cyclic DFT


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Samples f^(j / M), j = 0..M-1, of a function supported on [offset, offset + span)."""

    modulus: int
    values: np.ndarray
    offset: int = 0
    span: int = 0

    def to_json(self) -> dict:
        return {"modulus": self.modulus, "offset": self.offset, "span": self.span,
                "re": self.values.real.tolist(), "im": self.values.imag.tolist()}


def _min_modulus(*fns: SuppFn) -> int:
    return 2 * max(f.span for f in fns) + 1


def cyclic_dft(f: SuppFn, M: int | None = None) -> Spectrum:
    need = _min_modulus(f)
    M = need if M is None else int(M)
    if M < need:
        raise ModulusTooSmall(f"modulus {M} < 2*span+1 = {need}")
    j = np.arange(M)
    raw = np.fft.fft(f.values, n=M)
    phase = np.exp(-TWO_PI * 1j * f.offset * j / M)
    return Spectrum(M, raw * phase, f.offset, f.span)


def inverse_dft(spec: Spectrum) -> SuppFn:
    M = spec.modulus
    j = np.arange(M)
    raw = spec.values * np.exp(TWO_PI * 1j * spec.offset * j / M)
    return SuppFn(spec.offset, np.fft.ifft(raw)[:spec.span])


def parseval_sides(f: SuppFn, M: int | None = None) -> tuple[float, float]:
    """(sum |f|^2, (1/M) sum |f^|^2)."""
    s = cyclic_dft(f, M)
    return float(np.sum(np.abs(f.values) ** 2)), float(np.sum(np.abs(s.values) ** 2) / s.modulus)


def inner_product_sides(f: SuppFn, g: SuppFn, M: int | None = None) -> tuple[complex, complex]:
    """(sum f conj g, (1/M) sum f^ conj g^)."""
    lo = min(f.offset, g.offset)
    hi = max(f.hi, g.hi)
    # residues mod M must separate the union of the supports
    need = max(_min_modulus(f, g), hi - lo + 1)
    M = need if M is None else M
    if M < need:
        raise ModulusTooSmall(f"modulus {M} does not separate the joint support ({need} needed)")
    fv = _dense(f, lo, hi)
    gv = _dense(g, lo, hi)
    F, G = cyclic_dft(f, M), cyclic_dft(g, M)
    return complex(np.sum(fv * np.conj(gv))), complex(np.sum(F.values * np.conj(G.values)) / M)


def correlation(f: SuppFn, g: SuppFn) -> SuppFn:
    """c(k) = sum_s f(s) conj g(s - k)."""
    c = np.correlate(f.values, g.values, mode="full")
    # numpy lag index t corresponds to k = t - (len(g) - 1) + f.offset - g.offset
    return SuppFn(f.offset - g.offset - (len(g.values) - 1), c)


def convolution_square_sides(f: SuppFn, g: SuppFn, M: int | None = None) -> tuple[float, float]:
    """(sum_k |sum_s f(s) conj g(s - k)|^2, (1/M) sum |f^|^2 |g^|^2)."""
    M = _min_modulus(f, g) if M is None else M
    lhs = float(np.sum(np.abs(correlation(f, g).values) ** 2))
    F, G = cyclic_dft(f, M), cyclic_dft(g, M)
    return lhs, float(np.sum(np.abs(F.values) ** 2 * np.abs(G.values) ** 2) / M)


def _dense(f: SuppFn, lo: int, hi: int) -> np.ndarray:
    out = np.zeros(hi - lo + 1, dtype=complex)
    out[f.offset - lo:f.hi - lo + 1] = f.values
    return out


# ---------------------------------------------------------------------------
# certified sup norm


@dataclass(frozen=True)
class SupBracket:
    lower: float
    upper: float
    argmax: float
    grid: int
    lipschitz: float
    curvature: float = 0.0

    @property
    def width(self) -> float:
        return self.upper - self.lower


def fourier_at(f: SuppFn, x) -> np.ndarray:
    """f^(x) for an array of points x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = f.support_points()
    out = np.empty(len(x), dtype=complex)
    step = max(1, 2 ** 22 // max(len(s), 1))
    for a in range(0, len(x), step):
        xs = x[a:a + step]
        out[a:a + step] = np.exp(-TWO_PI * 1j * np.outer(xs, s)) @ f.values
    return out


def _moments(values: np.ndarray) -> tuple[float, float]:
    """(L, L2): bounds on |d/dx f^| and |d^2/dx^2 f^| taken about the support centre c.

    L = 2 pi sum |s - c||f(s)|, L2 = 4 pi^2 sum |s - c|^2 |f(s)|; recentring
    multiplies f^ by a unimodular phase and leaves |f^| unchanged.
    """
    n = len(values)
    pos = np.abs(np.arange(n) - (n - 1) / 2)
    a = np.abs(values)
    return float(TWO_PI * np.sum(pos * a)), float(TWO_PI ** 2 * np.sum(pos ** 2 * a))


def _cell_bound(a, b, h, L, L2):
    # first order: Lipschitz tent; second order: |F| <= |chord| + L2 h^2 / 8 <= max(a, b) + L2 h^2 / 8
    return np.minimum((a + b + L * h) / 2, np.maximum(a, b) + L2 * h * h / 8)


def _grid_size(span: int, K: int | None) -> int:
    if K is not None:
        return int(K)
    return max(64, 1 << math.ceil(math.log2(8 * max(span, 1))))


def default_tolerance(f: SuppFn) -> float:
    return 1e-6 * max(1.0, float(np.sum(np.abs(f.values))))


def sup_fourier(f: SuppFn, tol: float | None = None, K: int | None = None,
                max_cells: int = 200_000, max_rounds: int = 60) -> SupBracket:
    """Bracket sup_x |f^(x)| over the circle.

    The grid |f^(j/K)| gives the lower end.  On a cell of width h with endpoint
    values a, b, |f^| is at most (a + b + L h)/2 by the Lipschitz bound, and at
    most max(a, b) + L2 h^2/8 by the curvature bound; the smaller is used.
    Cells whose bound exceeds the best value by more than ``tol`` are bisected.
    If a cap is hit the returned bracket is wider but still valid.
    """
    tol = default_tolerance(f) if tol is None else tol
    vals = f.values
    if not np.any(vals):
        return SupBracket(0.0, 0.0, 0.0, 0, 0.0)
    L, L2 = _moments(vals)
    K = _grid_size(len(vals), K)
    g = np.abs(np.fft.fft(vals, n=K))
    lower = float(g.max())
    arg = float(np.argmax(g)) / K
    left = np.arange(K) / K
    a, b = g, np.roll(g, -1)
    h = 1.0 / K
    settled = 0.0  # largest bound among discarded cells
    for _ in range(max_rounds + 1):
        bound = _cell_bound(a, b, h, L, L2)
        keep = bound > lower + tol
        if keep.any():
            settled = max(settled, float(bound[~keep].max(initial=0.0)))
        else:
            settled = max(settled, float(bound.max()))
            return SupBracket(lower, max(lower, settled), arg, K, L, L2)
        if keep.sum() * 2 > max_cells:
            break
        left, a, b = left[keep], a[keep], b[keep]
        h /= 2
        mid = left + h
        m = np.abs(fourier_at(f, mid))
        i = int(np.argmax(m))
        if m[i] > lower:
            lower, arg = float(m[i]), float(mid[i] % 1.0)
        left = np.concatenate([left, mid])
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
    bound = _cell_bound(a, b, h, L, L2)
    return SupBracket(lower, max(lower, settled, float(bound.max())), arg, K, L, L2)


def sup_fourier_rows(rows: np.ndarray, K: int | None = None,
                     chunk: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Grid brackets (lower, upper) of sup |f^| for every row of a 2-D array.

    The rows are coefficient vectors on a common index range; translating a
    function does not change |f^|, so offsets are irrelevant.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=complex))
    n, span = rows.shape
    K = _grid_size(2 * span, K)
    pos = np.abs(np.arange(span) - (span - 1) / 2)
    lower = np.empty(n)
    upper = np.empty(n)
    for c in range(0, n, chunk):
        block = rows[c:c + chunk]
        g = np.abs(np.fft.fft(block, n=K, axis=1))
        ab = np.abs(block)
        L = (TWO_PI * (ab @ pos))[:, None]
        L2 = (TWO_PI ** 2 * (ab @ pos ** 2))[:, None]
        lower[c:c + chunk] = g.max(axis=1)
        upper[c:c + chunk] = _cell_bound(g, np.roll(g, -1, axis=1), 1.0 / K, L, L2).max(axis=1)
    return lower, np.maximum(upper, lower)


def count_large_rows(rows: np.ndarray, threshold: float, K: int | None = None) -> np.ndarray:
    """Boolean mask of rows whose sup |f^| may reach ``threshold``.

    Rows decided by the grid bracket are final; ambiguous rows are refined
    individually and counted as large unless the refined upper end is below.
    """
    lower, upper = sup_fourier_rows(rows, K)
    large = lower >= threshold
    for i in np.flatnonzero((lower < threshold) & (upper >= threshold)):
        br = sup_fourier(SuppFn(0, rows[i]))
        large[i] = br.upper >= threshold
    return large


# ---------------------------------------------------------------------------
# uniformity on Z


def _check_subset(Q: IntSet, lam: BohrSet, what: str = "set"):
    vals = Q.array()
    if len(vals) and not np.all(lam.mask_on(lam.lo, lam.hi)[np.clip(vals - lam.lo, 0, lam.hi - lam.lo)]
                                & (vals >= lam.lo) & (vals <= lam.hi)):
        raise PreconditionViolated(f"{what} is not contained in the Bohr set")


def balanced_on_bohr(Q: IntSet, lam: BohrSet) -> tuple[SuppFn, float]:
    """(Q cap Lambda - delta Lambda) as a SuppFn on [lam.lo, lam.hi], and delta."""
    lm = lam.mask_on(lam.lo, lam.hi)
    q = Q.mask_on(lam.lo, lam.hi) & lm
    delta = q.sum() / len(lam) if len(lam) else 0.0
    return SuppFn(lam.lo, q.astype(float) - delta * lm), float(delta)


def alpha_uniformity(A: IntSet, lam: BohrSet, tol: float | None = None) -> float:
    """Smallest alpha certified by the sup bracket: upper / |Lambda|."""
    _check_subset(A, lam)
    f, _ = balanced_on_bohr(A, lam)
    return sup_fourier(f, tol).upper / len(lam)


def local_densities(E: IntSet, att: BohrSet, centers) -> np.ndarray:
    """delta_{att + n}(E) for n in ``centers``; ``att`` must be untranslated."""
    centers = np.asarray(centers, dtype=np.int64)
    return translate_counts_1d(E.mask, E.lo, att, centers) / len(att)


def _translate_rows(E: IntSet, delta: float, att: BohrSet, centers) -> np.ndarray:
    """Row m: a -> E(m + a) - delta on the attendant elements, zero elsewhere on its range."""
    span = att.hi - att.lo + 1
    idx = att.elements - att.lo
    rows = np.zeros((len(centers), span))
    for j, a in zip(idx, att.elements):
        pos = np.asarray(centers) + int(a)
        ok = (pos >= E.lo) & (pos <= E.hi)
        col = np.zeros(len(centers))
        col[ok] = E.mask[pos[ok] - E.lo]
        rows[:, j] = col - delta
    return rows


@dataclass
class UniformityReport:
    alpha: float
    delta: float
    size: int
    att_size: int
    b_size: int
    variance: float
    sup_lower: float
    sup_upper: float
    b_star_size: int
    clause22: bool
    clause23: bool
    clause24: bool
    checks: list = field(default_factory=list)
    omega: dict = field(default_factory=dict)

    @property
    def uniform(self) -> bool:
        return self.clause22 and self.clause23 and self.clause24

    @property
    def thresholds(self) -> dict:
        return {"b_size": self.alpha * self.size, "variance": self.alpha ** 2,
                "sup": self.alpha * self.size}

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "delta": self.delta, "size": self.size,
                "att_size": self.att_size, "b_size": self.b_size, "variance": self.variance,
                "sup": [self.sup_lower, self.sup_upper], "b_star_size": self.b_star_size,
                "thresholds": self.thresholds,
                "clauses": {"bad_translates": self.clause22, "variance": self.clause23,
                            "fourier": self.clause24},
                "checks": [c.to_json() for c in self.checks], "omega": self.omega}


def _clause_sets(Q: IntSet, lam: BohrSet, att: BohrSet, delta: float, level: float):
    """(bad-translate mask, local densities) over m in Lambda for one attendant."""
    centers = lam.elements
    rows = _translate_rows(Q, delta, att, centers)
    bad = count_large_rows(rows, level * len(att))
    dens = local_densities(Q, att, centers)
    return bad, dens


def uniformity_report(Q: IntSet, lam: BohrSet, lam_att: BohrSet, alpha: float,
                      lam_att2: BohrSet | None = None, hereditary: bool = False,
                      hereditary_limit: int = 400) -> UniformityReport:
    """Clause-by-clause (alpha, eps)-uniformity of Q inside Lambda.

    ``lam_att`` is the attendant used for the translate clauses; ``lam_att2``
    (an attendant of ``lam_att``) enables the Omega-set bounds and, with
    ``hereditary``, the count of translates (Q - s) cap Lambda' failing
    (8 alpha^(1/4))-uniformity.
    """
    _check_subset(Q, lam)
    f, delta = balanced_on_bohr(Q, lam)
    n = len(lam)
    bad, dens = _clause_sets(Q, lam, lam_att, delta, alpha)
    b_size = int(bad.sum())
    dev = dens - delta
    variance = float(np.mean(dev ** 2)) if n else 0.0
    br = sup_fourier(f)
    b_star = int(np.count_nonzero(np.abs(dev) >= alpha ** (2 / 3)))
    c22 = b_size <= alpha * n
    c23 = variance <= alpha ** 2
    c24 = br.upper <= alpha * n
    checks = []
    if c23:
        checks.append(Check("uniformity.bad_density_count", b_star, alpha ** (2 / 3) * n,
                            b_star <= alpha ** (2 / 3) * n))
    if c22 and c23:
        checks.append(Check("uniformity.fourier_from_translates", br.upper, 4 * alpha * n,
                            br.upper < 4 * alpha * n))
    rep = UniformityReport(alpha, delta, n, len(lam_att), b_size, variance, br.lower, br.upper,
                           b_star, c22, c23, c24, checks)
    if lam_att2 is not None:
        _omega_sets(rep, Q, lam, lam_att, lam_att2, alpha, delta, hereditary, hereditary_limit)
    return rep


def _omega_sets(rep, Q, lam, att, att2, alpha, delta, hereditary, limit):
    n = len(lam)
    centers = lam.elements
    d1 = local_densities(Q, att, centers)
    # (1/|att|) sum_{n in att + s} |delta_{att2 + n}(Q) - delta|^2
    lo = int(centers.min()) + att.lo
    hi = int(centers.max()) + att.hi
    inner = local_densities(Q, att2, np.arange(lo, hi + 1))
    sq = (inner - delta) ** 2
    avg = translate_counts_1d(np.ones(1, dtype=bool), 0, att, np.zeros(1, dtype=np.int64))  # |att|
    pref = np.zeros(len(centers))
    for a in att.elements:
        pref += sq[centers + int(a) - lo]
    pref /= avg[0]
    root = alpha ** 0.5
    omega1 = int(np.count_nonzero((np.abs(d1 - delta) >= 4 * root) | (pref >= 4 * root)))
    hyp1 = float(np.mean((local_densities(Q, att2, centers) - delta) ** 2)) if n else 0.0
    rep.omega["omega1"] = omega1
    rep.omega["variance_second_level"] = hyp1
    if hyp1 <= alpha ** 2:
        rep.checks.append(Check("uniformity.omega1_size", omega1, 4 * root * n, omega1 <= 4 * root * n))
    rows2 = _translate_rows(Q, delta, att2, centers)
    star = int(count_large_rows(rows2, alpha * len(att2)).sum())
    rows1 = _translate_rows(Q, delta, att, centers)
    omega2 = int(count_large_rows(rows1, 4 * alpha ** 0.25 * len(att)).sum())
    rep.omega["omega_star"] = star
    rep.omega["omega2"] = omega2
    if star <= alpha * n:
        rep.checks.append(Check("uniformity.omega2_size", omega2, 4 * root * n, omega2 <= 4 * root * n))
    if hereditary:
        if n > limit:
            raise BudgetExceeded(f"hereditary scan over {n} translates exceeds limit {limit}")
        base = uniformity_report(Q, lam, att2, alpha)
        level = 8 * alpha ** 0.25
        failing = 0
        for s in centers:
            sub = Q.shift(-int(s))
            inside = IntSet.from_iter([v for v in sub if v in att], att.lo, att.hi)
            if not uniformity_report(inside, att, att2, level).uniform:
                failing += 1
        rep.omega["omega_tilde"] = failing
        rep.omega["hereditary_hypothesis"] = base.uniform
        if base.uniform:
            rep.checks.append(Check("uniformity.hereditary_size", failing, 8 * root * n,
                                    failing <= 8 * root * n))


# ---------------------------------------------------------------------------
# box norms


FOURFOLD_LIMIT = 400


def box_norm_fourfold(f: GridFn) -> complex:
    """Literal sum over (k, m), u, r of f(k,m) conj f(k,m+u) conj f(k+r,m) f(k+r,m+u)."""
    F = f.values
    w, h = F.shape
    total = 0j
    for r in range(-w + 1, w):
        k0, k1 = max(0, -r), min(w, w - r)
        for u in range(-h + 1, h):
            m0, m1 = max(0, -u), min(h, h - u)
            a = F[k0:k1, m0:m1]
            b = F[k0:k1, m0 + u:m1 + u]
            c = F[k0 + r:k1 + r, m0:m1]
            d = F[k0 + r:k1 + r, m0 + u:m1 + u]
            total += np.sum(a * np.conj(b) * np.conj(c) * d)
    return complex(total)


def box_norm4(f: GridFn) -> float:
    """sum_{m,p} |sum_k f(k,m) conj f(k,p)|^2."""
    F = f.values
    M = F.T @ np.conj(F)
    return float(np.sum(np.abs(M) ** 2))


def box_norm(f: GridFn, check: bool = True) -> float:
    """Fourth root of the pair-correlation sum; cross-checked on small windows."""
    s = box_norm4(f)
    if check and f.window.area <= FOURFOLD_LIMIT:
        t = box_norm_fourfold(f)
        if abs(t - s) > 1e-9 * max(1.0, s):
            raise AssertionError(f"box norm evaluations disagree: {s} vs {t}")
    return s ** 0.25


def balanced_grid_fn(A: GridSet, E1: IntSet, E2: IntSet) -> tuple[GridFn, float]:
    """(A - delta) on E1 x E2 with delta = |A cap E1xE2| / (|E1||E2|)."""
    P = product_set(E1, E2)
    a = A.mask_on(P.window) & P.mask
    size = int(P.mask.sum())
    delta = float(a.sum() / size) if size else 0.0
    return GridFn(P.window, (a.astype(float) - delta) * P.mask), delta


def rect_alpha_uniform(A: GridSet, E1: IntSet, E2: IntSet, alpha: float) -> tuple[bool, float]:
    """(measured <= alpha, measured) with measured = ||f||^4 / (|E1|^2 |E2|^2)."""
    P = product_set(E1, E2)
    if len(A) and not A.issubset(P.with_window(P.window.union(A.window))):
        raise PreconditionViolated("A is not contained in E1 x E2")
    if not len(E1) or not len(E2):
        return True, 0.0
    f, _ = balanced_grid_fn(A, E1, E2)
    measured = box_norm4(f) / (len(E1) ** 2 * len(E2) ** 2)
    return measured <= alpha, measured


# ---------------------------------------------------------------------------
# localized rectilinear norm


@dataclass(frozen=True)
class Hosts:
    """Lambda_1 <= Lambda_2, an attendant Lambda' of Lambda_1 and an attendant Lambda'' of Lambda'."""

    lam1: BohrSet
    lam2: BohrSet
    lam_att: BohrSet
    lam_att2: BohrSet | None = None

    def to_json(self) -> dict:
        out = {k: getattr(self, k).spec.to_json() for k in ("lam1", "lam2", "lam_att")}
        if self.lam_att2 is not None:
            out["lam_att2"] = self.lam_att2.spec.to_json()
        return out


def _pair_counts(lam1: BohrSet, lam2: BohrSet) -> tuple[int, np.ndarray]:
    """nu(n) = #{(i, j) in Lambda_1 x Lambda_2 : i + j = n}, as (offset, array)."""
    a = lam1.mask_on(lam1.lo, lam1.hi).astype(np.int64)
    b = lam2.mask_on(lam2.lo, lam2.hi).astype(np.int64)
    return lam1.lo + lam2.lo, np.convolve(a, b)


def _shift_sum(X: np.ndarray, x0: int, offs: np.ndarray, q0: int, n: int) -> np.ndarray:
    """Y[q] = sum_{a in offs} X[q + a] along axis 0, for positions q0 .. q0 + n - 1.

    X holds positions x0 .. x0 + len(X) - 1 and is zero elsewhere.  Contiguous
    offsets use a cumulative sum.
    """
    offs = np.asarray(offs, dtype=np.int64)
    a_lo, a_hi = int(offs.min()), int(offs.max())
    z0 = q0 + a_lo
    zlen = n + a_hi - a_lo
    Z = np.zeros((zlen,) + X.shape[1:], dtype=X.dtype)
    s, e = max(x0, z0), min(x0 + len(X), z0 + zlen)
    if s < e:
        Z[s - z0:e - z0] = X[s - x0:e - x0]
    if len(offs) == a_hi - a_lo + 1:
        C = np.zeros((zlen + 1,) + X.shape[1:], dtype=X.dtype)
        np.cumsum(Z, axis=0, out=C[1:])
        return C[a_hi - a_lo + 1:a_hi - a_lo + 1 + n] - C[:n]
    Y = np.zeros((n,) + X.shape[1:], dtype=X.dtype)
    for a in offs:
        Y += Z[a - a_lo:a - a_lo + n]
    return Y


def _terms_matrix(F, win, att, cs, ps):
    w, h = F.shape
    ind = np.zeros((len(ps), h))
    for a in att:
        cols = ps + a - win.y_lo
        ok = (cols >= 0) & (cols < h)
        ind[np.flatnonzero(ok), cols[ok]] = 1.0
    W = np.zeros((len(cs), len(ps)))
    for ci, c in enumerate(cs):
        rows = c + att - win.x_lo
        rows = rows[(rows >= 0) & (rows < w)]
        if not len(rows):
            continue
        R = F[rows]
        if not np.any(R):
            continue
        S2 = np.abs(R.T @ np.conj(R)) ** 2
        W[ci] = np.sum((ind @ S2) * ind, axis=1)
    return W


def _terms_band(F, win, att, cs, ps):
    # S_c[p+a, p+a+t] = T_t[c, p+a] with T_t[c, m] = sum_{a'} F[c+a', m] conj F[c+a', m+t]
    w, h = F.shape
    aset = set(att.tolist())
    W = np.zeros((len(cs), len(ps)))
    span = int(att.max() - att.min())
    for t in range(-span, span + 1):
        D = np.array([a for a in att if a + t in aset], dtype=np.int64)
        if not len(D):
            continue
        P = np.zeros_like(F)
        if t >= 0:
            P[:, :h - t] = F[:, :h - t] * np.conj(F[:, t:])
        else:
            P[:, -t:] = F[:, -t:] * np.conj(F[:, :h + t])
        T = _shift_sum(P, win.x_lo, att, int(cs[0]), len(cs))
        T2 = np.abs(T) ** 2
        W += _shift_sum(T2.T, win.y_lo, D, int(ps[0]), len(ps)).T
    return W


def _band_cost(att: np.ndarray, nc: int, npp: int, w: int, h: int) -> float:
    span = int(att.max() - att.min())
    contiguous = len(att) == span + 1
    k = 1 if contiguous else len(att)
    return (2 * span + 1) * (w * h + nc * h * k + nc * npp * k)


def eps_norm_terms(f: GridFn, lam_att: BohrSet, method: str = "auto",
                   budget: float = 5e8) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(cs, ps, W) with W[c, p] = sum_{m,u in L'+p} |S_c[m,u]|^2 and
    S_c[m,u] = sum_{a in L'} f(a+c, m) conj f(a+c, u).

    ``method`` is "matrix" (one Gram matrix per c), "band" (diagonals
    u - m = t of the Gram matrices, one pass per t) or "auto" (cheaper one).
    """
    F = f.values
    win = f.window
    w, h = F.shape
    att = lam_att.elements.astype(np.int64)
    cs = np.arange(win.x_lo - att.max(), win.x_hi - att.min() + 1) if len(att) else np.arange(0)
    ps = np.arange(win.y_lo - att.max(), win.y_hi - att.min() + 1) if len(att) else np.arange(0)
    if not len(att) or not np.any(F):
        return cs, ps, np.zeros((len(cs), len(ps)))
    cost_m = len(cs) * (len(att) * h * h + len(ps) * h * h)
    cost_b = _band_cost(att, len(cs), len(ps), w, h)
    if method == "auto":
        method = "band" if cost_b < cost_m else "matrix"
    ops = cost_b if method == "band" else cost_m
    if ops > budget:
        raise BudgetExceeded(f"localized norm needs about {ops:.3g} operations (budget {budget:.3g})")
    if method == "band":
        return cs, ps, _terms_band(F, win, att, cs, ps)
    if method == "matrix":
        return cs, ps, _terms_matrix(F, win, att, cs, ps)
    raise ValueError(f"unknown method {method!r}")


def rect_eps_norm(f: GridFn, lam1: BohrSet, lam2: BohrSet, lam_att: BohrSet,
                  budget: float = 5e8, method: str = "auto") -> float:
    """||f||^4 localized to translates of the attendant:

        sum_{i in L1} sum_{j in L2} sum_k sum_{m,u} L'(m-k-i) L'(u-k-i)
            |sum_r L'(k+r-j) f(r,m) conj f(r,u)|^2.

    With c = j - k and p = k + i the inner sum is S_c[m,u] = sum_{a in L'}
    f(a+c, m) conj f(a+c, u), the outer weights depend on (i, j, k) only
    through nu(c + p) = #{i + j = c + p}, so the sum equals
    sum_{c,p} nu(c+p) W[c, p] with W from ``eps_norm_terms``.
    """
    cs, ps, W = eps_norm_terms(f, lam_att, method, budget)
    if not W.size or not np.any(W):
        return 0.0
    nu_off, nu = _pair_counts(lam1, lam2)
    idx = cs[:, None] + ps[None, :] - nu_off
    ok = (idx >= 0) & (idx < len(nu))
    return float(np.sum(W[ok] * nu[idx[ok]]))


def _contiguous(v: np.ndarray) -> bool:
    return len(v) == int(v.max() - v.min()) + 1


def _omega(cs, ys, D, nu_off, nu):
    """omega[c, m] = sum_{a in D} nu(c + m - a)."""
    s_idx = cs[:, None] + ys[None, :]
    om = np.zeros(s_idx.shape)
    for a in D:
        k = s_idx - a - nu_off
        ok = (k >= 0) & (k < len(nu))
        om[ok] += nu[k[ok]]
    return om


def _slice_norms_interval(F, win, ls, a1, a2, lam_att, lam2):
    # Lambda' = [p1, q1], Lambda'' = [p2, q2]; slice l sees absolute rows l + x, x in Lambda'.
    # T_t^l[c, m] = sum_{x = max(c+p2, p1)}^{min(c+q2, q1)} P_t[l + x, m]; for interior c
    # the window is c + [p2, q2] and T_t^l[c] = U_t[l + c], shared by all slices.
    w, h = F.shape
    p1, q1 = int(a1.min()), int(a1.max())
    p2, q2 = int(a2.min()), int(a2.max())
    cs = np.arange(p1 - q2, q1 - p2 + 1)
    ys = np.arange(win.y_lo, win.y_hi + 1)
    ci0, ci1 = p1 - p2, q1 - q2
    interior = np.arange(ci0, ci1 + 1) if ci0 <= ci1 else np.arange(0)
    edges = cs[(cs < ci0) | (cs > ci1)]
    nu_off, nu = _pair_counts(lam_att, lam2)
    # absolute rows needed: l + x for x in [p1, q1]; pad with zeros around the window
    r_lo = int(ls.min()) + p1
    r_hi = int(ls.max()) + q1
    R = np.zeros((r_hi - r_lo + 1, h), dtype=F.dtype)
    s0, e0 = max(r_lo, win.x_lo), min(r_hi, win.x_hi)
    if s0 <= e0:
        R[s0 - r_lo:e0 - r_lo + 1] = F[s0 - win.x_lo:e0 - win.x_lo + 1]
    out = np.zeros(len(ls))
    span = q2 - p2
    for t in range(-span, span + 1):
        D = np.arange(max(p2, p2 - t), min(q2, q2 - t) + 1)
        P = np.zeros_like(R)
        if t >= 0:
            P[:, :h - t] = R[:, :h - t] * np.conj(R[:, t:])
        else:
            P[:, -t:] = R[:, -t:] * np.conj(R[:, :h + t])
        C = np.zeros((len(P) + 1, h), dtype=P.dtype)
        np.cumsum(P, axis=0, out=C[1:])
        # C[k] = sum of P rows r_lo .. r_lo + k - 1
        if len(interior):
            om = _omega(interior, ys, D, nu_off, nu)
            # U[x] = sum_{a in [p2, q2]} P[x + a] for x = l + c, c interior (all in range)
            x_lo_u = int(ls.min()) + ci0
            x_hi_u = int(ls.max()) + ci1
            xs = np.arange(x_lo_u, x_hi_u + 1)
            U = C[xs + q2 - r_lo + 1] - C[xs + p2 - r_lo]
            V = np.abs(U) ** 2
            # Z[x, q] = sum_m V[x, m] omega(q, m)
            Z = V @ om.T
            rows = ls[:, None] + interior[None, :] - x_lo_u
            out += Z[rows, np.arange(len(interior))[None, :]].sum(axis=1)
        for c in edges:
            lo = max(c + p2, p1)
            hi = min(c + q2, q1)
            if lo > hi:
                continue
            om = _omega(np.array([c]), ys, D, nu_off, nu)[0]
            T = C[ls + hi - r_lo + 1] - C[ls + lo - r_lo]
            out += (np.abs(T) ** 2) @ om
    return out


def _slice_cost(n_slices: int, a1: np.ndarray, a2: np.ndarray, h: int) -> float:
    n_t = 2 * int(a2.max() - a2.min()) + 1
    n1 = int(a1.max() - a1.min()) + 1
    if _contiguous(a1) and _contiguous(a2):
        n_int = max(0, n1 - int(a2.max() - a2.min()))
        n_edge = n1 + int(a2.max() - a2.min()) - n_int
        return n_t * ((n_slices + n1) * h * (n_int + 1) + n_edge * n_slices * h)
    return n_t * n_slices * (n1 + len(a2)) * h * 4


def slice_norms(f: GridFn, ls, lam_att: BohrSet, lam2: BohrSet, lam_att2: BohrSet,
                chunk_elems: int = 4_000_000) -> np.ndarray:
    """rect_eps_norm(slice_fn(f, l, lam_att), lam_att, lam2, lam_att2) for every l in ``ls``.

    Uses W[c,p] = sum_t sum_{a in D_t} |T_t[c, p+a]|^2 with D_t = {a : a, a+t in L''},
    so the nu-weighted sum over (c, p) becomes sum_{c,m} |T_t[c,m]|^2 omega_t(c+m)
    with omega_t = nu * 1_{D_t}.  Slices are processed in vectorized chunks.
    """
    ls = np.asarray(ls, dtype=np.int64)
    out = np.zeros(len(ls))
    F = f.values
    if np.iscomplexobj(F) and not np.any(F.imag):
        F = F.real
    win = f.window
    w, h = F.shape
    a1 = lam_att.elements.astype(np.int64)
    a2 = lam_att2.elements.astype(np.int64)
    if not len(ls) or not len(a1) or not len(a2) or not np.any(F):
        return out
    if _contiguous(a1) and _contiguous(a2):
        return _slice_norms_interval(F, win, ls, a1, a2, lam_att, lam2)
    x_loc = np.arange(a1.min(), a1.max() + 1)
    in1 = np.isin(x_loc, a1)
    cs = np.arange(a1.min() - a2.max(), a1.max() - a2.min() + 1)
    nu_off, nu = _pair_counts(lam_att, lam2)
    aset = set(a2.tolist())
    span = int(a2.max() - a2.min())
    ys = np.arange(win.y_lo, win.y_hi + 1)
    weights = []
    for t in range(-span, span + 1):
        D = np.array([a for a in a2 if a + t in aset], dtype=np.int64)
        if not len(D):
            continue
        weights.append((t, _omega(cs, ys, D, nu_off, nu)))
    step = max(1, chunk_elems // (len(cs) * h))
    dtype = F.dtype
    for c0 in range(0, len(ls), step):
        lc = ls[c0:c0 + step]
        rows = x_loc[:, None] + lc[None, :] - win.x_lo
        ok = (rows >= 0) & (rows < w) & in1[:, None]
        G = np.zeros((len(x_loc), len(lc), h), dtype=dtype)
        G[ok] = F[rows[ok]]
        for t, om in weights:
            P = np.zeros_like(G)
            if t >= 0:
                P[:, :, :h - t] = G[:, :, :h - t] * np.conj(G[:, :, t:])
            else:
                P[:, :, -t:] = G[:, :, -t:] * np.conj(G[:, :, :h + t])
            T = _shift_sum(P, int(x_loc[0]), a2, int(cs[0]), len(cs))
            out[c0:c0 + step] += np.einsum("clm,cm->l", np.abs(T) ** 2, om)
    return out


def slice_fn(f: GridFn, l: int, lam_att: BohrSet) -> GridFn:
    """f_l(s1, s2) = f(s1 + l, s2) Lambda'(s1), on the window of Lambda' x (f's y-range)."""
    win = GridWindow(lam_att.lo, lam_att.hi, f.window.y_lo, f.window.y_hi)
    out = np.zeros(win.shape, dtype=complex)
    for a in lam_att.elements:
        x = int(a) + l
        if f.window.x_lo <= x <= f.window.x_hi:
            out[int(a) - lam_att.lo] = f.values[x - f.window.x_lo]
    return GridFn(win, out)


@dataclass
class SliceReport:
    B: IntSet
    verdict: bool
    norms: dict
    threshold: float
    delta: float
    beta1: float
    beta2: float

    def to_json(self) -> dict:
        return {"B": list(self.B.values), "verdict": self.verdict, "threshold": self.threshold,
                "delta": self.delta, "beta": [self.beta1, self.beta2],
                "norms": {str(k): v for k, v in self.norms.items()}}


def rect_a_a1_eps(A: GridSet, E1: IntSet, E2: IntSet, hosts: Hosts, alpha: float,
                  alpha1: float, budget: float = 5e8) -> SliceReport:
    """Slices l in Lambda_1 whose localized norm exceeds
    alpha beta1^2 beta2^2 |Lambda''|^4 |Lambda'|^2 |Lambda_2|; verdict |B| <= alpha1 |Lambda_1|."""
    if hosts.lam_att2 is None:
        raise PreconditionViolated("slice test needs a second-level attendant")
    lam1, lam2, att, att2 = hosts.lam1, hosts.lam2, hosts.lam_att, hosts.lam_att2
    f, delta = balanced_grid_fn(A, E1, E2)
    beta1 = len(E1) / len(lam1)
    beta2 = len(E2) / len(lam2)
    thr = alpha * beta1 ** 2 * beta2 ** 2 * len(att2) ** 4 * len(att) ** 2 * len(lam2)
    ls = lam1.elements.astype(np.int64)
    ops = _slice_cost(len(ls), att.elements, att2.elements, f.values.shape[1])
    if ops > budget:
        raise BudgetExceeded(f"slice scan needs about {ops:.3g} operations (budget {budget:.3g})")
    vals = slice_norms(f, ls, att, lam2, att2)
    norms = {int(l): float(v) for l, v in zip(ls, vals)}
    bad = [int(l) for l, v in zip(ls, vals) if v > thr]
    B = IntSet.from_iter(bad, lam1.lo, lam1.hi)
    return SliceReport(B, len(B) <= alpha1 * len(lam1), norms, thr, delta, beta1, beta2)


# ---------------------------------------------------------------------------
# counting checks


@dataclass
class CountingReport:
    sigma_f: float
    sigma_bound: float
    alpha_measured: float
    sigma0: float | None
    diagonal: int | None
    host_diagonal: int
    i0: int | None
    corner_count: int
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def to_json(self) -> dict:
        return {"sigma_f": self.sigma_f, "sigma_bound": self.sigma_bound,
                "alpha_measured": self.alpha_measured, "sigma0": self.sigma0,
                "diagonal": self.diagonal, "host_diagonal": self.host_diagonal, "i0": self.i0, "corner_count": self.corner_count,
                "checks": [c.to_json() for c in self.checks]}


def _coef_intset(E: IntSet) -> IntSet:
    return IntSet(tuple(-v for v in E.values), -E.hi, -E.lo)


def correlation_sides(E: IntSet, lam: BohrSet, g: SuppFn) -> tuple[float, float, float]:
    """(sum_k |sum_s f(s) conj g(s-k)|^2, alpha^2 |Lambda|^2 ||g||_2^2, alpha) for f balanced."""
    f, _ = balanced_on_bohr(E, lam)
    alpha = sup_fourier(f).upper / len(lam)
    lhs = float(np.sum(np.abs(correlation(f, g).values) ** 2))
    return lhs, alpha ** 2 * len(lam) ** 2 * float(np.sum(np.abs(g.values) ** 2)), alpha


def exceptional_count(E: IntSet, lam: BohrSet, g: SuppFn, alpha: float) -> int:
    """#{k : |(E * g)(k) - delta (Lambda * g)(k)| > alpha^(2/3) |Lambda|}."""
    f, _ = balanced_on_bohr(E, lam)
    c = correlation(f, g).values
    return int(np.count_nonzero(np.abs(c) > alpha ** (2 / 3) * len(lam)))


def counting_check(A: GridSet, E1: IntSet, E2: IntSet, hosts: Hosts, profile,
                   H: GridSet | None = None, G: GridSet | None = None,
                   g: SuppFn | None = None, relaxed_corner: bool = True,
                   budget: float = 5e8) -> CountingReport:
    """Exact counting-side checks on a small instance, in plane coordinates.

    Internally the sets move to coefficient coordinates (x, -y) where the
    triple sum is evaluated.  Hosts must be untranslated (symmetric).
    """
    lam1, lam2, att = hosts.lam1, hosts.lam2, hosts.lam_att
    P = product_set(E1, E2)
    Ac = to_coefficients(A.with_window(A.window.union(P.window)))
    E2c = _coef_intset(E2)
    Pc = to_coefficients(P)
    f, delta = balanced_grid_fn(Ac, E1, E2c)
    beta1, beta2 = len(E1) / len(lam1), len(E2) / len(lam2)
    Hc = Pc if H is None else to_coefficients(H)
    Gc = Pc if G is None else to_coefficients(G)
    checks = []

    # triple sum against the localized rectilinear norm
    sigma_f = abs(corner_sum_sigma0(Hc, Gc, f))
    norm4 = rect_eps_norm(f, lam1, lam2, att, budget)
    scale = beta1 ** 2 * beta2 ** 2 * len(att) ** 4 * len(lam1) ** 2 * len(lam2)
    alpha_m = norm4 / scale if scale else 0.0
    bound = 2 ** 5 * alpha_m ** 0.25 * beta1 ** 2 * beta2 ** 2 * len(lam1) ** 2 * len(lam2)
    checks.append(Check("counting.triple_sum_bound", sigma_f, bound, sigma_f <= bound + 1e-9))

    # Fourier-side inequalities for E1 in Lambda_1 against g
    g = SuppFn.indicator(E2) if g is None else g
    lhs, rhs, a1 = correlation_sides(E1, lam1, g)
    checks.append(Check("counting.correlation_l2", lhs, rhs, lhs <= rhs * (1 + 1e-9) + 1e-9))
    exc = exceptional_count(E1, lam1, g, a1)
    support = int(np.count_nonzero(g.values))
    checks.append(Check("counting.exceptional_shifts", exc, a1 ** (2 / 3) * support,
                        exc <= a1 ** (2 / 3) * support))

    corners = count_corners(A, "nonzero_d")
    sigma0 = diag = i0 = None
    if relaxed_corner and hosts.lam_att2 is not None:
        alpha0 = profile.get("alpha0")
        dens = local_densities(E1, att, lam1.elements)
        b2 = np.abs(dens - beta1) >= 4 * alpha0 ** 0.5
        sl = rect_a_a1_eps(Ac, E1, E2c, hosts, profile.get("alpha"), profile.get("alpha1"), budget)
        best = -1
        win = Ac.window
        amask = Ac.mask
        for idx, i in enumerate(lam1.elements):
            i = int(i)
            if b2[idx] or i in sl.B:
                continue
            rows = [a + i for a in att.elements if win.x_lo <= a + i <= win.x_hi]
            size = int(sum(np.count_nonzero(amask[r - win.x_lo] & lam2.mask_on(win.y_lo, win.y_hi))
                           for r in rows))
            if size > best:
                best, i0 = size, i
        if i0 is not None:
            lam_i = att.translate(i0)
            sq = GridSet(win, np.outer(lam_i.mask_on(win.x_lo, win.x_hi),
                                       lam2.mask_on(win.y_lo, win.y_hi)))
            Gi = Ac.intersect(sq)
            sigma0 = corner_sum_sigma0(Gi, Gi, Ac).real
            diag = len(Gi)
            found = sigma0 > diag + 0.5
            checks.append(Check("counting.corner_forced", sigma0, diag,
                                (not found) or corners > 0))
            if found:
                checks.append(Check("counting.corner_confirmed", corners, 1, corners >= 1))
            # exact identity: off-diagonal terms are plane corners with two points in G
            n_exact = _corners_through(A, Gi)
            checks.append(Check("counting.sigma0_matches_enumeration", sigma0 - diag, n_exact,
                                abs(sigma0 - diag - n_exact) < 1e-6))
    return CountingReport(sigma_f, bound, alpha_m, sigma0, diag, len(att) * len(lam2), i0, corners, checks)


def _corners_through(A: GridSet, Gc: GridSet) -> int:
    """Plane corners (k,m,d), d != 0, with (k,m+d) and (k+d,m) in G and (k,m) in A.

    ``Gc`` is in coefficient coordinates.
    """
    gpts = {(x, -y) for x, y in Gc.points}
    _, wit = count_corners(A, "nonzero_d", enumerate_witnesses=True)
    return sum(1 for c in wit if (c.k, c.m + c.d) in gpts and (c.k + c.d, c.m) in gpts)
