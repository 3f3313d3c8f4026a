"""Density-increment engine.

Slice and box increments for corner-free sets, the Fourier attendant that
adds one frequency to a Bohr set, mean-square inequalities for local
densities, the index ladder that makes host sets uniform, and the
iteration driver.

All executable thresholds come from a relaxed ``ConstantsProfile``.  Every
increment is re-verified on the returned sets before it is handed back, so a
search heuristic can never produce an unverified claim.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bohr import (
    BohrSet, BohrSpec, Check, attendant, build_bohr, dim_factor, in_attendant_window,
    translate_counts_1d, translate_counts_2d,
)
from .constants import ConstantsProfile
from .errors import (
    BudgetExceeded, NoIncrementFound, NoLargeCoefficient, NotFound, NotNonUniform,
    PreconditionViolated, SearchBudgetExceeded, StepBudgetExceeded,
)
from .grid import Corner, count_corners, is_corner_free, symmetrize
from .harmonic import (
    Hosts, balanced_grid_fn, balanced_on_bohr, count_large_rows, counting_check, eps_norm_terms,
    local_densities, rect_a_a1_eps, rect_alpha_uniform, sup_fourier, sup_fourier_rows,
    uniformity_report,
)
from .sets import GridFn, GridSet, GridWindow, IntSet


def _profile(profile: ConstantsProfile | None, what: str) -> ConstantsProfile:
    prof = ConstantsProfile.relaxed() if profile is None else profile
    prof.require_executable(what)
    return prof


def _bohr_info(spec: BohrSpec) -> dict:
    return {"dim": spec.dim, "eps": float(spec.eps), "N": spec.N}


def _intersect(E: IntSet, S) -> IntSet:
    """E cap S for a BohrSet or IntSet S, on E's window."""
    return IntSet.from_iter([v for v in E.values if v in S], E.lo, E.hi)


def _relative(E: IntSet, s: int, lam: BohrSet) -> IntSet:
    """(E - s) cap Lambda on Lambda's window."""
    return IntSet.from_iter([v - s for v in E.values if v - s in lam], lam.lo, lam.hi)


def _grid_window(E1: IntSet, E2: IntSet) -> GridWindow:
    return GridWindow(E1.lo, max(E1.hi, E1.lo), E2.lo, max(E2.hi, E2.lo))


def _restrict(A: GridSet, E1: IntSet, E2: IntSet) -> GridSet:
    """A cap (E1 x E2) on the window of E1 x E2."""
    win = _grid_window(E1, E2)
    m = A.mask_on(win) & np.outer(E1.mask_on(win.x_lo, win.x_hi), E2.mask_on(win.y_lo, win.y_hi))
    return GridSet(win, m)


def box_count(A: GridSet, F1: IntSet, F2: IntSet) -> int:
    """|A cap (F1 x F2)| by direct membership over the points of F1."""
    total = 0
    if not len(F1) or not len(F2):
        return 0
    win = A.window
    cols = np.array([y for y in F2.values if win.y_lo <= y <= win.y_hi], dtype=np.int64)
    if not len(cols):
        return 0
    for x in F1.values:
        if win.x_lo <= x <= win.x_hi:
            total += int(np.count_nonzero(A.mask[x - win.x_lo, cols - win.y_lo]))
    return total


def box_density(A: GridSet, F1: IntSet, F2: IntSet) -> float:
    n = len(F1) * len(F2)
    return box_count(A, F1, F2) / n if n else 0.0


def _subset_of_product(A: GridSet, E1: IntSet, E2: IntSet) -> bool:
    pts = np.argwhere(A.mask)
    if not len(pts):
        return True
    xs = pts[:, 0] + A.window.x_lo
    ys = pts[:, 1] + A.window.y_lo
    in1 = np.isin(xs, E1.array())
    in2 = np.isin(ys, E2.array())
    return bool(np.all(in1 & in2))


# ---------------------------------------------------------------------------
# state and trace


@dataclass
class StepRecord:
    step: int
    case: object
    lemma: str
    before: float
    after: float
    gain: float
    bohr: dict
    shift: tuple
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"step": self.step, "case": self.case, "lemma": self.lemma, "before": self.before,
               "after": self.after, "gain": self.gain, "bohr": self.bohr,
               "shift": [int(v) for v in self.shift]}
        out.update(self.extra)
        return out


def trace_jsonl(records) -> str:
    """One JSON object per line."""
    return "\n".join(json.dumps(r.to_json() if hasattr(r, "to_json") else r) for r in records)


@dataclass
class IncrementState:
    """Bohr host, shift s, sets E1, E2 with E_i - s_i inside Lambda, and A inside E1 x E2.

    Sets are stored in absolute coordinates.  Degenerate states are rejected
    with the name of the profile floor they violate.
    """

    bohr: BohrSpec
    shift: tuple
    E1: IntSet
    E2: IntSet
    A: GridSet
    profile: ConstantsProfile | None = None
    log: list = field(default_factory=list)

    def __post_init__(self):
        prof = _profile(self.profile, "IncrementState")
        self.profile = prof
        self.shift = (int(self.shift[0]), int(self.shift[1]))
        self.lam = build_bohr(self.bohr)
        if len(self.lam) < prof["min_bohr"]:
            raise PreconditionViolated(f"min_bohr: |Lambda| = {len(self.lam)} < {prof['min_bohr']}")
        for i, (E, s) in enumerate(((self.E1, self.shift[0]), (self.E2, self.shift[1])), 1):
            if not len(E):
                raise PreconditionViolated(f"beta_floor: E{i} is empty")
            if not all(v - s in self.lam for v in E.values):
                raise PreconditionViolated(f"E{i} - s{i} is not inside the Bohr set")
        if not _subset_of_product(self.A, self.E1, self.E2):
            raise PreconditionViolated("A is not inside E1 x E2")
        self.delta = len(self.A) / (len(self.E1) * len(self.E2))
        self.beta1 = len(self.E1) / len(self.lam)
        self.beta2 = len(self.E2) / len(self.lam)
        if self.delta < prof["delta_floor"]:
            raise PreconditionViolated(f"delta_floor: density {self.delta:.3g} below {prof['delta_floor']}")
        for b in (self.beta1, self.beta2):
            if b < prof["beta_floor"]:
                raise PreconditionViolated(f"beta_floor: relative size {b:.3g} below {prof['beta_floor']}")

    def relative(self) -> tuple[IntSet, IntSet, GridSet]:
        """(E1 - s1, E2 - s2, A - s) on the windows of Lambda."""
        s1, s2 = self.shift
        R1 = _relative(self.E1, s1, self.lam)
        R2 = _relative(self.E2, s2, self.lam)
        Ar = self.A.translate(-s1, -s2)
        return R1, R2, _restrict(Ar, R1, R2)

    def to_json(self) -> dict:
        return {"bohr": self.bohr.to_json(), "shift": list(self.shift), "delta": self.delta,
                "beta": [self.beta1, self.beta2], "sizes": [len(self.E1), len(self.E2), len(self.A)]}


# ---------------------------------------------------------------------------
# slice masses


@dataclass
class SliceMassReport:
    B: IntSet
    lhs: float
    rhs: float
    verdict: bool
    delta: float
    terms: dict

    def to_json(self) -> dict:
        return {"B": list(self.B.values), "lhs": self.lhs, "rhs": self.rhs, "verdict": self.verdict,
                "delta": self.delta, "terms": self.terms}


def _row_counts(A: GridSet, lo: int, hi: int) -> np.ndarray:
    """|A cap ({x} x Z)| for x in [lo, hi]."""
    out = np.zeros(hi - lo + 1, dtype=np.int64)
    win = A.window
    s, e = max(lo, win.x_lo), min(hi, win.x_hi)
    if s <= e:
        out[s - lo:e - lo + 1] = A.mask[s - win.x_lo:e - win.x_lo + 1].sum(axis=1)
    return out


def lemma41_check(A: GridSet, E1: IntSet, E2: IntSet, lam1: BohrSet, lam2: BohrSet,
                  lam_att: BohrSet, eta: float, kappa: float) -> SliceMassReport:
    """Slices Lambda' + s with density below delta - eta and the mass inequality

        sum_{s not in B} |A cap P_s| >= delta sum_{s not in B} |C cap P_s|
                                        + eta sum_{s in B} |C cap P_s| - 4 kappa |L'||L1||L2|

    for P_s = (Lambda' + s) x Lambda_2 and C = E1 x E2.  All sums are exact.
    """
    if not all(v in lam1 for v in E1.values) or not all(v in lam2 for v in E2.values):
        raise PreconditionViolated("E1 x E2 is not inside Lambda_1 x Lambda_2")
    if not _subset_of_product(A, E1, E2):
        raise PreconditionViolated("A is not inside E1 x E2")
    size_c = len(E1) * len(E2)
    delta = len(A) / size_c if size_c else 0.0
    s_vals = lam1.elements.astype(np.int64)
    lo, hi = int(s_vals.min()) + lam_att.lo, int(s_vals.max()) + lam_att.hi
    rows = _row_counts(_restrict(A, E1, E2), lo, hi)
    a_s = np.zeros(len(s_vals), dtype=np.int64)
    for a in lam_att.elements:
        a_s += rows[s_vals + int(a) - lo]
    c_s = translate_counts_1d(E1.mask, E1.lo, lam_att, s_vals) * len(E2)
    in_b = a_s < (delta - eta) * c_s
    lhs = float(a_s[~in_b].sum())
    kterm = 4 * kappa * len(lam_att) * len(lam1) * len(lam2)
    rhs = delta * float(c_s[~in_b].sum()) + eta * float(c_s[in_b].sum()) - kterm
    B = IntSet.from_iter(s_vals[in_b].tolist(), lam1.lo, lam1.hi)
    terms = {"mass_outside": lhs, "host_outside": float(c_s[~in_b].sum()),
             "host_inside": float(c_s[in_b].sum()), "kappa_term": kterm}
    return SliceMassReport(B, lhs, rhs, lhs >= rhs - 1e-9 * max(1.0, abs(rhs)), delta, terms)


# ---------------------------------------------------------------------------
# box increment from rectilinear non-uniformity


@dataclass
class GreenResult:
    F1: IntSet
    F2: IntSet
    new_density: float
    delta: float
    alpha: float
    measured: float
    evaluations: int
    source: str
    checks: list

    def __iter__(self):
        return iter((self.F1, self.F2, self.new_density))

    def to_json(self) -> dict:
        return {"F1": list(self.F1.values), "F2": list(self.F2.values),
                "new_density": self.new_density, "delta": self.delta, "alpha": self.alpha,
                "measured": self.measured, "evaluations": self.evaluations, "source": self.source,
                "checks": [c.to_json() for c in self.checks]}


def green_checks(A: GridSet, E1: IntSet, E2: IntSet, F1: IntSet, F2: IntSet,
                 delta: float, alpha: float) -> list:
    """Density gain delta + 2^-14 alpha^2 and sizes |F_i| >= 2^-8 alpha |E_i|, recomputed."""
    dens = box_density(A, F1, F2)
    sub = set(F1.values) <= set(E1.values) and set(F2.values) <= set(E2.values)
    return [
        Check("green.subsets", float(sub), 1.0, sub),
        Check("green.density_gain", dens, delta + 2 ** -14 * alpha ** 2, dens > delta + 2 ** -14 * alpha ** 2),
        Check("green.size_first", len(F1), 2 ** -8 * alpha * len(E1), len(F1) >= 2 ** -8 * alpha * len(E1)),
        Check("green.size_second", len(F2), 2 ** -8 * alpha * len(E2), len(F2) >= 2 ** -8 * alpha * len(E2)),
    ]


def green_increment(A: GridSet, E1: IntSet, E2: IntSet, alpha: float, budget: int = 20000,
                    seed: int = 0, patience: int = 64) -> GreenResult:
    """Verified search for F1 x F2 inside E1 x E2 on which A is denser.

    Column pairs (m, u) are visited by decreasing |sum_k f(k,m) f(k,u)| for the
    balanced f.  Each pair proposes the rows {k : (k,m), (k,u) in A} and their
    complement; columns above density delta on those rows form F2, and rows
    and columns are then re-thresholded alternately.  Seeded random row sets
    are tried when the pairs give nothing.  ``budget`` counts evaluated
    candidates; ``patience`` bounds the extra evaluations after the first
    success.  The candidate with the largest excess mass is returned.
    """
    if not _subset_of_product(A, E1, E2):
        raise PreconditionViolated("A is not inside E1 x E2")
    _, measured = rect_alpha_uniform(A, E1, E2, alpha)
    # the boundary measured == alpha is admitted; the conclusion survives the limit
    if measured < alpha * (1 - 1e-12) or measured == 0:
        raise NotNonUniform(f"box quantity {measured:.6g} < alpha = {alpha:.6g}")
    e1, e2 = E1.array(), E2.array()
    win = GridWindow(int(e1.min()), int(e1.max()), int(e2.min()), int(e2.max()))
    M = A.mask_on(win)[np.ix_(e1 - win.x_lo, e2 - win.y_lo)]
    Mf = M.astype(float)
    delta = float(Mf.mean())
    target = delta + 2 ** -14 * alpha ** 2
    s1 = max(1, math.ceil(2 ** -8 * alpha * len(e1) - 1e-12))
    s2 = max(1, math.ceil(2 ** -8 * alpha * len(e2) - 1e-12))
    n1, n2 = M.shape
    state = {"evals": 0, "best": None, "best_any": None, "found_at": None}

    def top(v, k):
        out = np.zeros(len(v), dtype=bool)
        out[np.argsort(-v, kind="stable")[:k]] = True
        return out

    def consider(r1, source):
        for _ in range(3):
            if r1.sum() < s1 or state["evals"] >= budget:
                return
            col = Mf[r1].mean(axis=0)
            r2 = col > delta
            if r2.sum() < s2:
                r2 = top(col, s2)
            state["evals"] += 1
            dens = float(Mf[np.ix_(r1, r2)].mean())
            excess = (dens - delta) * r1.sum() * r2.sum()
            cand = (excess, dens, r1.copy(), r2.copy(), source)
            if state["best_any"] is None or dens > state["best_any"][1]:
                state["best_any"] = cand
            if dens > target and (state["best"] is None or excess > state["best"][0]):
                state["best"] = cand
                if state["found_at"] is None:
                    state["found_at"] = state["evals"]
            row = Mf[:, r2].mean(axis=1)
            nxt = row > delta
            if nxt.sum() < s1:
                nxt = top(row, s1)
            if np.array_equal(nxt, r1):
                return
            r1 = nxt

    f = Mf - delta
    G = f.T @ f
    iu = np.triu_indices(n2)
    order = np.argsort(-np.abs(G[iu]), kind="stable")
    for idx in order:
        if state["evals"] >= budget:
            break
        if state["found_at"] is not None and state["evals"] - state["found_at"] > patience:
            break
        m, u = int(iu[0][idx]), int(iu[1][idx])
        R = M[:, m] & M[:, u]
        consider(R, f"pair({int(e2[m])},{int(e2[u])})")
        consider(~R, f"pair-complement({int(e2[m])},{int(e2[u])})")
    rng = np.random.default_rng(seed)
    while state["best"] is None and state["evals"] < budget:
        consider(rng.random(n1) < 0.5, "restart")
    if state["best"] is None:
        best = state["best_any"]
        info = None if best is None else {"density": best[1], "target": target, "source": best[4]}
        raise SearchBudgetExceeded(f"no verified pair within {budget} candidates", info)
    _, dens, r1, r2, source = state["best"]
    F1 = IntSet.from_iter(e1[r1].tolist(), E1.lo, E1.hi)
    F2 = IntSet.from_iter(e2[r2].tolist(), E2.lo, E2.hi)
    checks = green_checks(A, E1, E2, F1, F2, delta, alpha)
    if not all(c.ok for c in checks):
        raise AssertionError(f"unverified pair: {[c.to_json() for c in checks if not c.ok]}")
    return GreenResult(F1, F2, checks[1].lhs, delta, alpha, measured, state["evals"], source, checks)


# ---------------------------------------------------------------------------
# Fourier attendant


@dataclass
class BourgainResult:
    x0: float
    lam_prime: BohrSpec
    variance: float
    alpha_measured: float
    coefficient: float
    delta: float
    checks: list

    def __iter__(self):
        return iter((self.x0, self.lam_prime, self.variance))

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def to_json(self) -> dict:
        return {"x0": self.x0, "lam_prime": self.lam_prime.to_json(), "variance": self.variance,
                "alpha_measured": self.alpha_measured, "coefficient": self.coefficient,
                "delta": self.delta, "checks": [c.to_json() for c in self.checks]}


def _coefficient(Q: IntSet, lam: BohrSet, delta: float, x: float) -> float:
    """|sum_{n in Q cap Lambda} e(-n x) - delta sum_{n in Lambda} e(-n x)| by direct summation."""
    q = np.array([v for v in Q.values if v in lam], dtype=float)
    lamv = lam.elements.astype(float)
    s = np.exp(-2j * np.pi * q * x).sum() - delta * np.exp(-2j * np.pi * lamv * x).sum()
    return float(abs(s))


def bourgain_increment(Q: IntSet, lam: BohrSet, alpha: float, kappa: float,
                       scale: float | None = None, relax: float = 0.9,
                       extra_attendant: bool = False) -> BourgainResult:
    """Add the frequency of a large Fourier coefficient to the Bohr set.

    Finds x0 with |(Q cap Lambda - delta Lambda)^(x0)| >= alpha |Lambda|, puts
    theta' = theta + (x0,) and Lambda' = Lambda(theta', c eps, c N) with
    c = kappa / (100 d) unless ``scale`` is given.  Reports the variance of
    the local densities of Q on Lambda' + n, n in Lambda, against relax *
    alpha_measured^2 / 4.  With ``extra_attendant`` Lambda' is instead the
    regular attendant of Lambda with the extra frequency at the given scale.
    """
    f, delta = balanced_on_bohr(Q, lam)
    n = len(lam)
    br = sup_fourier(f)
    if br.upper < alpha * n:
        raise NoLargeCoefficient(f"sup {br.upper:.6g} < alpha |Lambda| = {alpha * n:.6g}")
    if br.lower < alpha * n:
        br = sup_fourier(f, tol=1e-12 * max(1.0, n))
        if br.lower < alpha * n:
            raise NoLargeCoefficient("sup bracket straddles alpha |Lambda|; no certified frequency")
    x0 = float(br.argmax) % 1.0
    coef = _coefficient(Q, lam, delta, x0)
    if coef < alpha * n * (1 - 1e-12):
        raise NoLargeCoefficient(f"recomputed coefficient {coef:.6g} < {alpha * n:.6g}")
    spec = lam.spec
    c = kappa / dim_factor(spec.dim) if scale is None else scale
    if extra_attendant:
        att = attendant(lam, c, [x0], kappa=kappa)
        new = BohrSpec(att.spec.theta, att.spec.eps, att.spec.N, 0)
    else:
        new = BohrSpec(tuple(spec.theta) + (x0,), min(1.0, c * spec.eps), math.floor(c * spec.N + 1e-12), 0)
    lp = build_bohr(new)
    qi = _intersect(Q, lam)
    dens = local_densities(qi, lp, lam.elements)
    variance = float(np.mean((dens - delta) ** 2))
    a_m = coef / n
    checks = [
        Check("fourier.coefficient", coef, alpha * n, coef >= alpha * n * (1 - 1e-12)),
        Check("fourier.variance_gain", variance, relax * a_m ** 2 / 4, variance >= relax * a_m ** 2 / 4),
    ]
    return BourgainResult(x0, new, variance, a_m, coef, delta, checks)


# ---------------------------------------------------------------------------
# mean-square inequalities for local densities


L2_SELECTORS = ("mean_square", "variance_lift", "product_variance", "product_fourier")


@dataclass
class L2Report:
    selector: str
    lhs: float
    rhs: float
    verdict: bool
    alpha: float | None
    details: dict
    checks: list

    def to_json(self) -> dict:
        return {"selector": self.selector, "lhs": self.lhs, "rhs": self.rhs, "verdict": self.verdict,
                "alpha": self.alpha, "details": self.details, "checks": [c.to_json() for c in self.checks]}


def _mean_square_1d(Q: IntSet, lam: BohrSet, att: BohrSet) -> tuple[float, np.ndarray]:
    dens = local_densities(Q, att, lam.elements)
    return float(np.mean(dens ** 2)), dens


def _mean_square_2d(Q: GridSet, lam: BohrSet, att: BohrSet) -> tuple[float, np.ndarray]:
    C = translate_counts_2d(Q.mask, Q.window, att, lam.elements, lam.elements) / len(att) ** 2
    return float(np.mean(C ** 2)), C


def _window_ok(lam: BohrSet, att: BohrSet, c: float) -> bool:
    return (tuple(att.spec.theta[:lam.dim]) == tuple(lam.spec.theta)
            and att.spec.N <= c * lam.spec.N + 1e-12 and att.spec.eps <= c * lam.spec.eps + 1e-15)


def l2_checks(selector: str, lam: BohrSet, lam_att: BohrSet | None = None, Q=None,
              E1: IntSet | None = None, E2: IntSet | None = None, alpha: float | None = None,
              kappa: float = 0.1, strict: bool = True) -> L2Report:
    """Evaluate one mean-square inequality exactly.

    mean_square:      mean over x of delta_{L'+x}(Q)^2 >= delta(Q)^2 - 8 kappa
    variance_lift:    mean of delta_{L'+x}(Q)^2 >= delta^2 + alpha - 4 kappa when the
                      mean of |delta_{L'+x}(Q) - delta|^2 is at least alpha
    product_variance: mean over n in Lambda^2 of delta_{L'+n}(E1 x E2)^2
                      >= beta1^2 beta2^2 (1 + alpha^2/2), alpha the measured
                      local-density deviation of E1 or E2
    product_fourier:  the same with (1 + alpha^2/8), alpha the measured Fourier
                      deviation, Lambda' built by ``bourgain_increment``

    Q may be an IntSet (one-dimensional form) or a GridSet inside Lambda^2.
    With ``strict`` the attendant must lie in its kappa/(100 d) window.
    """
    if selector not in L2_SELECTORS:
        raise ValueError(f"unknown selector {selector!r}; choose from {L2_SELECTORS}")
    n = len(lam)
    c = kappa / dim_factor(lam.dim)
    checks = []
    details = {}
    if selector in ("mean_square", "variance_lift"):
        if lam_att is None or Q is None:
            raise PreconditionViolated(f"{selector} needs Q and an attendant")
        if strict and not _window_ok(lam, lam_att, c):
            raise PreconditionViolated("attendant parameters exceed the kappa/(100d) window")
        if isinstance(Q, GridSet):
            ms, dens = _mean_square_2d(Q, lam, lam_att)
            lm = lam.mask_on(lam.lo, lam.hi)
            inside = Q.mask_on(GridWindow(lam.lo, lam.hi, lam.lo, lam.hi)) & np.outer(lm, lm)
            delta = float(inside.sum()) / n ** 2
        else:
            ms, dens = _mean_square_1d(_intersect(Q, lam), lam, lam_att)
            delta = sum(1 for v in Q.values if v in lam) / n
        hyp = float(np.mean((dens - delta) ** 2))
        details.update({"delta": delta, "variance": hyp, "window_ok": _window_ok(lam, lam_att, c)})
        if selector == "mean_square":
            lhs, rhs, a = ms, delta ** 2 - 8 * kappa, None
        else:
            a = hyp if alpha is None else alpha
            if hyp < a:
                raise PreconditionViolated(f"variance {hyp:.6g} below the hypothesis alpha = {a:.6g}")
            lhs, rhs = ms, delta ** 2 + a - 4 * kappa
        checks.append(Check(f"l2.{selector}", lhs, rhs, lhs >= rhs - 1e-12))
        return L2Report(selector, lhs, rhs, lhs >= rhs - 1e-12, a, details, checks)

    if E1 is None or E2 is None:
        raise PreconditionViolated(f"{selector} needs E1 and E2")
    E1i, E2i = _intersect(E1, lam), _intersect(E2, lam)
    b1, b2 = len(E1i) / n, len(E2i) / n
    if selector == "product_variance":
        if lam_att is None:
            raise PreconditionViolated("product_variance needs an attendant")
        devs = []
        for E, b in ((E1i, b1), (E2i, b2)):
            d = local_densities(E, lam_att, lam.elements)
            devs.append(float(np.mean((d - b) ** 2)))
        a = math.sqrt(max(devs)) if alpha is None else alpha
        if max(devs) < a ** 2:
            raise PreconditionViolated("neither set fails the variance clause at alpha")
        c_win = 2 ** -10 * a ** 2 * b1 ** 2 * b2 ** 2 / dim_factor(lam.dim)
        ok_win = _window_ok(lam, lam_att, c_win)
        if strict and not ok_win:
            raise PreconditionViolated("attendant parameters exceed the product-variance window")
        att = lam_att
        details.update({"variances": devs, "window_ok": ok_win})
        rhs = b1 ** 2 * b2 ** 2 * (1 + a ** 2 / 2)
    else:
        sups = []
        for E in (E1i, E2i):
            f, _ = balanced_on_bohr(E, lam)
            sups.append(sup_fourier(f).lower / n)
        i = int(np.argmax(sups))
        a = sups[i] if alpha is None else alpha
        res = bourgain_increment((E1i, E2i)[i], lam, a, kappa)
        att = build_bohr(res.lam_prime)
        details.update({"fourier": sups, "x0": res.x0, "lam_prime": res.lam_prime.to_json(),
                        "variance": res.variance})
        checks.extend(res.checks)
        rhs = b1 ** 2 * b2 ** 2 * (1 + a ** 2 / 8)
    # delta_{L'^2 + n}(E1 x E2) = delta_{L'+n1}(E1) delta_{L'+n2}(E2)
    m1 = float(np.mean(local_densities(E1i, att, lam.elements) ** 2))
    m2 = float(np.mean(local_densities(E2i, att, lam.elements) ** 2))
    lhs = m1 * m2
    details.update({"beta": [b1, b2], "factors": [m1, m2]})
    checks.append(Check(f"l2.{selector}", lhs, rhs, lhs >= rhs - 1e-12))
    return L2Report(selector, lhs, rhs, lhs >= rhs - 1e-12, a, details, checks)


# ---------------------------------------------------------------------------
# index ladder


FUNCTIONALS = ("g", "g1", "g2", "g3")


@dataclass
class IndexChain:
    """Root Bohr set and one starred attendant per level.

    Level-k nodes are y = x_0 + a_1 + ... + a_k with x_0 in Lambda_0^2 and
    a_j in (Lambda*_{j-1})^2, so Lambda_k(x_0, ..., x_{k-1}) = Lambda*_{k-1} + x_{k-1}.
    Stars do not depend on the path.  ``E`` and ``A`` are in the relative
    coordinates of the root.
    """

    root: BohrSet
    stars: list
    E: GridSet
    A: GridSet | None = None

    @property
    def depth(self) -> int:
        return len(self.stars) - 1

    def weights(self, k: int) -> tuple[int, np.ndarray]:
        """(lo, u) with u the one-dimensional law of a level-k coordinate."""
        if not 0 <= k <= self.depth:
            raise PreconditionViolated(f"chain has no level {k}")
        r = self.root
        u = r.mask_on(r.lo, r.hi) / len(r)
        lo = r.lo
        for s in self.stars[:k]:
            u = np.convolve(u, s.mask_on(s.lo, s.hi) / len(s))
            lo += s.lo
        return lo, u

    def window_checks(self, kappa: float) -> list[bool]:
        out = []
        prev = self.root
        for s in self.stars:
            out.append(in_attendant_window(prev.spec, s.spec, kappa / dim_factor(prev.dim)))
            prev = s
        return out

    def values(self, g: str, k: int, ys: np.ndarray) -> np.ndarray:
        """g(Lambda*_k, (y1, y2)) on the grid ys x ys."""
        if g not in FUNCTIONALS:
            raise ValueError(f"unknown functional {g!r}")
        star = self.stars[k]
        area = len(star) ** 2
        cE = translate_counts_2d(self.E.mask, self.E.window, star, ys, ys)
        if g in ("g", "g3"):
            v = cE / area
            return v ** 2 if g == "g" else v
        if self.A is None:
            raise PreconditionViolated(f"{g} needs the set A")
        A = self.A.intersect(self.E)
        cA = translate_counts_2d(A.mask, A.window, star, ys, ys)
        if g == "g1":
            return cA / area
        return np.divide(cA, cE, out=np.zeros(cA.shape), where=cE > 0)


def _marker_mask(restriction, ys: np.ndarray) -> np.ndarray:
    if restriction is None:
        return np.ones((len(ys), len(ys)), dtype=bool)
    if isinstance(restriction, GridSet):
        return restriction.mask_on(GridWindow(int(ys[0]), int(ys[-1]), int(ys[0]), int(ys[-1])))
    if callable(restriction):
        return np.asarray(restriction(ys[:, None], ys[None, :]), dtype=bool)
    m = np.asarray(restriction, dtype=bool)
    if m.shape != (len(ys), len(ys)):
        raise ValueError("restriction mask has the wrong shape")
    return m


def index_eval(chain: IndexChain, g: str = "g3", k: int = 0, restriction=None) -> float:
    """Nested average of g(Lambda*_k, y) over the level-k nodes, each level
    averaging uniformly over its node set; ``restriction`` (a GridSet of
    marked nodes, a boolean mask on the node grid, or a callable of (y1, y2))
    keeps only the marked nodes in the innermost sum."""
    lo, u = chain.weights(k)
    ys = lo + np.arange(len(u))
    vals = chain.values(g, k, ys)
    mask = _marker_mask(restriction, ys)
    ind = float(np.sum(np.outer(u, u) * mask * vals))
    if abs(ind) > 1 + 1e-12:
        raise AssertionError(f"index {ind} outside [-1, 1]")
    return ind


def index_drift_check(chain: IndexChain, k: int, kappa: float) -> Check:
    """|ind_k(g3) - delta| <= 4 kappa (k + 1) with delta the density of E on the root square."""
    r = chain.root
    rm = r.mask_on(r.lo, r.hi)
    inside = chain.E.mask_on(GridWindow(r.lo, r.hi, r.lo, r.hi)) & np.outer(rm, rm)
    delta = float(inside.sum()) / len(r) ** 2
    ind = index_eval(chain, "g3", k)
    return Check("index.drift", abs(ind - delta), 4 * kappa * (k + 1), abs(ind - delta) <= 4 * kappa * (k + 1))


# ---------------------------------------------------------------------------
# uniformity of many translates at once


@dataclass
class NodeClauses:
    centers: np.ndarray
    density: np.ndarray
    fail22: np.ndarray
    fail23: np.ndarray
    fail24: np.ndarray
    fail24_half: np.ndarray
    sup_upper: np.ndarray

    @property
    def uniform(self) -> np.ndarray:
        return ~(self.fail22 | self.fail23 | self.fail24)


def node_clauses(E: IntSet, star: BohrSet, star_att: BohrSet, centers, sigma: float) -> NodeClauses:
    """Clauses of (sigma)-uniformity of (E - p) cap star inside ``star`` for every p in ``centers``.

    Same definitions as ``uniformity_report`` (attendant ``star_att``),
    evaluated in one vectorized pass.
    """
    centers = np.asarray(centers, dtype=np.int64)
    smask = star.mask_on(star.lo, star.hi)
    n = len(star)
    ext_lo = star.lo + min(0, star_att.lo)
    ext_hi = star.hi + max(0, star_att.hi)
    ext = np.arange(ext_lo, ext_hi + 1)
    in_star = star.mask_on(ext_lo, ext_hi)
    pos = centers[:, None] + ext[None, :]
    emask = E.mask_on(int(pos.min()), int(pos.max()))
    Qx = emask[pos - pos.min()] & in_star[None, :]
    Q = Qx[:, star.lo - ext_lo:star.hi - ext_lo + 1]
    dens = Q.sum(axis=1) / n
    F = Q - dens[:, None] * smask[None, :]
    lower, upper = sup_fourier_rows(F)
    fail24 = count_large_rows(F, sigma * n)
    fail24_half = count_large_rows(F, sigma * n / 2)
    # local densities and translate rows on the attendant, for m in star
    els = star.elements.astype(np.int64)
    att_span = np.arange(star_att.lo, star_att.hi + 1)
    amask = star_att.mask_on(star_att.lo, star_att.hi)
    idx = els[:, None] + att_span[None, :] - ext_lo
    vals = Qx[:, idx]  # (P, |star|, att span)
    ld = (vals & amask[None, None, :]).sum(axis=2) / len(star_att)
    var = np.mean((ld - dens[:, None]) ** 2, axis=1)
    fail23 = var > sigma ** 2
    rows = (vals.astype(float) - dens[:, None, None]) * amask[None, None, :]
    large = count_large_rows(rows.reshape(-1, len(att_span)), sigma * len(star_att))
    b_size = large.reshape(len(centers), len(els)).sum(axis=1)
    fail22 = b_size > sigma * n
    return NodeClauses(centers, dens, fail22, fail23, fail24, fail24_half, upper)


# ---------------------------------------------------------------------------
# uniformization ladder


CASE_LEMMA = {1: "translate_attendant", 2: "variance_attendant", 3: "fourier_attendant"}


@dataclass
class UniformizeResult:
    lam_out: BohrSpec
    t: tuple
    E1: IntSet
    E2: IntSet
    trace: list
    A: GridSet | None = None
    density: float | None = None
    stop: str = "uniform"
    checks: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.lam_out, self.t, self.E1, self.E2, self.trace))

    def to_json(self) -> dict:
        return {"lam_out": self.lam_out.to_json(), "t": list(self.t), "E1": list(self.E1.values),
                "E2": list(self.E2.values), "density": self.density, "stop": self.stop,
                "trace": [r.to_json() for r in self.trace], "checks": [c.to_json() for c in self.checks]}


def _is_uniform(E: IntSet, lam: BohrSet, att: BohrSet, sigma: float) -> bool:
    return uniformity_report(E, lam, att, sigma).uniform


def local_gain(E: GridSet, parent: BohrSet, node: tuple, star: BohrSet) -> tuple[float, float]:
    """(g(parent, node), mean of g(star, y) over y in parent^2 + node) for g = delta^2 of E."""
    x1, x2 = node
    c_par = translate_counts_2d(E.mask, E.window, parent, np.array([x1]), np.array([x2]))[0, 0]
    before = (c_par / len(parent) ** 2) ** 2
    ys1 = parent.elements.astype(np.int64) + x1
    ys2 = parent.elements.astype(np.int64) + x2
    C = translate_counts_2d(E.mask, E.window, star, ys1, ys2) / len(star) ** 2
    return float(before), float(np.mean(C ** 2))


def _level_eval(E1, E2, star, star_att, lo, u, sigma, tau, beta):
    ys = lo + np.arange(len(u))
    n1 = node_clauses(E1, star, star_att, ys, sigma)
    n2 = node_clauses(E2, star, star_att, ys, sigma)
    g3 = np.outer(n1.density, n2.density)
    dense = g3 >= tau * beta / 16
    uniform = np.outer(n1.uniform, n2.uniform)
    bad = dense & ~uniform
    w = np.outer(u, u)
    return ys, n1, n2, g3, bad, w


def uniformize(E1: IntSet, E2: IntSet, lam: BohrSet, shift=(0, 0),
               profile: ConstantsProfile | None = None, A: GridSet | None = None,
               tau: float | None = None, delta: float | None = None) -> UniformizeResult:
    """Pass to a Bohr set on whose translates E1 - s1 and E2 - s2 are uniform.

    Returns (lam_out, t, E1', E2', trace) with E'_i = (E_i - t_i) cap lam_out
    in relative coordinates.  Level stars are chosen once per level for all
    paths: the Fourier attendant when some bad node fails the Fourier clause
    at sigma/2, otherwise the attendant with the same frequencies.  The
    ladder stops when the bad-node index of g3 drops below tau beta/4, or when
    the next star would fall below ``min_bohr``; the output node is then a
    uniform, dense node maximizing the relative density of A (or of E).  All
    three output properties are re-verified.
    """
    prof = _profile(profile, "uniformize")
    sigma, eps, kappa = prof["sigma"], prof["eps_prime"], prof["kappa"]
    tau = prof["tau"] if tau is None else tau
    s1, s2 = int(shift[0]), int(shift[1])
    for E, s in ((E1, s1), (E2, s2)):
        if not all(v - s in lam for v in E.values):
            raise PreconditionViolated("E_i - s_i is not inside the Bohr set")
    R1, R2 = _relative(E1, s1, lam), _relative(E2, s2, lam)
    n = len(lam)
    b1, b2 = len(R1) / n, len(R2) / n
    beta = b1 * b2
    if beta == 0:
        raise PreconditionViolated("beta_floor: empty host set")
    Er = GridSet(GridWindow(lam.lo, lam.hi, lam.lo, lam.hi),
                 np.outer(R1.mask_on(lam.lo, lam.hi), R2.mask_on(lam.lo, lam.hi)))
    Ar = None
    dE = None
    if A is not None:
        Ar = _restrict(A.translate(-s1, -s2), R1, R2)
        dE = len(Ar) / (len(R1) * len(R2))
        if delta is None:
            delta = dE - tau
    try:
        att0 = attendant(lam, eps, kappa=kappa)
    except NotFound as exc:
        raise StepBudgetExceeded(f"no uniformity attendant for the host: {exc}", [])
    trace: list = []
    if _is_uniform(R1, lam, att0, sigma) and _is_uniform(R2, lam, att0, sigma):
        return UniformizeResult(lam.spec, (s1, s2), R1, R2, trace, Ar, dE, "uniform")

    # star of level 0
    fails = []
    for R in (R1, R2):
        f, _ = balanced_on_bohr(R, lam)
        br = sup_fourier(f)
        fails.append((br.upper > sigma / 2 * n, br.lower / n))
    case0 = 3 if any(fl for fl, _ in fails) else (
        2 if any(uniformity_report(R, lam, att0, sigma).variance > sigma ** 2 for R in (R1, R2)) else 1)
    stars, star_atts = [], []

    def build_star(parent: BohrSet, fourier_sets):
        """(star, its attendant, used_fourier); a Fourier star below min_bohr
        falls back to the attendant with the parent's frequencies."""
        star = None
        if fourier_sets:
            Q, host = max(fourier_sets, key=lambda qs: qs[2])[:2]
            f, _ = balanced_on_bohr(Q, host)
            try:
                star = attendant(parent, eps, [float(sup_fourier(f).argmax) % 1.0], kappa=kappa)
            except NotFound:
                star = None
            if star is not None and len(star) < prof["min_bohr"]:
                star = None
        used = star is not None
        if star is None:
            star = attendant(parent, eps, kappa=kappa)
        if len(star) < prof["min_bohr"]:
            raise NotFound(f"star of size {len(star)} below min_bohr")
        return star, attendant(star, eps, kappa=kappa), used

    fourier0 = [(R, lam, a) for R, (fl, a) in zip((R1, R2), fails) if fl]
    try:
        st, sa, used = build_star(lam, fourier0)
    except NotFound as exc:
        raise StepBudgetExceeded(f"Bohr scale exhausted at level 0: {exc}", trace)
    stars.append(st)
    star_atts.append(sa)
    chain = IndexChain(lam, stars, Er, Ar)
    before, after = local_gain(Er, lam, (0, 0), st)
    trace.append(StepRecord(0, case0, CASE_LEMMA[case0], before, after, after - before,
                            _bohr_info(st.spec), (0, 0),
                            {"index_g": index_eval(chain, "g", 0), "node": [0, 0],
                             "parent": lam.spec.to_json(), "star": st.spec.to_json(),
                             "fourier_attendant": used, "fourier_degenerate": bool(fourier0) and not used}))
    k = 0
    stop = "index"
    while True:
        lo, u = chain.weights(k)
        ys, n1, n2, g3, bad, w = _level_eval(R1, R2, stars[k], star_atts[k], lo, u, sigma, tau, beta)
        bad_index = float(np.sum(w * bad * g3))
        trace[-1].extra["bad_index"] = bad_index
        trace[-1].extra["stop_threshold"] = tau * beta / 4
        if bad_index < tau * beta / 4:
            break
        if k + 1 > prof["step_budget"]:
            raise StepBudgetExceeded(f"ladder exceeded {prof['step_budget']} steps", trace)
        # classify bad nodes; case 3 when a coordinate fails the Fourier clause
        f3 = np.logical_or.outer(n1.fail24, n2.fail24) & bad
        f2 = np.logical_or.outer(n1.fail23, n2.fail23) & bad & ~f3
        f1 = bad & ~f3 & ~f2
        mass = {c: float(np.sum(w * m * g3)) for c, m in ((1, f1), (2, f2), (3, f3))}
        case = max(mass, key=lambda c: (mass[c], c))
        half = np.logical_or.outer(n1.fail24_half, n2.fail24_half) & bad
        sel = {1: f1, 2: f2, 3: f3}[case]
        score = np.where(sel, w * g3, -1.0)
        i, j = np.unravel_index(int(np.argmax(score)), score.shape)
        node = (int(ys[i]), int(ys[j]))
        fourier = []
        if half.any():
            hs = np.where(half, w * g3, -1.0)
            a, b = np.unravel_index(int(np.argmax(hs)), hs.shape)
            for R, nc, idx in ((R1, n1, a), (R2, n2, b)):
                if nc.fail24_half[idx]:
                    Q = IntSet.from_iter([v - int(ys[idx]) for v in R.values if v - int(ys[idx]) in stars[k]],
                                         stars[k].lo, stars[k].hi)
                    fourier.append((Q, stars[k], float(nc.sup_upper[idx])))
        try:
            st, sa, used = build_star(stars[k], fourier)
        except NotFound:
            stop = "scale_floor"
            break
        stars.append(st)
        star_atts.append(sa)
        chain = IndexChain(lam, stars, Er, Ar)
        before, after = local_gain(Er, stars[k], node, st)
        ind_prev = trace[-2].extra["index_g"] if len(trace) >= 2 else None
        ind_new = index_eval(chain, "g", k + 1)
        extra = {"index_g": ind_new, "node": list(node), "case_mass": {str(c): v for c, v in mass.items()},
                 "parent": stars[k].spec.to_json(), "star": st.spec.to_json(),
                 "fourier_attendant": used, "fourier_degenerate": bool(fourier) and not used}
        if ind_prev is not None:
            extra["two_step_gain"] = ind_new - ind_prev
            extra["two_step_floor"] = 2 ** -25 * tau ** 4 * beta ** 4 * sigma ** 3
        trace.append(StepRecord(k + 1, case, CASE_LEMMA[case], before, after, after - before,
                                _bohr_info(st.spec), node, extra))
        k += 1

    # output node: uniform, dense, largest relative density of A (or of E)
    lo, u = chain.weights(k)
    ys, n1, n2, g3, bad, w = _level_eval(R1, R2, stars[k], star_atts[k], lo, u, sigma, tau, beta)
    good = np.outer(n1.uniform, n2.uniform) & (g3 >= tau * beta / 16) & (w > 0)
    score = chain.values("g2", k, ys) if Ar is not None else g3
    if Ar is not None and delta is not None:
        good &= score >= delta + tau / 16
    star = stars[k]
    order = np.argsort(-np.where(good, score, -np.inf), axis=None, kind="stable")
    for flat in order[:64]:
        i, j = np.unravel_index(int(flat), good.shape)
        if not good[i, j]:
            break
        y = (int(ys[i]), int(ys[j]))
        F1 = IntSet.from_iter([v - y[0] for v in R1.values if v - y[0] in star], star.lo, star.hi)
        F2 = IntSet.from_iter([v - y[1] for v in R2.values if v - y[1] in star], star.lo, star.hi)
        checks = [
            Check("uniformize.size", len(F1) * len(F2), beta * tau * len(star) ** 2 / 16,
                  len(F1) * len(F2) >= beta * tau * len(star) ** 2 / 16),
            Check("uniformize.first_uniform", 1.0, 1.0, _is_uniform(F1, star, star_atts[k], sigma)),
            Check("uniformize.second_uniform", 1.0, 1.0, _is_uniform(F2, star, star_atts[k], sigma)),
        ]
        Aout = dens = None
        if Ar is not None:
            Aout = _restrict(Ar.translate(-y[0], -y[1]), F1, F2)
            dens = len(Aout) / (len(F1) * len(F2)) if len(F1) and len(F2) else 0.0
            if delta is not None:
                checks.append(Check("uniformize.density", dens, delta + tau / 16, dens >= delta + tau / 16))
        if all(c.ok for c in checks):
            return UniformizeResult(star.spec, (y[0] + s1, y[1] + s2), F1, F2, trace, Aout, dens, stop, checks)
    raise StepBudgetExceeded(f"ladder stopped ({stop}) at level {k} without a uniform dense node", trace)


# ---------------------------------------------------------------------------
# one increment step


BRANCHES = ("slice", "slice_surplus", "triple", "green")


@dataclass
class StepResult:
    lam_tilde: BohrSpec
    y: tuple
    F1: IntSet
    F2: IntSet
    gain: float
    branch: str
    routed: bool
    density: float
    delta: float
    diagnostics: dict
    checks: list

    def __iter__(self):
        return iter((self.lam_tilde, self.y, self.F1, self.F2, self.gain))

    def to_json(self) -> dict:
        return {"lam_tilde": self.lam_tilde.to_json(), "y": list(self.y), "F1": list(self.F1.values),
                "F2": list(self.F2.values), "gain": self.gain, "branch": self.branch,
                "routed": self.routed, "density": self.density, "delta": self.delta,
                "diagnostics": self.diagnostics, "checks": [c.to_json() for c in self.checks]}


def make_hosts(lam: BohrSet, profile: ConstantsProfile) -> Hosts:
    """Lambda_1 = Lambda_2 = lam, Lambda' and Lambda'' successive eps-attendants."""
    eps, kappa = profile["eps"], profile["kappa"]
    att = attendant(lam, eps, kappa=kappa)
    try:
        att2 = attendant(att, eps, kappa=kappa)
    except NotFound:
        att2 = None
    return Hosts(lam, lam, att, att2)


def _box_table(A: GridSet, E1: IntSet, E2: IntSet, att: BohrSet, xs, ys):
    counts = translate_counts_2d(A.mask, A.window, att, np.asarray(xs), np.asarray(ys))
    f1 = translate_counts_1d(E1.mask, E1.lo, att, np.asarray(xs))
    f2 = translate_counts_1d(E2.mask, E2.lo, att, np.asarray(ys))
    return counts, f1, f2


def _best_box(counts, f1, f2, ok, delta):
    """Index of the admissible box with the largest excess mass count - delta |F1||F2|."""
    sizes = np.outer(f1, f2).astype(float)
    excess = np.where(ok & (sizes > 0), counts - delta * sizes, -np.inf)
    flat = int(np.argmax(excess))
    if not np.isfinite(excess.flat[flat]):
        return None
    return np.unravel_index(flat, excess.shape)


def theorem43_step(A: GridSet, E1: IntSet, E2: IntSet, hosts: Hosts | None = None,
                   profile: ConstantsProfile | None = None, green_tries: int = 8,
                   check_corners: bool = True) -> StepResult:
    """One density increment for a corner-free A inside E1 x E2 (relative coordinates).

    Branches, in the order of the case analysis:
      slice          all non-uniform slices are sparse; a box (L'+l) x (L'+a)
                     with l outside B1 gains 2^-6 alpha1 eta
      slice_surplus  a non-uniform slice has density >= delta + eta; its best
                     box gains eta/2
      triple         a box (L''+c) x (L''+p) inside a balanced slice L' + l0
                     gains eta/32 (c = j - k, p = k + i)
      green          rectilinear non-uniformity of A on a box of large local
                     norm; the box increment gains 2^-40 alpha^2
    A branch is routed when the case analysis selects it.  Routed branches are
    tried first, then the others; the first verified branch wins, and within
    a branch the admissible box with the largest excess mass is returned.
    """
    prof = _profile(profile, "theorem43_step")
    if check_corners and not is_corner_free(A, "nonzero_d"):
        raise PreconditionViolated("A contains a corner")
    if not _subset_of_product(A, E1, E2):
        raise PreconditionViolated("A is not inside E1 x E2")
    if not len(E1) or not len(E2):
        raise PreconditionViolated("beta_floor: empty host set")
    delta = len(A) / (len(E1) * len(E2))
    if delta < prof["delta_floor"]:
        raise PreconditionViolated(f"delta_floor: density {delta:.3g} below {prof['delta_floor']}")
    if hosts is None:
        lo = min(E1.lo, E2.lo)
        hi = max(E1.hi, E2.hi)
        N = max(abs(lo), abs(hi))
        hosts = make_hosts(build_bohr(BohrSpec((), 1.0, N)), prof)
    lam1, lam2, att, att2 = hosts.lam1, hosts.lam2, hosts.lam_att, hosts.lam_att2
    if len(att) < prof["min_bohr"]:
        raise NoIncrementFound("attendant below min_bohr", {"att_size": len(att)})
    beta1, beta2 = len(E1) / len(lam1), len(E2) / len(lam2)
    alpha, alpha1, eta, alpha0 = prof["alpha"], prof["alpha1"], prof["eta"], prof["alpha0"]
    A = _restrict(A, E1, E2)
    ls = lam1.elements.astype(np.int64)
    diag: dict = {"delta": delta, "beta": [beta1, beta2], "hosts": hosts.to_json()}

    # slice statistics
    d1 = local_densities(E1, att, ls)
    B1 = np.abs(d1 - beta1) >= 4 * alpha0 ** 0.5
    second = att2 is not None and len(att2) >= prof["min_bohr"]
    if second:
        sl = rect_a_a1_eps(A, E1, E2, hosts, alpha, alpha1)
        norms = np.array([sl.norms[int(l)] for l in ls])
        Bm = norms > sl.threshold
        nc = node_clauses(E1, att, att2, ls, 8 * alpha0 ** 0.25)
        B2 = ~nc.uniform
        diag.update({"B": int(Bm.sum()), "rect_uniform": bool(sl.verdict), "B2": int(B2.sum())})
    else:
        norms = np.zeros(len(ls))
        Bm = np.zeros(len(ls), dtype=bool)
        B2 = np.zeros(len(ls), dtype=bool)
        diag["second_attendant"] = None if att2 is None else len(att2)
    Bp = Bm & ~(B1 | B2)
    counts, f1, f2 = _box_table(A, E1, E2, att, ls, lam2.elements)
    rows = _row_counts(A, int(ls.min()) + att.lo, int(ls.max()) + att.hi)
    a_s = np.zeros(len(ls), dtype=np.int64)
    for a in att.elements:
        a_s += rows[ls + int(a) - (int(ls.min()) + att.lo)]
    c_s = f1 * len(E2)
    r_s = np.divide(a_s, c_s, out=np.zeros(len(ls)), where=c_s > 0)
    cond92 = bool(np.all(r_s[Bp] <= delta - eta))
    high = Bp & (r_s > delta - eta)
    diag.update({"B1": int(B1.sum()), "B_prime": int(Bp.sum()), "sparse_bad_slices": cond92,
                 "max_slice_density": float(r_s.max()) if len(r_s) else 0.0})
    size_ok = np.outer(f1 >= beta1 * len(att) / 2, f2 >= beta2 * len(att) / 2)

    def finish(branch, routed, spec, y, F1, F2, need, extra_checks=()):
        dens = box_density(A, F1, F2)
        checks = [Check(f"increment.{branch}.density", dens, need, dens >= need - 1e-12)]
        checks.extend(extra_checks)
        if not all(c.ok for c in checks):
            return None
        return StepResult(spec, y, F1, F2, dens - delta, branch, routed, dens, delta, diag, checks)

    def box_sets(l, a, set_att, rows_mask=None):
        F1 = IntSet.from_iter([v for v in E1.values if v - l in set_att and (rows_mask is None or v in rows_mask)],
                              E1.lo, E1.hi)
        F2 = IntSet.from_iter([v for v in E2.values if v - a in set_att], E2.lo, E2.hi)
        return F1, F2

    def try_slice(routed):
        need = delta + 2 ** -6 * alpha1 * eta
        okl = ~B1 & ~Bp & (r_s > delta + 2 ** -5 * alpha1 * eta)
        ok = size_ok & okl[:, None]
        idx = _best_box(counts, f1, f2, ok, delta)
        if idx is None:
            return None
        l, a = int(ls[idx[0]]), int(lam2.elements[idx[1]])
        F1, F2 = box_sets(l, a, att)
        sz = [Check("increment.slice.size_first", len(F1), beta1 * len(att) / 2, len(F1) >= beta1 * len(att) / 2),
              Check("increment.slice.size_second", len(F2), beta2 * len(att) / 2, len(F2) >= beta2 * len(att) / 2)]
        return finish("slice", routed, att.spec, (l, a), F1, F2, need, sz)

    def try_surplus(routed):
        need = delta + eta / 2
        cand = high if routed else ~B1
        if not cand.any():
            return None
        i = int(np.argmax(np.where(cand, r_s, -np.inf)))
        ok = np.zeros_like(size_ok)
        ok[i] = size_ok[i]
        idx = _best_box(counts, f1, f2, ok, delta)
        if idx is None:
            return None
        l, a = int(ls[idx[0]]), int(lam2.elements[idx[1]])
        F1, F2 = box_sets(l, a, att)
        sz = [Check("increment.slice_surplus.size_first", len(F1), beta1 * len(att) / 2,
                    len(F1) >= beta1 * len(att) / 2),
              Check("increment.slice_surplus.size_second", len(F2), beta2 * len(att) / 2,
                    len(F2) >= beta2 * len(att) / 2)]
        return finish("slice_surplus", routed, att.spec, (l, a), F1, F2, need, sz)

    # triple stage on Lambda_0 = Lambda' + l0
    balanced = Bp & (np.abs(r_s - delta) < eta)
    if balanced.any():
        pool, regime = balanced, "balanced_bad_slice"
    elif Bp.any():
        pool, regime = Bp, "bad_slice"
    else:
        pool, regime = ~B1, "outside_case_analysis"
    l0 = int(ls[int(np.argmax(np.where(pool, norms if second else r_s, -np.inf)))]) if pool.any() else None
    diag.update({"l0": l0, "triple_regime": regime})
    triple_data = {}

    def triple_tables():
        if triple_data or not second or l0 is None:
            return triple_data or None
        lam0 = att.translate(l0)
        E1_0 = IntSet.from_iter([v for v in E1.values if v in lam0], E1.lo, E1.hi)
        A0 = _restrict(A, E1_0, E2)
        fA, _ = balanced_grid_fn(A, E1, E2)
        win = GridWindow(lam0.lo, lam0.hi, fA.window.y_lo, fA.window.y_hi)
        rmask = lam0.mask_on(win.x_lo, win.x_hi)
        ft = GridFn(win, fA.on(win) * rmask[:, None])
        cs, ps, W = eps_norm_terms(ft, att2)
        cnt = translate_counts_2d(A0.mask, A0.window, att2, cs, ps)
        g1 = translate_counts_1d(E1_0.mask, E1_0.lo, att2, cs)
        g2 = translate_counts_1d(E2.mask, E2.lo, att2, ps)
        ok = np.outer(g1 >= beta1 * len(att2) / 2, g2 >= beta2 * len(att2) / 2)
        J = ok & (W >= alpha / 64 * beta1 ** 2 * beta2 ** 2 * len(att2) ** 4)
        triple_data.update(dict(lam0=lam0, E1_0=E1_0, cs=cs, ps=ps, W=W, cnt=cnt, g1=g1, g2=g2, ok=ok, J=J))
        diag.update({"J": int(J.sum()), "triple_boxes": int(ok.sum())})
        return triple_data

    def try_triple(routed):
        t = triple_tables()
        if not t:
            return None
        idx = _best_box(t["cnt"], t["g1"], t["g2"], t["ok"], delta)
        if idx is None:
            return None
        c, p = int(t["cs"][idx[0]]), int(t["ps"][idx[1]])
        F1, F2 = box_sets(c, p, att2, t["lam0"])
        sz = [Check("increment.triple.size_first", len(F1), beta1 * len(att2) / 2, len(F1) >= beta1 * len(att2) / 2),
              Check("increment.triple.size_second", len(F2), beta2 * len(att2) / 2, len(F2) >= beta2 * len(att2) / 2)]
        return finish("triple", routed, att2.spec, (c, p), F1, F2, delta + eta / 32, sz)

    def try_green(routed):
        t = triple_tables()
        if not t:
            return None
        pool_j = t["J"] if t["J"].any() else t["ok"]
        order = np.argsort(-np.where(pool_j, t["W"], -np.inf), axis=None, kind="stable")
        alpha_g = 2 ** -11 * alpha
        for flat in order[:green_tries]:
            i, j = np.unravel_index(int(flat), pool_j.shape)
            if not pool_j[i, j]:
                break
            c, p = int(t["cs"][i]), int(t["ps"][j])
            L1, L2 = box_sets(c, p, att2, t["lam0"])
            if not len(L1) or not len(L2):
                continue
            A1 = _restrict(A, L1, L2)
            try:
                res = green_increment(A1, L1, L2, alpha_g, budget=int(prof["green_budget"]))
            except (NotNonUniform, SearchBudgetExceeded):
                continue
            floor = 2 ** -25 * alpha
            sz = [Check("increment.green.size_first", len(res.F1), floor * beta1 * len(att2),
                        len(res.F1) >= floor * beta1 * len(att2)),
                  Check("increment.green.size_second", len(res.F2), floor * beta2 * len(att2),
                        len(res.F2) >= floor * beta2 * len(att2))]
            out = finish("green", routed, att2.spec, (c, p), res.F1, res.F2, delta + 2 ** -40 * alpha ** 2, sz)
            if out is not None:
                return out
        return None

    attempts = {"slice": try_slice, "slice_surplus": try_surplus, "triple": try_triple, "green": try_green}
    if cond92:
        route = ["slice"]
    elif high.any() and float(r_s[high].max()) >= delta + eta:
        route = ["slice_surplus"]
    else:
        route = ["triple", "green"]
    diag["route"] = route
    tried = []
    for name in route + [b for b in BRANCHES if b not in route]:
        res = attempts[name](name in route)
        tried.append(name)
        if res is not None:
            res.diagnostics = dict(diag, tried=tried)
            return res
    raise NoIncrementFound("no branch produced a verified increment", dict(diag, tried=tried))


# ---------------------------------------------------------------------------
# driver


@dataclass
class DriverOutcome:
    kind: str
    trace: list
    densities: list
    witness: Corner | None = None
    reason: str | None = None
    states: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, "reason": self.reason, "densities": self.densities,
                "witness": None if self.witness is None else [self.witness.k, self.witness.m, self.witness.d],
                "trace": [r.to_json() for r in self.trace], "states": self.states,
                "diagnostics": self.diagnostics}

    def trace_jsonl(self) -> str:
        return trace_jsonl(self.trace)


def _verified_corner(A: GridSet) -> Corner | None:
    n, wit = count_corners(A, "positive_d", enumerate_witnesses=True)
    if not n:
        return None
    c = wit[0]
    pts = set(A.points)
    if not all(p in pts for p in c.points()) or is_corner_free(A, "positive_d"):
        raise AssertionError("corner witness failed verification")
    return c


def driver(A0: GridSet, N: int, profile: ConstantsProfile | None = None,
           counting_budget: float = 2e7) -> DriverOutcome:
    """Iterate uniformize -> counting -> increment from the symmetrized set.

    A corner of A0 is reported at once (after exact verification).  Otherwise
    the state starts from Lambda = [-N, N], E1 = E2 = [-N, N] and the
    symmetrized set A1.  An iteration is accepted when the density after
    the increment and the following uniformization exceeds the previous one
    by at least the profile gain, the sets stay above beta_floor and the
    hosts are uniform; at most ceil(1/gain) iterations are run.
    """
    prof = _profile(profile, "driver")
    gain = prof["gain"]
    box = GridWindow.square(-N, N)
    if len(A0) and not all(box.contains(x, y) for x, y in A0.points):
        raise PreconditionViolated("A0 must lie in [-N, N]^2")
    A0 = A0.with_window(box)
    wit = _verified_corner(A0)
    if wit is not None:
        return DriverOutcome("CornerFound", [], [len(A0) / box.area], wit, "input has a corner")
    sym = symmetrize(A0, N)
    if not sym.holds_free:
        raise AssertionError("symmetrized set has a corner")
    lam = build_bohr(BohrSpec((), 1.0, N))
    full = IntSet.interval(-N, N)
    trace: list = []
    densities: list = []
    states: list = []
    try:
        state = IncrementState(lam.spec, (0, 0), full, full, sym.A1, prof)
    except PreconditionViolated as exc:
        return DriverOutcome("StepBudget", trace, densities, None, f"initial state: {exc}")
    max_iter = math.ceil(1 / gain - 1e-12)
    prev_delta = None

    def stop(reason, **diag):
        return DriverOutcome("StepBudget", trace, densities, None, reason, states, diag)

    for it in range(max_iter + 1):
        # uniformize the hosts
        try:
            tau = prof["tau"] if prev_delta is None else max(state.delta - prev_delta, 1e-12)
            u = uniformize(state.E1, state.E2, state.lam, state.shift, prof, A=state.A, tau=tau,
                           delta=None if prev_delta is None else prev_delta)
        except (StepBudgetExceeded, PreconditionViolated, NotFound) as exc:
            return stop(f"uniformize: {exc}")
        t = u.t
        E1 = u.E1.shift(t[0])
        E2 = u.E2.shift(t[1])
        A = _restrict(state.A, E1, E2)
        try:
            new = IncrementState(u.lam_out, t, E1, E2, A, prof)
        except PreconditionViolated as exc:
            return stop(f"state after uniformize: {exc}")
        for r in u.trace:
            trace.append(StepRecord(len(trace), r.case, r.lemma, r.before, r.after, r.gain, r.bohr,
                                    r.shift, {"iteration": it, "ladder_step": r.step}))
        if prev_delta is not None:
            ok_gain = new.delta >= prev_delta + gain
            trace.append(StepRecord(len(trace), u.trace[-1].case if u.trace else 0, "uniformize",
                                    prev_delta, new.delta, new.delta - prev_delta,
                                    _bohr_info(new.bohr), new.shift,
                                    {"iteration": it, "ladder_steps": len(u.trace), "stop": u.stop,
                                     "accepted": ok_gain, "beta": [new.beta1, new.beta2]}))
            if not ok_gain:
                return stop("density gain below the profile gain after uniformization")
        state = new
        densities.append(state.delta)
        states.append(state.to_json())
        if it == max_iter:
            return stop("iteration budget")
        if state.delta + gain > 1:
            return DriverOutcome("DensityExceededOne", trace, densities, None,
                                 "density plus gain exceeds one", states)
        # counting regime
        R1, R2, Ar = state.relative()
        wit = _verified_corner(state.A)
        if wit is not None:
            return DriverOutcome("CornerFound", trace, densities, wit, "counting regime", states)
        cdiag = None
        try:
            hosts = make_hosts(state.lam, prof)
        except NotFound as exc:
            return stop(f"no attendant: {exc}")
        if hosts.lam_att2 is not None:
            try:
                rep = counting_check(Ar, R1, R2, hosts, prof, budget=counting_budget)
                cdiag = {"ok": rep.ok, "sigma0": rep.sigma0, "diagonal": rep.diagonal}
            except BudgetExceeded:
                cdiag = {"skipped": "budget"}
        # increment
        try:
            step = theorem43_step(Ar, R1, R2, hosts, prof)
        except NoIncrementFound as exc:
            return stop("no_increment", **exc.diagnostics)
        except PreconditionViolated as exc:
            return stop(f"increment precondition: {exc}")
        except BudgetExceeded as exc:
            return stop(f"increment budget: {exc}")
        s = state.shift
        F1 = step.F1.shift(s[0])
        F2 = step.F2.shift(s[1])
        y = (s[0] + step.y[0], s[1] + step.y[1])
        An = _restrict(state.A, F1, F2)
        prev_delta = state.delta
        try:
            state = IncrementState(step.lam_tilde, y, F1, F2, An, prof)
        except PreconditionViolated as exc:
            return stop(f"state after increment: {exc}")
        trace.append(StepRecord(len(trace), step.branch, "increment", prev_delta, state.delta,
                                state.delta - prev_delta, _bohr_info(step.lam_tilde), y,
                                {"iteration": it, "routed": step.routed, "counting": cdiag,
                                 "beta": [state.beta1, state.beta2]}))
    return stop("iteration budget")
