"""Acceptance suite: one test per criterion, each backed by an independent oracle."""
import math
import time
from fractions import Fraction

import numpy as np

from cornerlab.bohr import attendant, bohr, dim_factor, find_regular, lemma27_profile, local_density_residual
from cornerlab.constants import ConstantsProfile, paper_relations
from cornerlab.constructions import (
    behrend_corner_free, behrend_set, corner_free_from_ap_free, expected_corner_report,
    product_corner_count, product_corner_report, random_grid_set,
)
from cornerlab.grid import count_corners, full_grid_corner_count, is_corner_free, max_corner_free, symmetrize
from cornerlab.harmonic import (
    box_norm, convolution_square_sides, inner_product_sides, parseval_sides, rect_alpha_uniform,
)
from cornerlab.increment import (
    IndexChain, bourgain_increment, driver, green_checks, green_increment, index_drift_check,
)
from cornerlab.bohr import build_bohr
from cornerlab.recurrence import FiniteSystem, random_translation_system, simultaneous_return_set
from cornerlab.sets import GridFn, GridSet, GridWindow, IntSet, SuppFn

PROF = ConstantsProfile.relaxed()


# ---------------------------------------------------------------------------
# independent oracles


def oracle_max_corner_free(N):
    """Largest corner-free subset of [1,N]^2 (d > 0) by scanning all 2^(N^2) subsets."""
    cells = [(x, y) for x in range(1, N + 1) for y in range(1, N + 1)]
    idx = {c: i for i, c in enumerate(cells)}
    triples = [(1 << idx[(k, m)]) | (1 << idx[(k + d, m)]) | (1 << idx[(k, m + d)])
               for (k, m) in cells for d in range(1, N) if k + d <= N and m + d <= N]
    best = 0
    for s in range(1 << len(cells)):
        pc = bin(s).count("1")
        if pc > best and all(s & t != t for t in triples):
            best = pc
    return Fraction(best, N * N)


def brute_corner_count(points):
    P = set(points)
    return sum((k + d, m) in P and (k, m + d) in P for (k, m) in P for d in range(1, 200))


def brute_return_measure(sys, Y, t):
    Y = set(Y)
    good = 0
    for x in Y:
        s = r = x
        ok = True
        for _ in range(t):
            s, r = int(sys.S[s]), int(sys.R[r])
            if s in Y and r in Y:
                ok = False
                break
        good += ok
    return good / sys.size


def rand_fn(rng, span):
    return SuppFn(int(rng.integers(-50, 50)), rng.normal(size=span) + 1j * rng.normal(size=span))


# ---------------------------------------------------------------------------
# criteria


def test_c01_exact_extremal_values(criterion):
    with criterion(1, "L(1)=1, L(2)=3/4, L(3)=7/9 exact in < 1 s each; subset-scan oracle agrees for N <= 4"):
        for N, want in ((1, Fraction(1)), (2, Fraction(3, 4)), (3, Fraction(7, 9))):
            t0 = time.perf_counter()
            res = max_corner_free(N)
            assert time.perf_counter() - t0 < 1.0
            assert isinstance(res.L, Fraction) and res.L == want and res.exact
            assert is_corner_free(res.witness) and len(res.witness) == res.size
        for N in (1, 2, 3, 4):
            assert max_corner_free(N).L == oracle_max_corner_free(N)


def test_c02_full_grid_closed_form(criterion):
    with criterion(2, "full-grid corner count equals sum (N-d)^2 for N <= 64 in < 5 s"):
        t0 = time.perf_counter()
        for N in range(1, 65):
            A = GridSet.full(GridWindow.square(1, N))
            assert count_corners(A, "positive_d") == sum((N - d) ** 2 for d in range(1, N))
        assert time.perf_counter() - t0 < 5.0


def test_c03_random_set_heuristic(criterion):
    with criterion(3, "random sets N=64, delta=0.25, 100 trials: mean within 5 se of delta^3 T(N), < 60 s"):
        t0 = time.perf_counter()
        rep = expected_corner_report(64, 0.25, 100, seed=0)
        assert time.perf_counter() - t0 < 60.0
        T = sum((64 - d) ** 2 for d in range(1, 64))
        assert rep.expected == 0.25 ** 3 * T
        assert rep.trials == 100 and abs(rep.z) <= 5, rep.to_json()
        # spot check of the per-trial counter against a pair scan
        A = random_grid_set(64, 0.25, 0)
        assert rep.counts[0] == brute_corner_count(A.points)


def test_c04_product_sets(criterion):
    with criterion(4, "product identity bit-exact; Monte Carlo mean tracks beta1^2 beta2^2 T(N), not delta^3"):
        rng = np.random.default_rng(4)
        for _ in range(20):
            E1 = IntSet.from_iter(np.flatnonzero(rng.random(64) < 0.5) + 1, 1, 64)
            E2 = IntSet.from_iter(np.flatnonzero(rng.random(64) < 0.5) + 1, 1, 64)
            pc = product_corner_count(E1, E2)
            r1 = {d: sum((a + d) in set(E1.values) for a in E1.values) for d in range(1, 64)}
            r2 = {d: sum((a + d) in set(E2.values) for a in E2.values) for d in range(1, 64)}
            formula = sum(r1[d] * r2[d] for d in range(1, 64))
            direct = brute_corner_count([(x, y) for x in E1.values for y in E2.values])
            assert pc.direct == pc.formula == formula == direct
        rep = product_corner_report(64, 0.5, 0.5, 100)
        T = full_grid_corner_count(64)
        assert rep.expected == 0.5 ** 4 * T and rep.details["identity_all"]
        assert abs(rep.z) <= 5, rep.to_json()
        # delta = beta1 beta2 = 1/4, so the random-set prediction delta^3 T is rejected
        assert abs(rep.details["z_uniform"]) > 5


def test_c05_fourier_identities_and_box_triangle(criterion):
    with criterion(5, "Fourier identities on 200 functions to 1e-9; box-norm triangle on 200 pairs"):
        rng = np.random.default_rng(5)
        for _ in range(200):
            f = rand_fn(rng, int(rng.integers(1, 129)))
            g = rand_fn(rng, int(rng.integers(1, 129)))
            a, b = parseval_sides(f)
            assert abs(a - b) <= 1e-9 * abs(a)
            a, b = inner_product_sides(f, g)
            assert abs(a - b) <= 1e-9 * max(1.0, abs(a))
            a, b = convolution_square_sides(f, g)
            assert abs(a - b) <= 1e-9 * abs(a)
        for _ in range(200):
            win = GridWindow(0, int(rng.integers(1, 8)), 0, int(rng.integers(1, 8)))
            F = rng.normal(size=win.shape) + 1j * rng.normal(size=win.shape)
            G = rng.normal(size=win.shape) + 1j * rng.normal(size=win.shape)
            lhs = box_norm(GridFn(win, F + G))
            assert lhs <= box_norm(GridFn(win, F)) + box_norm(GridFn(win, G)) + 1e-9


def test_c06_bohr_suite(criterion):
    with criterion(6, "Bohr size bound on 50 specs; attendant profile on 20 triples; residual <= 4 kappa on 20"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(6)
        for _ in range(50):
            d = int(rng.integers(0, 4))
            theta = rng.random(d).tolist()
            eps = float(rng.uniform(0.01, 1))
            N = int(rng.integers(1, 2001))
            b = bohr(theta, eps, N)
            # membership by direct distance-to-integer test
            count = sum(all(abs(n * t - round(n * t)) <= eps for t in theta) for n in range(-N, N + 1))
            assert abs(count - len(b)) <= len(b.flagged)
            assert len(b) >= eps ** d * N / 2
        thetas = [[], [Fraction(1, 2)], [Fraction(1, 3)], [(math.sqrt(5) - 1) / 2], [0.1234, 0.771]]
        for i in range(20):
            theta = thetas[i % len(thetas)]
            kappa = (0.3, 0.5)[i % 2]
            # the attendant needs kappa N / (100 d) >= 2
            n_min = math.ceil(200 * max(len(theta), 1) / kappa) + 100
            e1, N1, _ = find_regular(theta, float(rng.uniform(0.3, 0.9)), int(rng.integers(n_min, n_min + 1500)), kappa)
            lam = bohr(theta, e1, N1)
            att = attendant(lam, kappa / dim_factor(len(theta)), kappa=kappa)
            p = lemma27_profile(lam, att, kappa)
            assert p.ok, [c for c in p.checks if not c.ok]
            # support and L1 recount from the element lists
            S = set(lam.elements.tolist())
            conv = {}
            for a in lam.elements.tolist():
                for b in att.elements.tolist():
                    conv[a + b] = conv.get(a + b, 0) + 1
            assert len(conv) == p.count_pos
            l1 = sum(abs(conv.get(n, 0) / len(att) - (n in S)) for n in set(conv) | S)
            assert abs(l1 - p.l1_residual) <= 1e-9 and l1 < 2 * kappa * len(lam)
        kappa = 0.5
        for i in range(20):
            lam = bohr([], 1.0, int(rng.integers(200, 400)))
            att = attendant(lam, kappa / 100)
            R = lam.spec.N + att.spec.N + 60
            if i % 2:
                E = IntSet.from_mask(rng.random(2 * R + 1) < rng.uniform(0.1, 0.9), -R)
                x = int(rng.integers(-50, 50))
                xs = lam.elements + x
                dens = sum(v in E for v in xs) / len(lam)
                avg = np.mean([sum((n + a) in E for a in att.elements) / len(att) for n in xs])
            else:
                win = GridWindow.square(-R, R)
                E = GridSet(win, rng.random(win.shape) < rng.uniform(0.1, 0.9))
                x = tuple(int(v) for v in rng.integers(-50, 50, 2))
                r = local_density_residual(E, lam, att, x)
                assert r.residual <= 4 * kappa
                continue
            r = local_density_residual(E, lam, att, x)
            assert abs(r.residual - abs(dens - avg)) <= 1e-12
            assert r.residual <= 4 * kappa
        assert time.perf_counter() - t0 < 120.0


def parity_set(lo, hi):
    x = np.arange(lo, hi + 1)
    return GridSet(GridWindow.square(lo, hi), np.add.outer(x, x) % 2 == 0)


def planted_instance(seed):
    rng = np.random.default_rng(1000 + seed)
    n1, n2 = int(rng.integers(10, 25)), int(rng.integers(10, 25))
    E1 = IntSet.from_iter(sorted(rng.choice(60, n1, replace=False).tolist()), 0, 59)
    E2 = IntSet.from_iter(sorted(rng.choice(60, n2, replace=False).tolist()), 0, 59)
    e1, e2 = E1.array(), E2.array()
    p = np.where(np.outer(rng.random(n1) < 0.5, rng.random(n2) < 0.5), 0.8, 0.2)
    keep = rng.random((n1, n2)) < p
    pts = [(int(e1[i]), int(e2[j])) for i, j in zip(*np.nonzero(keep))]
    return GridSet.from_points(pts, GridWindow(0, 59, 0, 59)), E1, E2


def green_post(A, E1, E2, F1, F2, alpha):
    P = set(A.points)
    delta = sum((x, y) in P for x in E1.values for y in E2.values) / (len(E1) * len(E2))
    dens = sum((x, y) in P for x in F1.values for y in F2.values) / (len(F1) * len(F2))
    return (set(F1.values) <= set(E1.values) and set(F2.values) <= set(E2.values)
            and dens > delta + 2 ** -14 * alpha ** 2
            and len(F1) >= 2 ** -8 * alpha * len(E1) and len(F2) >= 2 ** -8 * alpha * len(E2))


def test_c07_green_increment(criterion):
    with criterion(7, "box increment on the checkerboard at alpha=1/16 and on 20 planted instances"):
        A = parity_set(1, 8)
        E = IntSet.interval(1, 8)
        res = green_increment(A, E, E, 1 / 16)
        assert green_post(A, E, E, res.F1, res.F2, 1 / 16)
        assert all(c.ok for c in res.checks)
        for seed in range(20):
            A, E1, E2 = planted_instance(seed)
            alpha = rect_alpha_uniform(A, E1, E2, 0.0)[1] / 2
            res = green_increment(A, E1, E2, alpha, seed=seed)
            assert all(c.ok for c in green_checks(A, E1, E2, res.F1, res.F2, res.delta, alpha))
            assert green_post(A, E1, E2, res.F1, res.F2, alpha)


def drift_chain(seed, depth):
    rng = np.random.default_rng(500 + seed)
    root = bohr([], 1.0, int(rng.integers(150, 260)))
    stars, prev = [], root
    for _ in range(depth + 1):
        prev = attendant(prev, 0.25 if prev.spec.N > 40 else 0.5)
        stars.append(prev)
    R = root.spec.N + sum(s.spec.N for s in stars)
    w = GridWindow.square(-R, R)
    x = np.arange(-R, R + 1)
    kind = seed % 3
    if kind == 0:
        E = GridSet(w, rng.random(w.shape) < rng.uniform(0.2, 0.8))
    elif kind == 1:
        E = GridSet(w, np.add.outer(x, x) % 2 == 0)
    else:
        E = GridSet(w, np.add.outer(x, np.zeros_like(x)) < int(rng.integers(-50, 50)))
    return IndexChain(root, stars, E)


def test_c08_bourgain_and_index_drift(criterion):
    with criterion(8, "Fourier attendant on evens: variance >= 0.9 alpha^2/4 by enumeration; 20 drift chains"):
        lam = bohr([], 1.0, 200)
        Q = IntSet.from_iter(range(-200, 201, 2), -200, 200)
        res = bourgain_increment(Q, lam, 0.4, 0.1)
        lp = build_bohr(res.lam_prime)
        qs = set(Q.values)
        delta = len(qs) / len(lam)
        local = [sum((n + a) in qs for a in lp.elements) / len(lp) for n in lam.elements]
        variance = float(np.mean([(v - delta) ** 2 for v in local]))
        assert abs(variance - res.variance) <= 1e-12
        assert variance >= 0.9 * res.alpha_measured ** 2 / 4
        for seed in range(20):
            depth = seed % 3 + 1
            ch = drift_chain(seed, depth)
            for k in range(depth + 1):
                c = index_drift_check(ch, k, PROF["kappa"])
                assert c.ok and c.rhs == 4 * PROF["kappa"] * (k + 1), c


def sparse_corner_free(N, seed):
    rng = np.random.default_rng(seed)
    pts = set()
    for x, y in rng.integers(-N, N + 1, (3 * N, 2)).tolist():
        trial = pts | {(x, y)}
        if brute_corner_count(trial) == 0:
            pts = trial
    return GridSet.from_points(sorted(pts), GridWindow.square(-N, N))


def test_c09_symmetrize(criterion):
    with criterion(9, "symmetrization size bound and nonzero-d corner-freeness on 50 corner-free inputs"):
        inputs = []
        for i in range(25):
            N = 8 + 3 * i
            B = behrend_set(N)
            A = corner_free_from_ap_free(B, N).translate(-N + i % 3, -N)
            inputs.append((A.with_window(GridWindow.square(-N, N)), N))
        for i in range(25):
            N = 6 + i
            inputs.append((sparse_corner_free(N, i), N))
        for A, N in inputs:
            assert brute_corner_count(A.points) == 0
            r = symmetrize(A, N)
            delta = len(A) / (2 * N + 1) ** 2
            assert len(r.A1) >= delta ** 2 * (2 * N + 1) ** 2 / 4
            assert r.A1.issubset(A)
            P = set(r.A1.points)
            assert all((r.v[0] - x, r.v[1] - y) in P for x, y in P)
            assert count_corners(r.A1, "nonzero_d") == 0
            assert brute_corner_count(P) == 0 and brute_corner_count({(-x, -y) for x, y in P}) == 0


def test_c10_simultaneous_returns(criterion):
    with criterion(10, "mu(Y(t)) <= L(t) for t=2,3 over 200 systems; mu(Y(t)) <= 1/t when S = R"):
        L = {2: Fraction(3, 4), 3: Fraction(7, 9)}
        for seed in range(200):
            sys = random_translation_system(seed)
            rng = np.random.default_rng(10_000 + seed)
            Y = np.flatnonzero(rng.random(sys.size) < rng.uniform(0.2, 0.95)).tolist()
            for t in (2, 3):
                rep = simultaneous_return_set(sys, Y, t)
                assert rep.bound == L[t] and rep.bound_source == "exact"
                mu = brute_return_measure(sys, Y, t)
                assert abs(mu - rep.mu_Yt) <= 1e-12 and mu <= L[t]
        for seed in range(50):
            rng = np.random.default_rng(seed)
            m = int(rng.integers(3, 40))
            S = (np.arange(m) + int(rng.integers(0, m))) % m
            D = np.abs(np.subtract.outer(np.arange(m), np.arange(m))).astype(float)
            D = np.minimum(D, m - D) / max(m // 2, 1)
            sys = FiniteSystem(D, S, S)
            Y = np.flatnonzero(rng.random(m) < 0.6).tolist()
            for t in (1, 2, 3, 5):
                mu = brute_return_measure(sys, Y, t)
                assert mu <= 1 / t + 1e-12
                assert simultaneous_return_set(sys, Y, t).checks["poincare_bound"]


def test_c11_driver_properties(criterion):
    with criterion(11, "driver density gain and iteration cap on 10 instances; exact constant relations; "
                       "zero false-positive corners"):
        gain = PROF["gain"]
        cap = math.ceil(1 / gain)
        instances = [(behrend_corner_free(N), N) for N in (48, 64, 96, 128, 160, 200)]
        for i in range(4):
            M = 12 + 4 * i
            N = 2 * M + 1
            A = sparse_corner_free(M, 50 + i).translate(M + 1, M + 1)
            instances.append((A.with_window(GridWindow.square(1, N)), N))
        assert len(instances) == 10
        grew = 0
        for A, N in instances:
            assert count_corners(A) == 0
            out = driver(A, N)
            assert out.kind != "CornerFound" and out.witness is None
            d = out.densities
            assert len(d) - 1 <= cap
            assert all(b - a >= gain for a, b in zip(d, d[1:]))
            grew += len(d) >= 2
        assert grew >= 1
        rels = paper_relations()
        assert rels and all(r.holds for r in rels), [r.to_json() for r in rels if not r.holds]
        for seed in range(10):
            A = random_grid_set(40, float(np.random.default_rng(seed).uniform(0.2, 0.7)), seed)
            out = driver(A, 40)
            if count_corners(A) == 0:
                assert out.kind != "CornerFound"
                continue
            assert out.kind == "CornerFound"
            c = out.witness
            P = set(A.points)
            assert c.d > 0 and all(p in P for p in c.points())
        out = driver(GridSet.full(GridWindow.square(1, 16)), 16)
        assert out.kind == "CornerFound" and all(p in set(GridSet.full(GridWindow.square(1, 16)).points)
                                                 for p in out.witness.points())
