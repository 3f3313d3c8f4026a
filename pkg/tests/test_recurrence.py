import itertools
from fractions import Fraction

import numpy as np
import pytest

from cornerlab.errors import PreconditionViolated
from cornerlab.recurrence import (
    FiniteSystem, covering_number, exact_L, random_translation_system, recurrence_constants,
    return_mask, simultaneous_return_set, torus_system,
)


def brute_Yt(sys, Y, t):
    Y = set(Y)
    out = []
    for x in sorted(Y):
        ok = True
        s = r = x
        for _ in range(t):
            s, r = int(sys.S[s]), int(sys.R[r])
            if s in Y and r in Y:
                ok = False
                break
        if ok:
            out.append(x)
    return out


def random_Y(sys, p, rng):
    return [i for i in range(sys.size) if rng.random() < p]


def test_exact_L_values():
    assert exact_L(1) == 1 and exact_L(2) == Fraction(3, 4) and exact_L(3) == Fraction(7, 9)
    assert exact_L(5) is None


def test_identity_maps_empty_return_set():
    sys = FiniteSystem(np.ones((4, 4)) - np.eye(4), np.arange(4), np.arange(4))
    rep = simultaneous_return_set(sys, [0, 2, 3], 3)
    assert rep.Yt == () and rep.mu_Yt == 0 and rep.verdict


@pytest.mark.parametrize("m", [5, 7, 10])
def test_unit_translations_t2(m):
    rng = np.random.default_rng(m)
    sys = torus_system(m, m)
    Y = random_Y(sys, 0.3, rng)
    rep = simultaneous_return_set(sys, Y, 2)
    assert list(rep.Yt) == brute_Yt(sys, Y, 2)
    assert rep.mu_Yt <= 0.75 and rep.bound == Fraction(3, 4) and rep.verdict


@pytest.mark.parametrize("seed", range(50))
def test_unit_translations_t3(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 12))
    sys = torus_system(m, m)
    rep = simultaneous_return_set(sys, random_Y(sys, rng.uniform(0.1, 0.9), rng), 3)
    assert rep.mu_Yt <= 7 / 9


def test_random_systems_against_bruteforce():
    for seed in range(40):
        sys = random_translation_system(seed)
        rng = np.random.default_rng(seed + 1000)
        Y = random_Y(sys, 0.5, rng)
        for t in (1, 2, 3, 4, 6):
            rep = simultaneous_return_set(sys, Y, t)
            assert list(rep.Yt) == brute_Yt(sys, Y, t)
            assert rep.verdict
        assert rep.bound_source == "trivial"


def test_return_sets_are_nested():
    sys = random_translation_system(3)
    Y = random_Y(sys, 0.6, np.random.default_rng(0))
    masks = [return_mask(sys, Y, t) for t in range(1, 8)]
    for a, b in zip(masks, masks[1:]):
        assert not np.any(b & ~a)


def test_single_map_poincare_bound():
    for seed in range(30):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(3, 40))
        step = int(rng.integers(0, m))
        S = (np.arange(m) + step) % m
        D = np.abs(np.subtract.outer(np.arange(m), np.arange(m))).astype(float)
        D = np.minimum(D, m - D) / max(m // 2, 1)
        sys = FiniteSystem(D, S, S)
        Y = random_Y(sys, 0.5, rng)
        for t in (1, 2, 3, 5):
            rep = simultaneous_return_set(sys, Y, t)
            assert rep.checks["poincare_bound"] and rep.verdict


def test_rejects_non_commuting_and_non_preserving():
    D = np.ones((3, 3)) - np.eye(3)
    with pytest.raises(PreconditionViolated):
        FiniteSystem(D, [1, 0, 2], [0, 2, 1])
    sys = FiniteSystem(D, [0, 0, 0], [0, 0, 0])
    with pytest.raises(PreconditionViolated):
        simultaneous_return_set(sys, [0], 1)


def test_rejects_bad_metric():
    D = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    with pytest.raises(PreconditionViolated):
        FiniteSystem(D, [0, 1, 2], [0, 1, 2])


def test_json_roundtrip():
    sys = torus_system(3, 4, (1, 1), (2, 0))
    back = FiniteSystem.from_json(sys.to_json())
    assert np.array_equal(back.S, sys.S) and np.allclose(back.metric, sys.metric)


# ---------------------------------------------------------------------------
# recurrence constants


def test_constants_identity_and_full_cycle():
    D = np.ones((5, 5)) - np.eye(5)
    ident = FiniteSystem(D, np.arange(5), np.arange(5))
    rc = recurrence_constants(ident, 3)
    assert np.all(rc.single == 0) and np.all(rc.simultaneous == 0)
    cyc = FiniteSystem(D, (np.arange(5) + 1) % 5, (np.arange(5) + 1) % 5)
    assert np.all(recurrence_constants(cyc, 5).single == 0)
    assert np.all(recurrence_constants(cyc, 4).single == 1)


@pytest.mark.parametrize("seed", range(10))
def test_constants_against_orbit_scan(seed):
    sys = random_translation_system(seed, max_side=8)
    N = 1 + seed % 6
    rc = recurrence_constants(sys, N)
    for x in range(sys.size):
        s, r, best1, best2 = x, x, np.inf, np.inf
        for _ in range(N):
            s, r = int(sys.S[s]), int(sys.R[r])
            best1 = min(best1, sys.metric[s, x])
            best2 = min(best2, max(sys.metric[s, x], sys.metric[r, x]))
        assert rc.single[x] == best1 and rc.simultaneous[x] == best2


# ---------------------------------------------------------------------------
# covering numbers


def euclid_system(P):
    D = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(-1))
    k = len(P)
    return FiniteSystem(D, np.arange(k), np.arange(k))


def brute_cover(D, G, eps):
    k = D.shape[0]
    for r in range(1, len(G) + 1):
        for C in itertools.combinations(range(k), r):
            if all(any(D[c, g] <= eps for c in C) for g in G):
                return r
    return 0


def test_cover_trivial_cases():
    P = np.random.default_rng(0).random((8, 2))
    sys = euclid_system(P)
    assert covering_number(range(8), sys, sys.diameter() + 0.1).size == 1
    assert covering_number(range(8), sys, 1e-9).size == 8


@pytest.mark.parametrize("seed", range(5))
def test_cover_exact_against_brute(seed):
    P = np.random.default_rng(seed).random((12, 2))
    sys = euclid_system(P)
    res = covering_number(range(12), sys, 0.3)
    assert res.exact and res.size == brute_cover(sys.metric, range(12), 0.3)
    assert all(any(sys.metric[c, g] <= 0.3 for c in res.centers) for g in range(12))


def test_cover_greedy_flag():
    P = np.random.default_rng(1).random((30, 2))
    sys = euclid_system(P)
    res = covering_number(range(30), sys, 0.25)
    assert not res.exact
    assert all(any(sys.metric[c, g] <= 0.25 for c in res.centers) for g in range(30))
