from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cornerlab.errors import BudgetExceeded, PreconditionViolated
from cornerlab.grid import (
    Corner, corner_sum_sigma0, count_corners, full_grid_corner_count, is_corner_free,
    max_corner_free, max_corner_free_enumerate, symmetrize,
)
from cornerlab.sets import GridFn, GridSet, GridWindow, reflect, shear, to_coefficients


def brute_corners(points, mode="positive_d"):
    pts = set(points)
    n = 0
    for (k, m) in pts:
        for (a, b) in pts:
            if b == m and a != k:
                d = a - k
                if mode == "positive_d" and d < 0:
                    continue
                if (k, m + d) in pts:
                    n += 1
    if mode == "include_zero_d":
        n += len(pts)
    return n


def random_set(rng, n, p, lo=1):
    mask = rng.random((n, n)) < p
    return GridSet(GridWindow.square(lo, lo + n - 1), mask)


grid_sets = st.builds(
    lambda n, p, seed: random_set(np.random.default_rng(seed), n, p),
    st.integers(1, 16), st.floats(0, 1), st.integers(0, 2**32 - 1),
)


def test_full_two_by_two():
    assert count_corners(GridSet.full(GridWindow.square(1, 2))) == 1


def test_full_three_by_three():
    assert count_corners(GridSet.full(GridWindow.square(1, 3))) == 5


@pytest.mark.parametrize("N", [1, 2, 5, 10, 17])
def test_full_grid_closed_form(N):
    assert count_corners(GridSet.full(GridWindow.square(1, N))) == full_grid_corner_count(N)


def test_missing_corner_point():
    A = GridSet.from_points([(2, 1), (1, 2), (2, 2)], GridWindow.square(1, 2))
    assert count_corners(A) == 0


def test_enumeration_lists_each_once():
    A = GridSet.full(GridWindow.square(1, 3))
    n, wit = count_corners(A, "nonzero_d", enumerate_witnesses=True)
    assert n == len(wit) == len(set(wit)) == 10
    for c in wit:
        assert all(p in A for p in c.points())
    assert Corner(1, 1, 2) in wit and Corner(3, 3, -2) in wit


def test_corner_rejects_zero_difference():
    with pytest.raises(ValueError):
        Corner(0, 0, 0)


def test_is_corner_free_examples():
    w = GridWindow.square(1, 6)
    assert is_corner_free(GridSet.empty(w))
    assert is_corner_free(GridSet.from_points([(i, i) for i in range(1, 7)], w), "nonzero_d")
    assert not is_corner_free(GridSet.full(GridWindow.square(1, 2)))


@settings(max_examples=60, deadline=None)
@given(grid_sets)
def test_count_matches_bruteforce(A):
    for mode in ("positive_d", "nonzero_d", "include_zero_d"):
        assert count_corners(A, mode) == brute_corners(A.points, mode)


@settings(max_examples=60, deadline=None)
@given(grid_sets)
def test_nonzero_splits_into_reflections(A):
    assert count_corners(A, "nonzero_d") == count_corners(A, "positive_d") + count_corners(reflect(A), "positive_d")


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_shear_correspondence(n, p, seed):
    A = random_set(np.random.default_rng(seed), n, p)
    pts = set(A.points)
    configs = sum(1 for (a, b) in pts for d in range(-n, n + 1)
                  if (a, b + d) in pts and (a + d, b + d) in pts)
    assert configs == count_corners(shear(A), "include_zero_d")


def test_max_corner_free_small_values():
    assert max_corner_free(1).L == Fraction(1)
    r2 = max_corner_free(2)
    assert (r2.size, r2.L) == (3, Fraction(3, 4))
    r3 = max_corner_free(3)
    assert (r3.size, r3.L) == (7, Fraction(7, 9))
    for r in (r2, r3):
        assert is_corner_free(r.witness) and r.exact


@pytest.mark.parametrize("mode", ["positive_d", "nonzero_d"])
@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_max_corner_free_matches_enumeration(N, mode):
    r = max_corner_free(N, mode)
    size, witness = max_corner_free_enumerate(N, mode)
    assert r.size == size
    assert r.witness.points == witness


def test_max_corner_free_budget():
    with pytest.raises(BudgetExceeded) as info:
        max_corner_free(6, budget=50)
    best = info.value.best
    assert not best.exact and is_corner_free(best.witness)


def test_symmetrize_single_point():
    A = GridSet.from_points([(1, -2)], GridWindow.square(-3, 3))
    r = symmetrize(A, 3)
    assert r.v == (2, -4) and r.A1.points == ((1, -2),) and r.holds_size


def test_symmetrize_pair():
    A = GridSet.from_points([(1, 2), (2, 1)], GridWindow.square(-2, 2))
    r = symmetrize(A, 2)
    assert r.v == (3, 3)
    assert r.A1 == A


def test_symmetrize_diagonal():
    N = 7
    A = GridSet.from_points([(i, i) for i in range(-N, N + 1)], GridWindow.square(-N, N))
    r = symmetrize(A, N)
    assert r.holds_size and r.holds_free and r.A1.issubset(A)


def test_symmetrize_rejects_corner():
    with pytest.raises(PreconditionViolated):
        symmetrize(GridSet.full(GridWindow.square(-1, 1)), 1)


def test_symmetrize_shift_is_lexicographic_argmax():
    rng = np.random.default_rng(5)
    N = 4
    for _ in range(20):
        pts = {(int(x), int(x)) for x in rng.integers(-N, N + 1, 4)}
        pts |= {(int(x), int(y)) for x, y in rng.integers(-N, N + 1, (2, 2))}
        A = GridSet.from_points(sorted(pts), GridWindow.square(-N, N))
        if not is_corner_free(A):
            continue
        best = max(((sum((vx - x, vy - y) in pts for x, y in pts), -vx, -vy)
                    for vx in range(-2 * N, 2 * N + 1) for vy in range(-2 * N, 2 * N + 1)))
        r = symmetrize(A, N)
        assert r.v == (-best[1], -best[2])
        assert len(r.A1) == best[0]


def sigma0_brute(H, G, F):
    total = 0j
    for (k, m) in H.points:
        for r in range(-30, 31):
            if (k + r, m + r) in G:
                total += F(k, m + r)
    return total


def test_sigma0_trivial():
    w = GridWindow.square(0, 0)
    P = GridSet.full(w)
    assert corner_sum_sigma0(P, P, GridFn(w, np.zeros((1, 1)))) == 0
    assert corner_sum_sigma0(P, P, P) == 1


@pytest.mark.parametrize("seed", range(5))
def test_sigma0_random_instance(seed):
    rng = np.random.default_rng(seed)
    w = GridWindow.square(0, 5)
    H = GridSet(w, rng.random((6, 6)) < 0.6)
    G = GridSet(w, rng.random((6, 6)) < 0.6)
    F = GridFn(w, rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
    assert abs(corner_sum_sigma0(H, G, F) - sigma0_brute(H, G, F)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(grid_sets)
def test_sigma0_counts_plane_corners(A):
    Ac = to_coefficients(A)
    assert round(corner_sum_sigma0(Ac, Ac, Ac).real) == count_corners(A, "include_zero_d")


@pytest.mark.parametrize("seed", range(5))
def test_sigma0_decomposition(seed):
    rng = np.random.default_rng(seed)
    w = GridWindow(0, 6, 0, 5)
    P = GridSet(w, rng.random(w.shape) < 0.8)
    A = GridSet(w, (rng.random(w.shape) < 0.5) & P.mask)
    H = GridSet(w, (rng.random(w.shape) < 0.5) & P.mask)
    G = GridSet(w, (rng.random(w.shape) < 0.5) & P.mask)
    delta = len(A) / len(P)
    f = GridFn(w, (A.mask - delta) * P.mask)
    lhs = corner_sum_sigma0(H, G, A)
    rhs = delta * corner_sum_sigma0(H, G, P) + corner_sum_sigma0(H, G, f)
    assert abs(lhs - rhs) < 1e-9


def test_gridset_serialization_roundtrip():
    A = random_set(np.random.default_rng(1), 5, 0.5)
    assert GridSet.from_json(A.to_json()) == A
    assert GridSet.from_text(A.to_text(), A.window) == A
