import itertools

import pytest
from hypothesis import given, settings, strategies as st

from cornerlab.constructions import (
    behrend_set, corner_free_from_ap_free, difference_counts, digit_set, expected_corner_report,
    product_corner_count, product_corner_report, random_grid_set, three_ap,
)
from cornerlab.errors import PreconditionViolated
from cornerlab.grid import count_corners, full_grid_corner_count, is_corner_free
from cornerlab.sets import IntSet


def brute_three_ap(values):
    s = sorted(set(values))
    ss = set(s)
    return any((a + c) % 2 == 0 and (a + c) // 2 in ss for a, c in itertools.combinations(s, 2))


def test_behrend_small_cases():
    assert list(behrend_set(2).values) == [0, 1]
    B9 = behrend_set(9)
    assert {0, 1, 3, 4} <= set(B9.values) and not brute_three_ap(B9.values)
    assert list(behrend_set(1).values) == [0]


def test_behrend_digit_bound():
    B = behrend_set(3 ** 8)
    assert len(B) >= 2 ** 8 and len(digit_set(3 ** 8)) == 2 ** 8
    assert three_ap(B.values) is None


@pytest.mark.parametrize("N", [10, 50, 100, 333, 1000, 2500])
def test_behrend_against_triple_scan(N):
    B = behrend_set(N)
    assert B.values[0] >= 0 and B.values[-1] <= N - 1
    assert len(B) >= len(digit_set(N))
    assert not brute_three_ap(B.values)


def test_behrend_large_scan():
    B = behrend_set(100_000)
    assert three_ap(B.values) is None and len(B) >= 2 ** 10


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-40, 40), max_size=12))
def test_three_ap_detector(vals):
    assert (three_ap(vals) is not None) == brute_three_ap(vals)


def test_cornerfree_diagonal():
    A = corner_free_from_ap_free(IntSet.from_iter([0]), 4)
    assert sorted(A.points) == [(i, i) for i in range(1, 5)]
    assert is_corner_free(A, "nonzero_d")


def test_cornerfree_digits_9():
    B = IntSet.from_iter([0, 1, 3, 4])
    A = corner_free_from_ap_free(B, 9)
    assert is_corner_free(A, "nonzero_d")
    best = max(sum(max(9 - abs(b - c), 0) for b in B.values) for c in range(-10, 15))
    assert len(A) == best


def test_cornerfree_rejects_progression():
    with pytest.raises(PreconditionViolated):
        corner_free_from_ap_free(IntSet.from_iter([0, 2, 4]), 5)


@pytest.mark.parametrize("N", [16, 64, 200, 512])
def test_cornerfree_behrend_scan(N):
    A = corner_free_from_ap_free(behrend_set(N), N)
    assert is_corner_free(A, "nonzero_d") and len(A) > N


def test_random_set_reproducible_and_extremes():
    assert random_grid_set(20, 0.3, 5).mask.tolist() == random_grid_set(20, 0.3, 5).mask.tolist()
    assert count_corners(random_grid_set(12, 1.0, 0)) == full_grid_corner_count(12)
    assert count_corners(random_grid_set(12, 0.0, 0)) == 0


def test_random_heuristic_64():
    rep = expected_corner_report(64, 0.25, 100)
    assert rep.within, rep.to_json()


def brute_product_count(E1, E2):
    P = set((x, y) for x in E1.values for y in E2.values)
    return sum((k + d, m) in P and (k, m + d) in P
               for (k, m) in P for d in range(1, 40))


@settings(max_examples=30, deadline=None)
@given(st.sets(st.integers(1, 30), max_size=15), st.sets(st.integers(1, 30), max_size=15))
def test_product_identity(s1, s2):
    E1 = IntSet.from_iter(sorted(s1), 1, 30)
    E2 = IntSet.from_iter(sorted(s2), 1, 30)
    pc = product_corner_count(E1, E2)
    assert pc.direct == pc.formula == brute_product_count(E1, E2)


def test_product_trivial_cases():
    E = IntSet.interval(1, 20)
    assert product_corner_count(E, E).direct == full_grid_corner_count(20)
    assert product_corner_count(IntSet.from_iter([1], 1, 20), E).direct == 0
    assert difference_counts(E, 3).tolist() == [20, 19, 18, 17]


def test_product_scaling_64():
    rep = product_corner_report(64, 0.5, 0.5, 100)
    assert rep.details["identity_all"]
    assert rep.within, rep.to_json()
    assert abs(rep.details["z_uniform"]) > 5
