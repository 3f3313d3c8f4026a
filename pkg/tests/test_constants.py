import json
from fractions import Fraction

import pytest

from cornerlab.constants import (
    ALPHA, ALPHA0, ConstantsProfile, Monomial, RELAXED, dominated, paper_relations,
)
from cornerlab.errors import InfeasibleProfile


@pytest.mark.parametrize("rel", paper_relations(), ids=lambda r: r.name)
def test_paper_relation_holds_exactly(rel):
    assert rel.holds


def test_dominated_edges():
    one = Monomial()
    assert dominated(one, one) and not dominated(one, one, strict=True)
    half = Monomial(Fraction(1, 2))
    assert dominated(half, one, strict=True)
    # delta^2 <= delta on (0, 1] but not conversely
    d1, d2 = Monomial(a=1), Monomial(a=2)
    assert dominated(d2, d1) and not dominated(d1, d2)
    # 2^(1/3) > 1
    assert not dominated(Monomial(e2=Fraction(1, 3)), one)
    assert dominated(Monomial(3, Fraction(-5, 3)), one, strict=True)  # 3 * 2^(-5/3) ~ 0.945


def test_fractional_power_folds_dyadic_coefficient():
    m = Monomial(16, 0, 2) ** Fraction(1, 4)
    assert m.coef == 1 and m.e2 == 1 and m.a == Fraction(1, 2)
    with pytest.raises(ValueError):
        Monomial(3) ** Fraction(1, 2)


def test_paper_shadows_underflow():
    p = ConstantsProfile.paper()
    assert p.get("alpha0", 0.5) == 0.0
    assert ALPHA.value(0.5) == 2.0 ** -112
    assert ALPHA0.log2(0.5, 0.5, 0.5) == -2000 - 96 - 48 - 48


def test_paper_profile_is_not_executable():
    p = ConstantsProfile.named("paper_faithful")
    assert not p.executable
    with pytest.raises(InfeasibleProfile):
        p.require_executable("driver")
    ConstantsProfile.relaxed().require_executable()


def test_relaxed_overrides():
    p = ConstantsProfile.relaxed(alpha="0.05", step_budget=7.0)
    assert p["alpha"] == 0.05 and p["step_budget"] == 7 and isinstance(p["step_budget"], int)
    with pytest.raises(KeyError):
        ConstantsProfile.relaxed(bogus=1)
    with pytest.raises(KeyError):
        ConstantsProfile.named("paper", alpha=1)


def test_relaxed_relations_hold_at_full_density():
    for name, lhs, rhs, ok in ConstantsProfile.relaxed().relations():
        assert ok, name


def test_profile_json():
    for p in (ConstantsProfile.paper(), ConstantsProfile.relaxed()):
        obj = json.loads(json.dumps(p.to_json()))
        assert obj["preset"] == p.preset and set(obj["constants"]) == set(p.values)
    rel = json.loads(json.dumps([r.to_json() for r in paper_relations()]))
    assert all(r["holds"] for r in rel)
    assert set(RELAXED) == set(ConstantsProfile.relaxed().to_json()["constants"])
