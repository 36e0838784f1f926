from fractions import Fraction
from math import factorial

import pytest

from charcalc.graded_ring import (
    MissingNormalForm,
    NonConfluentRules,
    NonTerminatingRules,
    NotAUnit,
    NotNilpotent,
    OwnerMismatch,
    DegreeMismatch,
    apply_series,
    degree_part,
    exp,
    exp_series,
    free_presentation,
    invert_unit,
    log1p,
    make_presentation,
    series_divide,
    todd_inverse_series,
    todd_series,
)
from charcalc.spaces import Space, projective_space


def p2():
    return make_presentation([("h", 2)], 4, [({"h": 3}, 0)])


def test_projective_plane_presentation():
    R = p2()
    h = R.gen("h")
    assert h**3 == 0
    assert [R.normal_monomials(d) for d in (0, 2, 4)] == [[(0,)], [(1,)], [(2,)]]


def test_point_presentation():
    R = make_presentation([], 0)
    assert R.one() * 3 == 3
    assert R.normal_monomials(0) == [()]


def test_underdetermined_presentation_is_rejected():
    # a P^1-bundle over P^1 without a rule for the fibre class
    R = make_presentation([("h", 2), ("xi", 2)], 4, [({"h": 2}, 0)])
    with pytest.raises(MissingNormalForm):
        Space("bad", 2, R)


def test_non_decreasing_rule_rejected():
    with pytest.raises(NonTerminatingRules):
        make_presentation([("a", 2), ("b", 2)], 4, [({"a": 1}, {(0, 1): 1})])


def test_non_confluent_rules_rejected():
    # a*b^2 reduces to a^3 through b^2 -> a^2 but to 0 through a*b -> 0
    gens = [("a", 2), ("b", 2)]
    with pytest.raises(NonConfluentRules):
        make_presentation(gens, 8, [({"b": 2}, {(2, 0): 1}), ({"a": 1, "b": 1}, 0)])


def test_degree_mismatch_rejected():
    with pytest.raises(DegreeMismatch):
        make_presentation([("h", 2)], 4, [({"h": 2}, {(1,): 1})])


def test_products_truncate():
    R = p2()
    h = R.gen("h")
    assert (1 + h) * (1 + h) == 1 + 2 * h + h**2
    assert (1 + h) ** 4 == 1 + 4 * h + 6 * h**2
    assert degree_part(1 + 2 * h + 6 * h**2, 4) == 6 * h**2


def test_owner_mismatch():
    with pytest.raises(OwnerMismatch):
        p2().gen("h") + p2().gen("h")


def test_series_on_projective_plane():
    h = p2().gen("h")
    assert apply_series(exp_series, h) == 1 + h + Fraction(1, 2) * h**2
    assert apply_series(todd_series, h) == 1 + Fraction(1, 2) * h + Fraction(1, 12) * h**2


def test_inverse_todd_on_line():
    R = make_presentation([("h", 2)], 2, [({"h": 2}, 0)])
    h = R.gen("h")
    assert apply_series(todd_inverse_series, h) == 1 - Fraction(1, 2) * h


def test_series_needs_nilpotent():
    h = p2().gen("h")
    with pytest.raises(NotNilpotent):
        exp(1 + h)


def test_series_division_oracle():
    # x / (1 - e^{-x}) = 1 + x/2 + x^2/12 + 0 x^3 - x^4/720
    den = [Fraction((-1) ** k, factorial(k + 1)) for k in range(6)]
    assert series_divide([1, 0, 0, 0, 0, 0], den, 5) == [1, Fraction(1, 2), Fraction(1, 12), 0, Fraction(-1, 720)]


def test_invert_unit():
    h = p2().gen("h")
    assert invert_unit(1 + h) == 1 - h + h**2
    assert invert_unit(p2().scalar(2)) == Fraction(1, 2)
    with pytest.raises(NotAUnit):
        invert_unit(h)


def test_exp_log_inverse():
    R = free_presentation([("a", 2), ("b", 4)], 8)
    x = R.gen("a") + 3 * R.gen("b") - R.gen("a") * R.gen("b")
    assert exp(log1p(x)) == 1 + x
    assert log1p(exp(x) - 1) == x


def test_generator_order_in_projective_space():
    P = projective_space(3)
    assert P.integrate(P.gen("h") ** 3) == 1
