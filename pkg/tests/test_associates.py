from fractions import Fraction
from math import factorial

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from conftest import laurent_polys
from phical.associates import (
    FormalGroup,
    associate_from_p,
    injectivity_probe,
    inverse_flow_check,
    p_from_associate,
    verify_associate,
)
from phical.errors import Inconclusive, NotAnAssociateBase, PrecisionExhausted
from phical.series import LaurentSeries, SeriesXZ

X = sympy.Symbol("x")


def rows(a, n):
    return [a.row(k).coeffs for k in range(n)]


def test_constant_p_translates():
    a = associate_from_p(LaurentSeries.const(1), 5)
    assert rows(a, 6) == [{1: 1}, {0: 1}, {}, {}, {}, {}]


def test_linear_p_exponentiates():
    a = associate_from_p(LaurentSeries.monomial(1), 8)
    assert rows(a, 9) == [{1: Fraction(1, factorial(n))} for n in range(9)]


def test_zero_p_is_constant_flow():
    a = associate_from_p(LaurentSeries.zero(), 5)
    assert rows(a, 6) == [{1: 1}] + [{}] * 5


def test_inverse_p_is_square_root():
    # φφ_z = 1 with φ(x,0) = x gives φ^2 = x^2 + 2z
    a = associate_from_p(LaurentSeries.monomial(-1), 6)
    sq = (a.phi * a.phi).truncate(7)
    assert rows(sq, 7) == [{2: 1}, {0: 2}] + [{}] * 5
    assert rows(a, 4) == [{1: 1}, {-1: 1}, {-3: Fraction(-1, 2)}, {-5: Fraction(1, 2)}]


def test_inverse_p_vs_logarithm_form():
    # x + log(1 + z/x) agrees through z^1 and first differs at z^2
    a = associate_from_p(LaurentSeries.monomial(-1), 4)
    log_form = [{1: 1}, {-1: 1}, {-2: Fraction(-1, 2)}]
    assert rows(a, 2) == log_form[:2]
    assert a.row(2).coeffs != log_form[2]


@pytest.mark.parametrize("phi_p, p", [(LaurentSeries.monomial(1), {1: 1}), (LaurentSeries.const(1), {0: 1}),
                                      (LaurentSeries.zero(), {})])
def test_p_recovered(phi_p, p):
    assert p_from_associate(associate_from_p(phi_p, 6)).coeffs == p


def test_verify_examples():
    assert verify_associate(associate_from_p(LaurentSeries.monomial(2), 6), 6).passed
    assert verify_associate(associate_from_p(LaurentSeries.monomial(1), 8), 8).passed


def test_corrupted_associate_located():
    bad = SeriesXZ([LaurentSeries.monomial(1), LaurentSeries({0: 1, 1: 1}), LaurentSeries.zero()], 0)
    rep = verify_associate(bad, 2)
    assert not rep.passed
    assert any(v["axiom"] == "flow" for v in rep.violations)
    assert all({"x0", "x2", "x"} <= set(v) for v in rep.violations)


def test_base_violation():
    bad = SeriesXZ([LaurentSeries.monomial(2), LaurentSeries.const(1)], 0)
    assert not verify_associate(bad).passed
    with pytest.raises(NotAnAssociateBase):
        p_from_associate(bad)


@pytest.mark.parametrize("p", [LaurentSeries.monomial(1), LaurentSeries.const(1), LaurentSeries.monomial(2)])
def test_inverse_flow(p):
    assert inverse_flow_check(associate_from_p(p, 6), 6).passed


def test_injectivity_witnesses():
    exp = associate_from_p(LaurentSeries.monomial(1), 6)
    shift = associate_from_p(LaurentSeries.const(1), 6)
    w = injectivity_probe("x1 - x", exp).meta["witness"]
    assert (w["z"], w["x"], w["coefficient"]) == (1, 1, "1")
    w = injectivity_probe("x1 - x", shift).meta["witness"]
    assert (w["z"], w["x"], w["coefficient"]) == (1, 0, "1")
    w = injectivity_probe("x1^2 - x^2", exp).meta["witness"]
    assert (w["z"], w["x"], w["coefficient"]) == (1, 2, "2")


def test_injectivity_inconclusive():
    ident = associate_from_p(LaurentSeries.zero(), 4)
    with pytest.raises(Inconclusive):
        injectivity_probe("x1 - x", ident, (2, 4))


def test_additive_group_axioms():
    assert FormalGroup().check_axioms()


def test_narrow_p_exhausts_precision():
    with pytest.raises(PrecisionExhausted):
        associate_from_p(LaurentSeries({0: 1}, hi=1), 3, x_span=2)


@given(laurent_polys())
def test_round_trip(p):
    assert p_from_associate(associate_from_p(p, 6)) == p


@given(laurent_polys(lo_min=-1, deg_max=2))
def test_flow_property(p):
    assert verify_associate(associate_from_p(p, 4), 4).passed


@given(laurent_polys(lo_min=-1, deg_max=2))
def test_rows_match_derivation_oracle(p):
    ps = sum(sympy.Rational(c.constant().numerator, c.constant().denominator) * X ** e
             for e, c in p.coeffs.items())
    a = associate_from_p(p, 4)
    cur = X
    for n in range(5):
        row = sympy.expand(cur / sympy.factorial(n))
        got = sum(sympy.Rational(c.constant().numerator, c.constant().denominator) * X ** e
                  for e, c in a.row(n).coeffs.items())
        assert sympy.expand(row - got) == 0
        cur = sympy.expand(ps * sympy.diff(cur, X))
