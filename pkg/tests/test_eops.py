from fractions import Fraction
from math import factorial

import pytest

from phical.associates import associate_from_p
from phical.errors import NoMultiplierFound, UncertifiedMultiplier, WindowEscape
from phical.eops import (
    Calculus,
    GeneratorField,
    IdentityField,
    LinearField,
    LocalityRelation,
    MatrixField,
    Multiplier,
    YPhi,
    borcherds_oracle,
    check_jacobi_phi,
    check_strig_locality,
    check_weak_assoc,
    fields_equal,
    find_multiplier,
    mode,
    product_window,
    root_multiplicity,
    state_field_check,
    trig_relations,
    vacuum_singular_fields,
)
from phical.fockrep import BETA, GAMMA, SystemKind, TruncPolicy, build_module
from phical.scalars import ONE, Scalar
from phical.series import LaurentSeries

_cache = {}


def trig(qv="-1"):
    if ("trig", qv) not in _cache:
        m = build_module(SystemKind.make("trig", qv), TruncPolicy(2, -3))
        _cache[("trig", qv)] = (m, GeneratorField(m, BETA), GeneratorField(m, GAMMA), m.basis())
    return _cache[("trig", qv)]


ONE_W = IdentityField()
VAC = [()]


# -- products and multipliers

def test_identity_product_window():
    t = product_window(ONE_W, ONE_W, {(): ONE}, 3)
    assert list(t.coeffs) == [(0, 0)]
    assert str(t.coeffs[(0, 0)]) == "(1)*1"


def test_identity_multiplier():
    m, rep = find_multiplier(ONE_W, ONE_W, VAC)
    assert m == Multiplier.power(0) and rep.passed


@pytest.mark.parametrize("qv", ["-1", "1"])
def test_trig_multipliers(qv):
    _, b, g, sample = trig(qv)
    assert find_multiplier(b, g, sample)[0] == Multiplier.power(1)
    assert find_multiplier(b, b, sample)[0] == Multiplier.power(0)
    assert find_multiplier(g, g, sample)[0] == Multiplier.power(0)


def test_trig_contact_needs_a_factor():
    _, b, g, sample = trig()
    with pytest.raises(NoMultiplierFound):
        find_multiplier(b, g, sample, [Multiplier.power(0)])
    y = YPhi(b, g, multiplier=Multiplier.power(0), order=2)
    with pytest.raises(UncertifiedMultiplier):
        y.coefficient(-1, 0, ())


def test_multiplier_parse():
    assert Multiplier.parse("x1 - x2") == Multiplier.power(1)
    assert Multiplier.parse("(x1-x2)^2") == Multiplier.power(2)
    assert Multiplier.parse("q*t - 1").terms == {(1, -1): Scalar.q(), (0, 0): -ONE}


# -- vacuum-like axioms and degenerations

def test_identity_acts_as_identity():
    m, b, g, sample = trig()
    for f in (b, g):
        y = YPhi(ONE_W, f, order=3)
        assert not fields_equal(y.row(0), f, sample)
        for s in (-2, -1, 1, 2):
            assert not fields_equal(y.row(s), LinearField([]), sample)


def test_creation_property():
    # Y(a, z)1_W = a(x e^z): [z^s x^e] = a_e e^s / s!
    m, b, g, sample = trig()
    y = YPhi(b, ONE_W, order=4)
    for w in sample[:6]:
        assert y.rows_on({w: ONE}, 4, range(-3, 0)) == {}
        for s in range(4):
            for e in range(-4, 4):
                want = {k: c * Fraction(e ** s, factorial(s)) for k, c in b.coeff(e, {w: ONE}).items()}
                want = {k: c for k, c in want.items() if c}
                assert y.coefficient(s, e, w) == want


def test_mode_minus_one_of_identity():
    m, b, g, sample = trig()
    assert not fields_equal(mode(ONE_W, -1, b), b, sample)


def test_trig_mode_zero_is_identity():
    m, b, g, sample = trig()
    assert not fields_equal(mode(b, 0, g), ONE_W, sample)


A = MatrixField.parse([["x", "x^-1"], ["0", "2"]], "A")
B = MatrixField.parse([["1", "0"], ["x^2", "x"]], "B")


def test_constant_flow_degenerates():
    phi = associate_from_p(LaurentSeries.zero(), 8)
    y = YPhi(A, B, phi, Multiplier.power(0), order=4)
    for j in range(2):
        for s in range(1, 4):
            assert all(not y.coefficient(s, e, j) for e in range(-3, 5))
        for e in range(-3, 5):
            want = {}
            for i in range(2):
                c = sum((A.entries.get((i, k), LaurentSeries.zero()) * B.entries.get((k, j), LaurentSeries.zero())
                         ).coefficient(e) for k in range(2))
                if c:
                    want[i] = c
            assert y.coefficient(0, e, j) == want


def test_window_escape():
    _, b, g, _ = trig()
    y = YPhi(b, g, order=2)
    with pytest.raises(WindowEscape):
        y.coefficient(2, 0, ())


@pytest.mark.parametrize("qv", ["-1", "1"])
def test_multiplier_independence_rows(qv):
    _, b, g, sample = trig(qv)
    y1 = YPhi(b, g, multiplier=Multiplier.power(1), order=2)
    y3 = YPhi(b, g, multiplier=Multiplier.power(3), order=2)
    for s in range(-2, 2):
        assert not fields_equal(y1.row(s), y3.row(s), sample)


def test_second_certificate_agrees():
    _, b, g, sample = trig()
    assert state_field_check(b, g, sample, order=3).passed


def test_state_field_with_identity():
    _, b, g, sample = trig()
    assert state_field_check(ONE_W, g, sample, order=3).passed
    assert state_field_check(b, ONE_W, sample, order=3).passed


# -- locality

def test_relation_multiplicities():
    m, *_ = trig()
    bb, gg, bg = trig_relations(m)
    assert (bb.k, gg.k, bg.k) == (0, 0, 1)
    assert bg.p_text() == "[-1,1]"
    assert root_multiplicity([1, -2, 1]) == 2


def test_strig_locality_passes():
    m, b, g, sample = trig()
    for rel in trig_relations(m):
        assert check_strig_locality(rel, sample, 3).passed


def test_strig_locality_detects_corruption():
    m, b, g, sample = trig()
    bad = LocalityRelation(b, g, [("2*(t + 1)/(t - 1)", g, b)], contact=True, label="bad")
    rep = check_strig_locality(bad, sample, 3)
    assert not rep.passed
    v = rep.violations[0]
    assert {"x1", "x2", "state"} <= set(v)


def test_identity_jacobi():
    rel = LocalityRelation(ONE_W, ONE_W, [("1", ONE_W, ONE_W)], label="11")
    assert check_jacobi_phi(rel, VAC, Calculus(None, order=6, window=3), 3).passed


def test_jacobi_bridge_both_directions():
    m, b, g, sample = trig()
    rat = build_module(SystemKind.make("rat", "-1"), TruncPolicy(2, -3))
    good = vacuum_singular_fields(rat, BETA, GAMMA, 3)
    assert good[0] == [(ONE, good[0][0][1])] and all(not good[n] for n in range(1, 4))
    calc = Calculus(None, order=6, window=3)
    rel = trig_relations(m)[2]
    assert check_jacobi_phi(rel, sample[:5], calc, 3, good).passed
    wrong = {n: list(v) for n, v in good.items()}
    wrong[0] = [(Scalar.const(2), ONE_W)]
    assert not check_jacobi_phi(rel, sample[:5], calc, 3, wrong).passed
    wrong = {n: list(v) for n, v in good.items()}
    wrong[1] = [(ONE, ONE_W)]
    assert not check_jacobi_phi(rel, sample[:5], calc, 3, wrong).passed


# -- weak associativity and the matrix oracle

def test_weak_assoc_identity():
    assert check_weak_assoc(ONE_W, ONE_W, ONE_W, 0, VAC, Calculus(None, order=5, window=3), 3).passed


def test_weak_assoc_trig():
    _, b, g, sample = trig()
    assert check_weak_assoc(b, g, b, 2, sample, Calculus(None, order=6, window=3), 3).passed


def test_weak_assoc_matrix():
    phi = associate_from_p(LaurentSeries.monomial(1), 12)
    assert check_weak_assoc(A, B, A, 0, [0, 1], Calculus(phi, order=6, window=3), 3).passed


def test_borcherds_identity_matrices():
    one = MatrixField.parse([["1", "0"], ["0", "1"]], "I")
    assert borcherds_oracle(one, one, LaurentSeries.monomial(2), 4).passed


@pytest.mark.parametrize("p", [LaurentSeries.const(1), LaurentSeries.monomial(1), LaurentSeries({0: 1, 2: 1})])
def test_borcherds_pair(p):
    rep = borcherds_oracle(A, B, p, 4)
    assert rep.passed, rep.violations[:2]
