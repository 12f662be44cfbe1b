import pytest
from hypothesis import given
from hypothesis import strategies as st

from phical.errors import ParseError
from phical.exprs import Pow, parse_expr, parse_rational, to_rational, to_text
from phical.series import RationalExpr


def test_parses_trig_ratio():
    node = parse_expr("(x - q*z)/(q*x - z)")
    assert to_text(node) == "(x - q*z)/(q*x - z)"


def test_error_offset_at_end():
    with pytest.raises(ParseError) as e:
        parse_expr("x + ")
    assert e.value.offset == 4


def test_negative_exponent():
    node = parse_expr("x^-2")
    assert isinstance(node, Pow) and node.exp == -2
    assert to_rational(node) == RationalExpr.parse("1/x^2")


@pytest.mark.parametrize("text", ["1/(x - x)", "x/(q - q)", "z/0"])
def test_division_by_syntactic_zero(text):
    with pytest.raises(ParseError):
        parse_expr(text)


@pytest.mark.parametrize("text", ["", "x +* z", "(x", "y", "x^q", "x^(2)"])
def test_rejects(text):
    with pytest.raises(ParseError):
        parse_expr(text)


atoms = st.sampled_from(["x", "z", "x1", "x2", "t", "u", "q", "2", "3"])


@st.composite
def exprs(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return draw(atoms)
    kind = draw(st.sampled_from(["+", "-", "*", "neg", "pow", "par"]))
    a = draw(exprs(depth=depth - 1))
    if kind == "neg":
        return f"-{a}"
    if kind == "pow":
        return f"({a})^{draw(st.integers(-2, 3))}"
    if kind == "par":
        return f"({a})"
    b = draw(exprs(depth=depth - 1))
    return f"{a} {kind} {b}"


@given(exprs())
def test_print_parse_round_trip(text):
    try:
        node = parse_expr(text)
    except ParseError:
        return  # e.g. (x - x)^-1
    printed = to_text(node)
    again = parse_expr(printed)
    assert to_text(again) == printed
    assert to_rational(again) == to_rational(node)


def test_rational_value():
    assert parse_rational("(x^2 - z^2)/(x - z)") == parse_rational("x + z")
