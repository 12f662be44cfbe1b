"""Exact coefficients: rationals and rational functions in the parameter q.

A :class:`Scalar` is ``num/den`` with ``num, den`` polynomials in ``q`` over
the rationals.  The denominator is kept monic and coprime to the numerator,
so two scalars are equal exactly when their stored coefficients agree.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

from .errors import DivisionByZero, PoleAtSpecialization

Rational = Fraction

_ZERO = Fraction(0)
_ONE = Fraction(1)


# --- dense polynomials in q: tuples of Fractions, lowest degree first ---

def _trim(c):
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def _padd(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, v in enumerate(b):
        out[i] += v
    return _trim(out)


def _pneg(a):
    return tuple(-v for v in a)


def _psub(a, b):
    return _padd(a, _pneg(b))


def _pscale(a, c):
    if c == 0:
        return ()
    return tuple(v * c for v in a)


def _pmul(a, b):
    if not a or not b:
        return ()
    if len(a) == 1:
        return _pscale(b, a[0])
    if len(b) == 1:
        return _pscale(a, b[0])
    out = [_ZERO] * (len(a) + len(b) - 1)
    for i, u in enumerate(a):
        if u == 0:
            continue
        for j, v in enumerate(b):
            out[i + j] += u * v
    return _trim(out)


def _pdivmod(a, b):
    if not b:
        raise DivisionByZero("polynomial division by zero")
    a = list(a)
    db = len(b) - 1
    lead = b[-1]
    if len(a) - 1 < db:
        return (), _trim(a)
    quo = [_ZERO] * (len(a) - db)
    for i in range(len(a) - 1, db - 1, -1):
        c = a[i] / lead
        if c == 0:
            continue
        quo[i - db] = c
        for j, v in enumerate(b):
            a[i - db + j] -= c * v
    return _trim(quo), _trim(a[:db])


def _pmonic(a):
    if not a or a[-1] == 1:
        return a
    lead = a[-1]
    return tuple(v / lead for v in a)


def _pgcd(a, b):
    while b:
        _, r = _pdivmod(a, b)
        a, b = b, r
    return _pmonic(a)


def _valuation(a):
    for i, v in enumerate(a):
        if v != 0:
            return i
    return len(a)


def _peval(a, x):
    acc = _ZERO
    for v in reversed(a):
        acc = acc * x + v
    return acc


def _normalize(num, den):
    if not den:
        raise DivisionByZero("zero denominator")
    if not num:
        return (), (_ONE,)
    if len(den) == 1:
        c = den[0]
        return (num if c == 1 else _pscale(num, 1 / c)), (_ONE,)
    # a monomial denominator only needs the shared power of q removed
    if all(v == 0 for v in den[:-1]):
        k = min(len(den) - 1, _valuation(num))
        lead = den[-1]
        num = num[k:]
        den = den[k:]
        if lead != 1:
            num = _pscale(num, 1 / lead)
            den = _pscale(den, 1 / lead)
        return num, den
    g = _pgcd(num, den)
    if len(g) > 1:
        num, _ = _pdivmod(num, g)
        den, _ = _pdivmod(den, g)
    lead = den[-1]
    if lead != 1:
        num = _pscale(num, 1 / lead)
        den = _pscale(den, 1 / lead)
    return num, den


def _poly_text(a):
    if not a:
        return "0"
    parts = []
    for k in range(len(a) - 1, -1, -1):
        c = a[k]
        if c == 0:
            continue
        if k == 0:
            t = str(c)
        else:
            mono = "q" if k == 1 else f"q^{k}"
            if c == 1:
                t = mono
            elif c == -1:
                t = "-" + mono
            else:
                t = f"{c}*{mono}"
        if parts and not t.startswith("-"):
            parts.append("+")
        parts.append(t)
    return "".join(parts)


ScalarLike = Union["Scalar", int, Fraction]


class Scalar:
    """Element of Q(q) in canonical form."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Iterable = (), den: Iterable = (1,), *, _canonical=False):
        if _canonical:
            self.num, self.den = num, den
        else:
            n = _trim(Fraction(v) for v in num)
            d = _trim(Fraction(v) for v in den)
            self.num, self.den = _normalize(n, d)
        self._hash = None

    # -- construction
    @classmethod
    def const(cls, c) -> "Scalar":
        c = Fraction(c)
        return cls((c,) if c else (), (_ONE,), _canonical=True)

    @classmethod
    def q(cls) -> "Scalar":
        return cls((_ZERO, _ONE), (_ONE,), _canonical=True)

    @classmethod
    def poly(cls, coeffs) -> "Scalar":
        return cls(coeffs, (1,))

    @staticmethod
    def coerce(v) -> "Scalar":
        if isinstance(v, Scalar):
            return v
        if isinstance(v, (int, Fraction)):
            return Scalar.const(v)
        raise TypeError(f"cannot use {type(v).__name__} as a scalar")

    # -- predicates
    def is_zero(self) -> bool:
        return not self.num

    def is_one(self) -> bool:
        return self.num == (_ONE,) and self.den == (_ONE,)

    def is_constant(self) -> bool:
        return len(self.num) <= 1 and len(self.den) == 1

    def is_polynomial(self) -> bool:
        return len(self.den) == 1

    def constant(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not a constant")
        return self.num[0] if self.num else _ZERO

    def __bool__(self):
        return bool(self.num)

    # -- arithmetic
    def __add__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        if not other.num:
            return self
        if not self.num:
            return other
        if self.den == other.den:
            if len(self.den) == 1:
                n = _padd(self.num, other.num)
                return Scalar(n, self.den, _canonical=True) if n else ZERO
            return Scalar(_padd(self.num, other.num), self.den)
        return Scalar(_padd(_pmul(self.num, other.den), _pmul(other.num, self.den)),
                      _pmul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        return Scalar(_pneg(self.num), self.den, _canonical=True)

    def __sub__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return Scalar.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        if not self.num or not other.num:
            return ZERO
        if len(self.den) == 1 and len(other.den) == 1:
            return Scalar(_pmul(self.num, other.num), self.den, _canonical=True)
        return Scalar(_pmul(self.num, other.num), _pmul(self.den, other.den))

    __rmul__ = __mul__

    def inv(self) -> "Scalar":
        if not self.num:
            raise DivisionByZero("inverse of zero")
        return Scalar(self.den, self.num)

    def __truediv__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        return self * other.inv()

    def __rtruediv__(self, other):
        return Scalar.coerce(other) * self.inv()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        base = self if k >= 0 else self.inv()
        out = ONE
        for _ in range(abs(k)):
            out = out * base
        return out

    # -- comparison / hashing
    def __eq__(self, other):
        if isinstance(other, Scalar):
            return self.num == other.num and self.den == other.den
        if isinstance(other, (int, Fraction)):
            return self.is_constant() and self.constant() == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    # -- evaluation
    def eval(self, q0) -> Fraction:
        q0 = Fraction(q0)
        d = _peval(self.den, q0)
        if d == 0:
            raise PoleAtSpecialization(f"{self} has a pole at q={q0}")
        return _peval(self.num, q0) / d

    # -- text form
    def __str__(self):
        if len(self.den) == 1:
            return _poly_text(self.num)
        return f"({_poly_text(self.num)})/({_poly_text(self.den)})"

    def __repr__(self):
        return f"Scalar('{self}')"

    @classmethod
    def parse(cls, text: str) -> "Scalar":
        from .exprs import parse_scalar
        return parse_scalar(text)


ZERO = Scalar((), (_ONE,), _canonical=True)
ONE = Scalar((_ONE,), (_ONE,), _canonical=True)
Q = Scalar.q()


def scalar_add(a: ScalarLike, b: ScalarLike) -> Scalar:
    return Scalar.coerce(a) + Scalar.coerce(b)


def scalar_mul(a: ScalarLike, b: ScalarLike) -> Scalar:
    return Scalar.coerce(a) * Scalar.coerce(b)


def scalar_neg(a: ScalarLike) -> Scalar:
    return -Scalar.coerce(a)


def scalar_inv(a: ScalarLike) -> Scalar:
    return Scalar.coerce(a).inv()


def scalar_eval(a: ScalarLike, q0) -> Fraction:
    return Scalar.coerce(a).eval(q0)


def binomial(n: int, k: int) -> Fraction:
    """Generalized binomial coefficient, valid for negative ``n``."""
    if k < 0:
        return _ZERO
    out = _ONE
    for i in range(k):
        out = out * (n - i) / (i + 1)
    return out
