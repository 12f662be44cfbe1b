"""Truncated formal series over Q(q).

* :class:`LaurentSeries` -- one variable, coefficients known on ``[lo, hi)``.
* :class:`SeriesXZ` -- rows of Laurent series in ``x`` indexed by a power of
  ``z``; known for ``zlo <= r < zhi``.
* :class:`MPoly` / :class:`RationalExpr` -- sparse Laurent polynomials in named
  variables and their quotients.
* :class:`WindowTable` -- a finite patch of a multi-variable series together
  with the space it lives in (its :class:`Shape`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as _cartesian
from math import factorial
from typing import Dict, Iterable, Optional, Tuple

from .errors import (
    CompositionError,
    DivisionByZero,
    ExpansionDirectionError,
    NotAnAssociateBase,
    PrecisionExhausted,
    ShapeError,
    VariableMismatch,
)
from .scalars import ONE, ZERO, Scalar, binomial

INF = float("inf")


def _min_hi(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _add_hi(a, b):
    return None if a is None or b is None else a + b


# ---------------------------------------------------------------------------
# Laurent series in one variable
# ---------------------------------------------------------------------------

class LaurentSeries:
    """Truncated element of F((var)).

    Coefficients at exponents ``>= hi`` are unknown; ``hi is None`` marks an
    exact (finite) series.  ``lo`` is a declared lower bound of the support.
    """

    __slots__ = ("var", "lo", "hi", "coeffs")

    def __init__(self, coeffs=None, var: str = "x", lo: Optional[int] = None,
                 hi: Optional[int] = None):
        c = {}
        for e, v in (coeffs or {}).items():
            e = int(e)
            if hi is not None and e >= hi:
                continue
            v = Scalar.coerce(v)
            if v:
                c[e] = v
        if lo is None:
            lo = min(c) if c else (hi if hi is not None else 0)
        elif c and min(c) < lo:
            raise ValueError(f"term x^{min(c)} below declared lo={lo}")
        if hi is not None and lo > hi:
            lo = hi
        self.var = var
        self.lo = lo
        self.hi = hi
        self.coeffs: Dict[int, Scalar] = c

    # -- constructors
    @classmethod
    def const(cls, c, var="x") -> "LaurentSeries":
        return cls({0: c}, var)

    @classmethod
    def monomial(cls, e: int, c=1, var="x") -> "LaurentSeries":
        return cls({e: c}, var)

    @classmethod
    def zero(cls, var="x", hi=None) -> "LaurentSeries":
        return cls({}, var, hi=hi)

    # -- basic queries
    def is_exact(self) -> bool:
        return self.hi is None

    def is_zero(self) -> bool:
        """True when every known coefficient vanishes."""
        return not self.coeffs

    def coefficient(self, e: int) -> Scalar:
        if self.hi is not None and e >= self.hi:
            raise PrecisionExhausted(f"coefficient of {self.var}^{e} beyond truncation {self.hi}")
        return self.coeffs.get(e, ZERO)

    def valuation(self) -> Optional[int]:
        return min(self.coeffs) if self.coeffs else None

    def degree(self) -> Optional[int]:
        return max(self.coeffs) if self.coeffs else None

    def items(self):
        return sorted(self.coeffs.items())

    def _check(self, other):
        if not isinstance(other, LaurentSeries):
            raise TypeError(f"expected LaurentSeries, got {type(other).__name__}")
        if other.var != self.var:
            raise VariableMismatch(f"{self.var} vs {other.var}")

    # -- arithmetic
    def __add__(self, other):
        if isinstance(other, (int, Fraction, Scalar)):
            other = LaurentSeries.const(other, self.var)
        self._check(other)
        hi = _min_hi(self.hi, other.hi)
        c = dict(self.coeffs)
        for e, v in other.coeffs.items():
            c[e] = c[e] + v if e in c else v
        return LaurentSeries(c, self.var, min(self.lo, other.lo), hi)

    __radd__ = __add__

    def __neg__(self):
        return LaurentSeries({e: -v for e, v in self.coeffs.items()}, self.var, self.lo, self.hi)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, Scalar)):
            other = LaurentSeries.const(other, self.var)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s) -> "LaurentSeries":
        s = Scalar.coerce(s)
        if not s:
            return LaurentSeries({}, self.var, self.lo, self.hi)
        return LaurentSeries({e: v * s for e, v in self.coeffs.items()}, self.var, self.lo, self.hi)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Scalar)):
            return self.scale(other)
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        self._check(other)
        hi = _min_hi(_add_hi(self.lo, other.hi), _add_hi(other.lo, self.hi))
        c: Dict[int, Scalar] = {}
        for e1, v1 in self.coeffs.items():
            for e2, v2 in other.coeffs.items():
                e = e1 + e2
                if hi is not None and e >= hi:
                    continue
                c[e] = c[e] + v1 * v2 if e in c else v1 * v2
        return LaurentSeries(c, self.var, self.lo + other.lo, hi)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, Scalar)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            return self.invert_unit() ** (-k)
        out = LaurentSeries.const(1, self.var)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by var^k."""
        return LaurentSeries({e + k: v for e, v in self.coeffs.items()}, self.var,
                             self.lo + k, _add_hi(self.hi, k))

    def truncate(self, hi: Optional[int]) -> "LaurentSeries":
        return LaurentSeries(self.coeffs, self.var, min(self.lo, hi) if hi is not None else self.lo,
                             _min_hi(self.hi, hi))

    def derivative(self) -> "LaurentSeries":
        return LaurentSeries({e - 1: v * e for e, v in self.coeffs.items() if e},
                             self.var, self.lo - 1, _add_hi(self.hi, -1))

    def invert_unit(self, prec: Optional[int] = None) -> "LaurentSeries":
        """Multiplicative inverse.

        An exact input with more than one term has an infinite inverse, so
        ``prec`` (the number of terms wanted) is required in that case.
        """
        if not self.coeffs:
            raise DivisionByZero(f"inverse of a series that is zero below {self.var}^{self.hi}")
        e0 = min(self.coeffs)
        c0 = self.coeffs[e0]
        if len(self.coeffs) == 1 and self.hi is None:
            return LaurentSeries({-e0: c0.inv()}, self.var)
        rel = None if self.hi is None else self.hi - e0
        if rel is None or (prec is not None and prec < rel):
            if prec is None:
                raise PrecisionExhausted("inverse of an exact non-monomial needs prec")
            rel = prec
        u = [self.coeffs.get(e0 + k, ZERO) for k in range(rel)]
        inv0 = c0.inv()
        v = [inv0]
        for n in range(1, rel):
            acc = ZERO
            for k in range(1, n + 1):
                if u[k]:
                    acc = acc + u[k] * v[n - k]
            v.append(-acc * inv0)
        return LaurentSeries({k - e0: c for k, c in enumerate(v)}, self.var, -e0, rel - e0)

    def substitute_scalar(self, q0) -> "LaurentSeries":
        return LaurentSeries({e: Scalar.const(v.eval(q0)) for e, v in self.coeffs.items()},
                             self.var, self.lo, self.hi)

    # -- comparison
    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (self.var, self.lo, self.hi, self.coeffs) == (other.var, other.lo, other.hi, other.coeffs)

    def __hash__(self):
        return hash((self.var, self.lo, self.hi, tuple(sorted(self.coeffs.items()))))

    def agrees(self, other: "LaurentSeries") -> bool:
        """Equal on the common known range."""
        self._check(other)
        hi = _min_hi(self.hi, other.hi)
        keys = set(self.coeffs) | set(other.coeffs)
        return all(self.coeffs.get(e, ZERO) == other.coeffs.get(e, ZERO)
                   for e in keys if hi is None or e < hi)

    # -- text / json
    def __str__(self):
        parts = []
        for e, v in self.items():
            s = str(v)
            if not v.is_constant() or len(v.num) > 1:
                s = f"({s})"
            if e == 0:
                parts.append(s)
            else:
                mono = self.var if e == 1 else f"{self.var}^{e}"
                parts.append(mono if v.is_one() else ("-" + mono if v == -1 else f"{s}*{mono}"))
        if self.hi is not None:
            parts.append(f"O({self.var}^{self.hi})")
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"LaurentSeries({self})"

    def to_json(self) -> dict:
        return {"var": self.var, "lo": self.lo, "hi": self.hi,
                "terms": [[e, str(v)] for e, v in self.items()]}

    @classmethod
    def from_json(cls, d: dict) -> "LaurentSeries":
        return cls({e: Scalar.parse(s) for e, s in d["terms"]}, d["var"], d["lo"], d["hi"])


def laurent_add(a: LaurentSeries, b: LaurentSeries) -> LaurentSeries:
    return a + b


def laurent_mul(a: LaurentSeries, b: LaurentSeries) -> LaurentSeries:
    return a * b


def laurent_shift(a: LaurentSeries, k: int) -> LaurentSeries:
    return a.shift(k)


def laurent_invert_unit(a: LaurentSeries, prec: Optional[int] = None) -> LaurentSeries:
    return a.invert_unit(prec)


# ---------------------------------------------------------------------------
# Series in z with Laurent coefficients in x
# ---------------------------------------------------------------------------

class SeriesXZ:
    """Truncated element of F((x))((z)); ``rows[i]`` is the coefficient of z^(zlo+i)."""

    __slots__ = ("zlo", "rows")

    def __init__(self, rows: Iterable[LaurentSeries], zlo: int = 0):
        self.zlo = zlo
        self.rows: Tuple[LaurentSeries, ...] = tuple(rows)

    @property
    def zhi(self) -> int:
        return self.zlo + len(self.rows)

    @classmethod
    def from_rows(cls, rows: Dict[int, LaurentSeries], zlo: int, zhi: int, var="x") -> "SeriesXZ":
        return cls([rows.get(r, LaurentSeries.zero(var)) for r in range(zlo, zhi)], zlo)

    @classmethod
    def scalar_series(cls, coeffs: Iterable, zlo: int = 0, var="x") -> "SeriesXZ":
        """A series in z alone, given its coefficients from z^zlo upward."""
        return cls([LaurentSeries.const(c, var) for c in coeffs], zlo)

    @classmethod
    def constant(cls, f: LaurentSeries, zhi: int) -> "SeriesXZ":
        return cls([f] + [LaurentSeries.zero(f.var) for _ in range(zhi - 1)], 0)

    @property
    def var(self) -> str:
        return self.rows[0].var if self.rows else "x"

    def row(self, r: int) -> LaurentSeries:
        if r < self.zlo:
            return LaurentSeries.zero(self.var)
        if r >= self.zhi:
            raise PrecisionExhausted(f"z^{r} beyond z-truncation {self.zhi}")
        return self.rows[r - self.zlo]

    def truncate(self, zhi: int) -> "SeriesXZ":
        if zhi >= self.zhi:
            return self
        return SeriesXZ(self.rows[: max(0, zhi - self.zlo)], self.zlo)

    def lowest_row(self) -> Optional[int]:
        for i, r in enumerate(self.rows):
            if not r.is_zero():
                return self.zlo + i
        return None

    def is_zero(self) -> bool:
        return all(r.is_zero() for r in self.rows)

    def __add__(self, other: "SeriesXZ") -> "SeriesXZ":
        zlo = min(self.zlo, other.zlo)
        zhi = min(self.zhi, other.zhi)
        return SeriesXZ([self.row(r) + other.row(r) for r in range(zlo, zhi)], zlo)

    def __neg__(self):
        return SeriesXZ([-r for r in self.rows], self.zlo)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "SeriesXZ":
        if isinstance(c, LaurentSeries):
            return SeriesXZ([r * c for r in self.rows], self.zlo)
        return SeriesXZ([r.scale(c) for r in self.rows], self.zlo)

    def __mul__(self, other):
        if not isinstance(other, SeriesXZ):
            return self.scale(other)
        zlo = self.zlo + other.zlo
        zhi = min(self.zlo + other.zhi, other.zlo + self.zhi)
        rows = []
        for r in range(zlo, zhi):
            acc = None
            for i in range(self.zlo, r - other.zlo + 1):
                a = self.rows[i - self.zlo]
                b = other.rows[r - i - other.zlo]
                if a.is_zero() and a.hi is None or b.is_zero() and b.hi is None:
                    continue
                t = a * b
                acc = t if acc is None else acc + t
            rows.append(acc if acc is not None else LaurentSeries.zero(self.var))
        return SeriesXZ(rows, zlo)

    def shift_z(self, k: int) -> "SeriesXZ":
        return SeriesXZ(self.rows, self.zlo + k)

    def neg_z(self) -> "SeriesXZ":
        """Substitute z -> -z."""
        return SeriesXZ([r if (self.zlo + i) % 2 == 0 else -r for i, r in enumerate(self.rows)], self.zlo)

    def derivative_z(self) -> "SeriesXZ":
        rows = [self.rows[i].scale(self.zlo + i) for i in range(len(self.rows))]
        return SeriesXZ(rows, self.zlo).shift_z(-1)

    def pow(self, k: int) -> "SeriesXZ":
        if k < 0:
            return self.invert().pow(-k)
        if k == 0:
            n = max(self.zhi, 1)
            return SeriesXZ([LaurentSeries.const(1, self.var)] + [LaurentSeries.zero(self.var)] * (n - 1), 0)
        out = self
        for _ in range(k - 1):
            out = out * self
        return out

    def invert(self, xprec: Optional[int] = None) -> "SeriesXZ":
        """Inverse in F((x))((z)); the lowest nonzero row must be an invertible Laurent series.

        ``xprec`` bounds the number of x-terms kept when that row is an exact
        polynomial with an infinite inverse.
        """
        v = self.lowest_row()
        if v is None:
            raise DivisionByZero("inverse of a z-series that is zero within its window")
        n = self.zhi - v
        a0inv = self.row(v).invert_unit(xprec)
        out = [a0inv]
        for k in range(1, n):
            acc = None
            for j in range(1, k + 1):
                a = self.row(v + j)
                if a.is_zero() and a.hi is None:
                    continue
                t = a * out[k - j]
                acc = t if acc is None else acc + t
            out.append(-(acc * a0inv) if acc is not None else LaurentSeries.zero(self.var))
        return SeriesXZ(out, -v)

    def compose(self, g: "SeriesXZ") -> "SeriesXZ":
        """f(x, g(x, z)) for g with no z^0 term; negative powers need valuation exactly 1."""
        _require_positive(g)
        vg = g.lowest_row()
        if vg is None:
            raise CompositionError("inner series vanishes within its window")
        if self.zlo < 0 and vg != 1:
            raise CompositionError("negative powers need an inner series of z-valuation 1")
        if self.zhi < 1:
            raise CompositionError("outer series carries no known coefficients at z^0 or above")
        # unknown terms of f start at z^zhi, which g^zhi pushes to z^(zhi*vg)
        zhi = self.zhi * vg
        acc = None
        gp = {}
        for r in range(self.zlo, self.zhi):
            fr = self.rows[r - self.zlo]
            if fr.is_zero() and fr.hi is None:
                continue
            if r not in gp:
                gp[r] = g.pow(r)
            t = gp[r].scale(fr)
            acc = t if acc is None else acc + t
        if acc is None:
            return SeriesXZ([LaurentSeries.zero(self.var)] * zhi, 0)
        return acc.truncate(zhi)

    def substitute_scalar(self, q0) -> "SeriesXZ":
        return SeriesXZ([r.substitute_scalar(q0) for r in self.rows], self.zlo)

    def __eq__(self, other):
        if not isinstance(other, SeriesXZ):
            return NotImplemented
        return self.zlo == other.zlo and self.rows == other.rows

    def agrees(self, other: "SeriesXZ") -> bool:
        lo = min(self.zlo, other.zlo)
        hi = min(self.zhi, other.zhi)
        return all(self.row(r).agrees(other.row(r)) for r in range(lo, hi))

    def __str__(self):
        parts = []
        for i, r in enumerate(self.rows):
            if not r.is_zero() or r.hi is not None:
                parts.append(f"z^{self.zlo + i}*[{r}]")
        parts.append(f"O(z^{self.zhi})")
        return " + ".join(parts)

    __repr__ = __str__

    def to_json(self) -> dict:
        return {"zlo": self.zlo, "zhi": self.zhi, "rows": [r.to_json() for r in self.rows]}

    @classmethod
    def from_json(cls, d: dict) -> "SeriesXZ":
        return cls([LaurentSeries.from_json(r) for r in d["rows"]], d["zlo"])


def z_series(zhi: int = 2, var="x") -> SeriesXZ:
    """The series z itself."""
    return SeriesXZ.scalar_series([0, 1] + [0] * max(0, zhi - 2), 0, var).truncate(zhi)


def log1p(order: int, f: Optional[SeriesXZ] = None) -> SeriesXZ:
    """log(1 + f) through z^order; ``f`` defaults to z."""
    if f is None:
        coeffs = [Fraction(0)] + [Fraction((-1) ** (n - 1), n) for n in range(1, order + 1)]
        return SeriesXZ.scalar_series(coeffs)
    _require_positive(f)
    zhi = min(order + 1, f.zhi)
    acc = SeriesXZ([LaurentSeries.zero(f.var)] * zhi, 0)
    power = f
    for n in range(1, zhi):
        acc = acc + power.scale(Scalar.const(Fraction((-1) ** (n - 1), n)))
        power = (power * f).truncate(zhi)
    return acc.truncate(zhi)


def exp_series(f: SeriesXZ, order: Optional[int] = None) -> SeriesXZ:
    """exp(f) for f in zF((x))[[z]]."""
    _require_positive(f)
    zhi = f.zhi if order is None else min(order + 1, f.zhi)
    one = SeriesXZ([LaurentSeries.const(1, f.var)] + [LaurentSeries.zero(f.var)] * (zhi - 1), 0)
    acc = one
    power = one
    for n in range(1, zhi):
        power = (power * f).truncate(zhi)
        acc = acc + power.scale(Scalar.const(Fraction(1, factorial(n))))
    return acc.truncate(zhi)


def _require_positive(f: SeriesXZ):
    for r in range(f.zlo, min(1, f.zhi)):
        if not f.row(r).is_zero():
            raise CompositionError("series has terms at z^0 or below; the sum does not converge formally")


def exp_minus_one(order: int) -> SeriesXZ:
    return SeriesXZ.scalar_series([0] + [Fraction(1, factorial(n)) for n in range(1, order + 1)])


# ---------------------------------------------------------------------------
# Sparse Laurent polynomials and rational expressions in named variables
# ---------------------------------------------------------------------------

Monomial = Tuple[Tuple[str, int], ...]


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted((v, e) for v, e in d.items() if e))


class MPoly:
    """Laurent polynomial with Scalar coefficients; monomials are sorted (var, exp) tuples."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[Monomial, Scalar]] = None):
        self.terms: Dict[Monomial, Scalar] = {m: c for m, c in (terms or {}).items() if c}

    @classmethod
    def const(cls, c) -> "MPoly":
        return cls({(): Scalar.coerce(c)})

    @classmethod
    def var(cls, name: str, e: int = 1) -> "MPoly":
        return cls({((name, e),): ONE}) if e else cls.const(1)

    @classmethod
    def from_exponents(cls, vars_: Tuple[str, ...], coeffs: Dict[Tuple[int, ...], Scalar]) -> "MPoly":
        out = {}
        for exps, c in coeffs.items():
            m = tuple(sorted((v, e) for v, e in zip(vars_, exps) if e))
            out[m] = out[m] + c if m in out else Scalar.coerce(c)
        return cls(out)

    def variables(self):
        return sorted({v for m in self.terms for v, _ in m})

    def is_zero(self) -> bool:
        return not self.terms

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __add__(self, other):
        if not isinstance(other, MPoly):
            other = MPoly.const(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out[m] + c if m in out else c
        return MPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return MPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, MPoly):
            other = MPoly.const(other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, MPoly):
            c = Scalar.coerce(other)
            return MPoly({m: v * c for m, v in self.terms.items()})
        out: Dict[Monomial, Scalar] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out[m] + c1 * c2 if m in out else c1 * c2
        return MPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            if not self.is_monomial():
                raise ValueError("negative power of a non-monomial polynomial")
            (m, c), = self.terms.items()
            return MPoly({tuple((v, e * k) for v, e in m): c ** k})
        out = MPoly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, MPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items(), key=lambda t: t[0])))

    def exponent_range(self, var: str):
        es = [dict(m).get(var, 0) for m in self.terms]
        return (min(es), max(es)) if es else (0, 0)

    def collect(self, var: str) -> Dict[int, "MPoly"]:
        """Group by powers of ``var``: {e: coefficient polynomial}."""
        out: Dict[int, Dict[Monomial, Scalar]] = {}
        for m, c in self.terms.items():
            d = dict(m)
            e = d.pop(var, 0)
            rest = tuple(sorted(d.items()))
            out.setdefault(e, {})[rest] = c
        return {e: MPoly(t) for e, t in out.items()}

    def exponents(self, vars_: Tuple[str, ...]) -> Dict[Tuple[int, ...], Scalar]:
        extra = set(self.variables()) - set(vars_)
        if extra:
            raise VariableMismatch(f"unexpected variables {sorted(extra)}")
        return {tuple(dict(m).get(v, 0) for v in vars_): c for m, c in self.terms.items()}

    def as_scalar(self) -> Scalar:
        if self.variables():
            raise VariableMismatch(f"expected a constant, found variables {self.variables()}")
        return self.terms.get((), ZERO)

    def to_laurent(self, var: str) -> LaurentSeries:
        return LaurentSeries({e[0]: c for e, c in self.exponents((var,)).items()}, var)

    def substitute_scalar(self, q0) -> "MPoly":
        return MPoly({m: Scalar.const(c.eval(q0)) for m, c in self.terms.items()})

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items(), key=lambda t: t[0]):
            mono = "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)
            cs = str(c)
            if mono and not c.is_constant():
                cs = f"({cs})"
            if not mono:
                parts.append(cs)
            elif c.is_one():
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts)

    __repr__ = __str__


class RationalExpr:
    """Quotient of two MPolys; monomial denominators are folded into the numerator."""

    __slots__ = ("num", "den")

    def __init__(self, num: MPoly, den: Optional[MPoly] = None):
        den = MPoly.const(1) if den is None else den
        if den.is_zero():
            raise DivisionByZero("zero denominator")
        if den.is_monomial():
            num = num * den ** -1
            den = MPoly.const(1)
        self.num = num
        self.den = den

    @classmethod
    def const(cls, c) -> "RationalExpr":
        return cls(MPoly.const(c))

    @classmethod
    def parse(cls, text: str) -> "RationalExpr":
        from .exprs import parse_rational
        return parse_rational(text)

    def variables(self):
        return sorted(set(self.num.variables()) | set(self.den.variables()))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __add__(self, other):
        if not isinstance(other, RationalExpr):
            other = RationalExpr.const(other)
        if self.den == other.den:
            return RationalExpr(self.num + other.num, self.den)
        return RationalExpr(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalExpr(-self.num, self.den)

    def __sub__(self, other):
        if not isinstance(other, RationalExpr):
            other = RationalExpr.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, RationalExpr):
            other = RationalExpr.const(other)
        return RationalExpr(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inv(self) -> "RationalExpr":
        if self.num.is_zero():
            raise DivisionByZero("inverse of zero expression")
        return RationalExpr(self.den, self.num)

    def __truediv__(self, other):
        if not isinstance(other, RationalExpr):
            other = RationalExpr.const(other)
        return self * other.inv()

    def __pow__(self, k: int):
        base = self if k >= 0 else self.inv()
        out = RationalExpr.const(1)
        for _ in range(abs(k)):
            out = out * base
        return out

    def __eq__(self, other):
        # no multivariate gcd, so compare by cross-multiplication
        if not isinstance(other, RationalExpr):
            try:
                other = RationalExpr.const(other)
            except TypeError:
                return NotImplemented
        return self.num * other.den == other.num * self.den

    __hash__ = None

    def as_scalar(self) -> Scalar:
        return self.num.as_scalar() / self.den.as_scalar()

    def substitute_scalar(self, q0) -> "RationalExpr":
        return RationalExpr(self.num.substitute_scalar(q0), self.den.substitute_scalar(q0))

    def __str__(self):
        if self.den == MPoly.const(1):
            return str(self.num)
        return f"({self.num})/({self.den})"

    __repr__ = __str__


# ---------------------------------------------------------------------------
# Window tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Shape:
    """Which completion a table lives in.

    ``IterLower`` with ``order=(outer, inner)`` is F((outer))((inner)): the inner
    exponent is bounded below uniformly and, for each inner exponent, the outer
    one is bounded below.  ``JointLower`` is bounded below in all variables;
    ``Distribution`` claims nothing outside the window.
    """

    kind: str
    order: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("IterLower", "JointLower", "Distribution"):
            raise ValueError(f"unknown shape {self.kind}")

    def __str__(self):
        return f"IterLower({','.join(self.order)})" if self.kind == "IterLower" else self.kind

    @classmethod
    def parse(cls, s: str) -> "Shape":
        if s.startswith("IterLower("):
            return cls("IterLower", tuple(s[len("IterLower("):-1].split(",")))
        return cls(s)


JOINT = Shape("JointLower")
DISTRIBUTION = Shape("Distribution")


def iter_lower(outer: str, inner: str) -> Shape:
    return Shape("IterLower", (outer, inner))


def _zero_like(v):
    if isinstance(v, Scalar):
        return ZERO
    return v * ZERO


def _is_zero(v) -> bool:
    return v.is_zero() if hasattr(v, "is_zero") else v == 0


class WindowTable:
    """Coefficients over an inclusive box of exponents.

    ``lower``/``upper`` are known support bounds per variable (``None`` when
    unknown); a table whose bounds are all known is a finite object and may
    multiply a distribution.  Values are Scalars or module states.
    """

    __slots__ = ("vars", "window", "coeffs", "shape", "lower", "upper")

    def __init__(self, vars_, window, coeffs=None, shape: Shape = DISTRIBUTION,
                 lower=None, upper=None):
        self.vars = tuple(vars_)
        self.window = tuple(tuple(w) for w in window)
        if len(self.window) != len(self.vars):
            raise ValueError("one window per variable")
        self.shape = shape
        n = len(self.vars)
        self.lower = tuple(lower) if lower is not None else (None,) * n
        self.upper = tuple(upper) if upper is not None else (None,) * n
        c = {}
        for e, v in (coeffs or {}).items():
            e = tuple(e)
            if isinstance(v, (int, Fraction)):
                v = Scalar.const(v)
            if self.contains(e) and not _is_zero(v):
                c[e] = v
        self.coeffs = c

    @classmethod
    def from_mpoly(cls, p: MPoly, vars_, shape: Shape = JOINT) -> "WindowTable":
        ex = p.exponents(tuple(vars_))
        n = len(vars_)
        if ex:
            lo = tuple(min(e[i] for e in ex) for i in range(n))
            hi = tuple(max(e[i] for e in ex) for i in range(n))
        else:
            lo = hi = (0,) * n
        return cls(vars_, list(zip(lo, hi)), ex, shape, lo, hi)

    def contains(self, e) -> bool:
        return all(a <= x <= b for x, (a, b) in zip(e, self.window))

    def get(self, e, default=None):
        e = tuple(e)
        if not self.contains(e):
            raise PrecisionExhausted(f"exponent {e} outside window {self.window}")
        if e in self.coeffs:
            return self.coeffs[e]
        return ZERO if default is None else default

    def is_finite(self) -> bool:
        return all(v is not None for v in self.lower + self.upper)

    def is_zero(self) -> bool:
        return not self.coeffs

    def nonzero(self):
        return sorted(self.coeffs.items())

    def exponents(self):
        return _cartesian(*[range(a, b + 1) for a, b in self.window])

    def restrict(self, window) -> "WindowTable":
        window = [(max(a, c), min(b, d)) for (a, b), (c, d) in zip(self.window, window)]
        return WindowTable(self.vars, window, self.coeffs, self.shape, self.lower, self.upper)

    def shrink(self, k: int = 1) -> "WindowTable":
        return self.restrict([(a + k, b - k) for a, b in self.window])

    def _align(self, other: "WindowTable"):
        if self.vars != other.vars:
            raise VariableMismatch(f"{self.vars} vs {other.vars}")

    def __add__(self, other: "WindowTable") -> "WindowTable":
        self._align(other)
        window = [(max(a, c), min(b, d)) for (a, b), (c, d) in zip(self.window, other.window)]
        c = dict(self.coeffs)
        for e, v in other.coeffs.items():
            c[e] = c[e] + v if e in c else v
        lower = tuple(None if a is None or b is None else min(a, b) for a, b in zip(self.lower, other.lower))
        upper = tuple(None if a is None or b is None else max(a, b) for a, b in zip(self.upper, other.upper))
        return WindowTable(self.vars, window, c, _join_shape(self.shape, other.shape), lower, upper)

    def __neg__(self):
        return WindowTable(self.vars, self.window, {e: -v for e, v in self.coeffs.items()},
                           self.shape, self.lower, self.upper)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "WindowTable":
        return WindowTable(self.vars, self.window, {e: v * s for e, v in self.coeffs.items()},
                           self.shape, self.lower, self.upper)

    def map_values(self, fn) -> "WindowTable":
        return WindowTable(self.vars, self.window, {e: fn(v) for e, v in self.coeffs.items()},
                           self.shape, self.lower, self.upper)

    def __mul__(self, other):
        if isinstance(other, MPoly):
            other = WindowTable.from_mpoly(other, self.vars)
        if not isinstance(other, WindowTable):
            return self.scale(other)
        return table_mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, MPoly):
            return table_mul(WindowTable.from_mpoly(other, self.vars), self)
        return self.scale(other)

    def check_shape(self) -> bool:
        """Scan the support against the shape's claim and the declared bounds."""
        for e in self.coeffs:
            for i, x in enumerate(e):
                if self.lower[i] is not None and x < self.lower[i]:
                    return False
                if self.upper[i] is not None and x > self.upper[i]:
                    return False
        if self.shape.kind == "Distribution":
            return True
        if self.shape.kind == "JointLower":
            # every variable needs a bound, or the box edge must be empty
            for i in range(len(self.vars)):
                if self.lower[i] is None and any(e[i] == self.window[i][0] for e in self.coeffs):
                    return False
            return True
        outer, inner = self.shape.order
        j = self.vars.index(inner)
        return self.lower[j] is not None or not any(e[j] == self.window[j][0] for e in self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, WindowTable):
            return NotImplemented
        return (self.vars, self.window, self.shape, self.lower, self.upper, self.coeffs) == \
            (other.vars, other.window, other.shape, other.lower, other.upper, other.coeffs)

    def __repr__(self):
        return f"WindowTable({self.vars}, {self.window}, {self.shape}, {len(self.coeffs)} terms)"

    def to_json(self) -> dict:
        def enc(v):
            return str(v) if isinstance(v, Scalar) else v.to_json()
        return {"vars": list(self.vars), "window": [list(w) for w in self.window],
                "shape": str(self.shape), "lower": list(self.lower), "upper": list(self.upper),
                "terms": [[list(e), enc(v)] for e, v in self.nonzero()]}

    @classmethod
    def from_json(cls, d: dict, decode=None) -> "WindowTable":
        decode = decode or Scalar.parse
        return cls(d["vars"], d["window"], {tuple(e): decode(v) for e, v in d["terms"]},
                   Shape.parse(d["shape"]), d["lower"], d["upper"])


def _join_shape(a: Shape, b: Shape) -> Shape:
    if a == b:
        return a
    if "Distribution" in (a.kind, b.kind):
        return DISTRIBUTION
    if a.kind == "JointLower":
        return b
    if b.kind == "JointLower":
        return a
    return DISTRIBUTION


def _valid_range(wa, wb, la, ua, lb, ub):
    """Output exponents of a 1-variable convolution that are fully determined."""
    out = []
    for e in range(wa[0] + wb[0], wa[1] + wb[1] + 1):
        lo = max(la if la is not None else -INF, e - ub if ub is not None else -INF)
        hi = min(ua if ua is not None else INF, e - lb if lb is not None else INF)
        if lo == -INF or hi == INF:
            continue
        if lo > hi or (wa[0] <= lo and hi <= wa[1] and wb[0] <= e - hi and e - lo <= wb[1]):
            out.append(e)
    return out


def table_mul(a: WindowTable, b: WindowTable) -> WindowTable:
    """Product of two tables, defined where every contributing term lies in both windows."""
    a._align(b)
    ka, kb = a.shape.kind, b.shape.kind
    if ka == "Distribution" and kb == "Distribution":
        raise ShapeError("product of two distributions")
    if ka == "Distribution" and not b.is_finite() or kb == "Distribution" and not a.is_finite():
        raise ShapeError("a distribution only multiplies finite-support tables")
    if ka == kb == "IterLower" and a.shape.order != b.shape.order:
        raise ShapeError(f"opposite expansion orders {a.shape.order} and {b.shape.order}")
    window = []
    for i in range(len(a.vars)):
        rng = _valid_range(a.window[i], b.window[i], a.lower[i], a.upper[i], b.lower[i], b.upper[i])
        if not rng:
            raise ShapeError(f"no determined coefficients in variable {a.vars[i]}")
        lo, hi = rng[0], rng[-1]
        if rng != list(range(lo, hi + 1)):
            raise ShapeError("determined exponents do not form an interval")
        window.append((lo, hi))
    out: Dict[tuple, object] = {}
    bitems = list(b.coeffs.items())
    for e1, v1 in a.coeffs.items():
        for e2, v2 in bitems:
            e = tuple(x + y for x, y in zip(e1, e2))
            if all(lo <= x <= hi for x, (lo, hi) in zip(e, window)):
                t = _times(v1, v2)
                out[e] = out[e] + t if e in out else t
    lower = tuple(_add_hi(x, y) for x, y in zip(a.lower, b.lower))
    upper = tuple(_add_hi(x, y) for x, y in zip(a.upper, b.upper))
    if "Distribution" in (ka, kb):
        shape = DISTRIBUTION
    elif ka == "IterLower":
        shape = a.shape
    elif kb == "IterLower":
        shape = b.shape
    else:
        shape = JOINT
    return WindowTable(a.vars, window, out, shape, lower, upper)


def _times(v1, v2):
    if isinstance(v1, Scalar):
        return v2 * v1 if not isinstance(v2, Scalar) else v1 * v2
    if isinstance(v2, Scalar):
        return v1 * v2
    raise TypeError("at most one factor of a table product may be vector-valued")


def cancel(f: WindowTable, prod: WindowTable, lower: Optional[Tuple[int, ...]] = None) -> WindowTable:
    """Solve f·A = prod for a jointly lower-truncated A.

    ``f`` must be a nonzero finite table.  Coefficients of A are solved in
    lexicographic order from the lex-least term of f; A vanishes below
    ``lower`` (default: prod's lower bounds minus f's).  The result covers the
    largest box above ``lower`` whose entries only read inside prod's window,
    so f·A = f·B forces A = B there.
    """
    f._align(prod)
    if f.is_zero() or not f.is_finite():
        raise ValueError("cancel needs a nonzero finite multiplier")
    n = len(f.vars)
    if lower is None:
        if any(x is None for x in prod.lower):
            raise ShapeError("product has no lower bound; pass one for the quotient")
        lower = tuple(p - g for p, g in zip(prod.lower, f.lower))
    lead = min(f.coeffs)
    lead_inv = Scalar.coerce(f.coeffs[lead]).inv()
    rest = [(m, v) for m, v in f.coeffs.items() if m != lead]
    memo: Dict[tuple, object] = {}

    def solve(e):
        if any(x < lo for x, lo in zip(e, lower)):
            return None
        if e in memo:
            return memo[e]
        target = tuple(x + m for x, m in zip(e, lead))
        if not prod.contains(target):
            raise PrecisionExhausted(f"quotient coefficient {e} reads outside the product window")
        acc = prod.coeffs.get(target)
        for m, v in rest:
            prev = solve(tuple(x + a - b for x, a, b in zip(e, lead, m)))
            if prev is not None and not _is_zero(prev):
                t = _times(prev, v)
                acc = -t if acc is None else acc - t
        memo[e] = None if acc is None else _times(acc, lead_inv)
        return memo[e]

    top = [w[1] - a for w, a in zip(prod.window, lead)]
    while all(t >= lo for t, lo in zip(top, lower)):
        box = [(lo, t) for lo, t in zip(lower, top)]
        try:
            for e in _cartesian(*[range(a, b + 1) for a, b in box]):
                solve(e)
        except PrecisionExhausted:
            top = [t - 1 for t in top]
            continue
        coeffs = {e: memo[e] for e in _cartesian(*[range(a, b + 1) for a, b in box])
                  if memo.get(e) is not None}
        return WindowTable(f.vars, box, coeffs, JOINT, lower, (None,) * n)
    raise PrecisionExhausted("product window too small to recover any quotient coefficient")


# ---------------------------------------------------------------------------
# Expansions
# ---------------------------------------------------------------------------

def ratio_expand(f: RationalExpr, var: str, order: int) -> Tuple[int, list]:
    """Expand a rational function of one variable at 0: returns (valuation, coefficients)."""
    extra = set(f.variables()) - {var}
    if extra:
        raise VariableMismatch(f"unexpected variables {sorted(extra)}")
    num = f.num.to_laurent(var)
    den = f.den.to_laurent(var)
    s = num * den.invert_unit(prec=order)
    start = (num.valuation() if num.coeffs else 0) - den.valuation()
    return start, [s.coeffs.get(start + k, ZERO) for k in range(order)]


def iota_expand(f: RationalExpr, outer: str, inner: str, order: int) -> WindowTable:
    """Expansion of ``f`` in nonnegative powers of ``inner`` (F((outer))((inner))).

    The part of the denominator of lowest ``inner``-degree must be a monomial in
    ``outer``.  Returns ``order`` consecutive ``inner``-degrees starting from the
    lowest one.
    """
    extra = set(f.variables()) - {outer, inner}
    if extra:
        raise VariableMismatch(f"unexpected variables {sorted(extra)}")
    den = f.den.collect(inner)
    j0 = min(den)
    lead = den[j0]
    if not lead.is_monomial():
        raise ExpansionDirectionError(
            f"lowest {inner}-part of the denominator ({lead}) is not invertible in F(({outer}))")
    lead_inv = lead ** -1
    # f = num * lead^-1 * inner^-j0 * (1 + r)^-1 with r in inner*F[outer^+-1][inner]
    r = {j - j0: p * lead_inv for j, p in den.items() if j != j0}
    num = {j: p * lead_inv for j, p in f.num.collect(inner).items()}
    start = (min(num) if num else 0) - j0
    need = order
    inv = {0: MPoly.const(1)}
    for n in range(1, need):
        acc = MPoly()
        for k, rk in r.items():
            if k <= n and (n - k) in inv:
                acc = acc + rk * inv[n - k]
        inv[n] = -acc
    coeffs: Dict[Tuple[int, int], Scalar] = {}
    for jn, p in num.items():
        for n, s in inv.items():
            e_inner = jn - j0 + n
            if e_inner >= start + order:
                continue
            for m, c in (p * s).exponents((outer,)).items():
                key = (m[0], e_inner)
                coeffs[key] = coeffs[key] + c if key in coeffs else c
    vars_ = (outer, inner)
    if coeffs:
        olo = min(k[0] for k in coeffs)
        ohi = max(k[0] for k in coeffs)
    else:
        olo = ohi = 0
    window = [(olo, ohi), (start, start + order - 1)]
    # the outer bounds hold row by row for the inner degrees inside the window,
    # which is all a product of two such tables ever reads
    return WindowTable(vars_, window, coeffs, iter_lower(outer, inner),
                       lower=(olo, start), upper=(ohi, None))


def delta_series(numer_var: str = "x", denom_var: str = "z", window=6) -> WindowTable:
    """δ(numer/denom) = Σ_n numer^n denom^-n on the box [-D, D]^2."""
    d = window if isinstance(window, int) else None
    w = [(-d, d), (-d, d)] if d is not None else [tuple(window[0]), tuple(window[1])]
    coeffs = {(m, -m): ONE for m in range(w[0][0], w[0][1] + 1) if w[1][0] <= -m <= w[1][1]}
    return WindowTable((numer_var, denom_var), w, coeffs, DISTRIBUTION)


def two_var_delta(D: int = 6, substituted: bool = False) -> Dict[str, WindowTable]:
    """The three terms of the standard three-variable delta identity.

    Plain form, variables (x0, x1, x2)::

        x0^-1 δ((x1-x2)/x0) - x0^-1 δ((x2-x1)/(-x0)) = x1^-1 δ((x2+x0)/x1)

    With ``substituted=True`` the variables are (x1, x2, z) and x0 = x2*z::

        (x2 z)^-1 δ((x1-x2)/(x2 z)) - (x2 z)^-1 δ((x2-x1)/(-x2 z)) = x1^-1 δ(x2(1+z)/x1)

    Returns a dict with keys ``t1``, ``t2``, ``rhs`` and ``difference``.
    """
    t1, t2, rhs = _substituted_delta(D) if substituted else _standard_delta(D)
    diff = t1 - t2 - rhs
    return {"t1": t1, "t2": t2, "rhs": rhs, "difference": diff}


def _standard_delta(D: int):
    """Coefficient tables in (x0, x1, x2); entries x0^c x1^a x2^b."""
    t1, t2, rhs = {}, {}, {}
    rng = range(-D, D + 1)
    for c in rng:
        n = -c - 1
        for b in range(0, D + 1):
            # x0^-1 δ((x1-x2)/x0) = Σ_n (x1-x2)^n x0^{-n-1}, nonnegative powers of x2
            a = n - b
            if -D <= a <= D:
                t1[(c, a, b)] = Scalar.const(binomial(n, b) * (-1) ** b)
        for a in range(0, D + 1):
            # x0^-1 δ((x2-x1)/(-x0)) = Σ_n (x1-x2)^n x0^{-n-1}, nonnegative powers of x1
            b = n - a
            if -D <= b <= D:
                t2[(c, a, b)] = Scalar.const(binomial(n, a) * (-1) ** ((n - a) % 2))
    for a in rng:
        # x1^-1 δ((x2+x0)/x1) = Σ_n (x2+x0)^n x1^{-n-1}, nonnegative powers of x0
        n = -a - 1
        for c in range(0, D + 1):
            b = n - c
            if -D <= b <= D:
                rhs[(c, a, b)] = Scalar.const(binomial(n, c))
    win = [(-D, D)] * 3
    v = ("x0", "x1", "x2")
    return tuple(WindowTable(v, win, t, DISTRIBUTION) for t in (t1, t2, rhs))


def _substituted_delta(D: int):
    """Coefficient tables in (x1, x2, z) of the x0 = x2 z form."""
    v = ("x1", "x2", "z")
    win = [(-D, D)] * 3
    t1, t2, rhs = {}, {}, {}
    # (x2 z)^-1 δ((x1-x2)/(x2 z)) = Σ_n (x1-x2)^n x2^{-n-1} z^{-n-1}, expanded in x2:
    #   x1^a x2^b z^c with c = -n-1, a = n - j, b = j - n - 1 (so a + b = -1)
    #   coefficient C(n, j) (-1)^j
    for c in range(-D, D + 1):
        n = -c - 1
        for a in range(-D, D + 1):
            b = -1 - a
            if not -D <= b <= D:
                continue
            j = n - a
            if j >= 0:
                val = binomial(n, j) * (-1) ** j
                if val:
                    t1[(a, b, c)] = Scalar.const(val)
            # second term expanded in x1: (x1 - x2)^n = Σ_i C(n,i) x1^i (-x2)^{n-i}
            if a >= 0:
                val = binomial(n, a) * (-1) ** ((n - a) % 2)
                if val:
                    t2[(a, b, c)] = Scalar.const(val)
    # x1^-1 δ(x2(1+z)/x1) = Σ_n x2^n (1+z)^n x1^{-n-1}; expanded in z
    for a in range(-D, D + 1):
        n = -a - 1
        b = n
        if not -D <= b <= D:
            continue
        for c in range(0, D + 1):
            val = binomial(n, c)
            if val:
                rhs[(a, b, c)] = Scalar.const(val)
    return tuple(WindowTable(v, win, t, DISTRIBUTION) for t in (t1, t2, rhs))


# ---------------------------------------------------------------------------
# Substitution x1 -> φ(x, z)
# ---------------------------------------------------------------------------

def is_x_exp_z(phi: SeriesXZ) -> bool:
    """Whether the stored rows are those of x·e^z."""
    for i, r in enumerate(phi.rows):
        n = phi.zlo + i
        want = {1: Scalar.const(Fraction(1, factorial(n)))} if n >= 0 else {}
        if r.coeffs != want:
            return False
    return phi.zlo == 0


def check_associate_base(phi: SeriesXZ, var="x"):
    if phi.zlo > 0 or any(not phi.row(r).is_zero() for r in range(phi.zlo, 0)):
        raise NotAnAssociateBase("φ has negative z-powers")
    if phi.zhi < 1:
        raise NotAnAssociateBase("φ has no z^0 row")
    r0 = phi.row(0)
    if r0.coeffs != {1: ONE} or (r0.hi is not None and r0.hi <= 1):
        raise NotAnAssociateBase(f"φ(x,0) = {r0} is not x")


class PhiPowers:
    """Memoized powers φ(x,z)^i, truncated at z^zhi."""

    def __init__(self, phi: SeriesXZ, zhi: Optional[int] = None):
        check_associate_base(phi)
        self.phi = phi
        self.zhi = phi.zhi if zhi is None else min(zhi, phi.zhi)
        self.var = phi.var
        self.fast = is_x_exp_z(phi)
        self._cache: Dict[int, SeriesXZ] = {}
        if not self.fast:
            # y = φ/x - 1, lies in zF((x))[[z]]
            x_inv = LaurentSeries.monomial(-1, 1, self.var)
            self._y = SeriesXZ([LaurentSeries.zero(self.var)] +
                               [phi.row(r) * x_inv for r in range(1, self.zhi)], 0)
            self._ypow = [None]

    def power(self, i: int) -> SeriesXZ:
        if i in self._cache:
            return self._cache[i]
        if self.fast:
            # (x e^z)^i = x^i Σ_r i^r z^r / r!
            rows = [LaurentSeries({i: Fraction(i ** r, factorial(r))}, self.var) for r in range(self.zhi)]
            out = SeriesXZ(rows, 0)
        else:
            acc = None
            for j in range(0, self.zhi):
                c = binomial(i, j)
                if not c:
                    continue
                t = self._ypower(j).scale(Scalar.const(c))
                acc = t if acc is None else acc + t
            out = acc.scale(LaurentSeries.monomial(i, 1, self.var))
        self._cache[i] = out
        return out

    def drift(self) -> Fraction:
        """Lower bound on (x-exponent shift)/(z-exponent) across powers of φ."""
        d = Fraction(0)
        for r in range(1, self.zhi):
            row = self.phi.row(r)
            if row.is_zero() and row.hi is None:
                continue
            d = min(d, Fraction(row.lo - 1, r))
        return d

    def _ypower(self, j: int) -> SeriesXZ:
        while len(self._ypow) <= j:
            k = len(self._ypow)
            if k == 1:
                self._ypow.append(self._y)
            else:
                self._ypow.append((self._ypow[k - 1] * self._y).truncate(self.zhi))
        if j == 0:
            return SeriesXZ([LaurentSeries.const(1, self.var)] +
                            [LaurentSeries.zero(self.var)] * (self.zhi - 1), 0)
        return self._ypow[j]


def substitute_assoc(f, phi: SeriesXZ, target_var: str = "x1", powers: Optional[PhiPowers] = None):
    """f(φ(x,z), x) as a series in z with Laurent coefficients in x.

    ``f`` is a Laurent series in ``target_var`` or a finite table / MPoly in
    (``target_var``, x).
    """
    pw = powers or PhiPowers(phi)
    x = pw.var
    if isinstance(f, LaurentSeries):
        if f.var != target_var:
            raise VariableMismatch(f"series in {f.var}, substituting for {target_var}")
        terms = {(e, 0): c for e, c in f.coeffs.items()}
    elif isinstance(f, MPoly):
        vars_ = (target_var, x)
        terms = f.exponents(vars_)
    elif isinstance(f, WindowTable):
        if not f.is_finite():
            raise PrecisionExhausted("substitution needs a finite table")
        terms = {e: c for e, c in f.coeffs.items()}
    else:
        raise TypeError(f"cannot substitute into {type(f).__name__}")
    acc = None
    for (i, l), c in sorted(terms.items()):
        t = pw.power(i).scale(LaurentSeries.monomial(l, c, x))
        acc = t if acc is None else acc + t
    if acc is None:
        acc = SeriesXZ([LaurentSeries.zero(x)] * pw.zhi, 0)
    if isinstance(f, LaurentSeries) and f.hi is not None:
        # the unknown tail Σ_{e>=hi} c_e φ^e reaches x^(hi + s*drift) at z^s
        d = pw.drift()
        acc = SeriesXZ([r.truncate(f.hi + math.floor(s * d)) for s, r in enumerate(acc.rows)], 0)
    return acc
