"""Fields on a module, their products, and the Y_E^φ calculus.

A field a(x) acting on W is stored as the rule (e, w) ↦ coefficient of x^e in
a(x)w, together with a per-basis-vector lower bound below which a(x)w has no
terms.  Vectors are dicts from basis keys (words for the βγ modules, column
indices for matrix modules) to scalars.

Y_E^φ(a, z)b = p(φ(x,z),x)^{-1} (p(x1,x) a(x1) b(x))|_{x1=φ(x,z)} is computed
row by row in z.  The multiplier p is chosen per basis vector from a candidate
list; a candidate counts as certified when the product p·a(x1)b(x2)w has a
common lower bound in x1 on a window of x2-degrees, and that bound is
re-checked on every x2-degree the computation actually reads.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import factorial
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

from .associates import Associate, associate_from_p
from .errors import (
    NoMultiplierFound,
    PrecisionExhausted,
    UncertifiedMultiplier,
    WindowEscape,
)
from .fockrep import BETA, GAMMA, BgModule, ModuleState, word_text
from .report import CheckReport, merge
from .scalars import ONE, ZERO, Scalar, binomial
from .series import (
    DISTRIBUTION,
    JOINT,
    LaurentSeries,
    MPoly,
    PhiPowers,
    RationalExpr,
    SeriesXZ,
    WindowTable,
    ratio_expand,
    substitute_assoc,
)

Vec = Dict[Hashable, Scalar]
FAR = 10 ** 9  # lower bound of a zero vector
SCAN = 24  # degrees searched above a lower bound for the first nonzero coefficient


def _acc(out: Vec, terms: Vec, c: Scalar = ONE):
    if not c:
        return
    for k, v in terms.items():
        t = v * c
        if k in out:
            s = out[k] + t
            if s:
                out[k] = s
            else:
                del out[k]
        elif t:
            out[k] = t


def as_vec(state) -> Vec:
    if isinstance(state, ModuleState):
        return dict(state.terms)
    if isinstance(state, dict):
        return {k: Scalar.coerce(v) for k, v in state.items() if v}
    return {state: ONE}


def vec_text(v: Vec) -> str:
    if not v:
        return "0"
    parts = []
    for k in sorted(v, key=str):
        name = word_text(k) if isinstance(k, tuple) else f"e{k}"
        parts.append(f"({v[k]})*{name}")
    return " + ".join(parts)


def _c(n) -> Scalar:
    return Scalar.const(n)


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------

class FieldOperator:
    """An element of Hom(W, W((x)))."""

    def __init__(self, label: str):
        self.label = label
        self._cache: Dict[Tuple[int, Hashable], Vec] = {}

    def lower_key(self, key) -> int:
        raise NotImplementedError

    def _coeff_key(self, e: int, key) -> Vec:
        raise NotImplementedError

    def coeff_key(self, e: int, key) -> Vec:
        if e < self.lower_key(key):
            return {}
        k = (e, key)
        hit = self._cache.get(k)
        if hit is None:
            hit = self._coeff_key(e, key)
            self._cache[k] = hit
        return hit

    def lower(self, vec: Vec) -> int:
        return min((self.lower_key(k) for k in vec), default=FAR)

    def coeff(self, e: int, vec: Vec) -> Vec:
        out: Vec = {}
        for k, c in vec.items():
            _acc(out, self.coeff_key(e, k), c)
        return out

    def mode(self, n: int, state) -> Vec:
        """a_n w, the coefficient of x^{-n-1}."""
        return self.coeff(-n - 1, as_vec(state))

    def expansion(self, state, width: int) -> Dict[int, Vec]:
        v = as_vec(state)
        lo = self.lower(v)
        if lo >= FAR:
            return {}
        first = next((e for e in range(lo, lo + SCAN) if self.coeff(e, v)), lo)
        return {e: c for e in range(first, first + width) if (c := self.coeff(e, v))}

    def __repr__(self):
        return f"<field {self.label}>"


class GeneratorField(FieldOperator):
    """β(x) or γ(x) on a βγ module."""

    def __init__(self, module: BgModule, gen: str, label: Optional[str] = None):
        mark = "~" if module.trig else "^"
        super().__init__(label or f"{'beta' if gen == BETA else 'gamma'}{mark}")
        self.module = module
        self.gen = gen

    def lower_key(self, key) -> int:
        return -self.module.kill_bound(self.gen, key)

    def _coeff_key(self, e, key):
        return self.module._act(self.gen, -e - 1, key)


class IdentityField(FieldOperator):
    def __init__(self, label: str = "1_W"):
        super().__init__(label)

    def lower_key(self, key) -> int:
        return 0

    def _coeff_key(self, e, key):
        return {key: ONE} if e == 0 else {}


class LinearField(FieldOperator):
    """Σ c_i f_i."""

    def __init__(self, terms: Sequence[Tuple[Scalar, FieldOperator]], label: Optional[str] = None):
        self.terms = [(Scalar.coerce(c), f) for c, f in terms if c]
        super().__init__(label or " + ".join(f"({c})*{f.label}" for c, f in self.terms) or "0")

    def lower_key(self, key) -> int:
        return min((f.lower_key(key) for _, f in self.terms), default=FAR)

    def _coeff_key(self, e, key):
        out: Vec = {}
        for c, f in self.terms:
            _acc(out, f.coeff_key(e, key), c)
        return out


class MatrixField(FieldOperator):
    """A matrix of Laurent polynomials acting on F^dim; basis keys are column indices."""

    def __init__(self, entries: Dict[Tuple[int, int], LaurentSeries], dim: int, label: str = "M"):
        super().__init__(label)
        self.dim = dim
        self.entries = {ij: s for ij, s in entries.items() if not s.is_zero()}
        for s in self.entries.values():
            if s.hi is not None:
                raise ValueError("matrix entries must be exact Laurent polynomials")

    @classmethod
    def parse(cls, rows: Sequence[Sequence[str]], label: str = "M") -> "MatrixField":
        entries = {}
        for i, row in enumerate(rows):
            for j, text in enumerate(row):
                entries[(i, j)] = _laurent_of(text)
        return cls(entries, len(rows), label)

    def lower_key(self, key) -> int:
        return min((s.lo for (i, j), s in self.entries.items() if j == key), default=FAR)

    def _coeff_key(self, e, key):
        return {i: s.coefficient(e) for (i, j), s in self.entries.items()
                if j == key and s.coefficient(e)}


def _laurent_of(text: str) -> LaurentSeries:
    f = RationalExpr.parse(text)
    if not f.den.is_monomial():
        raise ValueError(f"{text} is not a Laurent polynomial in x")
    return (f.num * f.den ** -1).to_laurent("x")


class RowField(FieldOperator):
    """The z^s row of Y_E^φ(a, z)b, i.e. the mode a_{-s-1} b."""

    def __init__(self, y: "YPhi", s: int):
        super().__init__(f"{y.a.label}_({-s - 1})({y.b.label})")
        self.y = y
        self.s = s

    def lower_key(self, key) -> int:
        return self.y.row_lower(self.s, key)

    def _coeff_key(self, e, key):
        return self.y.coefficient(self.s, e, key)


# ---------------------------------------------------------------------------
# Multipliers and operator products
# ---------------------------------------------------------------------------

class Multiplier:
    """A Laurent polynomial p(x1, x2), stored as {(α, β): c} for c x1^α x2^β."""

    def __init__(self, terms: Dict[Tuple[int, int], Scalar], label: str):
        self.terms = {k: Scalar.coerce(c) for k, c in terms.items() if c}
        if not self.terms:
            raise ValueError("multiplier must be nonzero")
        self.label = label
        self.amin = min(a for a, _ in self.terms)
        self.bmin = min(b for _, b in self.terms)

    @classmethod
    def power(cls, k: int) -> "Multiplier":
        """(x1 - x2)^k."""
        terms = {(k - l, l): _c(binomial(k, l) * (-1) ** l) for l in range(k + 1)}
        return cls(terms, "1" if k == 0 else ("(x1-x2)" if k == 1 else f"(x1-x2)^{k}"))

    @classmethod
    def ratio(cls, coeffs: Sequence, label: Optional[str] = None) -> "Multiplier":
        """Σ c_a (x1/x2)^a from coefficients low to high."""
        terms = {(a, -a): Scalar.coerce(c) for a, c in enumerate(coeffs)}
        return cls(terms, label or f"ratio{_poly_text(coeffs)}")

    @classmethod
    def parse(cls, text: str) -> "Multiplier":
        f = RationalExpr.parse(text)
        if set(f.variables()) - {"x1", "x2", "t"}:
            raise ValueError(f"multiplier uses variables other than x1, x2, t: {text}")
        if not f.den.is_monomial():
            raise ValueError(f"multiplier {text} is not a Laurent polynomial")
        p = f.num * f.den ** -1
        t = MPoly.var("x1") * MPoly.var("x2", -1)
        p = _subst_var(p, "t", t)
        return cls(p.exponents(("x1", "x2")), text)

    def mpoly(self, v1: str = "x1", v2: str = "x") -> MPoly:
        return MPoly.from_exponents((v1, v2), self.terms)

    def times_power(self, k: int) -> "Multiplier":
        out: Dict[Tuple[int, int], Scalar] = {}
        for (a, b), c in self.terms.items():
            for (a2, b2), c2 in Multiplier.power(k).terms.items():
                key = (a + a2, b + b2)
                out[key] = out.get(key, ZERO) + c * c2
        return Multiplier(out, f"{self.label}*(x1-x2)^{k}")

    def __str__(self):
        return self.label

    def __eq__(self, other):
        return isinstance(other, Multiplier) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))


def _subst_var(p: MPoly, var: str, value: MPoly) -> MPoly:
    out = MPoly()
    for e, coeff in p.collect(var).items():
        out = out + coeff * value ** e
    return out


def _poly_text(coeffs) -> str:
    return "[" + ",".join(str(Scalar.coerce(c)) for c in coeffs) + "]"


def default_candidates(kmax: int = 6, extra: Iterable[Multiplier] = ()) -> List[Multiplier]:
    return [Multiplier.power(k) for k in range(kmax + 1)] + list(extra)


class _Product:
    """Coefficients of p(x1,x2) a(x1) b(x2) w and its certified x1 lower bound."""

    def __init__(self, a: FieldOperator, b: FieldOperator, mult: Multiplier, window: int):
        self.a, self.b, self.mult = a, b, mult
        self.window = window
        self.cap = 4 * window + 8
        self._P: Dict[tuple, Vec] = {}
        self._T: Dict[tuple, Vec] = {}
        self._low: Dict[tuple, int] = {}
        self._i0: Dict[Hashable, int] = {}
        self._checked: Dict[Hashable, int] = {}

    def j0(self, key) -> int:
        lb = self.b.lower_key(key)
        return FAR if lb >= FAR else lb + self.mult.bmin

    def P(self, i, j, key) -> Vec:
        k = (i, j, key)
        hit = self._P.get(k)
        if hit is None:
            bj = self.b.coeff_key(j, key)
            hit = self.a.coeff(i, bj) if bj else {}
            self._P[k] = hit
        return hit

    def T(self, i, j, key) -> Vec:
        k = (i, j, key)
        hit = self._T.get(k)
        if hit is None:
            hit = {}
            for (al, be), c in self.mult.terms.items():
                _acc(hit, self.P(i - al, j - be, key), c)
            self._T[k] = hit
        return hit

    def row_bound(self, j, key) -> int:
        lo = FAR
        for (al, be) in self.mult.terms:
            bj = self.b.coeff_key(j - be, key)
            if bj:
                lo = min(lo, al + self.a.lower(bj))
        return lo

    def row_low(self, j, key) -> int:
        """Lowest x1-degree with a nonzero coefficient in x2-degree j (a lower bound if none shows up)."""
        k = (j, key)
        if k in self._low:
            return self._low[k]
        start = self.row_bound(j, key)
        low = start
        if start < FAR:
            low = start + self.cap
            for i in range(start, start + self.cap):
                if self.T(i, j, key):
                    low = i
                    break
        self._low[k] = low
        return low

    def i0(self, key) -> int:
        if key in self._i0:
            return self._i0[key]
        j0 = self.j0(key)
        if j0 >= FAR:
            self._i0[key] = FAR
            return FAR
        # the bound seen on the first 2W degrees, less a slack of W, has to hold
        # on the next 2W; a multiplier that is too small shows up as a bound
        # drifting down with the x2-degree
        W = self.window
        # start the window at the first x2-degree that carries anything
        j0 = next((j for j in range(j0, j0 + SCAN) if self.row_bound(j, key) < FAR), j0)
        seen = min(self.row_low(j, key) for j in range(j0, j0 + 2 * W))
        if seen >= FAR:
            seen = min(self.row_low(j, key) for j in range(j0, j0 + 4 * W))
        i0 = seen - W if seen < FAR else FAR
        for j in range(j0 + 2 * W, j0 + 4 * W):
            self._require_clear(j, key, i0)
        self._i0[key] = i0
        self._checked[key] = j0 + 4 * W - 1
        return i0

    def check_rows(self, key, upto: int):
        """Extend the certificate to every x2-degree <= upto."""
        i0 = self.i0(key)
        done = self._checked.get(key, self.j0(key) - 1)
        for j in range(done + 1, upto + 1):
            self._require_clear(j, key, i0)
            self._checked[key] = j

    def _require_clear(self, j, key, i0):
        """Raise unless x2-degree j has no term below x1^i0."""
        for i in range(self.row_bound(j, key), i0):
            if self.T(i, j, key):
                raise UncertifiedMultiplier(
                    f"{self.mult} * {self.a.label}(x1){self.b.label}(x2) on {_key_text(key)}: "
                    f"x2^{j} reaches x1^{i} below {i0}")


def _key_text(key) -> str:
    return word_text(key) if isinstance(key, tuple) else f"e{key}"


def product_window(a: FieldOperator, b: FieldOperator, w, window=4) -> WindowTable:
    """Coefficients of x1^m x2^n in a(x1) b(x2) w on the box [-D, D]^2 (or explicit ranges)."""
    if isinstance(window, int):
        win = [(-window, window), (-window, window)]
    else:
        win = [tuple(window[0]), tuple(window[1])]
    v = as_vec(w)
    coeffs = {}
    for n in range(win[1][0], win[1][1] + 1):
        bn = b.coeff(n, v)
        if not bn:
            continue
        for m in range(win[0][0], win[0][1] + 1):
            c = a.coeff(m, bn)
            if c:
                coeffs[(m, n)] = ModuleState(c) if _word_keys(c) else _VecValue(c)
    return WindowTable(("x1", "x2"), win, coeffs, DISTRIBUTION)


def _word_keys(v: Vec) -> bool:
    return all(isinstance(k, tuple) for k in v)


class _VecValue(dict):
    """Vector over integer keys, usable as a table value."""

    def is_zero(self):
        return not self

    def __str__(self):
        return vec_text(self)


def find_multiplier(a: FieldOperator, b: FieldOperator, sample, candidates=None,
                    window: int = 4, kmax: int = 6) -> Tuple[Multiplier, CheckReport]:
    """Least candidate p with p·a(x1)b(x2)w jointly lower-truncated on every sampled w."""
    cands = list(candidates) if candidates is not None else default_candidates(kmax)
    keys = [k for s in sample for k in as_vec(s)]
    tried = []
    for m in cands:
        prod = _Product(a, b, m, window)
        try:
            bounds = {_key_text(k): prod.i0(k) for k in keys}
        except UncertifiedMultiplier as e:
            tried.append({"multiplier": m.label, "reason": str(e)})
            continue
        return m, CheckReport("multiplier", True, meta={
            "multiplier": m.label, "shape": str(JOINT), "window": window,
            "x1_lower": {k: v for k, v in bounds.items() if v < FAR}, "rejected": tried})
    raise NoMultiplierFound(
        f"no candidate among {[m.label for m in cands]} makes {a.label}(x1){b.label}(x2) "
        f"jointly lower-truncated within window {window}")


# ---------------------------------------------------------------------------
# The Y_E^φ product
# ---------------------------------------------------------------------------

def _phi_series(phi, rows: int) -> SeriesXZ:
    if phi is None:
        return SeriesXZ([LaurentSeries.monomial(1, Fraction(1, factorial(n))) for n in range(rows)], 0)
    if isinstance(phi, LaurentSeries):
        return associate_from_p(phi, rows).phi
    if isinstance(phi, Associate):
        if phi.generator_p is not None and phi.phi.zhi < rows:
            return associate_from_p(phi.generator_p, rows).phi
        phi = phi.phi
    if phi.zhi < rows:
        raise PrecisionExhausted(f"φ known through z^{phi.zhi - 1}; the product needs z^{rows - 1}")
    return phi


class YPhi:
    """Y_E^φ(a, z)b truncated to the rows z^s with s < order."""

    def __init__(self, a: FieldOperator, b: FieldOperator, phi=None, multiplier=None,
                 order: int = 6, window: int = 4, kmax: int = 6, xprec: int = 24):
        self.a, self.b = a, b
        self.order = order
        self.window = window
        self.xprec = xprec
        if isinstance(multiplier, Multiplier):
            self.candidates = [multiplier]
            self.explicit = True
        else:
            self.candidates = list(multiplier) if multiplier is not None else default_candidates(kmax)
            self.explicit = False
        vmax = max(_degree(m) for m in self.candidates)
        self.zhi = order + 2 * vmax + 2
        self.pw = PhiPowers(_phi_series(phi, self.zhi), self.zhi)
        self.drift = self.pw.drift()
        self._prods: Dict[int, _Product] = {}
        self._inv: Dict[int, Tuple[SeriesXZ, int]] = {}
        self._choice: Dict[Hashable, int] = {}
        self._s_memo: Dict[tuple, Vec] = {}
        self._r_memo: Dict[tuple, Vec] = {}
        self._rows: Dict[int, RowField] = {}

    # -- multiplier bookkeeping
    def _product(self, idx) -> _Product:
        if idx not in self._prods:
            self._prods[idx] = _Product(self.a, self.b, self.candidates[idx], self.window)
        return self._prods[idx]

    def _inverse(self, idx) -> Tuple[SeriesXZ, int]:
        if idx not in self._inv:
            m = self.candidates[idx]
            P = substitute_assoc(m.mpoly("x1", self.pw.var), self.pw.phi, "x1", self.pw)
            v = P.lowest_row()
            if v is None:
                raise UncertifiedMultiplier(f"{m}(φ(x,z),x) vanishes within z^{self.zhi}")
            self._inv[idx] = (P.invert(self.xprec), v)
        return self._inv[idx]

    def select(self, key) -> int:
        if key in self._choice:
            return self._choice[key]
        reasons = []
        for idx in range(len(self.candidates)):
            try:
                self._product(idx).i0(key)
            except UncertifiedMultiplier as e:
                reasons.append(str(e))
                continue
            self._choice[key] = idx
            return idx
        if self.explicit:
            raise UncertifiedMultiplier(reasons[0])
        raise NoMultiplierFound(f"no certified multiplier for {self.a.label}, {self.b.label} on "
                                f"{_key_text(key)}")

    def multiplier(self, key) -> Multiplier:
        return self.candidates[self.select(key)]

    def valuation(self, key) -> int:
        """Rows z^s with s below minus this value vanish."""
        return self._inverse(self.select(key))[1]

    # -- rows
    def _s_low(self, s, i0, j0) -> int:
        return i0 + j0 + math.floor(s * self.drift)

    def _S(self, idx, s, e, key) -> Vec:
        """[z^s x^e] of (p a(x1) b(x) w)|_{x1=φ}."""
        k = (idx, s, e, key)
        hit = self._s_memo.get(k)
        if hit is not None:
            return hit
        prod = self._product(idx)
        i0, j0 = prod.i0(key), prod.j0(key)
        out: Vec = {}
        if i0 < FAR and j0 < FAR:
            reach = math.floor(-s * self.drift)
            prod.check_rows(key, e - i0 + reach + 1)
            if self.pw.fast:
                fs = factorial(s)
                for i in range(i0, e - j0 + 1):
                    t = prod.T(i, e - i, key)
                    if t:
                        _acc(out, t, _c(Fraction(i ** s, fs)))
            else:
                for i in range(i0, e - j0 + reach + 1):
                    row = self.pw.power(i).row(s)
                    if row.hi is not None and e - j0 >= row.hi:
                        raise PrecisionExhausted(f"[z^{s}]φ^{i} known below x^{row.hi} only")
                    for tdeg, c in row.coeffs.items():
                        j = e - tdeg
                        if j < j0:
                            continue
                        t = prod.T(i, j, key)
                        if t:
                            _acc(out, t, c)
        self._s_memo[k] = out
        return out

    def coefficient(self, s: int, e: int, key) -> Vec:
        """[z^s x^e] Y_E^φ(a, z)b applied to the basis vector ``key``."""
        if s >= self.order:
            raise WindowEscape(f"row z^{s} beyond the computed order {self.order}")
        k = (s, e, key)
        hit = self._r_memo.get(k)
        if hit is not None:
            return hit
        idx = self.select(key)
        inv, v = self._inverse(idx)
        prod = self._product(idx)
        i0, j0 = prod.i0(key), prod.j0(key)
        out: Vec = {}
        if s >= -v and i0 < FAR:
            for r in range(-v, s + 1):
                row = inv.row(r)
                lo = self._s_low(s - r, i0, j0)
                if row.hi is not None and e - lo >= row.hi:
                    raise PrecisionExhausted(f"inverse multiplier row z^{r} known below x^{row.hi} only")
                for ep, c in row.coeffs.items():
                    if e - ep >= lo:
                        _acc(out, self._S(idx, s - r, e - ep, key), c)
        self._r_memo[k] = out
        return out

    def row_lower(self, s: int, key) -> int:
        if s >= self.order:
            raise WindowEscape(f"row z^{s} beyond the computed order {self.order}")
        idx = self.select(key)
        inv, v = self._inverse(idx)
        prod = self._product(idx)
        i0, j0 = prod.i0(key), prod.j0(key)
        if s < -v or i0 >= FAR:
            return FAR
        lo = FAR
        for r in range(-v, s + 1):
            row = inv.row(r)
            if row.coeffs or row.hi is not None:
                lo = min(lo, row.lo + self._s_low(s - r, i0, j0))
        return lo

    def row(self, s: int) -> RowField:
        if s >= self.order:
            raise WindowEscape(f"row z^{s} beyond the computed order {self.order}")
        if s not in self._rows:
            self._rows[s] = RowField(self, s)
        return self._rows[s]

    def mode(self, n: int) -> RowField:
        return self.row(-n - 1)

    def lowest_row(self, keys) -> int:
        return min(-self.valuation(k) for k in keys)

    def rows_on(self, state, width: int = 4, srange: Optional[Iterable[int]] = None) -> Dict[int, Dict[int, Vec]]:
        """{s: {e: vector}} on a window of x-degrees above each row's lower bound."""
        v = as_vec(state)
        lo_s = min((-self.valuation(k) for k in v), default=0)
        out = {}
        for s in (srange if srange is not None else range(lo_s, self.order)):
            f = self.row(s)
            lo = f.lower(v)
            if lo >= FAR:
                continue
            first = next((e for e in range(lo, lo + SCAN) if f.coeff(e, v)), lo)
            cells = {e: c for e in range(first, first + width) if (c := f.coeff(e, v))}
            if cells:
                out[s] = cells
        return out

    def to_json(self, state, width: int = 4) -> dict:
        return {"a": self.a.label, "b": self.b.label, "order": self.order,
                "rows": {str(s): {str(e): vec_text(c) for e, c in cells.items()}
                         for s, cells in self.rows_on(state, width).items()}}


def _degree(m: Multiplier) -> int:
    """Bound on the z-valuation of m(φ(x,z), x): the spread of its x1-degrees."""
    return max(a for a, _ in m.terms) - min(a for a, _ in m.terms)


def y_phi(a: FieldOperator, b: FieldOperator, phi=None, multiplier=None, order: int = 6,
          window: int = 4, kmax: int = 6) -> YPhi:
    return YPhi(a, b, phi, multiplier, order, window, kmax)


class Calculus:
    """Memoized products for one associate, so derived fields can be multiplied again."""

    def __init__(self, phi=None, order: int = 6, window: int = 4, kmax: int = 6):
        self.phi = phi
        self.order = order
        self.window = window
        self.kmax = kmax
        self._ys: Dict[tuple, YPhi] = {}

    def y(self, a: FieldOperator, b: FieldOperator, multiplier=None) -> YPhi:
        key = (id(a), id(b), multiplier.label if isinstance(multiplier, Multiplier) else None)
        hit = self._ys.get(key)
        if hit is None:
            hit = YPhi(a, b, self.phi, multiplier, self.order, self.window, self.kmax)
            self._ys[key] = hit
        return hit

    def row(self, a: FieldOperator, s: int, b: FieldOperator) -> RowField:
        return self.y(a, b).row(s)

    def floor(self, a: FieldOperator, b: FieldOperator, keys) -> int:
        """Lowest z-row of Y(a, z)b that can be nonzero on the given basis vectors."""
        y = self.y(a, b)
        return min((-y.valuation(k) for k in keys), default=0)

    def mode(self, a: FieldOperator, n: int, b: FieldOperator) -> RowField:
        return self.row(a, -n - 1, b)


def mode(a: FieldOperator, n: int, b: FieldOperator, phi=None, **kw) -> RowField:
    return YPhi(a, b, phi, **kw).mode(n)


def _combo(terms, e, key) -> Vec:
    out: Vec = {}
    for c, f in terms:
        _acc(out, f.coeff_key(e, key), c)
    return out


def _combo_lower(terms, key) -> int:
    return min((f.lower_key(key) for _, f in terms), default=FAR)


def compare_combos(lhs, rhs, keys, width: int, where: dict) -> List[dict]:
    """Compare Σ c f on each basis key over ``width`` x-degrees from the first nonzero one.

    Lower bounds of derived fields are loose, so everything between the bound
    and the first nonzero degree (at most SCAN degrees) is compared as well.
    """
    out = []
    for key in keys:
        lo = min(_combo_lower(lhs, key), _combo_lower(rhs, key))
        if lo >= FAR:
            continue
        hi = lo + SCAN + width
        e = lo
        while e < hi:
            left, right = _combo(lhs, e, key), _combo(rhs, e, key)
            if left or right:
                hi = min(hi, e + width)
            if left != right:
                out.append({**where, "state": _key_text(key), "x": e,
                            "lhs": vec_text(left), "rhs": vec_text(right)})
            e += 1
    return out


def fields_equal(f: FieldOperator, g: FieldOperator, sample, width: int = 4) -> List[dict]:
    keys = [k for s in sample for k in as_vec(s)]
    return compare_combos([(ONE, f)], [(ONE, g)], keys, width, {"fields": f"{f.label} vs {g.label}"})


def _keys(sample) -> List[Hashable]:
    seen = []
    for s in sample:
        for k in as_vec(s):
            if k not in seen:
                seen.append(k)
    return seen


# ---------------------------------------------------------------------------
# Univariate polynomials in t over Scalar (coefficient lists, low degree first)
# ---------------------------------------------------------------------------

def _up_trim(p):
    p = list(p)
    while p and not p[-1]:
        p.pop()
    return p


def _up_mul(a, b):
    if not a or not b:
        return []
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = out[i + j] + x * y
    return _up_trim(out)


def _up_divmod(a, b):
    a, b = _up_trim(a), _up_trim(b)
    if not b:
        raise ZeroDivisionError("division by the zero polynomial")
    q = [ZERO] * max(0, len(a) - len(b) + 1)
    r = list(a)
    lead = b[-1].inv()
    while len(r) >= len(b) and r:
        c = r[-1] * lead
        d = len(r) - len(b)
        q[d] = c
        for i, y in enumerate(b):
            r[d + i] = r[d + i] - c * y
        r = _up_trim(r[:-1]) if not r[-1] else _up_trim(r)
    return _up_trim(q), r


def _up_gcd(a, b):
    a, b = _up_trim(a), _up_trim(b)
    while b:
        a, b = b, _up_divmod(a, b)[1]
    if not a:
        return [ONE]
    lead = a[-1].inv()
    return [c * lead for c in a]


def _up_lcm(a, b):
    return _up_divmod(_up_mul(a, b), _up_gcd(a, b))[0]


def _up_eval(p, x: Scalar) -> Scalar:
    acc = ZERO
    for c in reversed(p):
        acc = acc * x + c
    return acc


def root_multiplicity(p, root=ONE) -> int:
    p = _up_trim(p)
    if not p:
        raise ValueError("zero polynomial")
    k = 0
    lin = [-root, ONE]
    while True:
        q, r = _up_divmod(p, lin)
        if r:
            return k
        p, k = q, k + 1


def _t_poly(m: MPoly):
    """Coefficient list of a polynomial in t; returns (list, shift) for Laurent input."""
    if set(m.variables()) - {"t"}:
        raise ValueError(f"expected a function of t alone, got {m}")
    ex = m.exponents(("t",))
    if not ex:
        return [], 0
    lo = min(e[0] for e in ex)
    hi = max(e[0] for e in ex)
    return [ex.get((d,), ZERO) for d in range(lo, hi + 1)], lo


def _ratio_parts(f: RationalExpr):
    """Reduced (numerator, denominator) coefficient lists of a rational function of t."""
    n, sn = _t_poly(f.num)
    d, sd = _t_poly(f.den)
    shift = sn - sd
    if shift > 0:
        n = [ZERO] * shift + n
    elif shift < 0:
        d = [ZERO] * (-shift) + d
    g = _up_gcd(n, d)
    n, d = _up_divmod(n, g)[0], _up_divmod(d, g)[0]
    lead = d[-1].inv()
    return [c * lead for c in n], [c * lead for c in d]


# ---------------------------------------------------------------------------
# Locality relations
# ---------------------------------------------------------------------------

class LocalityRelation:
    """a(x1)b(x2) = Σ ι_{x2,x1}(q_i(x1/x2)) u_i(x2)v_i(x1) [+ δ(x1/x2)].

    With ``contact`` the relation carries a delta term, which the multiplier
    must kill.  The multiplier p(t) defaults to the lcm of the denominators,
    times (t - 1) when there is a contact term.
    """

    def __init__(self, a: FieldOperator, b: FieldOperator,
                 terms: Sequence[Tuple[RationalExpr, FieldOperator, FieldOperator]],
                 contact: bool = False, p: Optional[Sequence] = None, label: str = ""):
        self.a, self.b = a, b
        self.terms = [(RationalExpr.parse(q) if isinstance(q, str) else q, u, v) for q, u, v in terms]
        self.contact = contact
        self.label = label or f"{a.label},{b.label}"
        if p is None:
            acc = [ONE]
            for q, _, _ in self.terms:
                acc = _up_lcm(acc, _ratio_parts(q)[1])
            if contact:
                acc = _up_mul(acc, [-ONE, ONE])
            self.p = acc
        else:
            self.p = _up_trim(Scalar.coerce(c) for c in p)

    @property
    def k(self) -> int:
        """Multiplicity of the zero of p at t = 1."""
        return root_multiplicity(self.p)

    def p_text(self) -> str:
        return _poly_text(self.p)


def trig_relations(module: BgModule) -> List[LocalityRelation]:
    """The three exchange relations of the trig βγ module at its value of q."""
    if not module.trig:
        raise ValueError("trig relations need a trig module")
    q = module.kind.q
    f = RationalExpr.parse("(t - q)/(q*t - 1)")
    g = RationalExpr.parse("(q*t - 1)/(t - q)")
    if q.is_constant():
        f, g = f.substitute_scalar(q.constant()), g.substitute_scalar(q.constant())
    bt, gt = GeneratorField(module, BETA), GeneratorField(module, GAMMA)
    return [LocalityRelation(bt, bt, [(f, bt, bt)], label="bb"),
            LocalityRelation(gt, gt, [(f, gt, gt)], label="gg"),
            LocalityRelation(bt, gt, [(g, gt, bt)], contact=True, label="bg")]


def _expand_t(f: RationalExpr, need: int):
    """ι expansion Σ_{n >= start} c_n t^n with coefficients through t^(start+need-1)."""
    start, coeffs = ratio_expand(f, "t", max(need, 1))
    return start, coeffs


def check_strig_locality(rel: LocalityRelation, sample, window: int = 4) -> CheckReport:
    """p(x1/x2)a(x1)b(x2)w = Σ ι_{x2,x1}(p q_i)(x1/x2) u_i(x2)v_i(x1)w on x-degrees [-D, D]."""
    keys = _keys(sample)
    pt = MPoly.from_exponents(("t",), {(d,): c for d, c in enumerate(rel.p)})
    pq = [(RationalExpr(pt) * q, u, v) for q, u, v in rel.terms]
    rng = range(-window, window + 1)
    violations = []
    for key in keys:
        w = {key: ONE}
        exps = []
        for f, u, v in pq:
            vlo = v.lower(w)
            need = (window - vlo) + 2 * window + 4
            exps.append((_expand_t(f, need), u, v, vlo))
        for i in rng:
            for j in rng:
                lhs: Vec = {}
                for d, c in enumerate(rel.p):
                    bj = rel.b.coeff(j + d, w)
                    if bj:
                        _acc(lhs, rel.a.coeff(i - d, bj), c)
                rhs: Vec = {}
                for (start, coeffs), u, v, vlo in exps:
                    for n in range(start, i - vlo + 1):
                        if n - start >= len(coeffs):
                            raise PrecisionExhausted("ratio expansion too short")
                        c = coeffs[n - start]
                        if c:
                            vi = v.coeff(i - n, w)
                            if vi:
                                _acc(rhs, u.coeff(j + n, vi), c)
                if lhs != rhs:
                    violations.append({"relation": rel.label, "state": _key_text(key), "x1": i, "x2": j,
                                       "lhs": vec_text(lhs), "rhs": vec_text(rhs)})
    return CheckReport.from_checks(f"strig-locality[{rel.label}]", violations,
                                   p=rel.p_text(), window=window, states=len(keys))


def _exp_series_of(p_num, p_den, k: int, order: int) -> List[Scalar]:
    """Coefficients of u^k num(e^u)/den(e^u) through u^(order-1)."""
    def at_exp(poly):
        return LaurentSeries({n: sum((c * _c(Fraction(d ** n, factorial(n))) for d, c in enumerate(poly)), ZERO)
                              for n in range(order + k + 2)}, "u", hi=order + k + 2)
    num, den = at_exp(p_num), at_exp(p_den)
    if not den.coeffs:
        raise PrecisionExhausted("denominator vanishes to the available order")
    g = (num * den.invert_unit(order + k + 2)).shift(k)
    if g.coeffs and min(g.coeffs) < 0:
        raise ValueError("u^k q(e^u) has a pole at u = 0; k is too small")
    return [g.coefficient(n) for n in range(order)]


def check_locality_conversion(rel: LocalityRelation, sample, calc: Optional[Calculus] = None,
                              window: int = 4, fields: Optional[Sequence[FieldOperator]] = None,
                              k: Optional[int] = None) -> CheckReport:
    """(x1-x2)^k Y(a,x1)Y(b,x2)c = Σ (x1-x2)^k ι_{x2,x1}(q_i(e^{x1-x2})) Y(u_i,x2)Y(v_i,x1)c.

    Y is Y_E^e; k defaults to the multiplicity of the zero of p at t = 1; c
    runs over ``fields`` (1_W, a and b by default) and the z-degrees over
    [-D/2, D/2).
    """
    calc = calc or Calculus(None, order=window + 2, window=window)
    k = rel.k if k is None else k
    keys = _keys(sample)
    fields = list(fields) if fields is not None else [IdentityField(), rel.a, rel.b]
    half = window // 2
    rng = range(-half, window - half)
    top = calc.order - 1
    floor_ = -calc.kmax
    gs = []
    for q, u, v in rel.terms:
        n, d = _ratio_parts(q)
        gs.append((_exp_series_of(n, d, k, 2 * window + 2 * calc.kmax + k + 2), u, v))
    violations = []

    def row(f, s, c):
        return calc.row(f, s, c)

    for c in fields:
        for i in rng:
            for j in rng:
                lhs = []
                for l in range(k + 1):
                    s1, s2 = i - (k - l), j - l
                    if s1 < floor_ or s2 < floor_:
                        continue
                    lhs.append((_c(binomial(k, l) * (-1) ** l), row(rel.a, s1, row(rel.b, s2, c))))
                rhs = []
                for g, u, v in gs:
                    for m, gm in enumerate(g):
                        if not gm:
                            continue
                        for l in range(m + 1):
                            s1, s2 = j - (m - l), i - l
                            if s1 < floor_ or s2 < floor_ or s1 > top:
                                continue
                            rhs.append((gm * _c(binomial(m, l) * (-1) ** (m - l)), row(u, s1, row(v, s2, c))))
                violations += compare_combos(lhs, rhs, keys, window,
                                             {"relation": rel.label, "c": c.label, "x1": i, "x2": j})
    return CheckReport.from_checks(f"locality-conversion[{rel.label}]", violations, k=k,
                                   p=rel.p_text(), window=window, states=len(keys))


# ---------------------------------------------------------------------------
# Jacobi-type identity
# ---------------------------------------------------------------------------

def vacuum_singular_fields(module: BgModule, u_gen: str, v_gen: str, nmax: int,
                           vacuum_field: Optional[FieldOperator] = None) -> Dict[int, List[Tuple[Scalar, FieldOperator]]]:
    """u_n v for n = 0..nmax in the vacuum module, mapped to fields with vac ↦ 1_W.

    Only products that land in the span of the vacuum can be mapped here.
    """
    one = vacuum_field or IdentityField()
    v = module._act(v_gen, -1, ())
    out = {}
    for n in range(nmax + 1):
        res: Vec = {}
        for w, c in v.items():
            _acc(res, module._act(u_gen, n, w), c)
        if any(w != () for w in res):
            raise ValueError(f"{u_gen}_{n}{v_gen}_(-1)vac = {vec_text(res)} leaves the vacuum line")
        out[n] = [(res[()], one)] if () in res else []
    return out


def _log_powers(rmin: int, rmax: int, order: int) -> Dict[int, LaurentSeries]:
    """log(1+z)^r as Laurent series in z, known through z^(r+order-1)."""
    g = LaurentSeries({n - 1: Fraction((-1) ** (n - 1), n) for n in range(1, order + 2)}, "z", hi=order + 1)
    ginv = g.invert_unit(order + 1)
    out = {}
    for r in range(rmin, rmax + 1):
        base = g if r >= 0 else ginv
        p = LaurentSeries.const(1, "z")
        for _ in range(abs(r)):
            p = p * base
        out[r] = p.shift(r)
    return out


def check_jacobi_phi(rel: LocalityRelation, sample, calc: Optional[Calculus] = None, window: int = 4,
                     singular: Optional[Dict[int, List[Tuple[Scalar, FieldOperator]]]] = None) -> CheckReport:
    """Both forms of the φ = x e^z Jacobi identity for a(x1), b(x2).

    Three-term form, coefficient of x1^i x2^j z^s:

        (x2 z)^{-1}δ((x1-x2)/(x2 z)) A - (x2 z)^{-1}δ((x2-x1)/(-x2 z)) B
            = x1^{-1}δ(x2(1+z)/x1) C(log(1+z), x2)

    with A = a(x1)b(x2), B = Σ ι_{x2,x1}(q_i(x1/x2)) u_i(x2)v_i(x1) and
    C(x0, x) = Y_E^e(a, x0)b.  Residue form:

        A - B = Res_{x0} x1^{-1}δ(x2 e^{x0}/x1) x2 e^{x0} Σ_{n>=0} F_n(x2) x0^{-n-1}

    where F_n is ``singular[n]`` when given (e.g. a vacuum-module computation)
    and the row z^{-n-1} of C otherwise.
    """
    calc = calc or Calculus(None, order=window + 2, window=window)
    keys = _keys(sample)
    half = window // 2
    rng = range(-half, window - half)
    yab = calc.y(rel.a, rel.b)
    kmin = -calc.kmax
    exps = [(_ratio_parts(q), q, u, v) for q, u, v in rel.terms]
    logs = _log_powers(kmin, calc.order, 2 * window + 2 * calc.kmax + 4)

    def A(i, j, w):
        bj = rel.b.coeff(j, w)
        return rel.a.coeff(i, bj) if bj else {}

    expansions = {}

    def B(i, j, w, key):
        out: Vec = {}
        for idx, (_, q, u, v) in enumerate(exps):
            vlo = v.lower(w)
            if (idx, key) not in expansions:
                expansions[(idx, key)] = _expand_t(q, 4 * window + 16 - vlo)
            start, coeffs = expansions[(idx, key)]
            for n in range(start, i - vlo + 1):
                if n - start >= len(coeffs):
                    raise PrecisionExhausted("ratio expansion too short")
                c = coeffs[n - start]
                if c:
                    vi = v.coeff(i - n, w)
                    if vi:
                        _acc(out, u.coeff(j + n, vi), c)
        return out

    def b_x1_floor(w):
        lo = FAR
        for idx, (_, q, u, v) in enumerate(exps):
            start = ratio_expand(q, "t", 1)[0]
            lo = min(lo, start + v.lower(w))
        return lo

    v19, v20 = [], []
    for key in keys:
        w = {key: ONE}
        blo = rel.b.lower(w)
        x1lo = b_x1_floor(w)
        for i in rng:
            for j in rng:
                for s in rng:
                    n = -s - 1
                    t1: Vec = {}
                    l = 0
                    while j - s - l >= blo:
                        c = _c(binomial(n, l) * (-1) ** l)
                        if c:
                            _acc(t1, A(i + s + 1 + l, j - s - l, w), c)
                        elif n >= 0 and l > n:
                            break
                        l += 1
                    t2: Vec = {}
                    l = 0
                    while i - l >= x1lo:
                        c = _c(binomial(n, l) * (-1) ** l)
                        if c:
                            _acc(t2, B(i - l, j + 1 + l, w, key), c)
                        elif n >= 0 and l > n:
                            break
                        l += 1
                    lhs = dict(t1)
                    _acc(lhs, t2, _c((-1) ** s))
                    rhs: Vec = {}
                    for s1 in range(0, s - kmin + 1):
                        c1 = _c(binomial(-i - 1, s1))
                        if not c1:
                            continue
                        for r in range(kmin, s - s1 + 1):
                            lc = logs[r].coefficient(s - s1)
                            if lc:
                                _acc(rhs, yab.row(r).coeff(j + i + 1, w), c1 * lc)
                    if lhs != rhs:
                        v19.append({"form": "three-term", "state": _key_text(key), "x1": i, "x2": j, "z": s,
                                    "lhs": vec_text(lhs), "rhs": vec_text(rhs)})
            for j in rng:
                lhs = A(i, j, w)
                _acc(lhs, B(i, j, w, key), -ONE)
                rhs: Vec = {}
                top = max(singular) if singular is not None else -kmin - 1
                for n in range(0, top + 1):
                    c = _c(Fraction((-i) ** n, factorial(n)))
                    if not c:
                        continue
                    if singular is not None:
                        _acc(rhs, _combo(singular.get(n, []), i + j, key), c)
                    else:
                        _acc(rhs, yab.row(-n - 1).coeff(i + j, w), c)
                if lhs != rhs:
                    v20.append({"form": "residue", "state": _key_text(key), "x1": i, "x2": j,
                                "lhs": vec_text(lhs), "rhs": vec_text(rhs)})
    parts = [CheckReport.from_checks("jacobi-three-term", v19, window=window),
             CheckReport.from_checks("jacobi-residue", v20, window=window,
                                     singular="given" if singular is not None else "from rows")]
    out = merge(f"jacobi[{rel.label}]", parts)
    out.meta.update(window=window, states=len(keys))
    return out


# ---------------------------------------------------------------------------
# Associativity-type checks
# ---------------------------------------------------------------------------

def check_weak_assoc(a: FieldOperator, b: FieldOperator, c: FieldOperator, k: int, sample,
                     calc: Optional[Calculus] = None, window: int = 4) -> CheckReport:
    """(x0+x2)^k Y(a, x0+x2)Y(b, x2)c = (x0+x2)^k Y(Y(a, x0)b, x2)c on a window of (x0, x2)."""
    calc = calc or Calculus(None, order=window + k + 2, window=window)
    keys = _keys(sample)
    half = window // 2
    rng = range(-half, window - half)
    fb = calc.floor(b, c, keys)
    violations = []
    for al in rng:
        for be in rng:
            lhs = []
            t = 0
            while be - t >= fb:
                s = al + t - k
                cf = binomial(k + s, t)
                if not cf and k + s >= 0:
                    break
                inner = calc.row(b, be - t, c)
                if s >= calc.floor(a, inner, keys):
                    if s >= calc.order:
                        raise WindowEscape("weak associativity window needs more z-rows")
                    lhs.append((_c(cf), calc.row(a, s, inner)))
                t += 1
            rhs = []
            for t in range(k + 1):
                s, r = al - k + t, be - t
                if s < calc.floor(a, b, keys) or r < calc.floor(calc.row(a, s, b), c, keys):
                    continue
                rhs.append((_c(binomial(k, t)), calc.row(calc.row(a, s, b), r, c)))
            violations += compare_combos(lhs, rhs, keys, window, {"x0": al, "x2": be})
    return CheckReport.from_checks("weak-associativity", violations, k=k, window=window,
                                   fields=[a.label, b.label, c.label], states=len(keys))


def state_field_check(u: FieldOperator, v: FieldOperator, sample, phi=None, window: int = 4,
                      order: int = 4, extra: int = 1) -> CheckReport:
    """p'(φ,x)·Y_E^φ(u,z)v = (p'(x1,x) u(x1)v(x))|_{x1=φ} for p' = p·(x1-x)^extra.

    p is the multiplier the product certified on each state; the padded p'
    is an independent second certificate for the same pair.
    """
    y = YPhi(u, v, phi, order=order, window=window)
    violations = []
    keys = _keys(sample)
    for key in keys:
        m = y.multiplier(key)
        m2 = m.times_power(extra)
        y2 = YPhi(u, v, phi, m2, order=order, window=window)
        idx = 0
        P = substitute_assoc(m2.mpoly("x1", y.pw.var), y.pw.phi, "x1", y.pw)
        v0 = y.valuation(key)
        for s in range(0, order):
            lo = None
            for r in range(P.zlo, s + v0 + 1):
                lr = y.row_lower(s - r, key) if s - r >= -v0 else FAR
                if lr < FAR and P.row(r).coeffs:
                    cand = lr + P.row(r).lo
                    lo = cand if lo is None else min(lo, cand)
            if lo is None:
                continue
            for e in range(lo, lo + window):
                lhs: Vec = {}
                for r in range(P.zlo, s + v0 + 1):
                    for ep, c in P.row(r).coeffs.items():
                        _acc(lhs, y.coefficient(s - r, e - ep, key), c)
                rhs = y2._S(idx, s, e, key)
                if lhs != rhs:
                    violations.append({"state": _key_text(key), "z": s, "x": e,
                                       "lhs": vec_text(lhs), "rhs": vec_text(rhs)})
    return CheckReport.from_checks("state-field", violations, fields=[u.label, v.label],
                                   window=window, order=order)


# ---------------------------------------------------------------------------
# Finite-dimensional oracle
# ---------------------------------------------------------------------------

def _matrix_closed_form(a: MatrixField, b: MatrixField, pw: PhiPowers, order: int):
    """a(φ(x,z)) b(x) as {(i, j): SeriesXZ}."""
    out = {}
    subs = {ij: substitute_assoc(LaurentSeries(s.coeffs, "x1"), pw.phi, "x1", pw).truncate(order)
            for ij, s in a.entries.items()}
    for (i, m), sa in subs.items():
        for (m2, j), sb in b.entries.items():
            if m2 != m:
                continue
            t = sa.scale(sb)
            out[(i, j)] = out[(i, j)] + t if (i, j) in out else t
    return out


def _closed_vs_engine(y: YPhi, closed, dim: int, order: int, where: dict) -> List[dict]:
    violations = []
    for j in range(dim):
        for s in range(order):
            degs = set()
            for i in range(dim):
                if (i, j) in closed:
                    degs |= set(closed[(i, j)].row(s).coeffs)
            lo = y.row_lower(s, j)
            if lo < FAR:
                hi = max(degs) + 2 if degs else lo + 4
                degs |= set(range(lo, hi))
            for e in sorted(degs):
                eng = y.coefficient(s, e, j)
                for i in range(dim):
                    want = closed[(i, j)].row(s).coefficient(e) if (i, j) in closed else ZERO
                    got = eng.get(i, ZERO)
                    if want != got:
                        violations.append({**where, "entry": [i, j], "z": s, "x": e,
                                           "closed": str(want), "engine": str(got)})
    return violations


def borcherds_oracle(a: MatrixField, b: MatrixField, p: LaurentSeries, order: int = 5) -> CheckReport:
    """Y(a, z)b = a(φ(x,z)) b(x) with multiplier 1, and the D-property, for matrix fields."""
    dim = max(a.dim, b.dim)
    phi = associate_from_p(p, order + 4)
    one = Multiplier.power(0)
    y = YPhi(a, b, phi, one, order=order)
    violations = []
    closed = _matrix_closed_form(a, b, y.pw, order)
    violations += _closed_vs_engine(y, closed, dim, order, {"check": "product"})
    ident = MatrixField({(i, i): LaurentSeries.const(1) for i in range(dim)}, dim, "1")
    for f in (a, b):
        # e^{zD} f = Y(f, z)1_W = f(φ(x, z)), with D = p(x) d/dx
        yf = YPhi(f, ident, phi, one, order=order)
        cf = _matrix_closed_form(f, ident, yf.pw, order)
        violations += _closed_vs_engine(yf, cf, dim, order, {"check": "D-property", "field": f.label})
        cur = dict(f.entries)
        for n in range(order):
            for (i, j), s in cur.items():
                row = cf[(i, j)].row(n) if (i, j) in cf else LaurentSeries.zero()
                if row.coeffs != s.coeffs:
                    violations.append({"check": "D-property", "field": f.label, "entry": [i, j], "z": n,
                                       "derivation": str(s), "substituted": str(row)})
            cur = {ij: (p * s.derivative()).scale(Fraction(1, n + 1)) for ij, s in cur.items()}
    return CheckReport.from_checks("borcherds", violations, p=str(p), order=order,
                                   a=a.label, b=b.label, multiplier=one.label)
