"""Associates of the additive formal group: φ(x,z) = exp(z p(x) d/dx) x."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import Inconclusive, NotAnAssociateBase, PrecisionExhausted
from .report import CheckReport
from .scalars import Scalar, binomial
from .series import (
    LaurentSeries,
    MPoly,
    PhiPowers,
    RationalExpr,
    SeriesXZ,
    check_associate_base,
    substitute_assoc,
)


@dataclass(frozen=True)
class FormalGroup:
    """One-dimensional formal group; only the additive law is instantiated."""

    tag: str = "Additive"

    def __post_init__(self):
        if self.tag != "Additive":
            raise NotImplementedError(f"formal group {self.tag}")

    def law(self, x, y):
        return x + y

    def check_axioms(self) -> bool:
        x, y, z = (MPoly.var(v) for v in ("x1", "x2", "z"))
        return self.law(x, MPoly()) == x and self.law(x, self.law(y, z)) == self.law(self.law(x, y), z)


ADDITIVE = FormalGroup()


@dataclass
class Associate:
    phi: SeriesXZ
    generator_p: Optional[LaurentSeries] = None
    order: int = 0

    def __post_init__(self):
        check_associate_base(self.phi)
        if not self.order:
            self.order = self.phi.zhi - 1

    def row(self, n: int) -> LaurentSeries:
        return self.phi.row(n)

    def powers(self) -> PhiPowers:
        return PhiPowers(self.phi)

    def to_json(self) -> dict:
        out = {"order": self.order, "rows": [r.to_json() for r in self.phi.rows]}
        if self.generator_p is not None:
            out["p"] = self.generator_p.to_json()
        return out

    @classmethod
    def from_json(cls, d: dict) -> "Associate":
        p = LaurentSeries.from_json(d["p"]) if "p" in d else None
        return cls(SeriesXZ([LaurentSeries.from_json(r) for r in d["rows"]], 0), p, d["order"])


def associate_from_p(p: LaurentSeries, order: int, x_span: int = 1) -> Associate:
    """Rows f_n = (p d/dx)^n x / n! for n <= order.

    Each application of p d/dx moves a known window [lo, hi) to
    [lo + lo_p - 1, hi + lo_p - 1), so every row keeps the width hi_p - lo_p of
    p.  A row narrower than ``x_span`` raises :class:`PrecisionExhausted`.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if p.var != "x":
        raise ValueError("p must be a series in x")
    if p.hi is not None and p.hi - p.lo < x_span:
        raise PrecisionExhausted(
            f"p is known on [{p.lo}, {p.hi}); rows need {x_span} coefficients")
    rows = [LaurentSeries.monomial(1)]
    for n in range(1, order + 1):
        f = (p * rows[-1].derivative()).scale(Scalar.const(1) / n)
        if f.hi is not None and f.hi - f.lo < x_span:
            raise PrecisionExhausted(f"row z^{n} known on [{f.lo}, {f.hi}) only")
        rows.append(f)
    return Associate(SeriesXZ(rows, 0), p, order)


def p_from_associate(phi) -> LaurentSeries:
    if isinstance(phi, Associate):
        phi = phi.phi
    check_associate_base(phi)
    if phi.zhi < 2:
        raise PrecisionExhausted("φ carries no z^1 row")
    return phi.row(1)


def _as_phi(phi) -> SeriesXZ:
    return phi.phi if isinstance(phi, Associate) else phi


def _row_violations(lhs: LaurentSeries, rhs: LaurentSeries, where: dict):
    out = []
    hi = lhs.hi if rhs.hi is None else (rhs.hi if lhs.hi is None else min(lhs.hi, rhs.hi))
    for e in sorted(set(lhs.coeffs) | set(rhs.coeffs)):
        if hi is not None and e >= hi:
            continue
        a, b = lhs.coeffs.get(e), rhs.coeffs.get(e)
        if a != b:
            out.append({**where, "x": e, "lhs": str(a or 0), "rhs": str(b or 0)})
    return out


def verify_associate(phi, order: Optional[int] = None) -> CheckReport:
    """Check φ(x,0) = x and [x0^r x2^s] φ(φ(x,x2),x0) = C(r+s,r) f_{r+s} for r+s <= order."""
    s_phi = _as_phi(phi)
    try:
        check_associate_base(s_phi)
    except NotAnAssociateBase as e:
        return CheckReport("associate", False, [{"axiom": "base", "detail": str(e)}])
    order = min(order if order is not None else s_phi.zhi - 1, s_phi.zhi - 1)
    pw = PhiPowers(s_phi, order + 1)
    violations = []
    for r in range(order + 1):
        f_r = s_phi.row(r).truncate(s_phi.row(r).hi)
        inner = substitute_assoc(LaurentSeries(f_r.coeffs, "x1", hi=f_r.hi), s_phi, "x1", pw)
        for s in range(order + 1 - r):
            lhs = inner.row(s)
            rhs = s_phi.row(r + s).scale(Scalar.const(binomial(r + s, r)))
            violations += _row_violations(lhs, rhs, {"axiom": "flow", "x0": r, "x2": s})
    return CheckReport.from_checks("associate", violations, order=order)


def inverse_flow_check(phi, order: Optional[int] = None) -> CheckReport:
    """φ(φ(x,-z), z) = x through z^order."""
    s_phi = _as_phi(phi)
    order = min(order if order is not None else s_phi.zhi - 1, s_phi.zhi - 1)
    back = s_phi.neg_z().truncate(order + 1)
    pw = PhiPowers(back)
    acc = None
    for r in range(order + 1):
        f_r = s_phi.row(r)
        t = substitute_assoc(LaurentSeries(f_r.coeffs, "x1", hi=f_r.hi), back, "x1", pw).shift_z(r)
        acc = t if acc is None else acc + t
    acc = acc.truncate(order + 1)
    violations = []
    for s in range(acc.zhi):
        want = LaurentSeries.monomial(1) if s == 0 else LaurentSeries.zero()
        violations += _row_violations(acc.row(s), want, {"z": s})
    return CheckReport.from_checks("inverse-flow", violations, order=order)


def injectivity_probe(f, phi, orders: Iterable[int] = (2, 4, 8)) -> CheckReport:
    """Find a nonzero coefficient of f(φ(x,z), x); raises :class:`Inconclusive` if none shows up."""
    if isinstance(f, str):
        f = RationalExpr.parse(f)
    if isinstance(f, MPoly):
        f = RationalExpr(f)
    if f.is_zero():
        raise ValueError("f must be nonzero")
    s_phi = _as_phi(phi)
    for order in sorted(orders):
        if order + 1 > s_phi.zhi:
            break
        pw = PhiPowers(s_phi, order + 1)
        num = substitute_assoc(f.num, s_phi, "x1", pw).truncate(order + 1)
        den = substitute_assoc(f.den, s_phi, "x1", pw).truncate(order + 1)
        val = num * den.invert(xprec=order + 1) if not _is_one(f.den) else num
        low = val.lowest_row()
        if low is not None:
            row = val.row(low)
            e = min(row.coeffs)
            return CheckReport("injectivity", True, meta={
                "witness": {"z": low, "x": e, "coefficient": str(row.coeffs[e]), "row": str(row)},
                "order": order})
    raise Inconclusive(f"f(φ(x,z),x) vanishes through z^{max(orders)}")


def _is_one(p: MPoly) -> bool:
    return p == MPoly.const(1)
