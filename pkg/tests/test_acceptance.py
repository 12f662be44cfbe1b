"""Acceptance criteria 1-11, all exact (tolerance 0).

Each test records one pass/fail line, printed in the terminal summary.
"""

import random
from fractions import Fraction

import pytest
import sympy

from conftest import ACCEPTANCE
from phical.associates import associate_from_p, p_from_associate, verify_associate
from phical.eops import (
    Calculus,
    GeneratorField,
    IdentityField,
    LinearField,
    MatrixField,
    Multiplier,
    YPhi,
    borcherds_oracle,
    check_jacobi_phi,
    check_locality_conversion,
    fields_equal,
    trig_relations,
    vacuum_singular_fields,
)
from phical.fockrep import BETA, GAMMA, SystemKind, TruncPolicy, build_module, expansion_coeffs
from phical.scalars import ONE, ZERO, Scalar
from phical.series import LaurentSeries, SeriesXZ, exp_minus_one, exp_series, log1p, two_var_delta

X, Z, T, U, QS = sympy.symbols("x z t u q")
q = Scalar.q()
TRIG_QS = ["-1", "1"]  # the trig vacuum module is nonzero only at q = 1 and q = -1


def record(n, title, problems, detail=""):
    ok = not problems
    ACCEPTANCE[n] = (ok, title, detail if ok else "; ".join(problems[:3]))
    assert ok, problems[:5]


def frac(c: Scalar) -> sympy.Rational:
    f = c.constant()
    return sympy.Rational(f.numerator, f.denominator)


def sym_row(s: LaurentSeries):
    return sum((frac(c) * X ** e for e, c in s.coeffs.items()), sympy.Integer(0))


def sym_scalar(s: Scalar):
    return sympy.sympify(str(s).replace("^", "**"), locals={"q": QS})


def z_rows(expr, order):
    ser = sympy.series(expr, Z, 0, order + 1).removeO()
    return [sympy.expand(ser.coeff(Z, n)) for n in range(order + 1)]


_trig = {}


def trig(qv):
    if qv not in _trig:
        m = build_module(SystemKind.make("trig", qv), TruncPolicy(2, -3))
        _trig[qv] = (m, GeneratorField(m, BETA), GeneratorField(m, GAMMA), m.basis())
    return _trig[qv]


# 1 ---------------------------------------------------------------------------

CLOSED_FORMS = {
    "0": (LaurentSeries.zero(), X),
    "1": (LaurentSeries.const(1), X + Z),
    "x": (LaurentSeries.monomial(1), X * sympy.exp(Z)),
    "x^2": (LaurentSeries.monomial(2), X / (1 - Z * X)),
    "x^-1": (LaurentSeries.monomial(-1), X + sympy.log(1 + Z / X)),
}


def test_criterion_01_associate_closed_forms():
    problems = []
    for name, (p, closed) in CLOSED_FORMS.items():
        a = associate_from_p(p, 8)
        want = z_rows(closed, 8)
        bad = [n for n in range(9) if sympy.expand(sym_row(a.row(n)) - want[n]) != 0]
        if bad:
            problems.append(f"p={name}: rows z^{bad} differ from the closed form")
        rep = verify_associate(a, 8)
        if not rep.passed:
            problems.append(f"p={name}: associate axioms fail ({len(rep.violations)} violations)")
    # what the x^-1 rows do equal: the solution of φ φ_z = 1, φ(x,0) = x
    root = associate_from_p(LaurentSeries.monomial(-1), 8)
    sqrt_rows = z_rows(X * sympy.sqrt(1 + 2 * Z / X ** 2), 8)
    if any(sympy.expand(sym_row(root.row(n)) - sqrt_rows[n]) != 0 for n in range(9)):
        problems.append("p=x^-1 rows also differ from sqrt(x^2+2z)")
    elif problems:
        problems.append("p=x^-1 rows equal sqrt(x^2+2z) exactly")
    record(1, "associates of p in {0, 1, x, x^2, x^-1} at z-order 8", problems)


# 2 ---------------------------------------------------------------------------

def test_criterion_02_round_trip():
    rng = random.Random(20)
    problems = []
    for i in range(20):
        lo = rng.randint(-2, 3)
        hi = rng.randint(lo, 3)
        coeffs = {e: Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for e in range(lo, hi + 1)}
        coeffs = {e: c for e, c in coeffs.items() if c} or {lo: Fraction(1)}
        p = LaurentSeries(coeffs)
        back = p_from_associate(associate_from_p(p, 6))
        if back != p:
            problems.append(f"case {i}: {p} came back as {back}")
    record(2, "p -> phi -> p on 20 random Laurent polynomials, order 6", problems)


# 3 ---------------------------------------------------------------------------

def test_criterion_03_log_exp():
    order = 12
    problems = []
    e = exp_series(log1p(order), order)
    got = [e.row(n).coefficient(0) for n in range(order + 1)]
    if got != [ONE, ONE] + [ZERO] * (order - 1) or any(set(e.row(n).coeffs) - {0} for n in range(order + 1)):
        problems.append(f"exp(log(1+z)) = {got}")
    lg = log1p(order, exp_minus_one(order))
    got = [lg.row(n).coefficient(0) for n in range(order + 1)]
    if got != [ZERO, ONE] + [ZERO] * (order - 1):
        problems.append(f"log(1+(e^z-1)) = {got}")
    record(3, "exp(log(1+z)) = 1+z and log(1+(e^z-1)) = z at order 12", problems)


# 4 ---------------------------------------------------------------------------

def test_criterion_04_delta_identities():
    problems = []
    for sub in (False, True):
        diff = two_var_delta(6, substituted=sub)["difference"]
        if not diff.is_zero():
            problems.append(f"{'substituted' if sub else 'plain'} identity: {len(diff.coeffs)} nonzero cells")
        if diff.window != ((-6, 6),) * 3:
            problems.append(f"window {diff.window}")
    record(4, "delta identity and its x0 = x2 z form vanish on D=6", problems)


# 5 ---------------------------------------------------------------------------

def test_criterion_05_expansion_coefficients():
    problems = []
    c = expansion_coeffs(SystemKind.make("trig"), 5)
    lam = sympy.series((T - QS) / (QS * T - 1), T, 0, 5).removeO()
    lamp = sympy.series((QS * T - 1) / (T - QS), T, 0, 5).removeO()
    for k in range(5):
        if sympy.simplify(sym_scalar(c.lambda_[k]) - lam.coeff(T, k)) != 0:
            problems.append(f"lambda_{k} = {c.lambda_[k]}")
        if sympy.simplify(sym_scalar(c.lambda_prime[k]) - lamp.coeff(T, k)) != 0:
            problems.append(f"lambda'_{k} = {c.lambda_prime[k]}")
    for n in range(5):
        s = sum((c.lambda_[k] * c.lambda_prime[n - k] for k in range(n + 1)), ZERO)
        if s != (ONE if n == 0 else ZERO):
            problems.append(f"[t^{n}] lambda*lambda' = {s}")
    rat = expansion_coeffs(SystemKind.make("rat"), 3)
    g = (sympy.exp(U) - QS) / (QS * sympy.exp(U) - 1)
    mu0 = sympy.simplify(g.subs(U, 0))
    mu1 = sympy.simplify(sympy.diff(g, U).subs(U, 0))
    if sympy.simplify(sym_scalar(rat.mu[0]) - mu0) != 0 or rat.mu[0] != -ONE:
        problems.append(f"mu_0 = {rat.mu[0]}")
    if sympy.simplify(sym_scalar(rat.mu[1]) - mu1) != 0 or rat.mu[1] != (q + 1) / (q - 1):
        problems.append(f"mu_1 = {rat.mu[1]}")
    at_one = expansion_coeffs(SystemKind.make("rat", 1), 6).mu
    if at_one != [ONE] + [ZERO] * 5:
        problems.append(f"mu at q=1 = {[str(m) for m in at_one]}")
    record(5, "lambda, lambda', their product, mu_0, mu_1, mu at q=1", problems)


# 6 ---------------------------------------------------------------------------

def _bracket(m, sign, x, i, y, j, w):
    s = m.state({w: ONE})
    xy = m.apply_mode(x, i, m.apply_mode(y, j, s, False), False)
    yx = m.apply_mode(y, j, m.apply_mode(x, i, s, False), False)
    return xy + yx * sign


def _two_color_partitions(parts_max, length_max, degree):
    """Multisets of (color, part) with parts in 1..parts_max and at most length_max parts."""
    out = 0
    items = [(c, p) for c in (0, 1) for p in range(1, parts_max + 1)]

    def walk(start, size, left):
        nonlocal out
        if left == 0:
            out += 1
            return
        if size == length_max:
            return
        for k in range(start, len(items)):
            if items[k][1] <= left:
                walk(k, size + 1, left - items[k][1])

    walk(0, 0, degree)
    return out


def test_criterion_06_degenerations():
    problems = []
    for qv, sign in (("1", -1), ("-1", 1)):
        m = build_module(SystemKind.make("rat", qv), TruncPolicy(2, -4))
        for w in m.basis():
            for i in range(-4, 5):
                for j in range(-4, 5):
                    for x, y, contact in ((BETA, GAMMA, True), (BETA, BETA, False), (GAMMA, GAMMA, False)):
                        got = _bracket(m, sign, x, i, y, j, w)
                        want = m.state({w: ONE}) if contact and i + j + 1 == 0 else m.state({})
                        if got != want:
                            problems.append(f"q={qv} [{x}_{i},{y}_{j}] on {w}: {got}")
    m = build_module(SystemKind.make("rat", "1"), TruncPolicy(2, -3))
    dims = m.graded_dims(3)
    brute = [_two_color_partitions(3, 2, d) for d in range(4)]
    if dims != brute:
        problems.append(f"engine dims {dims} vs brute-force count {brute}")
    if dims != [1, 1, 3, 5]:
        problems.append(f"graded dims at q=1 are {dims}, not 1,1,3,5 "
                        f"(brute-force 2-color partition count {brute} agrees with the engine)")
    record(6, "rat engine at q=1 and q=-1, graded dims 1,1,3,5", problems)


# 7 ---------------------------------------------------------------------------

def test_criterion_07_flagship_modes():
    problems = []
    for qv in TRIG_QS:
        m, b, g, sample = trig(qv)
        y = YPhi(b, g, order=1)
        v = fields_equal(y.mode(0), IdentityField(), sample)
        if v:
            problems.append(f"q={qv}: mode 0 differs from 1_W on {len(v)} cells")
        for n in range(1, 5):
            v = fields_equal(y.mode(n), LinearField([]), sample)
            if v:
                problems.append(f"q={qv}: mode {n} nonzero on {len(v)} cells")
    record(7, "Y(beta~, z)gamma~: mode 0 = 1_W, modes >= 1 vanish", problems, f"q in {TRIG_QS}")


# 8 ---------------------------------------------------------------------------

def test_criterion_08_locality_conversion():
    problems = []
    for qv in TRIG_QS:
        m, b, g, sample = trig(qv)
        calc = Calculus(None, order=6, window=4)
        for rel in trig_relations(m):
            poly = sum((sym_scalar(c) * T ** d for d, c in enumerate(rel.p)), sympy.Integer(0))
            k = sympy.roots(sympy.Poly(poly, T)).get(1, 0) if sympy.degree(poly, T) > 0 else 0
            if k != rel.k:
                problems.append(f"q={qv} {rel.label}: multiplicity {rel.k} vs {k}")
            rep = check_locality_conversion(rel, sample, calc, 4, k=k)
            if not rep.passed:
                problems.append(f"q={qv} {rel.label}: {len(rep.violations)} violations")
    record(8, "locality conversion for the three trig relations, D=4", problems, f"q in {TRIG_QS}")


# 9 ---------------------------------------------------------------------------

def test_criterion_09_jacobi():
    problems = []
    for qv in TRIG_QS:
        m, b, g, sample = trig(qv)
        rat = build_module(SystemKind.make("rat", qv), TruncPolicy(2, -3))
        singular = vacuum_singular_fields(rat, BETA, GAMMA, 4)
        for n, terms in singular.items():
            want = [(ONE, "1_W")] if n == 0 else []
            if [(c, f.label) for c, f in terms] != want:
                problems.append(f"q={qv}: beta^_{n} gamma^ = {terms}")
        rep = check_jacobi_phi(trig_relations(m)[2], sample, Calculus(None, order=6, window=4), 4, singular)
        for part, ok in rep.meta["parts"].items():
            if not ok:
                problems.append(f"q={qv}: {part} fails")
    record(9, "Jacobi three-term and residue forms, D=4", problems, f"q in {TRIG_QS}")


# 10 --------------------------------------------------------------------------

PAIRS = [
    ([["0", "x^-1"], ["0", "0"]], [["0", "0"], ["x^2", "0"]]),
    ([["x", "1"], ["0", "x^-2"]], [["1", "x"], ["x^3", "0"]]),
    ([["x^-1", "0"], ["x + x^2", "2"]], [["x", "x^-1"], ["0", "1 - x"]]),
]
PHIS = {"1": (LaurentSeries.const(1), X + Z), "x": (LaurentSeries.monomial(1), X * sympy.exp(Z)),
        "x^2": (LaurentSeries.monomial(2), X / (1 - Z * X))}


def test_criterion_10_borcherds():
    problems = []
    for i, (ra, rb) in enumerate(PAIRS):
        a, b = MatrixField.parse(ra, "a"), MatrixField.parse(rb, "b")
        sa = sympy.Matrix([[sympy.sympify(e.replace("^", "**"), locals={"x": X}) for e in r] for r in ra])
        sb = sympy.Matrix([[sympy.sympify(e.replace("^", "**"), locals={"x": X}) for e in r] for r in rb])
        for name, (p, phi) in PHIS.items():
            rep = borcherds_oracle(a, b, p, 5)
            if not rep.passed:
                problems.append(f"pair {i} p={name}: {len(rep.violations)} violations")
            # independent oracle: expand a(phi(x,z)) b(x) with sympy
            y = YPhi(a, b, associate_from_p(p, 12), Multiplier.power(0), order=5)
            closed = sa.subs(X, phi) * sb
            for r in range(2):
                for c in range(2):
                    rows = z_rows(closed[r, c], 4)
                    for s in range(5):
                        want = sympy.Poly(sympy.expand(rows[s] * X ** 40), X).as_dict() if rows[s] != 0 else {}
                        want = {k[0] - 40: v for k, v in want.items()}
                        lo = min(list(want) + [y.row_lower(s, c)])
                        for e in range(lo, max(list(want) + [lo]) + 3):
                            got = y.coefficient(s, e, c).get(r, ZERO)
                            if frac(got) != want.get(e, 0):
                                problems.append(f"pair {i} p={name} entry ({r},{c}) z^{s} x^{e}")
    record(10, "Borcherds matrix fields on Q^2: closed form and D-property to order 5", problems)


# 11 --------------------------------------------------------------------------

def test_criterion_11_multiplier_independence():
    problems = []
    for qv in TRIG_QS:
        m, b, g, sample = trig(qv)
        y1 = YPhi(b, g, multiplier=Multiplier.power(1), order=4)
        y2 = YPhi(b, g, multiplier=Multiplier.power(2), order=4)
        low = min(y1.lowest_row(sample), y2.lowest_row(sample))
        for s in range(low - 2, 4):
            v = fields_equal(y1.row(s), y2.row(s), sample, 6)
            if v:
                problems.append(f"q={qv} row z^{s}: {len(v)} cells differ")
    record(11, "y_phi with (x1-x2) equals y_phi with (x1-x2)^2 row by row", problems, f"q in {TRIG_QS}")
