"""Named identity suites shared by the command line and the test-suite."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Callable, Dict, List

from .associates import associate_from_p, p_from_associate, verify_associate
from .eops import (
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
    check_strig_locality,
    fields_equal,
    trig_relations,
    vacuum_singular_fields,
)
from .fockrep import BETA, GAMMA, SystemKind, TruncPolicy, build_module, expansion_coeffs
from .report import CheckReport, merge
from .scalars import ONE, Scalar, binomial
from .series import LaurentSeries, SeriesXZ, exp_series, log1p, two_var_delta, z_series

TRIG_POLICY = TruncPolicy(2, -3)

MATRIX_PAIRS = [
    ([["0", "x^-1"], ["0", "0"]], [["0", "0"], ["x^2", "0"]]),
    ([["x", "1"], ["0", "x^-2"]], [["1", "x"], ["x^3", "0"]]),
    ([["x^-1", "0"], ["x + x^2", "2"]], [["x", "x^-1"], ["0", "1 - x"]]),
]


def _row_diff(name, got: SeriesXZ, want: SeriesXZ, upto: int) -> List[dict]:
    out = []
    for s in range(upto + 1):
        a, b = got.row(s), want.row(s)
        for e in sorted(set(a.coeffs) | set(b.coeffs)):
            if a.coefficient(e) != b.coefficient(e):
                out.append({"case": name, "z": s, "x": e, "got": str(a.coefficient(e)),
                            "want": str(b.coefficient(e))})
    return out


def closed_form(p_text: str, order: int) -> SeriesXZ:
    """Known associates: x, x+z, x e^z, x/(1-zx) and sqrt(x^2+2z)."""
    rows = {
        "0": lambda n: {1: 1} if n == 0 else {},
        "1": lambda n: {1: 1} if n == 0 else ({0: 1} if n == 1 else {}),
        "x": lambda n: {1: Fraction(1, _fact(n))},
        "x^2": lambda n: {n + 1: 1},
        # sqrt(x^2 + 2z) = Σ C(1/2, n) 2^n x^(1-2n) z^n
        "x^-1": lambda n: {1 - 2 * n: _half_binomial(n) * 2 ** n},
    }[p_text]
    return SeriesXZ([LaurentSeries(rows(n)) for n in range(order + 1)], 0)


def _fact(n):
    out = 1
    for k in range(2, n + 1):
        out *= k
    return out


def _half_binomial(n: int) -> Fraction:
    out = Fraction(1)
    for k in range(n):
        out *= (Fraction(1, 2) - k) / (k + 1)
    return out


def _p_series(text: str) -> LaurentSeries:
    return {"0": LaurentSeries.zero(), "1": LaurentSeries.const(1), "x": LaurentSeries.monomial(1),
            "x^2": LaurentSeries.monomial(2), "x^-1": LaurentSeries.monomial(-1)}[text]


def associates(order: int = 8) -> CheckReport:
    parts = []
    for text in ("0", "1", "x", "x^2", "x^-1"):
        a = associate_from_p(_p_series(text), order)
        v = _row_diff(text, a.phi, closed_form(text, order), order)
        parts.append(CheckReport.from_checks(f"closed-form p={text}", v))
        rep = verify_associate(a, order)
        parts.append(CheckReport(f"axioms p={text}", rep.passed, rep.violations))
    return merge("associates", parts)


def random_laurent(rng: random.Random, lo_min: int = -2, deg_max: int = 3) -> LaurentSeries:
    lo = rng.randint(lo_min, deg_max)
    hi = rng.randint(lo, deg_max)
    coeffs = {e: Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for e in range(lo, hi + 1)}
    coeffs = {e: c for e, c in coeffs.items() if c}
    return LaurentSeries(coeffs or {lo: Fraction(1)})


def round_trip(count: int = 20, order: int = 6, seed: int = 0) -> CheckReport:
    rng = random.Random(seed)
    violations = []
    for i in range(count):
        p = random_laurent(rng)
        back = p_from_associate(associate_from_p(p, order))
        if back != p:
            violations.append({"case": i, "p": str(p), "recovered": str(back)})
    return CheckReport.from_checks("round-trip", violations, count=count, order=order, seed=seed)


def log_exp(order: int = 12) -> CheckReport:
    z = z_series(order + 1)
    one_plus_z = SeriesXZ.scalar_series([1, 1] + [0] * (order - 1))
    v = _row_diff("exp(log(1+z))", exp_series(log1p(order), order), one_plus_z, order)
    v += _row_diff("log(1+(e^z-1))", log1p(order, exp_series(z, order) - SeriesXZ.scalar_series([1] + [0] * order)),
                   z.truncate(order + 1), order)
    return CheckReport.from_checks("log-exp", v, order=order)


def delta(D: int = 6) -> CheckReport:
    parts = []
    for sub in (False, True):
        diff = two_var_delta(D, substituted=sub)["difference"]
        v = [{"exponent": list(e), "value": str(c)} for e, c in diff.nonzero()]
        parts.append(CheckReport.from_checks("delta x0=x2*z" if sub else "delta", v, window=D))
    return merge("delta", parts)


def coefficients(order: int = 5) -> CheckReport:
    """λ, λ' against long division, λλ' = 1, μ0 and μ1, and μ at q = 1 taken first."""
    q = Scalar.q()
    c = expansion_coeffs(SystemKind.make("trig"), order)
    v = []
    # (t - q)/(qt - 1) = (q - t) Σ (qt)^n
    lam = [q if n == 0 else q ** (n + 1) - q ** (n - 1) for n in range(order)]
    # (qt - 1)/(t - q) = (1 - qt)/q Σ (t/q)^n
    lamp = [q.inv() if n == 0 else q ** (-n - 1) - q ** (-n + 1) for n in range(order)]
    for name, got, want in (("lambda", c.lambda_, lam), ("lambda_prime", c.lambda_prime, lamp)):
        for k, (a, b) in enumerate(zip(got, want)):
            if a != b:
                v.append({"seq": name, "k": k, "got": str(a), "want": str(b)})
    for n in range(order):
        s = sum((c.lambda_[k] * c.lambda_prime[n - k] for k in range(n + 1)), Scalar.const(0))
        if s != (ONE if n == 0 else Scalar.const(0)):
            v.append({"seq": "lambda*lambda_prime", "k": n, "got": str(s)})
    rat = expansion_coeffs(SystemKind.make("rat"), order)
    if rat.mu[0] != -ONE:
        v.append({"seq": "mu", "k": 0, "got": str(rat.mu[0])})
    if rat.mu[1] != (q + 1) / (q - 1):
        v.append({"seq": "mu", "k": 1, "got": str(rat.mu[1])})
    at_one = expansion_coeffs(SystemKind.make("rat", "1"), order).mu
    if at_one != [ONE] + [Scalar.const(0)] * (order - 1):
        v.append({"seq": "mu at q=1", "got": [str(m) for m in at_one]})
    return CheckReport.from_checks("coefficients", v, order=order)


def brute_graded_dims(depth: int, floor: int, max_degree: int) -> List[int]:
    """Count multisets of (color, mode) with at most ``depth`` letters by total energy."""
    letters = [(g, n) for g in (BETA, GAMMA) for n in range(floor, 0)]
    dims = [0] * (max_degree + 1)

    def walk(start, size, deg):
        if deg <= max_degree:
            dims[deg] += 1
        if size == depth:
            return
        for i in range(start, len(letters)):
            walk(i, size + 1, deg - letters[i][1])

    walk(0, 0, 0)
    return dims


def degenerations(window: int = 4, depth: int = 2, floor: int = -4) -> CheckReport:
    """Rat engine at q = 1 (commutators) and q = -1 (anticommutators)."""
    parts = []
    for q in ("1", "-1"):
        m = build_module(SystemKind.make("rat", q), TruncPolicy(depth, floor))
        rep = m.verify_relations(window=window)
        rep.name = f"relations q={q}"
        parts.append(rep)
    m = build_module(SystemKind.make("rat", "1"), TruncPolicy(depth, floor))
    dims, want = m.graded_dims(3), brute_graded_dims(depth, floor, 3)
    v = [] if dims == want else [{"graded_dims": dims, "brute_force": want}]
    parts.append(CheckReport.from_checks("graded-dims", v, dims=dims))
    return merge("degenerations", parts)


def trig_module(q: str = "-1", policy: TruncPolicy = TRIG_POLICY):
    return build_module(SystemKind.make("trig", q), policy)


def flagship(q: str = "-1") -> CheckReport:
    """Y(β̃, z)γ̃ for φ = x e^z: mode 0 is 1_W and higher modes vanish."""
    m = trig_module(q)
    b, g = GeneratorField(m, BETA), GeneratorField(m, GAMMA)
    sample = m.basis()
    y = YPhi(b, g, order=1)
    v = fields_equal(y.mode(0), IdentityField(), sample)
    zero = LinearField([])
    low = y.lowest_row(sample)
    for n in range(1, max(3, -low)):
        v += fields_equal(y.mode(n), zero, sample)
    return CheckReport.from_checks("flagship", v, q=q, states=len(sample), lowest_row=low)


def locality(q: str = "-1", window: int = 4) -> CheckReport:
    m = trig_module(q)
    sample = m.basis()
    calc = Calculus(None, order=6, window=window)
    parts = []
    for rel in trig_relations(m):
        parts.append(check_strig_locality(rel, sample, window))
        rep = check_locality_conversion(rel, sample, calc, window)
        rep.name = f"conversion {rel.label}"
        parts.append(rep)
    return merge("locality", parts)


def jacobi(q: str = "-1", window: int = 4) -> CheckReport:
    m = trig_module(q)
    rat = build_module(SystemKind.make("rat", q), TRIG_POLICY)
    singular = vacuum_singular_fields(rat, BETA, GAMMA, window)
    rel = trig_relations(m)[2]
    return check_jacobi_phi(rel, m.basis(), Calculus(None, order=6, window=window), window, singular)


def borcherds(order: int = 5) -> CheckReport:
    parts = []
    for i, (ra, rb) in enumerate(MATRIX_PAIRS):
        a, b = MatrixField.parse(ra, f"a{i}"), MatrixField.parse(rb, f"b{i}")
        for text in ("1", "x", "x^2"):
            rep = borcherds_oracle(a, b, _p_series(text), order)
            rep.name = f"pair {i} p={text}"
            parts.append(rep)
    return merge("borcherds", parts)


def multiplier_independence(q: str = "-1", order: int = 3, width: int = 4) -> CheckReport:
    m = trig_module(q)
    b, g = GeneratorField(m, BETA), GeneratorField(m, GAMMA)
    sample = m.basis()
    y1 = YPhi(b, g, multiplier=Multiplier.power(1), order=order)
    y2 = YPhi(b, g, multiplier=Multiplier.power(2), order=order)
    low = min(y1.lowest_row(sample), y2.lowest_row(sample))
    v = []
    for s in range(low, order):
        v += fields_equal(y1.row(s), y2.row(s), sample, width)
    return CheckReport.from_checks("multiplier-independence", v, q=q, rows=[low, order - 1])


SUITES: Dict[str, Callable[..., CheckReport]] = {
    "associates": associates,
    "round-trip": round_trip,
    "log-exp": log_exp,
    "delta": delta,
    "coefficients": coefficients,
    "degenerations": degenerations,
    "flagship": flagship,
    "locality": locality,
    "jacobi": jacobi,
    "borcherds": borcherds,
    "multiplier": multiplier_independence,
}
