import os
import sys

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from phical.scalars import Scalar  # noqa: E402
from phical.series import LaurentSeries  # noqa: E402

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

small_fraction = st.fractions(min_value=-6, max_value=6, max_denominator=5)
poly_coeffs = st.lists(st.integers(-4, 4), min_size=0, max_size=4)


@st.composite
def scalars(draw, allow_zero=True):
    num = draw(poly_coeffs)
    den = draw(poly_coeffs.filter(lambda c: any(c)))
    s = Scalar(num, den)
    if not allow_zero and s.is_zero():
        s = Scalar.const(draw(st.integers(1, 5)))
    return s


@st.composite
def laurent_polys(draw, lo_min=-2, deg_max=3, var="x", nonzero=True):
    lo = draw(st.integers(lo_min, deg_max))
    hi = draw(st.integers(lo, deg_max))
    coeffs = {e: draw(small_fraction) for e in range(lo, hi + 1)}
    coeffs = {e: c for e, c in coeffs.items() if c}
    if nonzero and not coeffs:
        coeffs = {lo: 1}
    return LaurentSeries(coeffs, var)


# one summary line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        line = f"criterion {n:>2} {'PASS' if ok else 'FAIL'}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
