from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from weilglue.weil import make_weil

settings.register_profile(
    "repo", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("repo")

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@st.composite
def weil_algebras(draw, max_gens=2, max_power=3):
    """Monomial ideals with pure powers, plus a few random mixed generators."""
    n = draw(st.integers(0, max_gens))
    ideal = []
    for i in range(n):
        mono = [0] * n
        mono[i] = draw(st.integers(1, max_power))
        ideal.append(tuple(mono))
    for _ in range(draw(st.integers(0, 2)) if n > 1 else 0):
        mixed = draw(st.lists(st.integers(0, max_power), min_size=n, max_size=n).filter(any))
        ideal.append(tuple(mixed))
    return make_weil(n, ideal)


@st.composite
def elements(draw, w, nilpotent=False):
    coeffs = [draw(rationals) for _ in w.basis]
    if nilpotent:
        coeffs[0] = Fraction(0)
    return w.element(coeffs)
