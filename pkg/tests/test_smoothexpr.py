import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import rationals
from oracles import central_difference, exp_series, long_division, partial_difference
from weilglue.smoothexpr import (
    Const,
    DimensionMismatch,
    DomainViolation,
    ExprParseError,
    SmoothMapTuple,
    Var,
    compose,
    cos,
    evaluate,
    exp,
    is_polynomial,
    log,
    parse_sexpr,
    polynomial_coefficients,
    sin,
    sqrt,
    taylor,
    to_sexpr,
)

x, y = Var(0), Var(1)


def mono_expr(coeffs: dict) -> object:
    """Expression for a polynomial given as ``{exponents: coefficient}``."""
    out = Const(Fraction(0))
    for mono, c in coeffs.items():
        term = Const(c)
        for i, e in enumerate(mono):
            for _ in range(e):
                term = term * Var(i)
        out = out + term
    return out


polys = st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3)), rationals.filter(lambda c: c != 0), max_size=5
)

leaf = st.one_of(st.sampled_from([x, y]), rationals.map(Const))


def _grow(children):
    return st.one_of(
        st.tuples(children, children).map(lambda p: p[0] + p[1]),
        st.tuples(children, children).map(lambda p: p[0] - p[1]),
        st.tuples(children, children).map(lambda p: p[0] * p[1]),
        children.map(lambda c: c ** 2),
    )


poly_exprs = st.recursive(leaf, _grow, max_leaves=8)
smooth_exprs = st.recursive(
    leaf,
    lambda ch: st.one_of(_grow(ch), ch.map(sin), ch.map(cos), ch.map(lambda c: exp(c * Const(Fraction(1, 4))))),
    max_leaves=6,
)
points = st.tuples(rationals, rationals).map(list)


class TestEval:
    def test_square(self):
        assert evaluate(x * x, [3]) == 9

    def test_exp_zero(self):
        assert evaluate(exp(Const(Fraction(0))), []) == 1

    def test_sin_times_x_at_zero(self):
        assert evaluate(sin(x) * x, [0]) == 0

    def test_exact_rational(self):
        assert evaluate(x / (1 + x * x), [Fraction(1, 2)]) == Fraction(2, 5)

    def test_exact_sqrt(self):
        assert evaluate(sqrt(x), [Fraction(9, 4)]) == Fraction(3, 2)

    @pytest.mark.parametrize("expr,point", [(log(x), [0]), (sqrt(x), [-1]), (1 / x, [0]), (log(x), [-2])])
    def test_domain_violation(self, expr, point):
        with pytest.raises(DomainViolation):
            evaluate(expr, point)

    def test_float_transcendental(self):
        assert math.isclose(evaluate(exp(x), [1.0]), math.e)


class TestTaylor:
    def test_square(self):
        a = Fraction(5, 3)
        s = taylor(x * x, [a], 2)
        assert s.coeffs == (a * a, 2 * a, 1)

    def test_exp(self):
        s = taylor(exp(x), [0], 2)
        assert list(s.coeffs) == exp_series(3) == [1, 1, Fraction(1, 2)]
        f = math.exp
        assert math.isclose(central_difference(f, 0.0), float(s.coeffs[1]), rel_tol=1e-6)
        assert math.isclose(central_difference(f, 0.0, order=2) / 2, float(s.coeffs[2]), rel_tol=1e-6)

    def test_geometric(self):
        s = taylor(1 / (1 - x), [0], 3)
        assert list(s.coeffs) == long_division([1], [1, -1], 4) == [1, 1, 1, 1]

    def test_rational_function_long_division(self):
        s = taylor((1 + x) / (1 - 2 * x + x * x), [0], 5)
        assert list(s.coeffs) == long_division([1, 1], [1, -2, 1], 6)

    def test_multivariate_coefficient(self):
        s = taylor(x * x * y, [1, 2], 3)
        assert s.coefficient((1, 1)) == 2
        assert s.coefficient((2, 1)) == 1
        assert s.coefficient((0, 0)) == 2

    def test_domain(self):
        with pytest.raises(DomainViolation):
            taylor(log(x), [0], 2)


class TestCompose:
    def test_square_after_shift(self):
        g = SmoothMapTuple(1, (x * x,))
        f = SmoothMapTuple(1, (x + 1,))
        h = compose(g, f)
        assert h([1]) == (4,)

    def test_identity(self):
        f = SmoothMapTuple(2, (x * y + 1, sin(x)))
        ident = SmoothMapTuple.identity(2)
        for p in ([0, 0], [1, 2], [Fraction(1, 3), -1]):
            assert compose(f, ident)(p) == f(p) == compose(ident, f)(p)

    def test_sin_of_cube(self):
        h = compose(SmoothMapTuple(1, (sin(x),)), SmoothMapTuple(1, (x ** 3,)))
        s = taylor(h.components[0], [0], 3)
        assert list(s.coeffs) == [0, 0, 0, 1]

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            compose(SmoothMapTuple(2, (x + y,)), SmoothMapTuple(1, (x,)))

    def test_bad_variable(self):
        with pytest.raises(ValueError):
            SmoothMapTuple(1, (y,))


class TestSexpr:
    def test_parse(self):
        e = parse_sexpr("(mul (var 0) (sin (var 1)))")
        assert evaluate(e, [2, 0]) == 0
        assert to_sexpr(parse_sexpr(to_sexpr(e))) == to_sexpr(e)

    @pytest.mark.parametrize("text", ["(foo 1)", "(var)", "(add 1", "1 2", "", "(pow (var 0) x)"])
    def test_errors(self, text):
        with pytest.raises(ExprParseError):
            parse_sexpr(text)

    @given(smooth_exprs)
    def test_round_trip(self, e):
        assert to_sexpr(parse_sexpr(to_sexpr(e))) == to_sexpr(e)


# -- properties


@given(poly_exprs, poly_exprs, points, st.integers(0, 4))
def test_taylor_multiplicative_exact(f, g, p, d):
    assert taylor(f * g, p, d) == taylor(f, p, d) * taylor(g, p, d)


@given(smooth_exprs, smooth_exprs, points, st.integers(0, 3))
def test_taylor_multiplicative_float(f, g, p, d):
    lhs, rhs = taylor(f * g, p, d), taylor(f, p, d) * taylor(g, p, d)
    assert all(math.isclose(float(a), float(b), rel_tol=1e-9, abs_tol=1e-9) for a, b in zip(lhs.coeffs, rhs.coeffs))


@given(smooth_exprs, points)
def test_first_order_matches_finite_differences(f, p):
    pf = [float(v) for v in p]
    s = taylor(f, pf, 1)
    for i in range(2):
        fd = partial_difference(lambda q: float(evaluate(f, q)), pf, i)
        d = float(s.coefficient(tuple(int(j == i) for j in range(2))))
        assert math.isclose(d, fd, rel_tol=1e-6, abs_tol=1e-6)


@given(polys)
def test_taylor_reproduces_polynomials(coeffs):
    e = mono_expr(coeffs)
    assert is_polynomial(e)
    assert polynomial_coefficients(e, 2) == coeffs
    s = taylor(e, [0, 0], 6)
    assert {m: c for m, c in s.terms().items()} == coeffs


@given(poly_exprs, poly_exprs, poly_exprs, points)
def test_compose_associative(a, b, c, p):
    f = SmoothMapTuple(2, (a, b))
    g = SmoothMapTuple(2, (b, c))
    h = SmoothMapTuple(2, (c, a))
    assert compose(h, compose(g, f))(p) == compose(compose(h, g), f)(p) == h(g(f(p)))
