"""Expression trees for smooth maps and their evaluation on numbers and jets.

An expression is evaluated by plain recursion over the tree; the same walk works
for rational/float scalars, for :class:`~weilglue.weil.WeilElement` values
(giving the jet of the map at a Weil point) and for expression-valued jets.
Elementary functions act on a Weil element ``a`` through the univariate Taylor
coefficients of the function at ``augment(a)``, so nothing is ever
differentiated symbolically.

Serialized form is a prefix s-expression::

    expr := NUMBER                       3, -1/2, 0.25
          | (var INT) | (const NUMBER)
          | (add expr expr ...) | (mul expr expr ...)
          | (sub expr expr) | (sub expr) | (neg expr) | (div expr expr)
          | (pow expr INT)
          | (exp expr) | (log expr) | (sin expr) | (cos expr) | (sqrt expr)
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .weil import WeilElement, close, truncation_algebra

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")
Scalar = (int, Fraction, float)


class DomainViolation(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class ExprParseError(ValueError):
    pass


class SmoothExpr:
    __slots__ = ()

    def __add__(self, other):
        if isinstance(other, WeilElement):
            return NotImplemented
        return add(self, lift(other))

    def __radd__(self, other):
        return add(lift(other), self)

    def __sub__(self, other):
        if isinstance(other, WeilElement):
            return NotImplemented
        return sub(self, lift(other))

    def __rsub__(self, other):
        return sub(lift(other), self)

    def __mul__(self, other):
        if isinstance(other, WeilElement):
            return NotImplemented
        return mul(self, lift(other))

    def __rmul__(self, other):
        return mul(lift(other), self)

    def __truediv__(self, other):
        if isinstance(other, WeilElement):
            return NotImplemented
        return div(self, lift(other))

    def __rtruediv__(self, other):
        return div(lift(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return power(self, n)

    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0

    def substitute(self, args: Sequence[SmoothExpr]) -> SmoothExpr:
        return evaluate(self, [lift(a) for a in args])

    def __str__(self):
        return to_sexpr(self)


@dataclass(frozen=True, eq=True)
class Var(SmoothExpr):
    index: int


@dataclass(frozen=True, eq=True)
class Const(SmoothExpr):
    value: object


@dataclass(frozen=True, eq=True)
class Add(SmoothExpr):
    left: SmoothExpr
    right: SmoothExpr


@dataclass(frozen=True, eq=True)
class Sub(SmoothExpr):
    left: SmoothExpr
    right: SmoothExpr


@dataclass(frozen=True, eq=True)
class Mul(SmoothExpr):
    left: SmoothExpr
    right: SmoothExpr


@dataclass(frozen=True, eq=True)
class Div(SmoothExpr):
    left: SmoothExpr
    right: SmoothExpr


@dataclass(frozen=True, eq=True)
class Neg(SmoothExpr):
    arg: SmoothExpr


@dataclass(frozen=True, eq=True)
class Pow(SmoothExpr):
    base: SmoothExpr
    exponent: int


@dataclass(frozen=True, eq=True)
class Fn(SmoothExpr):
    name: str
    arg: SmoothExpr


# -- smart constructors (fold constants, drop identities)


def lift(value) -> SmoothExpr:
    if isinstance(value, SmoothExpr):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not an expression")
    if isinstance(value, int):
        return Const(Fraction(value))
    if isinstance(value, (Fraction, float)):
        return Const(value)
    if isinstance(value, str):
        return Const(Fraction(value))
    raise TypeError(f"cannot lift {value!r} to an expression")


def _const(e, v=None):
    return isinstance(e, Const) and (v is None or e.value == v)


def add(a: SmoothExpr, b: SmoothExpr) -> SmoothExpr:
    if _const(a, 0):
        return b
    if _const(b, 0):
        return a
    if _const(a) and _const(b):
        return Const(a.value + b.value)
    return Add(a, b)


def sub(a: SmoothExpr, b: SmoothExpr) -> SmoothExpr:
    if _const(b, 0):
        return a
    if _const(a, 0):
        return neg(b)
    if _const(a) and _const(b):
        return Const(a.value - b.value)
    return Sub(a, b)


def mul(a: SmoothExpr, b: SmoothExpr) -> SmoothExpr:
    if _const(a, 0) or _const(b, 0):
        return Const(Fraction(0))
    if _const(a, 1):
        return b
    if _const(b, 1):
        return a
    if _const(a) and _const(b):
        return Const(a.value * b.value)
    return Mul(a, b)


def div(a: SmoothExpr, b: SmoothExpr) -> SmoothExpr:
    if _const(b, 1):
        return a
    if _const(a) and _const(b) and b.value != 0:
        return Const(_scalar_div(a.value, b.value))
    return Div(a, b)


def neg(a: SmoothExpr) -> SmoothExpr:
    if _const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a: SmoothExpr, n: int) -> SmoothExpr:
    if not isinstance(n, int):
        raise TypeError("only integer powers are supported")
    if n == 0:
        return Const(Fraction(1))
    if n == 1:
        return a
    if _const(a) and (n > 0 or a.value != 0):
        return Const(_scalar_pow(a.value, n))
    return Pow(a, n)


def fn(name: str, a: SmoothExpr) -> SmoothExpr:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    if _const(a):
        exact = _exact_function(name, a.value)
        if exact is not None:
            return Const(exact)
    return Fn(name, a)


def variables(n: int) -> list[Var]:
    return [Var(i) for i in range(n)]


def exp(a):
    return apply_function("exp", a)


def log(a):
    return apply_function("log", a)


def sin(a):
    return apply_function("sin", a)


def cos(a):
    return apply_function("cos", a)


def sqrt(a):
    return apply_function("sqrt", a)


# -- scalar kernels


def _scalar_div(a, b):
    if b == 0:
        raise DomainViolation("division by zero")
    if isinstance(a, int) and isinstance(b, int):
        return Fraction(a, b)
    return a / b


def _scalar_pow(a, n: int):
    if n < 0 and a == 0:
        raise DomainViolation("negative power of zero")
    if isinstance(a, int):
        a = Fraction(a)
    return a**n


def _exact_sqrt(x: Fraction) -> Fraction | None:
    if x < 0:
        return None
    p, q = x.numerator, x.denominator
    rp, rq = math.isqrt(p), math.isqrt(q)
    if rp * rp == p and rq * rq == q:
        return Fraction(rp, rq)
    return None


def _exact_function(name: str, x):
    """Rational value of ``name(x)`` when one exists at the special points we know."""
    if not isinstance(x, (int, Fraction)):
        return None
    if name == "exp" and x == 0:
        return Fraction(1)
    if name == "log" and x == 1:
        return Fraction(0)
    if name == "sin" and x == 0:
        return Fraction(0)
    if name == "cos" and x == 0:
        return Fraction(1)
    if name == "sqrt" and x > 0:
        return _exact_sqrt(Fraction(x))
    return None


def _check_domain(name: str, x) -> None:
    if name in ("log", "sqrt") and isinstance(x, Scalar) and x <= 0:
        raise DomainViolation(f"{name} of nonpositive value {x}")


def scalar_function(name: str, x):
    _check_domain(name, x)
    exact = _exact_function(name, x)
    if exact is not None:
        return exact
    return getattr(math, name)(float(x))


def _value_function(name: str, x):
    if isinstance(x, SmoothExpr):
        return fn(name, x)
    return scalar_function(name, x)


def function_taylor(name: str, a0, k: int) -> list:
    """Taylor coefficients ``f^(j)(a0)/j!`` for ``j <= k`` of an elementary function.

    ``a0`` may be a scalar or an expression; only the zeroth-order values
    (``exp(a0)``, ``sin(a0)``, ...) are transcendental.
    """
    inv_fact = [Fraction(1, math.factorial(j)) for j in range(k + 1)]
    if name == "exp":
        e = _value_function("exp", a0)
        return [e * inv_fact[j] for j in range(k + 1)]
    if name in ("sin", "cos"):
        s, c = _value_function("sin", a0), _value_function("cos", a0)
        cycle = [s, c, -s, -c] if name == "sin" else [c, -s, -c, s]
        return [cycle[j % 4] * inv_fact[j] for j in range(k + 1)]
    if name == "log":
        out = [_value_function("log", a0)]
        for j in range(1, k + 1):
            sign = 1 if j % 2 else -1
            out.append(Fraction(sign, j) * _inv_power(a0, j))
        return out
    if name == "sqrt":
        r = _value_function("sqrt", a0)
        out = []
        binom = Fraction(1)
        for j in range(k + 1):
            out.append(binom * r * _inv_power(a0, j))
            binom = binom * (Fraction(1, 2) - j) / (j + 1)
        return out
    raise ValueError(f"unknown function {name!r}")


def _inv_power(a0, j: int):
    if j == 0:
        return Fraction(1)
    if isinstance(a0, SmoothExpr):
        return power(a0, -j)
    return _scalar_pow(a0, -j)


def apply_function(name: str, value):
    if isinstance(value, WeilElement):
        a0 = value.augment()
        _check_domain(name, a0)
        return value.apply_series(function_taylor(name, a0, value.parent.nilpotence))
    if isinstance(value, SmoothExpr):
        return fn(name, value)
    return scalar_function(name, value)


def _divide(a, b):
    if isinstance(b, WeilElement):
        b0 = b.augment()
        if isinstance(b0, Scalar) and b0 == 0:
            raise DomainViolation("division by an element with zero augmentation")
        return a * b.inverse()
    if isinstance(b, SmoothExpr):
        if isinstance(a, WeilElement):
            return a * div(Const(Fraction(1)), b)
        return div(lift(a), b)
    if b == 0:
        raise DomainViolation("division by zero")
    if isinstance(a, SmoothExpr):
        return div(a, lift(b))
    return _scalar_div(a, b)


def _raise(a, n: int):
    if isinstance(a, WeilElement):
        if n < 0:
            a0 = a.augment()
            if isinstance(a0, Scalar) and a0 == 0:
                raise DomainViolation("negative power of a nilpotent element")
        return a**n
    if isinstance(a, SmoothExpr):
        return power(a, n)
    return _scalar_pow(a, n)


# -- evaluation


def evaluate(expr: SmoothExpr, point: Sequence):
    """Evaluate ``expr`` with ``Var(i)`` bound to ``point[i]``.

    ``point`` may hold scalars, Weil elements (all in one algebra) or
    expressions; shared subtrees are evaluated once.
    """
    memo: dict[int, object] = {}

    def go(e):
        key = id(e)
        if key in memo:
            return memo[key]
        if isinstance(e, Var):
            if e.index >= len(point):
                raise DimensionMismatch(f"variable {e.index} on a {len(point)}-point")
            out = point[e.index]
        elif isinstance(e, Const):
            out = e.value
        elif isinstance(e, Add):
            out = go(e.left) + go(e.right)
        elif isinstance(e, Sub):
            out = go(e.left) - go(e.right)
        elif isinstance(e, Mul):
            out = go(e.left) * go(e.right)
        elif isinstance(e, Div):
            out = _divide(go(e.left), go(e.right))
        elif isinstance(e, Neg):
            out = -go(e.arg)
        elif isinstance(e, Pow):
            out = _raise(go(e.base), e.exponent)
        elif isinstance(e, Fn):
            out = apply_function(e.name, go(e.arg))
        else:
            raise TypeError(f"not an expression node: {e!r}")
        memo[key] = out
        return out

    return go(expr)


class TruncatedSeries(WeilElement):
    """Multivariate Taylor polynomial truncated at a total degree."""

    __slots__ = ()

    @property
    def nvars(self) -> int:
        return self.parent.generator_count

    @property
    def degree(self) -> int:
        return self.parent.nilpotence

    def coefficient(self, exponents: Sequence[int]):
        i = self.parent.index.get(tuple(exponents))
        return Fraction(0) if i is None else self.coeffs[i]


@lru_cache(maxsize=None)
def _series_algebra(nvars: int, degree: int):
    return truncation_algebra(nvars, degree)


def series_variables(x0: Sequence, degree: int) -> list[TruncatedSeries]:
    """``x0[i] + t_i`` as truncated series in ``len(x0)`` variables."""
    alg = _series_algebra(len(x0), degree)
    out = []
    for i, x in enumerate(x0):
        coeffs = list(alg.scalar(x).coeffs)
        if degree >= 1:
            mono = tuple(1 if j == i else 0 for j in range(len(x0)))
            coeffs[alg.index[mono]] = Fraction(1)
        out.append(TruncatedSeries(alg, coeffs))
    return out


def as_series(value, nvars: int, degree: int) -> TruncatedSeries:
    alg = _series_algebra(nvars, degree)
    if isinstance(value, WeilElement):
        return TruncatedSeries(alg, value.coeffs)
    return TruncatedSeries(alg, alg.scalar(value).coeffs)


def taylor(f: SmoothExpr, x0: Sequence, d: int) -> TruncatedSeries:
    """Coefficients ``(1/I!) d^I f(x0)`` for ``|I| <= d`` by forward jet propagation."""
    return as_series(evaluate(f, series_variables(x0, d)), len(x0), d)


# -- maps


@dataclass(frozen=True)
class SmoothMapTuple:
    domain_dim: int
    components: tuple[SmoothExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(lift(c) for c in self.components))
        for c in self.components:
            bad = [i for i in used_variables(c) if i >= self.domain_dim]
            if bad:
                raise DimensionMismatch(f"variable {bad[0]} in a map on R^{self.domain_dim}")

    @property
    def codomain_dim(self) -> int:
        return len(self.components)

    def __call__(self, point: Sequence) -> tuple:
        if len(point) != self.domain_dim:
            raise DimensionMismatch(f"{len(point)}-point for a map on R^{self.domain_dim}")
        return tuple(evaluate(c, point) for c in self.components)

    @classmethod
    def identity(cls, n: int) -> SmoothMapTuple:
        return cls(n, tuple(Var(i) for i in range(n)))

    @classmethod
    def parse(cls, domain_dim: int, sexprs: Sequence[str]) -> SmoothMapTuple:
        return cls(domain_dim, tuple(parse_sexpr(s) if isinstance(s, str) else lift(s) for s in sexprs))

    def to_sexprs(self) -> list[str]:
        return [to_sexpr(c) for c in self.components]

    def is_polynomial(self) -> bool:
        return all(is_polynomial(c) for c in self.components)

    def is_rational(self) -> bool:
        return all(is_rational(c) for c in self.components)


def compose(g: SmoothMapTuple, f: SmoothMapTuple) -> SmoothMapTuple:
    """``g o f``, by substituting the components of ``f`` into ``g``."""
    if f.codomain_dim != g.domain_dim:
        raise DimensionMismatch(f"cannot compose R^{g.domain_dim} <- R^{f.codomain_dim}")
    return SmoothMapTuple(f.domain_dim, tuple(c.substitute(f.components) for c in g.components))


def _walk(expr: SmoothExpr):
    seen = set()
    stack = [expr]
    while stack:
        e = stack.pop()
        if id(e) in seen:
            continue
        seen.add(id(e))
        yield e
        if isinstance(e, (Add, Sub, Mul, Div)):
            stack.extend((e.left, e.right))
        elif isinstance(e, (Neg, Fn)):
            stack.append(e.arg)
        elif isinstance(e, Pow):
            stack.append(e.base)


def used_variables(expr: SmoothExpr) -> set[int]:
    return {e.index for e in _walk(expr) if isinstance(e, Var)}


def is_polynomial(expr: SmoothExpr) -> bool:
    return all(
        not isinstance(e, (Div, Fn)) and not (isinstance(e, Pow) and e.exponent < 0)
        for e in _walk(expr)
    )


def is_rational(expr: SmoothExpr) -> bool:
    """No transcendental functions: values at rational points stay rational."""
    return not any(isinstance(e, Fn) for e in _walk(expr))


def degree(expr: SmoothExpr) -> int:
    """Total-degree bound of a polynomial expression."""
    if isinstance(expr, Var):
        return 1
    if isinstance(expr, Const):
        return 0
    if isinstance(expr, (Add, Sub)):
        return max(degree(expr.left), degree(expr.right))
    if isinstance(expr, Mul):
        return degree(expr.left) + degree(expr.right)
    if isinstance(expr, Neg):
        return degree(expr.arg)
    if isinstance(expr, Pow) and expr.exponent >= 0:
        return degree(expr.base) * expr.exponent
    raise ValueError("not a polynomial expression")


def polynomial_coefficients(expr: SmoothExpr, nvars: int) -> dict[tuple[int, ...], object]:
    """Normal form ``{exponents: coefficient}`` of a polynomial expression (zeros dropped)."""
    series = taylor(expr, [Fraction(0)] * nvars, degree(expr))
    return series.terms()


def series_close(a: WeilElement, b: WeilElement, tol: float) -> bool:
    return all(close(x, y, tol) for x, y in zip(a.coeffs, b.coeffs))


# -- s-expressions

_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_NARY = {"add": add, "mul": mul}


def parse_sexpr(text: str) -> SmoothExpr:
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise ExprParseError("empty expression")
    expr, pos = _parse(tokens, 0, text)
    if pos != len(tokens):
        raise ExprParseError(f"trailing tokens in {text!r}")
    return expr


def _number(tok: str, text: str):
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise ExprParseError(f"bad number {tok!r} in {text!r}") from None


def _parse(tokens, pos, text):
    if pos >= len(tokens):
        raise ExprParseError(f"unexpected end of {text!r}")
    tok = tokens[pos]
    if tok == ")":
        raise ExprParseError(f"unexpected ')' in {text!r}")
    if tok != "(":
        return Const(_number(tok, text)), pos + 1
    if pos + 1 >= len(tokens):
        raise ExprParseError(f"unexpected end of {text!r}")
    head = tokens[pos + 1]
    pos += 2
    if head == "var":
        try:
            index = int(tokens[pos])
        except (ValueError, IndexError):
            raise ExprParseError(f"bad variable index in {text!r}") from None
        node, pos = Var(index), pos + 1
    elif head == "const":
        node, pos = Const(_number(tokens[pos], text)), pos + 1
    elif head == "pow":
        base, pos = _parse(tokens, pos, text)
        try:
            n = int(tokens[pos])
        except (ValueError, IndexError):
            raise ExprParseError(f"pow needs an integer exponent in {text!r}") from None
        node, pos = Pow(base, n), pos + 1
    else:
        args = []
        while pos < len(tokens) and tokens[pos] != ")":
            arg, pos = _parse(tokens, pos, text)
            args.append(arg)
        if head in _NARY:
            if not args:
                raise ExprParseError(f"{head} needs arguments in {text!r}")
            node = args[0]
            for a in args[1:]:
                node = Add(node, a) if head == "add" else Mul(node, a)
        elif head == "sub" and len(args) == 2:
            node = Sub(*args)
        elif head in ("sub", "neg") and len(args) == 1:
            node = Neg(args[0])
        elif head == "div" and len(args) == 2:
            node = Div(*args)
        elif head in FUNCTIONS and len(args) == 1:
            node = Fn(head, args[0])
        else:
            raise ExprParseError(f"bad form {head!r} with {len(args)} arguments in {text!r}")
    if pos >= len(tokens) or tokens[pos] != ")":
        raise ExprParseError(f"missing ')' in {text!r}")
    return node, pos + 1


def _fmt(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return repr(float(value))


def to_sexpr(expr: SmoothExpr) -> str:
    if isinstance(expr, Var):
        return f"(var {expr.index})"
    if isinstance(expr, Const):
        return _fmt(expr.value)
    if isinstance(expr, Add):
        return f"(add {to_sexpr(expr.left)} {to_sexpr(expr.right)})"
    if isinstance(expr, Sub):
        return f"(sub {to_sexpr(expr.left)} {to_sexpr(expr.right)})"
    if isinstance(expr, Mul):
        return f"(mul {to_sexpr(expr.left)} {to_sexpr(expr.right)})"
    if isinstance(expr, Div):
        return f"(div {to_sexpr(expr.left)} {to_sexpr(expr.right)})"
    if isinstance(expr, Neg):
        return f"(neg {to_sexpr(expr.arg)})"
    if isinstance(expr, Pow):
        return f"(pow {to_sexpr(expr.base)} {expr.exponent})"
    if isinstance(expr, Fn):
        return f"({expr.name} {to_sexpr(expr.arg)})"
    raise TypeError(f"not an expression node: {expr!r}")
