"""Deterministic seeded sampling.

Every check draws from its own Philox stream keyed by ``(seed, check_id)``, so
adding or reordering checks never perturbs the samples of another check.
"""

from __future__ import annotations

import zlib
from fractions import Fraction
from typing import Sequence

import numpy as np

from .smoothexpr import Const, SmoothExpr, Var, add, mul, power
from .weil import WeilAlgebra, WeilElement

DENOMINATORS = (1, 2, 3, 4, 5, 8)


def rng_for(seed: int, check_id: str) -> np.random.Generator:
    key = zlib.crc32(check_id.encode("utf-8"))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), key])))


def random_rational(rng: np.random.Generator, bound: int = 3) -> Fraction:
    """Rational in ``[-bound, bound]`` with a small denominator."""
    q = DENOMINATORS[int(rng.integers(len(DENOMINATORS)))]
    p = int(rng.integers(-bound * q, bound * q + 1))
    return Fraction(p, q)


def rational_between(rng: np.random.Generator, lo: Fraction, hi: Fraction, steps: int = 64) -> Fraction:
    """Rational strictly inside ``(lo, hi)`` on a grid of ``steps`` cells."""
    r = int(rng.integers(1, steps))
    return lo + (hi - lo) * Fraction(r, steps)


def random_weil_element(
    w: WeilAlgebra, rng: np.random.Generator, nilpotent: bool = True, bound: int = 3
) -> WeilElement:
    coeffs = [random_rational(rng, bound) for _ in w.basis]
    if nilpotent:
        coeffs[0] = Fraction(0)
    return w.element(coeffs)


def random_polynomial(
    nvars: int, rng: np.random.Generator, max_degree: int = 3, terms: int = 3, bound: int = 3
) -> SmoothExpr:
    """Sum of ``terms`` random monomials with rational coefficients."""
    out: SmoothExpr = Const(random_rational(rng, bound))
    for _ in range(terms):
        coeff = random_rational(rng, bound)
        if coeff == 0:
            continue
        term: SmoothExpr = Const(coeff)
        remaining = int(rng.integers(0, max_degree + 1))
        for _ in range(remaining):
            term = mul(term, Var(int(rng.integers(nvars)))) if nvars else term
        out = add(out, term)
    return out


def random_transcendental(nvars: int, rng: np.random.Generator) -> SmoothExpr:
    """A polynomial wrapped in one smooth function that is defined everywhere."""
    from .smoothexpr import fn

    inner = random_polynomial(nvars, rng, max_degree=2, terms=2, bound=1)
    choice = int(rng.integers(4))
    if choice == 0:
        return fn("exp", mul(Const(Fraction(1, 2)), inner))
    if choice == 1:
        return fn("sin", inner)
    if choice == 2:
        return fn("cos", inner)
    return fn("log", add(Const(Fraction(2)), power(inner, 2)))


def random_point(rng: np.random.Generator, n: int, bound: int = 2) -> list[Fraction]:
    return [random_rational(rng, bound) for _ in range(n)]


def to_float_point(point: Sequence) -> list[float]:
    return [float(x) for x in point]
