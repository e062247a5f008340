"""Independent reference computations used to derive and freeze expected values.

Nothing here imports the package's arithmetic: polynomials are plain dicts,
derivatives come from finite differences, series from long division.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product


def divides(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b))


def brute_basis(nvars: int, ideal: list[tuple[int, ...]]) -> set[tuple[int, ...]]:
    """Standard monomials found by scanning a box bounded by the pure powers."""
    bounds = []
    for i in range(nvars):
        pure = [m[i] for m in ideal if all(e == 0 for j, e in enumerate(m) if j != i)]
        bounds.append(min(pure))
    return {m for m in product(*(range(b) for b in bounds)) if not any(divides(g, m) for g in ideal)}


def brute_mul(a: dict, b: dict, ideal) -> dict:
    out: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(x + y for x, y in zip(ma, mb))
            if any(divides(g, m) for g in ideal):
                continue
            out[m] = out.get(m, 0) + ca * cb
    return {m: c for m, c in out.items() if c != 0}


def nilpotence_by_products(nvars: int, ideal) -> int:
    """Least k with every (k+1)-fold product of kernel basis monomials zero."""
    kernel = [m for m in brute_basis(nvars, ideal) if any(m)]
    k = 0
    products = {m: 1 for m in kernel}
    while products:
        k += 1
        products = brute_mul(products, {m: 1 for m in kernel}, ideal) if products else {}
        if not products:
            return k
    return 0


def central_difference(f, x: float, h: float = 1e-4, order: int = 1) -> float:
    if order == 1:
        return (f(x + h) - f(x - h)) / (2 * h)
    if order == 2:
        return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)
    raise ValueError(order)


def partial_difference(f, x: list[float], i: int, h: float = 1e-5) -> float:
    up = list(x)
    dn = list(x)
    up[i] += h
    dn[i] -= h
    return (f(up) - f(dn)) / (2 * h)


def long_division(num: list, den: list, terms: int) -> list:
    """Power series of ``num / den`` (coefficient lists, constant first)."""
    num = list(num) + [0] * terms
    out = []
    for n in range(terms):
        c = Fraction(num[n]) / den[0]
        out.append(c)
        for j, d in enumerate(den):
            if n + j < len(num):
                num[n + j] -= c * d
    return out


def exp_series(terms: int) -> list:
    return [Fraction(1, math.factorial(n)) for n in range(terms)]


def binomial_expand(a, k: int, power: int) -> list:
    """Coefficients of ``(a + t)^power`` truncated at ``t^k``."""
    return [Fraction(math.comb(power, j)) * Fraction(a) ** (power - j) for j in range(min(k, power) + 1)] + [
        Fraction(0)
    ] * max(0, k - power)


def rank(rows: list[list]) -> int:
    """Exact rank by Gaussian elimination over Fractions."""
    m = [[Fraction(x) for x in r] for r in rows]
    r = 0
    cols = len(m[0]) if m else 0
    for c in range(cols):
        pivot = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c] / m[r][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        r += 1
    return r
