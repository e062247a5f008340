"""Weil algebras presented as quotients of polynomial rings by monomial ideals.

An algebra ``R[Y_1..Y_g]/I`` is stored through its standard monomials (the
exponent vectors not divisible by any generator of ``I``).  Elements are dense
coefficient tuples indexed by that basis, ordered graded-lexicographically.

Coefficients are usually :class:`fractions.Fraction` (exact mode) or ``float``.
Anything closed under ``+``, ``-`` and ``*`` also works, which is how jets with
symbolic (expression-valued) coefficients are computed elsewhere in the package.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from numbers import Number
from typing import Iterable, Sequence

import numpy as np

Monomial = tuple[int, ...]


class WeilError(ValueError):
    pass


class MissingPurePower(WeilError):
    pass


class ParentMismatch(WeilError):
    pass


class NotAMorphism(WeilError):
    pass


def _divides(a: Monomial, b: Monomial) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _grlex_key(m: Monomial):
    return (sum(m), tuple(-e for e in m))


def is_zero(c) -> bool:
    if isinstance(c, Number):
        return c == 0
    return getattr(c, "is_zero", lambda: False)()


def as_scalar(c):
    """Coerce ints and numeric strings to ``Fraction``; leave floats alone."""
    if isinstance(c, bool):
        raise TypeError("boolean is not a scalar")
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    return c


def format_scalar(c) -> str:
    if isinstance(c, Fraction):
        return str(c)
    if isinstance(c, int):
        return str(c)
    return repr(float(c))


class WeilAlgebra:
    """``R[Y_1..Y_g]/I`` with ``I`` a monomial ideal containing a pure power of every ``Y_i``."""

    def __init__(self, generator_count: int, ideal_monomials: Iterable[Sequence[int]] = ()):
        if generator_count < 0:
            raise WeilError("generator_count must be nonnegative")
        ideal = []
        for mono in ideal_monomials:
            mono = tuple(int(e) for e in mono)
            if len(mono) != generator_count or any(e < 0 for e in mono):
                raise WeilError(f"bad ideal monomial {mono} for {generator_count} generators")
            ideal.append(mono)
        if any(sum(m) == 0 for m in ideal):
            raise WeilError("ideal contains 1; the quotient is the zero ring")

        minimal: list[Monomial] = []
        for mono in sorted(set(ideal), key=_grlex_key):
            if not any(_divides(g, mono) for g in minimal):
                minimal.append(mono)

        bounds = []
        for i in range(generator_count):
            pure = [m[i] for m in minimal if all(e == 0 for j, e in enumerate(m) if j != i)]
            if not pure:
                raise MissingPurePower(f"generator {i} has no pure power in the ideal")
            bounds.append(min(pure))

        self.generator_count = generator_count
        self.ideal = tuple(minimal)
        basis = [
            m
            for m in itertools.product(*(range(b) for b in bounds))
            if not any(_divides(g, m) for g in minimal)
        ]
        self.basis: tuple[Monomial, ...] = tuple(sorted(basis, key=_grlex_key))
        self.index = {m: i for i, m in enumerate(self.basis)}

        # table[i] = [(j, k), ...] with basis[i] * basis[j] = basis[k]
        table = []
        for a in self.basis:
            row = []
            for j, b in enumerate(self.basis):
                k = self.index.get(tuple(x + y for x, y in zip(a, b)))
                if k is not None:
                    row.append((j, k))
            table.append(row)
        self._table = table
        self.nilpotence = max(sum(m) for m in self.basis)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def __len__(self):
        return len(self.basis)

    def __eq__(self, other):
        return (
            isinstance(other, WeilAlgebra)
            and self.generator_count == other.generator_count
            and set(self.ideal) == set(other.ideal)
        )

    def __hash__(self):
        return hash((self.generator_count, frozenset(self.ideal)))

    def __repr__(self):
        return f"WeilAlgebra({self.generator_count}, {list(self.ideal)})"

    # -- element constructors

    def element(self, coeffs=None) -> WeilElement:
        """Build an element from a mapping ``monomial -> coefficient`` or a dense sequence."""
        if coeffs is None:
            return self.zero()
        if isinstance(coeffs, dict):
            dense = [Fraction(0)] * self.dimension
            for mono, c in coeffs.items():
                mono = tuple(mono)
                if mono not in self.index:
                    if not is_zero(as_scalar(c)):
                        raise WeilError(f"monomial {mono} lies in the ideal")
                    continue
                dense[self.index[mono]] = as_scalar(c)
            return WeilElement(self, dense)
        coeffs = list(coeffs)
        if len(coeffs) != self.dimension:
            raise WeilError("coefficient vector has wrong length")
        return WeilElement(self, [as_scalar(c) for c in coeffs])

    def zero(self) -> WeilElement:
        return WeilElement(self, [Fraction(0)] * self.dimension)

    def one(self) -> WeilElement:
        return self.scalar(1)

    def scalar(self, c) -> WeilElement:
        coeffs = [Fraction(0)] * self.dimension
        coeffs[0] = as_scalar(c)
        return WeilElement(self, coeffs)

    def monomial(self, mono: Sequence[int], c=1) -> WeilElement:
        mono = tuple(mono)
        if mono not in self.index:
            return self.zero()
        coeffs = [Fraction(0)] * self.dimension
        coeffs[self.index[mono]] = as_scalar(c)
        return WeilElement(self, coeffs)

    def gen(self, i: int) -> WeilElement:
        mono = [0] * self.generator_count
        mono[i] = 1
        return self.monomial(mono)

    def gens(self) -> list[WeilElement]:
        return [self.gen(i) for i in range(self.generator_count)]


class WeilElement:
    __slots__ = ("parent", "coeffs")

    def __init__(self, parent: WeilAlgebra, coeffs: Sequence):
        self.parent = parent
        self.coeffs = tuple(coeffs)

    def _new(self, coeffs):
        return type(self)(self.parent, coeffs)

    def _coerce(self, other) -> WeilElement | None:
        if isinstance(other, WeilElement):
            if other.parent != self.parent:
                raise ParentMismatch(f"{self.parent!r} vs {other.parent!r}")
            return other
        if isinstance(other, (int, Fraction, float)) or hasattr(other, "substitute"):
            return self.parent.scalar(other)
        return None

    def augment(self):
        return self.coeffs[0]

    def nilpotent_part(self) -> WeilElement:
        return self._new((Fraction(0),) + self.coeffs[1:])

    def is_zero(self) -> bool:
        return all(is_zero(c) for c in self.coeffs)

    def terms(self) -> dict[Monomial, object]:
        return {m: c for m, c in zip(self.parent.basis, self.coeffs) if not is_zero(c)}

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._new([a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return self._new([-a for a in self.coeffs])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._new([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, float)):
            return self._new([a * other for a in self.coeffs])
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = [Fraction(0)] * len(self.coeffs)
        table = self.parent._table
        for i, a in enumerate(self.coeffs):
            if is_zero(a):
                continue
            for j, k in table[i]:
                b = other.coeffs[j]
                if not is_zero(b):
                    out[k] = out[k] + a * b
        return self._new(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = self.parent.one()
        result = self._new(result.coeffs)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def apply_series(self, coeffs: Sequence) -> WeilElement:
        """Evaluate ``sum_j coeffs[j] * (self - augment)^j`` by Horner's rule.

        ``coeffs`` are the Taylor coefficients of a univariate function at
        ``self.augment()``; terms past the nilpotence degree vanish anyway.
        """
        nil = self.nilpotent_part()
        k = min(len(coeffs) - 1, nilpotence_degree(self.parent))
        acc = self._new(self.parent.scalar(coeffs[k]).coeffs)
        for j in range(k - 1, -1, -1):
            acc = acc * nil + coeffs[j]
        return acc

    def inverse(self) -> WeilElement:
        a0 = self.augment()
        if is_zero(a0):
            raise ZeroDivisionError("element with zero augmentation is not invertible")
        k = nilpotence_degree(self.parent)
        coeffs = []
        inv = 1 / a0 if not isinstance(a0, int) else Fraction(1, a0)
        term = inv
        for _ in range(k + 1):
            coeffs.append(term)
            term = -term * inv
        return self.apply_series(coeffs)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, float)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return self * (Fraction(1) / other if not isinstance(other, float) else 1.0 / other)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def __eq__(self, other):
        if isinstance(other, WeilElement):
            return self.parent == other.parent and all(
                a == b for a, b in zip(self.coeffs, other.coeffs)
            )
        if isinstance(other, (int, Fraction, float)):
            return self == self.parent.scalar(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.parent, self.coeffs))

    def isclose(self, other: WeilElement, tol: float = 1e-9) -> bool:
        if self.parent != other.parent:
            raise ParentMismatch("cannot compare elements of different algebras")
        return all(close(a, b, tol) for a, b in zip(self.coeffs, other.coeffs))

    def to_float(self) -> WeilElement:
        return self._new([float(c) for c in self.coeffs])

    def __repr__(self):
        parts = []
        for mono, c in self.terms().items():
            name = "*".join(
                f"Y{i}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(mono) if e
            )
            parts.append(f"{c}" if not name else f"{c}*{name}")
        return " + ".join(parts) if parts else "0"


def close(a, b, tol: float = 1e-9) -> bool:
    """Exact equality for rationals, ``math.isclose`` with rel/abs ``tol`` otherwise."""
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return a == b
    return math.isclose(float(a), float(b), rel_tol=tol, abs_tol=tol)


# -- operations


def make_weil(generator_count: int, ideal_monomials: Iterable[Sequence[int]]) -> WeilAlgebra:
    return WeilAlgebra(generator_count, ideal_monomials)


def scalars() -> WeilAlgebra:
    return WeilAlgebra(0, ())


def dual_numbers(k: int = 1) -> WeilAlgebra:
    """``D_k = R[Y]/(Y^{k+1})``."""
    return WeilAlgebra(1, [(k + 1,)])


def truncation_algebra(nvars: int, degree: int) -> WeilAlgebra:
    """``R[t_1..t_n]`` modulo all monomials of total degree ``degree + 1``."""
    ideal = [
        m for m in itertools.product(range(degree + 2), repeat=nvars) if sum(m) == degree + 1
    ]
    return WeilAlgebra(nvars, ideal)


def mul(a: WeilElement, b: WeilElement) -> WeilElement:
    if a.parent != b.parent:
        raise ParentMismatch(f"{a.parent!r} vs {b.parent!r}")
    return a * b


def augment(a: WeilElement):
    return a.augment()


def tensor(w1: WeilAlgebra, w2: WeilAlgebra) -> WeilAlgebra:
    g1, g2 = w1.generator_count, w2.generator_count
    ideal = [m + (0,) * g2 for m in w1.ideal] + [(0,) * g1 + m for m in w2.ideal]
    return WeilAlgebra(g1 + g2, ideal)


def tensor_element(a: WeilElement, b: WeilElement, parent: WeilAlgebra | None = None) -> WeilElement:
    """The pure tensor ``a (x) b`` inside ``tensor(a.parent, b.parent)``."""
    parent = parent or tensor(a.parent, b.parent)
    coeffs = {}
    for ma, ca in a.terms().items():
        for mb, cb in b.terms().items():
            coeffs[ma + mb] = ca * cb
    return parent.element(coeffs)


def nilpotence_degree(w: WeilAlgebra) -> int:
    """Least ``k`` with ``(ker augment)^(k+1) = 0``: the top total degree of the basis."""
    return w.nilpotence


def apply_morphism(
    images: Sequence[WeilElement], element: WeilElement, target: WeilAlgebra
) -> WeilElement:
    """Image of ``element`` under the algebra map sending generator ``i`` to ``images[i]``."""
    out = target.zero()
    for mono, c in element.terms().items():
        term = target.scalar(c)
        for img, e in zip(images, mono):
            if e:
                term = term * img**e
        out = out + term
    return out


def weil_algebra_map_monic(
    images: Sequence[WeilElement], source: WeilAlgebra, target: WeilAlgebra
) -> bool:
    """Whether the algebra map ``source -> target`` given on generators is injective."""
    if len(images) != source.generator_count:
        raise NotAMorphism("need one image per source generator")
    for img in images:
        if img.parent != target:
            raise ParentMismatch("image outside the target algebra")
        if not is_zero(img.augment()):
            raise NotAMorphism("generators must map to nilpotent elements")
    for mono in source.ideal:
        term = target.one()
        for img, e in zip(images, mono):
            term = term * img**e
        if not term.is_zero():
            raise NotAMorphism(f"ideal generator {mono} has nonzero image")
    rows = [apply_morphism(images, source.monomial(m), target).coeffs for m in source.basis]
    return matrix_rank(rows) == source.dimension


def matrix_rank(rows: Sequence[Sequence]) -> int:
    """Rank by Gaussian elimination; exact over rationals, numpy for floats."""
    if any(isinstance(c, float) for row in rows for c in row):
        return int(np.linalg.matrix_rank(np.array(rows, dtype=float)))
    mat = [[Fraction(c) for c in row] for row in rows]
    rank = 0
    ncols = len(mat[0]) if mat else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(mat)) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        p = mat[rank][col]
        for r in range(len(mat)):
            if r != rank and mat[r][col] != 0:
                f = mat[r][col] / p
                mat[r] = [x - f * y for x, y in zip(mat[r], mat[rank])]
        rank += 1
    return rank
