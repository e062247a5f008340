from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import elements, weil_algebras
from oracles import brute_basis, brute_mul, nilpotence_by_products, rank
from weilglue.weil import (
    MissingPurePower,
    NotAMorphism,
    ParentMismatch,
    WeilAlgebra,
    augment,
    dual_numbers,
    make_weil,
    mul,
    nilpotence_degree,
    scalars,
    tensor,
    tensor_element,
    truncation_algebra,
    weil_algebra_map_monic,
)

Y2Z3YZ2 = [(2, 0), (0, 3), (1, 2)]


class TestMakeWeil:
    def test_dual_numbers(self):
        d1 = make_weil(1, [(2,)])
        assert d1.basis == ((0,), (1,))
        assert d1.dimension == 2

    def test_scalars(self):
        r = make_weil(0, [])
        assert r.basis == ((),)
        assert r.dimension == 1

    def test_mixed_ideal_basis(self):
        w = make_weil(2, Y2Z3YZ2)
        # frozen from the brute-force enumeration below
        assert set(w.basis) == {(0, 0), (1, 0), (0, 1), (0, 2), (1, 1)}
        assert w.dimension == 5

    def test_mixed_ideal_matches_oracle(self):
        assert set(make_weil(2, Y2Z3YZ2).basis) == brute_basis(2, Y2Z3YZ2)

    def test_grlex_order(self):
        w = make_weil(2, Y2Z3YZ2)
        assert w.basis == ((0, 0), (1, 0), (0, 1), (1, 1), (0, 2))

    def test_missing_pure_power(self):
        with pytest.raises(MissingPurePower):
            make_weil(2, [(2, 0), (1, 1)])

    def test_redundant_generators_are_minimized(self):
        assert make_weil(1, [(2,), (3,)]) == make_weil(1, [(2,)])


class TestMul:
    def test_dual_square(self):
        d1 = dual_numbers(1)
        y = d1.gen(0)
        assert mul(1 + y, 1 + y) == 1 + 2 * y

    def test_degree_overflow(self):
        d2 = dual_numbers(2)
        y = d2.gen(0)
        assert mul(y, y * y).is_zero()

    def test_two_generators(self):
        w = make_weil(2, [(2, 0), (0, 2)])
        y, z = w.gens()
        assert (y + z) * (y + z) == w.monomial((1, 1), 2)

    def test_parent_mismatch(self):
        with pytest.raises(ParentMismatch):
            mul(dual_numbers(1).gen(0), dual_numbers(2).gen(0))


class TestAugment:
    def test_examples(self):
        d1 = dual_numbers(1)
        assert augment(3 + 5 * d1.gen(0)) == 3
        assert augment(d1.one()) == 1
        w = make_weil(2, [(2, 0), (0, 2)])
        y, z = w.gens()
        assert augment((1 + y) * (2 + z)) == 2


class TestTensor:
    def test_dual_dual(self):
        t = tensor(dual_numbers(1), dual_numbers(1))
        assert t == make_weil(2, [(2, 0), (0, 2)])
        assert set(t.basis) == brute_basis(2, [(2, 0), (0, 2)]) == {(0, 0), (1, 0), (0, 1), (1, 1)}

    def test_unit(self):
        w = make_weil(2, Y2Z3YZ2)
        assert tensor(w, scalars()).dimension == w.dimension

    def test_d2_d1(self):
        assert tensor(dual_numbers(2), dual_numbers(1)).dimension == 6

    def test_tensor_element_product(self):
        a, b = dual_numbers(1), dual_numbers(2)
        t = tensor(a, b)
        x = tensor_element(1 + a.gen(0), 2 + b.gen(0), t)
        assert x == 2 + t.gen(1) + 2 * t.gen(0) + t.monomial((1, 1))


class TestNilpotence:
    @pytest.mark.parametrize("k", range(5))
    def test_dual_numbers(self, k):
        assert nilpotence_degree(dual_numbers(k)) == k

    def test_scalars(self):
        assert nilpotence_degree(scalars()) == 0

    def test_two_generators(self):
        assert nilpotence_degree(make_weil(2, [(2, 0), (0, 2)])) == 2
        assert nilpotence_by_products(2, [(2, 0), (0, 2)]) == 2

    def test_truncation_algebra(self):
        w = truncation_algebra(3, 2)
        assert nilpotence_degree(w) == 2
        assert w.dimension == 10


class TestMonic:
    def test_squaring_d2(self):
        target = make_weil(1, [(6,)])
        z = target.gen(0)
        assert weil_algebra_map_monic([z * z], dual_numbers(2), target)
        rows = [[1, 0, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 0, 1, 0]]
        assert rank(rows) == 3

    def test_zero_map(self):
        d1 = dual_numbers(1)
        assert not weil_algebra_map_monic([d1.zero()], d1, d1)

    @given(weil_algebras())
    def test_identity(self, w):
        assert weil_algebra_map_monic(w.gens(), w, w)

    def test_not_a_morphism(self):
        d1, d2 = dual_numbers(1), dual_numbers(2)
        with pytest.raises(NotAMorphism):
            weil_algebra_map_monic([d2.gen(0)], d1, d2)

    def test_unit_image_rejected(self):
        d1 = dual_numbers(1)
        with pytest.raises(NotAMorphism):
            weil_algebra_map_monic([d1.one()], d1, d1)


# -- properties


@given(st.data(), weil_algebras())
def test_ring_axioms(data, w):
    a, b, c = (data.draw(elements(w)) for _ in range(3))
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c
    assert a * w.one() == a
    assert a - a == w.zero()


@given(st.data(), weil_algebras())
def test_mul_matches_brute_force(data, w):
    a, b = data.draw(elements(w)), data.draw(elements(w))
    expected = brute_mul(a.terms(), b.terms(), list(w.ideal))
    assert (a * b).terms() == expected


@given(st.data(), weil_algebras())
def test_augment_is_a_morphism(data, w):
    a, b = data.draw(elements(w)), data.draw(elements(w))
    assert augment(a * b) == augment(a) * augment(b)
    assert augment(a + b) == augment(a) + augment(b)
    assert augment(w.scalar(Fraction(7, 3))) == Fraction(7, 3)


@given(weil_algebras(), weil_algebras())
def test_tensor_dimension(w1, w2):
    assert tensor(w1, w2).dimension == w1.dimension * w2.dimension


@given(weil_algebras())
def test_basis_downward_closed(w):
    basis = set(w.basis)
    assert (0,) * w.generator_count in basis
    for m in basis:
        for i, e in enumerate(m):
            if e:
                assert tuple(x - (j == i) for j, x in enumerate(m)) in basis


@given(weil_algebras())
def test_basis_matches_oracle(w):
    assert set(w.basis) == brute_basis(w.generator_count, list(w.ideal))


@given(weil_algebras())
def test_nilpotence_bound(w):
    k = nilpotence_degree(w)
    assert k == nilpotence_by_products(w.generator_count, list(w.ideal))


@given(st.data(), weil_algebras())
def test_inverse_of_units(data, w):
    a = data.draw(elements(w))
    if augment(a) == 0:
        a = a + 1
    assert a * a.inverse() == w.one()


def test_equality_and_hash():
    assert WeilAlgebra(1, [(2,)]) == dual_numbers(1)
    assert len({dual_numbers(1), make_weil(1, [(2,)])}) == 1
