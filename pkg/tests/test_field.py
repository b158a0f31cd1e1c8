import itertools

import pytest
from hypothesis import given
import hypothesis.strategies as st

from bnec.errors import DivideByZero, NotPrimePower, TooLarge
from bnec.field import (
    default_poly,
    field_arith,
    is_irreducible,
    make_field,
    next_supported_size,
    poly_mulmod,
)

SMALL = [2, 3, 4, 5, 7, 8, 11, 13, 16]


def test_prime_field():
    F = make_field(7)
    assert (F.p, F.m, F.poly) == (7, 1, None)
    assert field_arith(F, "mul", 3, 5) == 1


def test_gf8_default_poly():
    F = make_field(8)
    assert F.poly == 0b1011  # x^3 + x + 1
    assert field_arith(F, "mul", 2, 6) == 7
    assert poly_mulmod(2, 6, 0b1011) == 7


@pytest.mark.parametrize("q", [6, 9, 12, 0, 1])
def test_not_prime_power(q):
    with pytest.raises(NotPrimePower):
        make_field(q)


def test_too_large():
    with pytest.raises(TooLarge):
        make_field(1 << 17)


@pytest.mark.parametrize("q", [2, 7, 8, 256])
def test_inverse_of_zero(q):
    F = make_field(q)
    with pytest.raises(DivideByZero):
        field_arith(F, "inv", 0)
    with pytest.raises(DivideByZero):
        field_arith(F, "div", 1, 0)


@pytest.mark.parametrize("m,poly", [(2, 0b111), (3, 0b1011), (4, 0b10011), (8, 0b100011011)])
def test_default_polys(m, poly):
    assert default_poly(m) == poly
    assert is_irreducible(poly)


def test_reducible_poly_rejected():
    with pytest.raises(ValueError):
        make_field(8, 0b1001)  # x^3 + 1 = (x+1)(x^2+x+1)


@pytest.mark.parametrize("q", [q for q in SMALL if q <= 16])
def test_axioms_exhaustive(q):
    F = make_field(q)
    els = range(q)
    for a in els:
        if a:
            assert F.mul(a, F.inv(a)) == 1
        for b in els:
            assert F.sub(F.add(a, b), b) == a
            assert F.add(a, b) == F.add(b, a)
            assert F.mul(a, b) == F.mul(b, a)
    for a, b, c in itertools.product(els, repeat=3):
        assert F.mul(a, F.mul(b, c)) == F.mul(F.mul(a, b), c)
        assert F.add(a, F.add(b, c)) == F.add(F.add(a, b), c)
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))


@pytest.mark.parametrize("q", [4, 8, 16, 32, 64, 128, 256, 3, 31, 251])
def test_table_mul_matches_oracle(q):
    F = make_field(q)
    for a in range(q):
        for b in range(q):
            want = poly_mulmod(a, b, F.poly) if F.poly else a * b % q
            assert F.mul(a, b) == want


@pytest.mark.parametrize("q", [1024, 65536, 65521])
def test_large_fields(q):
    F = make_field(q)
    for a in (1, 2, 3, q - 1, q // 2 + 1):
        assert F.mul(a, F.inv(a)) == 1


@given(st.sampled_from([5, 8, 13, 64]), st.data())
def test_numpy_helpers_agree(q, data):
    import numpy as np

    F = make_field(q)
    a = data.draw(st.lists(st.integers(0, q - 1), min_size=1, max_size=20))
    b = data.draw(st.lists(st.integers(0, q - 1), min_size=len(a), max_size=len(a)))
    assert list(F.np_mul(a, b)) == [F.mul(x, y) for x, y in zip(a, b)]
    assert list(F.np_add(a, b)) == [F.add(x, y) for x, y in zip(a, b)]
    assert list(F.np_sub(a, b)) == [F.sub(x, y) for x, y in zip(a, b)]
    assert int(F.np_sum(np.array(a))) == F.dot(a, [1] * len(a))


def test_next_supported_size():
    assert next_supported_size(45) == 47
    assert next_supported_size(36) == 37
    assert next_supported_size(480) == 487
    assert next_supported_size(64) == 64


def test_field_arith_validates():
    F = make_field(5)
    with pytest.raises(ValueError):
        field_arith(F, "mul", 5, 1)
    with pytest.raises(ValueError):
        field_arith(F, "pow", 1, 1)
    assert field_arith(F, "neg", 2) == 3
