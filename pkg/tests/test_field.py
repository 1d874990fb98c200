import random
from math import gcd
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from byitfl.field import (DivisionByZero, DuplicateNode, FieldPoly, PrimeField, ReconstructFailed,
                          decode_int, encode_element, encode_int, fld_inv, is_probable_prime, next_prime,
                          poly_eval, poly_interp, rational_reconstruct)

F7 = PrimeField(7)
F17 = PrimeField(17)
F101 = PrimeField(101)


def test_inverse_examples():
    assert fld_inv(F7(1)) == 1
    assert fld_inv(F7(2)) == 4
    with pytest.raises(DivisionByZero):
        fld_inv(F7(0))


def test_poly_eval_examples():
    assert poly_eval(FieldPoly([5], F17), 9) == 5
    assert poly_eval(FieldPoly([1, 1], F17), 2) == 3
    # term by term: 3*25 + 2*5 + 1 = 86 = 1 mod 17
    x = 5
    oracle = sum(c * x**e for e, c in enumerate([1, 2, 3])) % 17
    assert poly_eval(FieldPoly([1, 2, 3], F17), x) == oracle == 1


def test_poly_interp_examples():
    assert poly_interp([(0, 5)], F17).coeffs == (5,)
    f = poly_interp([(1, 2), (2, 3)], F17)
    assert f.coeffs == (1, 1)
    assert poly_eval(f, 1) == 2 and poly_eval(f, 2) == 3
    with pytest.raises(DuplicateNode):
        poly_interp([(1, 2), (1, 3)], F17)


def test_rational_reconstruct_examples():
    assert rational_reconstruct(F101(-4), 10, 1, F101) == (-4, 1)
    F211 = PrimeField(211)
    c = 3 * pow(7, -1, 211) % 211
    # brute-force oracle over the rectangle |a| <= 10, 0 < b <= 10
    hits = {(a // gcd(a, b), b // gcd(a, b)) for a in range(-10, 11) for b in range(1, 11)
            if (a - c * b) % 211 == 0}
    assert hits == {(3, 7)}
    assert rational_reconstruct(c, 10, 10, F211) == (3, 7)
    with pytest.raises(ValueError):
        rational_reconstruct(c, 10, 10, F101)
    # inside the bounds but with no valid pair
    with pytest.raises(ReconstructFailed):
        rational_reconstruct(F211(100), 3, 3, F211)


def test_inverse_is_multiplicative_over_many_pairs(big_field):
    r = random.Random(7)
    for _ in range(1000):
        a, b = r.randrange(1, big_field.p), r.randrange(1, big_field.p)
        ab = big_field.mul(a, b)
        assert big_field.inv(ab) == big_field.mul(big_field.inv(a), big_field.inv(b))


@given(st.integers(1, 21), st.randoms(use_true_random=False))
def test_interp_passes_through_points(npts, r):
    F = PrimeField(next_prime(2**61))
    xs = r.sample(range(F.p), npts)
    pts = [(x, r.randrange(F.p)) for x in xs]
    f = poly_interp(pts, F)
    assert f.degree < npts
    assert all(f(x) == y for x, y in pts)


@given(st.integers(0, 20), st.randoms(use_true_random=False))
def test_interp_recovers_polynomial(deg, r):
    F = PrimeField(next_prime(2**61))
    f = FieldPoly([r.randrange(F.p) for _ in range(deg)] + [r.randrange(1, F.p)], F)
    xs = r.sample(range(F.p), deg + 1)
    assert poly_interp([(x, f(x)) for x in xs], F) == f


@pytest.mark.parametrize("P", [101, 211, 401])
def test_rational_reconstruct_inverts_exhaustively(P):
    F = PrimeField(P)
    N = D = int(((P - 1) // 2) ** 0.5)
    while 2 * N * D >= P:
        N -= 1
    seen = {}
    for a in range(-N, N + 1):
        for b in range(1, D + 1):
            fr = Fraction(a, b)
            c = a * pow(b, -1, P) % P
            got = rational_reconstruct(c, N, D, F)
            assert Fraction(*got) == fr
            assert got == (fr.numerator, fr.denominator)
            seen.setdefault(c, fr)
            assert seen[c] == fr  # the rectangle maps injectively


def test_primes_and_serialization():
    assert [n for n in range(30) if is_probable_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert next_prime(14) == 17 and next_prime(17) == 17
    assert not is_probable_prime(3215031751)  # strong pseudoprime to bases 2, 3, 5, 7
    for v in (0, 1, 255, 256, 2**200 + 3):
        buf = encode_int(v)
        assert decode_int(buf) == (v, len(buf))
    assert encode_element(F17(300)) == encode_int(300 % 17)


def test_field_element_arithmetic():
    a, b = F17(5), F17(9)
    assert a + b == 14 and a - b == 13 and a * b == 11 and (a / b) * b == a and -a == 12
    with pytest.raises(DivisionByZero):
        a / F17(0)
