import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mkmr.field import (
    DEFAULT_FIELD,
    MERSENNE_31,
    FieldElement,
    FieldParams,
    add,
    centered,
    centered_array,
    from_centered,
    is_prime,
    matmul_mod,
    mul,
    reduce,
    reduce_array,
    sub,
)

Q = MERSENNE_31
F = DEFAULT_FIELD
GENERIC = FieldParams(8380417)  # 2^23 - 2^13 + 1, not Mersenne


def elems(p=F):
    return st.integers(0, p.q - 1).map(lambda v: FieldElement(v, p))


def test_params_flags():
    assert F.q == 2**31 - 1
    assert F.is_mersenne and F.e == 31
    assert not GENERIC.is_mersenne and GENERIC.e is None


@pytest.mark.parametrize("q", [2**20, 2**31 + 1, 15])
def test_rejects_composite_or_out_of_range(q):
    with pytest.raises(ValueError):
        FieldParams(q)


def test_rejects_large_modulus():
    with pytest.raises(ValueError):
        FieldParams(2**41 + 15)  # prime? irrelevant: outside the window


def test_miller_rabin_against_trial_division():
    def slow(n):
        return n >= 2 and all(n % d for d in range(2, int(n**0.5) + 1))

    for n in range(2000):
        assert is_prime(n) == slow(n)
    assert is_prime(MERSENNE_31) and is_prime(2**61 - 1)
    assert not is_prime(2**32 + 1)  # 641 * 6700417


def test_reduce_trivial():
    assert reduce(0, F) == 0
    assert reduce(Q, F) == 0
    assert reduce(Q, GENERIC) == Q % GENERIC.q


def test_mersenne_reduce_matches_naive_mod_vectorised():
    x = np.random.default_rng(1).integers(0, 2**64, size=10**6, dtype=np.uint64)
    got = reduce_array(x, F)
    assert np.array_equal(got, (x % np.uint64(Q)).astype(np.int64))


def test_mersenne_reduce_scalar_matches_naive_mod():
    gen = np.random.default_rng(2)
    for x in gen.integers(0, 2**64, size=20000, dtype=np.uint64):
        assert reduce(int(x), F) == int(x) % Q
    for x in (2**64 - 1, Q * Q, 2 * Q, Q - 1, Q + 1):
        assert reduce(x, F) == x % Q


def test_arith_against_bigint_oracle():
    gen = np.random.default_rng(3)
    for p in (F, GENERIC, FieldParams(2**40 - 87)):
        a = gen.integers(0, p.q, 100_000)
        b = gen.integers(0, p.q, 100_000)
        for x, y in zip(a.tolist(), b.tolist()):
            fx, fy = FieldElement(x, p), FieldElement(y, p)
            assert mul(fx, fy).value == x * y % p.q
            assert add(fx, fy).value == (x + y) % p.q
            assert sub(fx, fy).value == (x - y) % p.q


def test_mul_minus_one_squared():
    m1 = FieldElement(Q - 1)
    assert (m1 * m1).value == 1


def test_additive_identity():
    gen = np.random.default_rng(4)
    zero = FieldElement(0)
    for v in gen.integers(0, Q, 100):
        a = FieldElement(int(v))
        assert a + zero == a


def test_mismatched_moduli_rejected():
    with pytest.raises(ValueError):
        FieldElement(1, F) + FieldElement(1, GENERIC)


def test_inverse():
    for v in (1, 2, 12345, Q - 1):
        a = FieldElement(v)
        assert (a * a.inverse()).value == 1
    with pytest.raises(ZeroDivisionError):
        FieldElement(0).inverse()


@settings(max_examples=300)
@given(elems(), elems(), elems())
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - b + b == a


def test_ring_axioms_bulk():
    # >= 10^4 random triples, vectorised with Python-int oracle semantics.
    gen = np.random.default_rng(5)
    a, b, c = (gen.integers(0, Q, 10_000).tolist() for _ in range(3))
    for x, y, z in zip(a, b, c):
        X, Y, Z = FieldElement(x), FieldElement(y), FieldElement(z)
        assert X * (Y + Z) == X * Y + X * Z
        assert (X * Y) * Z == X * (Y * Z)


def test_centered_boundaries():
    half = Q // 2
    assert centered(FieldElement(0)) == 0
    assert centered(FieldElement(Q - 1)) == -1
    assert centered(FieldElement(half)) == half
    assert centered(FieldElement(half + 1)) == half + 1 - Q


def test_from_centered():
    half = Q // 2
    assert from_centered(-1).value == Q - 1
    assert from_centered(-half).value == Q - half
    with pytest.raises(ValueError):
        from_centered(Q)
    with pytest.raises(ValueError):
        from_centered(-Q)


def test_centered_inverse_pair():
    gen = np.random.default_rng(6)
    for v in gen.integers(0, Q, 10_000).tolist():
        a = FieldElement(v)
        assert from_centered(centered(a)) == a
    for x in gen.integers(-(Q // 2) + 1, Q // 2 + 1, 1000).tolist():
        assert centered(from_centered(x)) == x


def test_centered_array_agrees_with_scalar():
    v = np.array([0, 1, Q // 2, Q // 2 + 1, Q - 1])
    assert centered_array(v, Q).tolist() == [centered(FieldElement(int(x))) for x in v]


@pytest.mark.parametrize("q", [MERSENNE_31, 8380417, 2**40 - 87])
@pytest.mark.parametrize("m", [1, 7, 64, 1024])
def test_matmul_mod_against_schoolbook(q, m):
    gen = np.random.default_rng(m)
    a = gen.integers(0, q, (min(m, 16), m))
    b = gen.integers(0, q, (m, 3))
    want = [[sum(int(a[i, k]) * int(b[k, j]) for k in range(m)) % q for j in range(3)] for i in range(a.shape[0])]
    assert matmul_mod(a, b, q).tolist() == want
    assert matmul_mod(a, b[:, 0], q).tolist() == [r[0] for r in want]


def test_matmul_mod_extreme_values():
    for q in (MERSENNE_31, 2**40 - 87):
        a = np.full((4, 1024), q - 1)
        b = np.full(1024, q - 1)
        assert matmul_mod(a, b, q).tolist() == [1024 * (q - 1) ** 2 % q] * 4
