import random
from fractions import Fraction as F

import pytest

from voxform.scalars import (
    ApproxScalar,
    ExactScalar as E,
    NonContractive,
    TruncatedLaurent,
    VariableMismatch,
    geometric_tail_bound,
    laurent_mul,
    sqrt_exact_or_approx,
)


def rand_scalar(rng):
    return E(F(rng.randint(-9, 9), rng.randint(1, 7)),
             F(rng.randint(-9, 9), rng.randint(1, 7)))


def test_field_axioms_random_triples():
    rng = random.Random(1)
    for _ in range(200):
        a, b, c = (rand_scalar(rng) for _ in range(3))
        assert (a + b) + c == a + (b + c)
        assert a * (b + c) == a * b + a * c
        assert (a * b) * c == a * (b * c)
        assert (a + b) - b == a
        if not b.is_zero():
            assert (a * b) / b == a


def test_exact_no_rounding():
    a = E(F(1, 3), F(2, 7))
    b = E(F(5, 11), F(-3, 13))
    assert (a + b) - b == a
    assert a ** 5 * a ** -5 == E(1)


def test_parse_literals():
    assert E.parse("3") == E(3)
    assert E.parse("-1/4") == E(F(-1, 4))
    assert E.parse("1/2+3/4i") == E(F(1, 2), F(3, 4))
    assert E.parse("-2/3i") == E(0, F(-2, 3))
    assert E.parse("i") == E(0, 1)
    assert E.parse("1/2-1/2i") == E(F(1, 2), F(-1, 2))


def test_normalization_invariants():
    x = E(F(2, -4), F(6, 8))
    assert x.re.denominator > 0 and x.re == F(-1, 2)
    assert x.im == F(3, 4)


def test_laurent_mul_identities():
    one_plus = TruncatedLaurent("z", 0, 8, {0: 1, 1: 1})
    one_minus = TruncatedLaurent("z", 0, 8, {0: 1, 1: -1})
    prod = laurent_mul(one_plus, one_minus)
    assert prod.coefficient(0) == E(1)
    assert prod.coefficient(1) == E(0)
    assert prod.coefficient(2) == E(-1)

    zinv = TruncatedLaurent("z", -1, 2, {-1: 1})
    z = TruncatedLaurent("z", 1, 4, {1: 1})
    assert laurent_mul(zinv, z).coefficient(0) == E(1)


def test_laurent_mul_telescoping():
    L = 7
    geom = TruncatedLaurent("z", 0, L, {k: 1 for k in range(L + 1)})
    one_minus = TruncatedLaurent("z", 0, L, {0: 1, 1: -1})
    prod = laurent_mul(geom, one_minus)
    # oracle: direct convolution gives 1 - z^{L+1}; within order only 1 stays
    assert prod.coefficient(0) == E(1)
    for k in range(1, prod.order + 1):
        assert prod.coefficient(k) == E(0)


def test_laurent_mul_truncation_rule():
    f = TruncatedLaurent("z", 0, 5, {0: 1})
    g = TruncatedLaurent("z", 2, 9, {2: 1})
    assert laurent_mul(f, g).order == min(5 + 2, 9 + 0)


def test_laurent_mul_matches_naive_convolution():
    rng = random.Random(5)
    for _ in range(25):
        f = TruncatedLaurent("z", -2, 6, {e: rng.randint(-4, 4) for e in range(-2, 7)})
        g = TruncatedLaurent("z", 0, 5, {e: rng.randint(-4, 4) for e in range(0, 6)})
        prod = laurent_mul(f, g)
        for k in range(prod.lo, prod.order + 1):
            total = E(0)
            for e1 in range(f.lo, f.order + 1):
                e2 = k - e1
                if g.lo <= e2 <= g.order:
                    total = total + f.coefficient(e1) * g.coefficient(e2)
            assert prod.coefficient(k) == total


def test_laurent_variable_mismatch():
    f = TruncatedLaurent("z", 0, 2, {0: 1})
    g = TruncatedLaurent("w", 0, 2, {0: 1})
    with pytest.raises(VariableMismatch):
        laurent_mul(f, g)


def test_geometric_tail_bound_values():
    assert geometric_tail_bound(ApproxScalar(1), ApproxScalar(2), 0) == 2
    assert geometric_tail_bound(ApproxScalar(0), ApproxScalar(2), 5) == 0
    val = geometric_tail_bound(ApproxScalar(1), ApproxScalar(2), 10)
    assert abs(float(val) - 2 * 2 ** -10) < 1e-12


def test_geometric_tail_bound_dominates_partial_sums():
    rng = random.Random(11)
    for _ in range(30):
        M = rng.uniform(0.1, 5)
        R = rng.uniform(1.05, 4)
        L = rng.randint(0, 12)
        bound = float(geometric_tail_bound(ApproxScalar(M), ApproxScalar(R), L))
        partial = sum(M * R ** (-l) for l in range(L + 1, L + 1001))
        assert bound >= partial * (1 - 1e-12)


def test_geometric_tail_bound_noncontractive():
    with pytest.raises(NonContractive):
        geometric_tail_bound(ApproxScalar(1), ApproxScalar(1), 3)
    with pytest.raises(NonContractive):
        geometric_tail_bound(ApproxScalar(1), ApproxScalar(F(1, 2)), 3)


def test_sqrt_exact_when_square():
    r = sqrt_exact_or_approx(E(F(1, 16)))
    assert isinstance(r, E) and r == E(F(1, 4))
    r2 = sqrt_exact_or_approx(E(2))
    assert isinstance(r2, ApproxScalar)
    assert abs(float(r2.value.real) - 2 ** 0.5) < 1e-30


def test_approx_scalar_precision_bound():
    x = ApproxScalar(E(F(1, 3)))
    assert float(x.eps) <= 2.0 ** (1 - 100)
