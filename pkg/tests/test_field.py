"""Field and bitstring tests.

The scalar operations are exercised exhaustively in a tiny mirror field
(Z = 17) against direct modular arithmetic, and at the production modulus on
edge values. The vectorized Mersenne-61 helpers must agree with the scalar
path elementwise.
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from covercount import field
from covercount.errors import LengthError
from covercount.field import BitString

Z17 = 17
M61 = field.MODULUS


def test_default_modulus_is_mersenne_61():
    assert M61 == 2**61 - 1


def test_add_mul_exhaustive_mirror_field():
    for x in range(Z17):
        for y in range(Z17):
            assert field.fe_add(x, y, Z17) == (x + y) % Z17
            assert field.fe_mul(x, y, Z17) == (x * y) % Z17
            assert field.fe_sub(x, y, Z17) == (x - y) % Z17


def test_inverse_exhaustive_mirror_field():
    for x in range(1, Z17):
        inv = field.fe_inv(x, Z17)
        assert field.fe_mul(x, inv, Z17) == 1


def test_pow_exhaustive_mirror_field():
    for x in range(Z17):
        for e in range(10):
            assert field.fe_pow(x, e, Z17) == pow(x, e, Z17)


def test_zero_has_no_inverse():
    with pytest.raises(ZeroDivisionError):
        field.fe_inv(0, Z17)
    with pytest.raises(ZeroDivisionError):
        field.fe_inv(0)


def test_negative_exponent_rejected():
    with pytest.raises(ValueError):
        field.fe_pow(3, -1)


def test_production_field_examples():
    assert field.fe_add(0, 7) == 7
    assert field.fe_add(M61 - 1, 1) == 0
    assert field.fe_mul(3, 4) == 12
    assert field.fe_mul(1, 9) == 9
    assert field.fe_mul(0, 9) == 0
    assert field.fe_inv(1) == 1
    # -1 is its own inverse in any prime field.
    assert field.fe_inv(M61 - 1) == M61 - 1
    assert field.fe_pow(2, 3) == 8
    assert field.fe_pow(123456789, 0) == 1
    assert field.fe_pow(123456789, 1) == 123456789


@given(st.integers(0, M61 - 1), st.integers(0, M61 - 1), st.integers(0, M61 - 1))
def test_field_axioms_production(x, y, z):
    assert field.fe_add(x, y) == field.fe_add(y, x)
    assert field.fe_mul(x, y) == field.fe_mul(y, x)
    assert field.fe_add(field.fe_add(x, y), z) == field.fe_add(x, field.fe_add(y, z))
    assert field.fe_mul(field.fe_mul(x, y), z) == field.fe_mul(x, field.fe_mul(y, z))
    assert field.fe_mul(x, field.fe_add(y, z)) == field.fe_add(
        field.fe_mul(x, y), field.fe_mul(x, z)
    )


@given(st.integers(1, M61 - 1))
def test_inverse_production(x):
    assert field.fe_mul(x, field.fe_inv(x)) == 1


def test_rand_element_in_range():
    rng = np.random.default_rng(0)
    vals = [field.rand_element(rng) for _ in range(200)]
    assert all(0 <= v < M61 for v in vals)
    nz = [field.rand_nonzero(rng, Z17) for _ in range(200)]
    assert all(1 <= v < Z17 for v in nz)


# -- vectorized Mersenne-61 path --------------------------------------------

_EDGES = np.array(
    [0, 1, 2, (1 << 31) - 1, 1 << 31, (1 << 31) + 1, M61 - 2, M61 - 1],
    dtype=np.uint64,
)


def test_m61_mul_matches_scalar_on_edges():
    a = np.repeat(_EDGES, len(_EDGES))
    b = np.tile(_EDGES, len(_EDGES))
    got = field.m61_mul(a, b)
    for ai, bi, gi in zip(a.tolist(), b.tolist(), got.tolist()):
        assert gi == (ai * bi) % M61


def test_m61_ops_match_scalar_random():
    rng = np.random.default_rng(7)
    a = rng.integers(0, M61, 5000, dtype=np.uint64)
    b = rng.integers(0, M61, 5000, dtype=np.uint64)
    assert np.array_equal(field.m61_add(a, b), [(x + y) % M61 for x, y in zip(a.tolist(), b.tolist())])
    assert np.array_equal(field.m61_sub(a, b), [(x - y) % M61 for x, y in zip(a.tolist(), b.tolist())])
    assert np.array_equal(field.m61_mul(a, b), [(x * y) % M61 for x, y in zip(a.tolist(), b.tolist())])


def test_m61_sum_matches_python_sum():
    rng = np.random.default_rng(3)
    a = rng.integers(0, M61, (7, 1001), dtype=np.uint64)
    got = field.m61_sum(a, axis=1)
    want = [sum(row) % M61 for row in a.tolist()]
    assert got.tolist() == want


def test_m61_pow_matches_scalar():
    rng = np.random.default_rng(11)
    a = rng.integers(0, M61, 64, dtype=np.uint64)
    for e in (0, 1, 2, 3, M61 - 2):
        got = field.m61_pow(a, e)
        assert got.tolist() == [pow(x, e, M61) for x in a.tolist()]


# -- bitstrings ---------------------------------------------------------------


def test_xor_example():
    x = BitString(0b0010, 4)
    y = BitString(0b1011, 4)
    assert (x ^ y) == BitString(0b1001, 4)


def test_xor_length_mismatch():
    with pytest.raises(LengthError):
        BitString(0, 4) ^ BitString(0, 5)


def test_msb_first_packing():
    # 0xA0 = 1010 0000; the first four bits are 1010.
    b = BitString.from_bytes(b"\xa0", 4)
    assert b.value == 0b1010
    assert [b.bit(i) for i in range(4)] == [1, 0, 1, 0]
    assert b.to_bytes() == b"\xa0"


def test_non_byte_multiple_lengths_round_trip():
    for length in (1, 3, 7, 9, 13, 17, 725):
        rng = np.random.default_rng(length)
        b = BitString.random(length, rng)
        assert len(b) == length
        assert BitString.from_bytes(b.to_bytes(), length) == b


def test_extract_and_split():
    b = BitString(0b10110001101, 11)
    assert b.extract(0, 3) == 0b101
    assert b.extract(3, 4) == 0b1000
    assert b.extract(8, 3) == 0b101
    with pytest.raises(IndexError):
        b.extract(9, 3)
    c = BitString(0b101100011010, 12)
    assert c.split_fields(3) == [0b101, 0b100, 0b011, 0b010]
    assert c.split_fields(4) == [0b1011, 0b0001, 0b1010]
    with pytest.raises(LengthError):
        c.split_fields(5)


def test_value_must_fit_length():
    with pytest.raises(ValueError):
        BitString(0b100, 2)


def test_bitstring_immutable_and_hashable():
    b = BitString(5, 4)
    with pytest.raises(AttributeError):
        b.value = 6
    assert len({b, BitString(5, 4), BitString(5, 5)}) == 2


bits_strategy = st.integers(1, 200).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(0, 2**n - 1), st.integers(0, 2**n - 1), st.integers(0, 2**n - 1))
)


@given(bits_strategy)
def test_xor_group_properties(args):
    n, xv, yv, zv = args
    x, y, z = BitString(xv, n), BitString(yv, n), BitString(zv, n)
    zero = BitString.zeros(n)
    assert x ^ y == y ^ x
    assert (x ^ y) ^ z == x ^ (y ^ z)
    assert x ^ zero == x
    assert x ^ x == zero
    assert field.xor(x, y) == x ^ y


@given(st.integers(1, 300))
def test_split_fields_reassembles(width_seed):
    rng = np.random.default_rng(width_seed)
    width = int(rng.integers(1, 24))
    count = int(rng.integers(1, 40))
    b = BitString.random(width * count, rng)
    parts = b.split_fields(width)
    assert len(parts) == count
    acc = 0
    for part in parts:
        acc = (acc << width) | part
    assert acc == b.value
    # extract agrees with split
    for i, part in enumerate(parts):
        assert b.extract(i * width, width) == part
