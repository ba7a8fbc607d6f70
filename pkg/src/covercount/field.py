"""Prime-field scalars and packed bitstrings.

Field elements are plain ints in ``[0, modulus)`` and the operations are pure
functions, so callers can swap in a small test modulus without touching any
state. The default modulus is the Mersenne prime 2^61 - 1: elements fit in a
machine word, products fit in two, and reduction is cheap.

``BitString`` is the XOR-group carrier used by the private-write layer. Bits
are packed most-significant-bit first within each byte and the bit length is
carried explicitly, so values that are not byte multiples stay well defined.

Everything here is simulation-grade: no constant-time guarantees are made.
"""

from __future__ import annotations

import numpy as np

from .errors import LengthError

MODULUS = (1 << 61) - 1

# Alias for readability in signatures; field elements are canonical ints.
FieldElement = int


def fe_add(x: int, y: int, modulus: int = MODULUS) -> int:
    return (x + y) % modulus


def fe_sub(x: int, y: int, modulus: int = MODULUS) -> int:
    return (x - y) % modulus


def fe_mul(x: int, y: int, modulus: int = MODULUS) -> int:
    return (x * y) % modulus


def fe_inv(x: int, modulus: int = MODULUS) -> int:
    """Multiplicative inverse; raises ZeroDivisionError on zero input."""
    if x % modulus == 0:
        raise ZeroDivisionError("zero has no multiplicative inverse")
    return pow(x, -1, modulus)


def fe_pow(x: int, e: int, modulus: int = MODULUS) -> int:
    """Exponentiation with a non-negative integer exponent."""
    if e < 0:
        raise ValueError("exponent must be non-negative")
    return pow(x, e, modulus)


def rand_element(rng: np.random.Generator, modulus: int = MODULUS) -> int:
    """Uniform element of [0, modulus)."""
    return int(rng.integers(0, modulus, dtype=np.uint64))


def rand_nonzero(rng: np.random.Generator, modulus: int = MODULUS) -> int:
    """Uniform element of [1, modulus)."""
    return int(rng.integers(1, modulus, dtype=np.uint64))


# ---------------------------------------------------------------------------
# Vectorized arithmetic mod 2^61 - 1 on uint64 arrays.
#
# Only the default modulus gets a fast path; the epoch harness uses it for
# owner-side blinding where per-element Python calls would dominate. Products
# of 61-bit operands need 122 bits, so multiplication splits each operand at
# bit 31 and reduces the partial products with the Mersenne identity
# 2^61 = 1 (mod 2^61 - 1). All intermediate sums stay below 2^63.
# ---------------------------------------------------------------------------

_M61 = np.uint64(MODULUS)
_MASK31 = np.uint64((1 << 31) - 1)
_MASK30 = np.uint64((1 << 30) - 1)
_S1 = np.uint64(1)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_S61 = np.uint64(61)


def m61_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    t = np.asarray(a, np.uint64) + np.asarray(b, np.uint64)
    return np.where(t >= _M61, t - _M61, t)


def m61_sub(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, np.uint64)
    b = np.asarray(b, np.uint64)
    return np.where(a >= b, a - b, a + (_M61 - b))


def m61_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, np.uint64)
    b = np.asarray(b, np.uint64)
    if a.shape != b.shape:
        a, b = np.broadcast_arrays(a, b)
    a1 = a >> _S31
    a0 = a & _MASK31
    b1 = b >> _S31
    b0 = b & _MASK31
    hi = a1 * b1                   # < 2^60, carries factor 2^62 = 2 (mod p)
    mid = a1 * b0                  # mid parts carry factor 2^31
    np.multiply(a0, b1, out=a1)
    mid += a1                      # < 2^62
    np.multiply(a0, b0, out=b1)    # lo < 2^62
    np.left_shift(hi, _S1, out=hi)
    np.right_shift(mid, _S30, out=a0)
    hi += a0                       # 2*hi + (mid >> 30)
    mid &= _MASK30
    np.left_shift(mid, _S31, out=mid)
    hi += mid                      # + (mid & mask30) << 31
    np.right_shift(b1, _S61, out=a0)
    hi += a0
    b1 &= _M61
    hi += b1                       # + folded lo; total < 2^63
    np.right_shift(hi, _S61, out=a0)
    hi &= _M61
    hi += a0
    np.right_shift(hi, _S61, out=a0)
    hi &= _M61
    hi += a0
    np.subtract(hi, _M61, out=hi, where=hi >= _M61)
    return hi


def m61_sum(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Reduce-sum along an axis in radix-8 groups.

    Eight canonical elements (each below 2^61) sum to under 2^64, so every
    level is one plain uint64 sum over contiguous groups followed by a single
    fold and conditional subtract back into canonical range.
    """
    a = np.moveaxis(np.asarray(a, np.uint64), axis, -1)
    while a.shape[-1] > 1:
        k = a.shape[-1]
        pad = (-k) % 8
        if pad:
            zeros = np.zeros(a.shape[:-1] + (pad,), np.uint64)
            a = np.concatenate([a, zeros], axis=-1)
            k += pad
        a = a.reshape(a.shape[:-1] + (k // 8, 8)).sum(axis=-1, dtype=np.uint64)
        a = (a >> np.uint64(61)) + (a & _M61)
        a = np.where(a >= _M61, a - _M61, a)
    return a[..., 0]


def m61_pow(a: np.ndarray, e: int) -> np.ndarray:
    """Elementwise power with a scalar non-negative exponent."""
    if e < 0:
        raise ValueError("exponent must be non-negative")
    a = np.asarray(a, np.uint64)
    result = np.ones_like(a)
    base = a.copy()
    while e:
        if e & 1:
            result = m61_mul(result, base)
        base = m61_mul(base, base)
        e >>= 1
    return result


# ---------------------------------------------------------------------------
# Bitstrings
# ---------------------------------------------------------------------------


class BitString:
    """Immutable bit sequence with an explicit length.

    Position 0 is the most significant bit of the packed form: bit ``i`` lives
    in byte ``i // 8`` at in-byte position ``7 - i % 8``. Internally the bits
    are a single int so XOR runs at native speed.
    """

    __slots__ = ("value", "length")

    def __init__(self, value: int, length: int):
        if length < 0:
            raise ValueError("length must be non-negative")
        if value < 0 or value >> length:
            raise ValueError("value does not fit in the stated length")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "length", length)

    def __setattr__(self, name, _value):
        raise AttributeError(f"BitString is immutable ({name})")

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls(0, length)

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "BitString":
        nbytes = (length + 7) // 8
        if nbytes == 0:
            return cls(0, 0)
        raw = rng.bytes(nbytes)
        return cls(int.from_bytes(raw, "big") >> (nbytes * 8 - length), length)

    @classmethod
    def from_bytes(cls, data: bytes, length: int) -> "BitString":
        nbytes = (length + 7) // 8
        if len(data) != nbytes:
            raise LengthError(f"expected {nbytes} bytes for {length} bits, got {len(data)}")
        return cls(int.from_bytes(data, "big") >> (nbytes * 8 - length), length)

    def to_bytes(self) -> bytes:
        nbytes = (self.length + 7) // 8
        return (self.value << (nbytes * 8 - self.length)).to_bytes(nbytes, "big")

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self.length == other.length and self.value == other.value

    def __hash__(self) -> int:
        return hash((self.value, self.length))

    def __xor__(self, other: "BitString") -> "BitString":
        if not isinstance(other, BitString):
            return NotImplemented
        if self.length != other.length:
            raise LengthError(f"cannot xor {self.length} bits with {other.length} bits")
        return BitString(self.value ^ other.value, self.length)

    def bit(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError("bit index out of range")
        return (self.value >> (self.length - 1 - i)) & 1

    def extract(self, offset: int, width: int) -> int:
        """Int value of bits [offset, offset + width), MSB first."""
        if width < 0 or offset < 0 or offset + width > self.length:
            raise IndexError("extract window out of range")
        return (self.value >> (self.length - offset - width)) & ((1 << width) - 1)

    def split_fields(self, width: int) -> list[int]:
        """Split into consecutive ``width``-bit ints; length must divide evenly."""
        if width <= 0:
            raise ValueError("width must be positive")
        if self.length % width:
            raise LengthError(f"{self.length} bits do not split into {width}-bit fields")
        count = self.length // width
        out: list[int] = []
        acc = 0
        have = 0
        mask = (1 << width) - 1
        for byte in self.to_bytes():
            acc = (acc << 8) | byte
            have += 8
            while have >= width and len(out) < count:
                have -= width
                out.append((acc >> have) & mask)
                acc &= (1 << have) - 1
        return out

    def to01(self) -> str:
        return format(self.value, f"0{self.length}b") if self.length else ""

    def __repr__(self) -> str:
        if self.length <= 64:
            return f"BitString({self.to01()!r})"
        return f"BitString(<{self.length} bits>)"


def xor(x: BitString, y: BitString) -> BitString:
    """XOR of two equal-length bitstrings."""
    return x ^ y
