"""Blinded unit-vector verification of private writes.

A write submission carries, besides the key material, additive shares of
the slot-indicator vector u: all zeros when the owner abstains, a single
one at the written slot otherwise. The parties must confirm that u is such
a 0/1 unit vector without learning it. The owner samples a structured
blinding matrix R (p rows, one column per slot) and sends party i only the
p-element product B_i = R . V_i of its share. Summing the published B_i
yields s = R . u, and the structure of R makes the unit-vector property
checkable from s alone.

Three structures are supported, differing in how the rows are tied:

* ``square``: row j holds the elementwise j-th powers of row one. A unit
  vector surfaces one column, so s_j = r^j and the check is
  s_1^j == s_j for j = 2..p. The all-zero u also passes (every s_j is
  zero), which is exactly the abstention write, so the epoch pipeline
  uses this kind. An entry of 2 fails because (2r)^2 = 4r^2 != 2r^2.
* ``product``: the last row is the column-wise product of the others; the
  check multiplies s_1..s_{p-1} and compares with s_p. The all-zero
  vector passes here too (both sides are zero). With p = 2 the two rows
  coincide and the check accepts everything, so it only separates
  anything for p >= 3.
* ``inverse``: every column multiplies to one; the check is
  prod(s) == 1. This is the only kind that rejects the all-zero vector.

Whoever calls :func:`make_blinding` decides who samples R. This module
implements owner-sampled blinding, which is the cheapest arrangement; a
dealer that distrusts owners can sample R itself and pass it in, nothing
else changes. Free matrix entries are uniform nonzero (a zero entry would
blank the check at that column).

Only 0/1 indicator vectors are verifiable this way: the square identity
u^2 == u holds exactly for 0 and 1, which is the point of the check. The
multi-bit payload of a write travels inside the key material and is not
covered here.

The scalar functions accept an alternate ``modulus`` so small-field
exhaustive tests can sweep every matrix; the ``*_batch`` functions are
fixed to the production modulus and operate on uint64 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, IncompleteSubmissionError
from .field import (
    MODULUS,
    fe_inv,
    fe_mul,
    fe_pow,
    m61_add,
    m61_mul,
    m61_pow,
    m61_sub,
    m61_sum,
    rand_element,
    rand_nonzero,
)

KINDS = ("square", "product", "inverse")


@dataclass(frozen=True)
class BlindingMatrix:
    """p x n matrix tying its rows per the kind's column constraint."""

    kind: str
    entries: tuple[tuple[int, ...], ...]

    @property
    def parties(self) -> int:
        return len(self.entries)

    @property
    def columns(self) -> int:
        return len(self.entries[0])


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ValueError(f"unknown blinding kind {kind!r}")


def additive_share(
    u_hat: Sequence[int],
    parties: int,
    rng: np.random.Generator,
    modulus: int = MODULUS,
) -> list[tuple[int, ...]]:
    """Split a vector into ``parties`` additive shares summing to it."""
    if parties < 1:
        raise ValueError("parties must be at least 1")
    u = [int(x) % modulus for x in u_hat]
    shares = [
        tuple(rand_element(rng, modulus) for _ in u) for _ in range(parties - 1)
    ]
    last = list(u)
    for share in shares:
        for i, x in enumerate(share):
            last[i] = (last[i] - x) % modulus
    shares.append(tuple(last))
    return shares


def make_blinding(
    kind: str,
    columns: int,
    parties: int,
    rng: np.random.Generator,
    modulus: int = MODULUS,
) -> BlindingMatrix:
    """Sample a blinding matrix whose rows satisfy the kind's constraint."""
    _check_kind(kind)
    if parties < 2:
        raise ValueError("parties must be at least 2")
    if columns < 1:
        raise ValueError("columns must be at least 1")
    if kind == "square":
        base = [rand_nonzero(rng, modulus) for _ in range(columns)]
        rows = [tuple(base)]
        prev = base
        for _ in range(parties - 1):
            prev = [fe_mul(x, r, modulus) for x, r in zip(prev, base)]
            rows.append(tuple(prev))
        return BlindingMatrix(kind, tuple(rows))
    free = [
        tuple(rand_nonzero(rng, modulus) for _ in range(columns))
        for _ in range(parties - 1)
    ]
    prod = [1] * columns
    for row in free:
        for i, x in enumerate(row):
            prod[i] = fe_mul(prod[i], x, modulus)
    if kind == "product":
        last = tuple(prod)
    else:
        last = tuple(fe_inv(x, modulus) for x in prod)
    return BlindingMatrix(kind, tuple(free) + (last,))


def blind(
    matrix: BlindingMatrix, share: Sequence[int], modulus: int = MODULUS
) -> tuple[int, ...]:
    """One party's public view: each matrix row dotted with its share."""
    if len(share) != matrix.columns:
        raise DimensionError(
            f"share has {len(share)} entries, matrix has {matrix.columns} columns"
        )
    return tuple(
        sum(r * int(x) for r, x in zip(row, share)) % modulus
        for row in matrix.entries
    )


def aggregate(
    blinded: Iterable[Sequence[int]], modulus: int = MODULUS
) -> tuple[int, ...]:
    """Row-wise sum of the parties' blinded shares, i.e. R . u."""
    rows: list[int] | None = None
    for share in blinded:
        if rows is None:
            rows = [int(x) % modulus for x in share]
        elif len(share) != len(rows):
            raise DimensionError("blinded shares disagree on row count")
        else:
            for j, x in enumerate(share):
                rows[j] = (rows[j] + int(x)) % modulus
    if rows is None:
        raise IncompleteSubmissionError("no blinded shares to aggregate")
    return tuple(rows)


def check_square(s: Sequence[int], modulus: int = MODULUS) -> bool:
    return all(fe_pow(s[0], j + 1, modulus) == s[j] % modulus for j in range(1, len(s)))


def check_product(s: Sequence[int], modulus: int = MODULUS) -> bool:
    prod = 1
    for x in s[:-1]:
        prod = fe_mul(prod, int(x), modulus)
    return prod == s[-1] % modulus


def check_inverse(s: Sequence[int], modulus: int = MODULUS) -> bool:
    prod = 1
    for x in s:
        prod = fe_mul(prod, int(x), modulus)
    return prod == 1


CHECKS = {"square": check_square, "product": check_product, "inverse": check_inverse}


def verify_owner(
    blinded: Sequence[Sequence[int] | None],
    kind: str,
    modulus: int = MODULUS,
) -> bool:
    """Aggregate one owner's blinded shares and run the kind's check.

    A rejected owner is simply excluded from the epoch; raising is reserved
    for malformed submissions (a party that never sent its share).
    """
    _check_kind(kind)
    shares = list(blinded)
    if not shares or any(share is None for share in shares):
        raise IncompleteSubmissionError("missing a party's blinded share")
    if any(len(share) != len(shares) for share in shares):
        raise DimensionError("expected one row per party in each blinded share")
    return CHECKS[kind](aggregate(shares, modulus), modulus)


# ---------------------------------------------------------------------------
# Batched variants for the epoch pipeline. Layouts: indicator vectors are
# (owners, columns); additive shares are (parties, owners, columns); one
# party's blinded output is (owners, parties).
# ---------------------------------------------------------------------------


def additive_share_batch(
    u_hats: np.ndarray, parties: int, rng: np.random.Generator
) -> np.ndarray:
    if parties < 1:
        raise ValueError("parties must be at least 1")
    u = np.asarray(u_hats, np.uint64)
    if u.ndim != 2:
        raise DimensionError("expected an (owners, columns) array")
    shares = rng.integers(0, MODULUS, size=(parties - 1, *u.shape), dtype=np.uint64)
    last = u
    for j in range(parties - 1):
        last = m61_sub(last, shares[j])
    return np.concatenate([shares, last[None]], axis=0)


def make_blinding_batch(
    kind: str, columns: int, parties: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Sample ``count`` independent matrices as a (count, parties, columns) array."""
    _check_kind(kind)
    if parties < 2:
        raise ValueError("parties must be at least 2")
    out = np.empty((count, parties, columns), np.uint64)
    if kind == "square":
        base = rng.integers(1, MODULUS, size=(count, columns), dtype=np.uint64)
        out[:, 0] = base
        for j in range(1, parties):
            out[:, j] = m61_mul(out[:, j - 1], base)
        return out
    free = rng.integers(1, MODULUS, size=(count, parties - 1, columns), dtype=np.uint64)
    out[:, :-1] = free
    prod = free[:, 0].copy()
    for j in range(1, parties - 1):
        prod = m61_mul(prod, free[:, j])
    if kind == "product":
        out[:, -1] = prod
    else:
        out[:, -1] = m61_pow(prod, MODULUS - 2)
    return out


def blind_batch(matrices: np.ndarray, shares: np.ndarray) -> np.ndarray:
    """Blind one party's share batch: (count, parties, columns) x (count, columns)."""
    if matrices.shape[0] != shares.shape[0] or matrices.shape[2] != shares.shape[1]:
        raise DimensionError("matrix and share batches disagree on shape")
    count, parties, _ = matrices.shape
    out = np.empty((count, parties), np.uint64)
    for j in range(parties):
        out[:, j] = m61_sum(m61_mul(matrices[:, j, :], shares), axis=-1)
    return out


def blind_square_batch(base: np.ndarray, shares: np.ndarray, parties: int) -> np.ndarray:
    """Blind against square-kind matrices given only their base rows.

    Row j of a square matrix is the elementwise j-th power of the base row,
    so the dot products can reuse a running product instead of materializing
    the full (count, parties, columns) matrix stack. Equivalent to
    ``blind_batch`` on the expanded matrices.
    """
    if base.shape != shares.shape:
        raise DimensionError("base rows and shares disagree on shape")
    out = np.empty((base.shape[0], parties), np.uint64)
    acc = shares
    for j in range(parties):
        acc = m61_mul(acc, base)
        out[:, j] = m61_sum(acc, axis=-1)
    return out


def aggregate_batch(blinded: Sequence[np.ndarray]) -> np.ndarray:
    total = np.asarray(blinded[0], np.uint64)
    for share in blinded[1:]:
        total = m61_add(total, share)
    return total


def check_batch(aggregates: np.ndarray, kind: str) -> np.ndarray:
    """Vectorized accept/reject over (owners, parties) aggregate rows."""
    _check_kind(kind)
    s = np.asarray(aggregates, np.uint64)
    parties = s.shape[1]
    if kind == "square":
        ok = np.ones(s.shape[0], bool)
        power = s[:, 0]
        for j in range(1, parties):
            power = m61_mul(power, s[:, 0])
            ok &= power == s[:, j]
        return ok
    prod = s[:, 0]
    for j in range(1, parties - 1):
        prod = m61_mul(prod, s[:, j])
    if kind == "product":
        return prod == s[:, -1]
    return m61_mul(prod, s[:, -1]) == 1
