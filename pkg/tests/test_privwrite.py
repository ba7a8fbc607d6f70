"""Private-write layer tests.

Correctness is checked against the obvious oracle: the XOR of every party's
full-database expansion must equal the one-hot write image, everywhere. Sizes
are checked bit-exactly against the closed-form formula and frozen reference
values computed by hand from that formula.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covercount import privwrite as pw
from covercount.errors import ParseError
from covercount.field import BitString


class QueuedBytesRng:
    """Stand-in for a Generator that hands out pre-chosen byte strings."""

    def __init__(self, chunks):
        self._chunks = list(chunks)

    def bytes(self, n):
        chunk = self._chunks.pop(0)
        assert len(chunk) == n
        return chunk


def xor_all(shares):
    acc = shares[0]
    for s in shares[1:]:
        acc = acc ^ s
    return acc


# -- PRG ---------------------------------------------------------------------


def test_prg_deterministic_and_truncated():
    seed = bytes(range(16))
    a = pw.prg_expand(seed, 725)
    assert a == pw.prg_expand(seed, 725)
    assert len(a) == 725
    # a longer expansion of the same seed starts with the shorter one
    b = pw.prg_expand(seed, 1024)
    assert b.extract(0, 725) == a.value


def test_prg_distinct_seeds_disagree():
    rng = np.random.default_rng(1)
    outs = {pw.prg_expand(rng.bytes(16), 128).value for _ in range(200)}
    assert len(outs) == 200


def test_prg_rejects_bad_seed_length():
    with pytest.raises(ValueError):
        pw.prg_expand(b"\x00" * 8, 64)


# -- information-theoretic scheme ---------------------------------------------


def test_unit_write_places_message():
    assert pw.unit_write(2, 1, 4, 1) == BitString(0b0010, 4)
    assert pw.unit_write(0, 0b101, 4, 3) == BitString(0b101_000_000_000, 12)
    with pytest.raises(ValueError):
        pw.unit_write(4, 0, 4, 1)
    with pytest.raises(ValueError):
        pw.unit_write(0, 2, 4, 1)


def test_it_gen_two_party_worked_example():
    # slot 2 of 4, one-bit messages: e = 0010. With the first share rigged to
    # 1011 the second must be 1001.
    rng = QueuedBytesRng([b"\xb0"])  # 1011 packed MSB-first in a nibble
    shares = pw.it_gen(pw.PointFunction(2, 1), n=2, m=1, parties=2, rng=rng)
    assert shares[0] == BitString(0b1011, 4)
    assert shares[1] == BitString(0b1001, 4)


@pytest.mark.parametrize("parties", [2, 3, 4, 5])
def test_it_gen_reconstructs(parties):
    rng = np.random.default_rng(parties)
    for _ in range(20):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 9))
        a = int(rng.integers(0, 1 << n))
        b = int(rng.integers(0, 1 << m))
        shares = pw.it_gen(pw.PointFunction(a, b), n, m, parties, rng)
        assert len(shares) == parties
        assert xor_all(shares) == pw.unit_write(a, b, 1 << n, m)


def test_it_gen_null_write_reconstructs_zero():
    rng = np.random.default_rng(9)
    shares = pw.it_gen(pw.PointFunction(3, 0), 4, 8, 3, rng)
    assert xor_all(shares) == BitString.zeros(16 * 8)


def test_it_accumulate_order_independent():
    rng = np.random.default_rng(5)
    writes = [BitString.random(64, rng) for _ in range(6)]
    acc1 = BitString.zeros(64)
    for w in writes:
        acc1 = pw.it_accumulate(acc1, w)
    acc2 = BitString.zeros(64)
    for w in reversed(writes):
        acc2 = pw.it_accumulate(acc2, w)
    assert acc1 == acc2
    # identical writes cancel
    assert pw.it_accumulate(acc1, acc1) == BitString.zeros(64)


# -- parameter geometry --------------------------------------------------------


def test_default_mu_is_ceil_sqrt():
    # ceil(2^(n/2) * 2^((p-1)/2)) = ceil(sqrt(2^(n+p-1))): the smallest
    # integer whose square covers 2^(n+p-1). Checked by definition to avoid
    # floating-point artifacts.
    for n in range(1, 24):
        for p in range(2, 6):
            t = 1 << (n + p - 1)
            mu = pw.default_mu(n, p)
            assert mu * mu >= t, (n, p)
            assert (mu - 1) * (mu - 1) < t, (n, p)


def test_reference_geometry_frozen():
    # p=3, n=17: mu = ceil(sqrt(2^19)) = 725, nu = ceil(2^17 / 725) = 181
    params = pw.FssParams(n=17, parties=3, m=1)
    assert (params.mu, params.nu) == (725, 181)
    assert params.mu * params.nu >= params.domain_size


def test_override_must_cover_database():
    params = pw.FssParams(n=6, parties=2, m=1, mu=4)
    assert params.nu == 16
    params = pw.FssParams(n=6, parties=2, m=1, mu=16, nu=4)
    assert (params.mu, params.nu) == (16, 4)
    with pytest.raises(ValueError):
        pw.FssParams(n=6, parties=2, m=1, mu=16, nu=3)


def test_params_validation():
    with pytest.raises(ValueError):
        pw.FssParams(n=0, parties=2, m=1)
    with pytest.raises(ValueError):
        pw.FssParams(n=4, parties=1, m=1)
    with pytest.raises(ValueError):
        pw.FssParams(n=4, parties=2, m=0)
    with pytest.raises(ValueError):
        pw.FssParams(n=4, parties=2, m=1, lam=256)


# -- compressed scheme ---------------------------------------------------------


def full_reconstruction(keys):
    return xor_all([pw.fss_evaluate_share(k) for k in keys])


def test_fss_small_worked_case():
    params = pw.FssParams(n=2, parties=2, m=1)
    rng = np.random.default_rng(0)
    keys = pw.fss_gen(pw.PointFunction(1, 1), params, rng)
    assert full_reconstruction(keys) == BitString(0b0100, 4)


def test_fss_zero_message_reconstructs_zero():
    params = pw.FssParams(n=4, parties=3, m=4)
    rng = np.random.default_rng(2)
    keys = pw.fss_gen(pw.PointFunction(7, 0), params, rng)
    assert full_reconstruction(keys) == BitString.zeros(16 * 4)


@pytest.mark.parametrize("parties", [2, 3, 4, 5])
def test_fss_random_points_reconstruct(parties):
    rng = np.random.default_rng(100 + parties)
    for _ in range(15):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 9))
        params = pw.FssParams(n=n, parties=parties, m=m)
        a = int(rng.integers(0, params.domain_size))
        b = int(rng.integers(0, 1 << m))
        keys = pw.fss_gen(pw.PointFunction(a, b), params, rng)
        assert full_reconstruction(keys) == pw.unit_write(a, b, params.domain_size, m)


def test_fss_with_overridden_geometry():
    rng = np.random.default_rng(42)
    for mu in (2, 8, 64):
        params = pw.FssParams(n=6, parties=3, m=2, mu=mu)
        keys = pw.fss_gen(pw.PointFunction(37, 3), params, rng)
        assert full_reconstruction(keys) == pw.unit_write(37, 3, 64, 2)


def test_fss_single_row_geometry():
    # nu == 1 makes the only row the written one
    params = pw.FssParams(n=4, parties=2, m=1, mu=16)
    assert params.nu == 1
    rng = np.random.default_rng(8)
    keys = pw.fss_gen(pw.PointFunction(11, 1), params, rng)
    assert full_reconstruction(keys) == pw.unit_write(11, 1, 16, 1)


def test_fss_row_xor_is_one_hot_only_at_written_row():
    params = pw.FssParams(n=6, parties=3, m=3)
    rng = np.random.default_rng(17)
    a, b = 22, 5
    keys = pw.fss_gen(pw.PointFunction(a, b), params, rng)
    gamma, delta = divmod(a, params.mu)
    for row in range(params.nu):
        combined = xor_all([pw.fss_eval_row(k, row) for k in keys])
        if row == gamma:
            assert combined == pw.unit_write(delta, b, params.mu, params.m)
        else:
            assert combined == BitString.zeros(params.row_bits)


def test_fss_unheld_row_evaluates_to_zero():
    # with p=2 some rows assign no seeds at all to one party; such a row's
    # evaluation is the zero string by construction
    params = pw.FssParams(n=6, parties=2, m=1)
    rng = np.random.default_rng(3)
    keys = pw.fss_gen(pw.PointFunction(0, 1), params, rng)
    found = False
    for key in keys:
        for row in range(params.nu):
            if all(s == b"\x00" * 16 for s in key.sigma[row]):
                assert pw.fss_eval_row(key, row) == BitString.zeros(params.row_bits)
                found = True
    assert found, "expected at least one seedless (party, row) pair at p=2"


def test_fss_strict_subset_does_not_reconstruct():
    rng = np.random.default_rng(23)
    for parties in (2, 3, 4):
        params = pw.FssParams(n=6, parties=parties, m=4)
        a, b = 13, 9
        keys = pw.fss_gen(pw.PointFunction(a, b), params, rng)
        expected = pw.unit_write(a, b, params.domain_size, params.m)
        partial = xor_all([pw.fss_evaluate_share(k) for k in keys[:-1]])
        assert partial != expected


def test_fss_naive_matches_optimized():
    rng = np.random.default_rng(31)
    for parties in (2, 3):
        for n in (2, 3, 5, 7):
            params = pw.FssParams(n=n, parties=parties, m=3)
            a = int(rng.integers(0, params.domain_size))
            b = int(rng.integers(0, 8))
            keys = pw.fss_gen(pw.PointFunction(a, b), params, rng)
            for key in keys:
                share = pw.fss_evaluate_share(key)
                values = share.split_fields(params.m)
                for x in range(params.domain_size):
                    assert pw.fss_eval_naive(key, x) == values[x]


def test_fss_gen_validates_point():
    params = pw.FssParams(n=4, parties=2, m=2)
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        pw.fss_gen(pw.PointFunction(16, 0), params, rng)
    with pytest.raises(ValueError):
        pw.fss_gen(pw.PointFunction(0, 4), params, rng)


def test_it_and_fss_reconstruct_identical_databases():
    rng = np.random.default_rng(77)
    n, m, parties = 6, 5, 3
    params = pw.FssParams(n=n, parties=parties, m=m)
    writes = [
        (int(rng.integers(0, 1 << n)), int(rng.integers(0, 1 << m))) for _ in range(12)
    ]
    db_it = BitString.zeros((1 << n) * m)
    db_fss = BitString.zeros((1 << n) * m)
    for a, b in writes:
        for share in pw.it_gen(pw.PointFunction(a, b), n, m, parties, rng):
            db_it = pw.it_accumulate(db_it, share)
        for key in pw.fss_gen(pw.PointFunction(a, b), params, rng):
            db_fss = pw.it_accumulate(db_fss, pw.fss_evaluate_share(key))
    assert db_it == db_fss


def test_partial_coalition_bits_look_unbiased():
    """Regression tripwire, not a security proof.

    XOR of p-1 shares at an ordinary row equals the absent party's row
    expansion. Rows where the absent party holds no seeds expand to zero by
    construction, so the tally conditions on rows where it holds at least one
    seed; there each bit mixes a fresh PRG output and should be fair. Fixed
    seed keeps the check deterministic.
    """
    params = pw.FssParams(n=8, parties=3, m=1)
    rng = np.random.default_rng(20240817)
    total_bits = params.domain_size * params.m
    ones = np.zeros(total_bits)
    trials = np.zeros(total_bits)
    zero_seed = b"\x00" * 16
    for _ in range(300):
        a = int(rng.integers(0, params.domain_size))
        b = 1
        keys = pw.fss_gen(pw.PointFunction(a, b), params, rng)
        gamma = a // params.mu
        coalition = pw.fss_evaluate_share(keys[1]) ^ pw.fss_evaluate_share(keys[2])
        for row in range(params.nu):
            if row == gamma:
                continue
            if all(s == zero_seed for s in keys[0].sigma[row]):
                continue
            start = row * params.mu
            width = min(params.mu, total_bits - start)
            for i in range(width):
                trials[start + i] += 1
                ones[start + i] += coalition.bit(start + i)
    informative = trials >= 50
    assert informative.sum() > 200
    freq = ones[informative] / trials[informative]
    sigma = 0.5 / np.sqrt(trials[informative])
    assert np.all(np.abs(freq - 0.5) <= 4 * sigma)


# -- serialization --------------------------------------------------------------


def test_key_size_formula_frozen_reference():
    # p=3, n=17, m=1, 128-bit seeds:
    #   payload bits = 181*4*128 + 4*725 = 95,572
    #   serialized   = 16 + 181*4*16 + 4*91 = 11,964 bytes
    params = pw.FssParams(n=17, parties=3, m=1)
    assert pw.key_size_bits(params) == 95572
    assert pw.key_size_bytes(params) == 11964


def test_serialized_length_matches_formula_bit_exactly():
    rng = np.random.default_rng(4)
    for parties, n, m in [(2, 3, 1), (3, 6, 5), (4, 5, 3), (2, 9, 2)]:
        params = pw.FssParams(n=n, parties=parties, m=m)
        keys = pw.fss_gen(pw.PointFunction(1, 1), params, rng)
        blob = pw.key_serialize(keys[0])
        assert len(blob) == pw.key_size_bytes(params)
        sigma_bits = params.nu * params.seeds_per_row * params.lam
        word_bits = params.seeds_per_row * params.row_bits
        assert pw.key_size_bits(params) == sigma_bits + word_bits


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 8), st.integers(2, 4), st.integers(1, 8), st.integers(0, 2**32))
def test_serialize_round_trip(n, parties, m, seed):
    rng = np.random.default_rng(seed)
    params = pw.FssParams(n=n, parties=parties, m=m)
    a = int(rng.integers(0, params.domain_size))
    b = int(rng.integers(0, 1 << m))
    keys = pw.fss_gen(pw.PointFunction(a, b), params, rng)
    for key in keys:
        back = pw.key_deserialize(pw.key_serialize(key))
        assert back == key
        assert pw.fss_evaluate_share(back) == pw.fss_evaluate_share(key)


def test_deserialize_rejects_malformed():
    rng = np.random.default_rng(6)
    params = pw.FssParams(n=4, parties=2, m=2)
    blob = pw.key_serialize(pw.fss_gen(pw.PointFunction(3, 1), params, rng)[0])
    with pytest.raises(ParseError):
        pw.key_deserialize(blob[:10])
    with pytest.raises(ParseError):
        pw.key_deserialize(blob + b"\x00")
    with pytest.raises(ParseError):
        pw.key_deserialize(blob[:-1])
    bad_version = bytes([99]) + blob[1:]
    with pytest.raises(ParseError):
        pw.key_deserialize(bad_version)
    # header claiming rows that cannot cover the database
    bad_geometry = bytearray(blob)
    bad_geometry[8:12] = (1).to_bytes(4, "little")  # mu = 1
    bad_geometry[12:16] = (1).to_bytes(4, "little")  # nu = 1
    with pytest.raises(ParseError):
        pw.key_deserialize(bytes(bad_geometry))
    bad_party = bytearray(blob)
    bad_party[1] = 7
    with pytest.raises(ParseError):
        pw.key_deserialize(bytes(bad_party))
