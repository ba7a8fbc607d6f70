"""Epoch simulation tying the layers together.

One epoch runs the full collection round: owners privatize their values,
encode every claimed value of every round as a non-attributable database
write, aggregators verify the write shape, accumulate, exchange and
reconstruct the round databases, filter slots by checksum, count IDs, and
feed the counts to the mechanism's estimator.

Databases are anonymous mailboxes: a write XORs ``ID || checksum`` into a
uniformly chosen slot. Counting scans the reconstructed slots; two writes
landing on the same slot XOR into garbage that the checksum rejects, which
is surfaced as ``collision_drops`` rather than silently miscounted. Owners
with nothing to claim in a round still submit a null write (message zero),
so the traffic an aggregator sees is the same whether an owner answered or
abstained. Both rounds of an owner's writes travel in a single submission,
and only the first submission per owner counts in an epoch.

Determinism: all randomness inside :func:`run_epoch` derives from
``config.master_seed`` through four named child streams (privatize, slots,
key material, verification). The crypto-free mode consumes the first two
streams identically and skips the other two, so its reconstructed
databases, and therefore counts and estimates, are bit-identical to the
full run; it exists to make large sweeps affordable.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from . import mechanisms as mech
from . import verify
from .errors import (
    ConfigError,
    PopulationSpecError,
    ProtocolAbortError,
)
from .field import BitString
from .privwrite import FssKey, FssParams, PointFunction, fss_evaluate_share, fss_gen

MechanismParams = Union[
    mech.RrParams,
    mech.TwoRoundBinaryParams,
    mech.TwoRoundMultiParams,
    mech.CalibratedParams,
]

_CHUNK_OWNERS = 256
_ABSENT = -1


@dataclass(frozen=True)
class EpochConfig:
    """Static parameters of one collection round.

    The database geometry comes from ``fss`` (``2**fss.n`` slots whose width
    is ``fss.m`` bits) and must leave room for ``id_bits`` plus the checksum.
    ``domain`` lists the claimable value IDs for the multi-value mechanism;
    the binary mechanisms write ID 1 for a Yes.
    """

    parties: int
    k_threshold: int
    fss: FssParams
    mech: MechanismParams
    id_bits: int
    checksum_bits: int = 16
    domain: tuple[int, ...] | None = None
    blinding_kind: str = "square"
    epoch_id: int = 0
    master_seed: int = 0

    def __post_init__(self):
        if self.parties < 2:
            raise ConfigError("at least two aggregation parties are required")
        if self.parties != self.fss.parties:
            raise ConfigError("config parties and key parties disagree")
        if self.k_threshold < 2:
            raise ConfigError("release threshold must be at least 2")
        if self.id_bits < 1:
            raise ConfigError("id_bits must be positive")
        if not 1 <= self.checksum_bits <= 32:
            raise ConfigError("checksum_bits must be in [1, 32]")
        if self.fss.m != self.id_bits + self.checksum_bits:
            raise ConfigError(
                f"slot width {self.fss.m} != id_bits {self.id_bits} "
                f"+ checksum_bits {self.checksum_bits}"
            )
        if self.blinding_kind not in verify.KINDS:
            raise ConfigError(f"unknown blinding kind {self.blinding_kind!r}")
        if not 0 <= self.epoch_id < (1 << 64):
            raise ConfigError("epoch_id must fit in 64 bits")
        if isinstance(self.mech, mech.TwoRoundMultiParams):
            if not self.domain:
                raise ConfigError("the multi-value mechanism needs a domain")
            if len(set(self.domain)) != len(self.domain):
                raise ConfigError("domain values must be distinct")
            if any(not 0 <= v < (1 << self.id_bits) for v in self.domain):
                raise ConfigError("domain values must fit id_bits")
        elif self.domain is not None:
            raise ConfigError("domain is only meaningful for the multi mechanism")

    @property
    def db_slots(self) -> int:
        return self.fss.domain_size

    @property
    def message_bits(self) -> int:
        return self.id_bits + self.checksum_bits

    @property
    def rounds(self) -> int:
        return 1 if isinstance(self.mech, mech.RrParams) else 2

    @property
    def value_ids(self) -> tuple[int, ...]:
        if isinstance(self.mech, mech.TwoRoundMultiParams):
            return tuple(self.domain)
        return (1,)


def checksum(value_id: int, epoch_id: int, checksum_bits: int) -> int:
    """Truncated CRC-32 of the value ID and epoch, stored beside the ID."""
    crc = zlib.crc32(struct.pack("<IQ", value_id, epoch_id))
    return crc & ((1 << checksum_bits) - 1)


def encode_message(value_id: int, config: EpochConfig) -> int:
    if not 0 <= value_id < (1 << config.id_bits):
        raise ValueError("value ID does not fit id_bits")
    return (value_id << config.checksum_bits) | checksum(
        value_id, config.epoch_id, config.checksum_bits
    )


def count_values(
    slots: Sequence[int], id_bits: int, checksum_bits: int, epoch_id: int
) -> tuple[dict[int, int], int]:
    """Scan reconstructed slots into per-ID counts.

    All-zero slots are empty mailboxes. A nonzero slot whose checksum does
    not match its ID (the fate of colliding writes, less a 2^-c false-accept
    chance) is tallied in the returned drop count instead.
    """
    counts: dict[int, int] = {}
    drops = 0
    for value in slots:
        if value == 0:
            continue
        value_id = value >> checksum_bits
        if value & ((1 << checksum_bits) - 1) == checksum(
            value_id, epoch_id, checksum_bits
        ):
            counts[value_id] = counts.get(value_id, 0) + 1
        else:
            drops += 1
    return counts, drops


def reconstruct(
    party_accumulators: Sequence[BitString], message_bits: int
) -> list[int]:
    """XOR the parties' accumulated bitstrings and split into slot values."""
    if not party_accumulators:
        raise ProtocolAbortError("no party accumulators to combine")
    combined = party_accumulators[0]
    for acc in party_accumulators[1:]:
        if len(acc) != len(combined):
            raise ProtocolAbortError("party accumulators differ in length")
        combined = combined ^ acc
    return combined.split_fields(message_bits)


def generate_population(spec: dict, rng: np.random.Generator) -> np.ndarray:
    """Owner truth assignments from a population shape.

    ``{"total": N, "yes": Y}`` yields a 0/1 array with Y ones;
    ``{"total": N, "groups": {value: count, ...}}`` yields value IDs with
    the unassigned remainder marked absent (-1). Order is shuffled so that
    owner index carries no information.
    """
    if "total" not in spec:
        raise PopulationSpecError("population spec needs a total")
    total = int(spec["total"])
    if total < 1:
        raise PopulationSpecError("population must be nonempty")
    extra = set(spec) - {"total", "yes", "groups"}
    if extra:
        raise PopulationSpecError(f"unknown population keys {sorted(extra)}")
    if ("yes" in spec) == ("groups" in spec):
        raise PopulationSpecError("specify exactly one of 'yes' or 'groups'")
    if "yes" in spec:
        yes = int(spec["yes"])
        if not 0 <= yes <= total:
            raise PopulationSpecError("yes count must be within the total")
        truths = np.zeros(total, dtype=np.int64)
        truths[:yes] = 1
    else:
        groups = {int(v): int(c) for v, c in spec["groups"].items()}
        if any(c < 0 for c in groups.values()):
            raise PopulationSpecError("group counts must be non-negative")
        if any(v < 0 for v in groups):
            raise PopulationSpecError("group values must be non-negative")
        if sum(groups.values()) > total:
            raise PopulationSpecError("group counts exceed the total")
        truths = np.full(total, _ABSENT, dtype=np.int64)
        pos = 0
        for value in sorted(groups):
            truths[pos : pos + groups[value]] = value
            pos += groups[value]
    return rng.permutation(truths)


# ---------------------------------------------------------------------------
# Owner-side response planning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlannedWrite:
    """One database write: a claimed value at a fresh random slot, or a null
    write (``value_id`` None) standing in for an abstention."""

    owner_id: int
    round_index: int
    slot: int
    value_id: int | None


def _streams(master_seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(master_seed).spawn(4)
    names = ("privatize", "slots", "keys", "verify")
    return {name: np.random.default_rng(seq) for name, seq in zip(names, children)}


def _claims(
    truths: np.ndarray, config: EpochConfig, rng: np.random.Generator
) -> list[tuple[tuple[int, ...], ...]]:
    """Per owner, per round, the ordered value IDs the owner claims."""
    params = config.mech
    if isinstance(params, mech.RrParams):
        if not np.isin(truths, (0, 1)).all():
            raise PopulationSpecError("binary mechanisms need 0/1 truths")
        answers = mech.rr_privatize_population(truths, params, rng)
        return [((1,) if a else (),) for a in answers]
    if isinstance(params, mech.TwoRoundBinaryParams):
        if not np.isin(truths, (0, 1)).all():
            raise PopulationSpecError("binary mechanisms need 0/1 truths")
        rounds = mech.two_round_binary_population(truths, params, rng)
        return [
            ((1,) if r1 else (), (1,) if r2 else ())
            for r1, r2 in zip(rounds.round1, rounds.round2)
        ]
    if isinstance(params, mech.CalibratedParams):
        if not np.isin(truths, (0, 1)).all():
            raise PopulationSpecError("binary mechanisms need 0/1 truths")
        rounds = mech.calibrated_population(truths, params, rng)
        return [
            ((1,) if r1 else (), (1,) if r2 else ())
            for r1, r2 in zip(rounds.round1, rounds.round2)
        ]
    domain = config.value_ids
    ok = np.isin(truths, domain) | (truths == _ABSENT)
    if not ok.all():
        raise PopulationSpecError("truths must be domain values or absent")
    rounds = mech.two_round_multi_population(truths, list(domain), params, rng)
    out = []
    for i in range(len(truths)):
        r1 = tuple(v for j, v in enumerate(domain) if rounds.round1[i, j])
        r2 = tuple(v for j, v in enumerate(domain) if rounds.round2[i, j])
        out.append((r1, r2))
    return out


def _plan_writes(
    claims: list[tuple[tuple[int, ...], ...]],
    config: EpochConfig,
    rng: np.random.Generator,
) -> list[PlannedWrite]:
    writes = []
    n_slots = config.db_slots
    for owner_id, per_round in enumerate(claims):
        for round_index, values in enumerate(per_round):
            for value_id in values or (None,):
                slot = int(rng.integers(0, n_slots))
                writes.append(PlannedWrite(owner_id, round_index, slot, value_id))
    return writes


# ---------------------------------------------------------------------------
# Collection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubmissionChunk:
    """A batch of owners' submissions as they arrive at the aggregators.

    ``indicator_shares`` holds the additive shares of every write's slot
    indicator, ``(parties, writes, db_slots)``; ``blinding`` is either the
    square-kind base rows ``(writes, db_slots)`` or full matrices
    ``(writes, parties, db_slots)``. ``keys`` is one FSS key per party per
    write. A crypto-free chunk carries the planned writes only.
    """

    owner_ids: tuple[int, ...]
    writes: tuple[PlannedWrite, ...]
    keys: tuple[tuple[FssKey, ...], ...] | None
    indicator_shares: np.ndarray | None
    blinding: np.ndarray | None


@dataclass
class EpochDiagnostics:
    """Exact bookkeeping, for operators and tests; not part of the release."""

    participants: int = 0
    accepted: int = 0
    rejected_submissions: int = 0
    rejected_owner_ids: tuple[int, ...] = ()
    duplicate_submissions: int = 0
    writes_per_round: tuple[int, ...] = ()
    collision_drops: tuple[int, ...] = ()

    def as_dict(self) -> dict:
        return {
            "participants": self.participants,
            "accepted": self.accepted,
            "rejected_submissions": self.rejected_submissions,
            "rejected_owner_ids": list(self.rejected_owner_ids),
            "duplicate_submissions": self.duplicate_submissions,
            "writes_per_round": list(self.writes_per_round),
            "collision_drops": list(self.collision_drops),
        }


@dataclass
class EpochResult:
    """Outcome of one epoch. When ``halted`` the released section is empty:
    below the participation threshold nothing is published, though the
    diagnostics keep exact numbers for the operator."""

    halted: bool
    epoch_id: int
    k_threshold: int
    databases: tuple[BitString, ...]
    counts: tuple[dict[int, int], ...]
    estimates: dict[int, float]
    diagnostics: EpochDiagnostics

    def released(self) -> dict | None:
        """The public view: counts and estimates, participation only as a
        threshold statement, never an exact headcount."""
        if self.halted:
            return None
        return {
            "participation": f">={self.k_threshold}",
            "counts": [
                {str(k): v for k, v in sorted(c.items())} for c in self.counts
            ],
            "estimates": {str(k): v for k, v in sorted(self.estimates.items())},
        }

    def to_json_bytes(self) -> bytes:
        payload = {
            "epoch_id": self.epoch_id,
            "halted": self.halted,
            "released": self.released(),
            "databases_sha256": [
                hashlib.sha256(db.to_bytes()).hexdigest() for db in self.databases
            ],
            "diagnostics": self.diagnostics.as_dict(),
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


class EpochCollector:
    """Aggregator state over one epoch: per-party per-round accumulators,
    verification verdicts, and the dedup ledger."""

    def __init__(self, config: EpochConfig, crypto: bool = True):
        self.config = config
        self.crypto = crypto
        width = config.db_slots * config.message_bits
        rounds = config.rounds
        parties = config.parties if crypto else 1
        self._acc = [
            [BitString.zeros(width) for _ in range(rounds)] for _ in range(parties)
        ]
        self._seen: set[int] = set()
        self._rejected: list[int] = []
        self._duplicates = 0
        self._writes_per_round = [0] * rounds

    def submit(self, chunk: SubmissionChunk) -> None:
        fresh = [oid for oid in chunk.owner_ids if oid not in self._seen]
        self._duplicates += len(chunk.owner_ids) - len(fresh)
        keep = set(fresh)
        self._seen.update(fresh)
        if not keep:
            return
        rejected = self._verify(chunk) if self.crypto else set()
        self._rejected.extend(sorted(rejected & keep))
        good = keep - rejected
        for idx, write in enumerate(chunk.writes):
            if write.owner_id not in good:
                continue
            self._writes_per_round[write.round_index] += 1
            if self.crypto:
                for i, key in enumerate(chunk.keys[idx]):
                    self._acc[i][write.round_index] ^= fss_evaluate_share(key)
            elif write.value_id is not None:
                image = BitString(
                    encode_message(write.value_id, self.config)
                    << (
                        (self.config.db_slots - 1 - write.slot)
                        * self.config.message_bits
                    ),
                    len(self._acc[0][0]),
                )
                self._acc[0][write.round_index] ^= image

    def _verify(self, chunk: SubmissionChunk) -> set[int]:
        config = self.config
        if config.blinding_kind == "square":
            blinded = [
                verify.blind_square_batch(
                    chunk.blinding, chunk.indicator_shares[i], config.parties
                )
                for i in range(config.parties)
            ]
        else:
            blinded = [
                verify.blind_batch(chunk.blinding, chunk.indicator_shares[i])
                for i in range(config.parties)
            ]
        verdicts = verify.check_batch(
            verify.aggregate_batch(blinded), config.blinding_kind
        )
        return {
            write.owner_id
            for write, ok in zip(chunk.writes, verdicts)
            if not ok
        }

    def finalize(self) -> EpochResult:
        config = self.config
        participants = len(self._seen)
        accepted = participants - len(self._rejected)
        diagnostics = EpochDiagnostics(
            participants=participants,
            accepted=accepted,
            rejected_submissions=len(self._rejected),
            rejected_owner_ids=tuple(self._rejected),
            duplicate_submissions=self._duplicates,
            writes_per_round=tuple(self._writes_per_round),
        )
        if accepted < config.k_threshold:
            return EpochResult(
                halted=True,
                epoch_id=config.epoch_id,
                k_threshold=config.k_threshold,
                databases=(),
                counts=(),
                estimates={},
                diagnostics=diagnostics,
            )
        if self.crypto:
            databases = tuple(
                BitString(
                    reduce_xor(self._acc[i][r] for i in range(config.parties)),
                    len(self._acc[0][0]),
                )
                for r in range(config.rounds)
            )
        else:
            databases = tuple(self._acc[0])
        counts = []
        drops = []
        for db in databases:
            slot_values = db.split_fields(config.message_bits)
            c, d = count_values(
                slot_values, config.id_bits, config.checksum_bits, config.epoch_id
            )
            counts.append(c)
            drops.append(d)
        diagnostics.collision_drops = tuple(drops)
        estimates = _estimate(counts, accepted, config)
        return EpochResult(
            halted=False,
            epoch_id=config.epoch_id,
            k_threshold=config.k_threshold,
            databases=databases,
            counts=tuple(counts),
            estimates=estimates,
            diagnostics=diagnostics,
        )


def reduce_xor(accumulators: Iterable[BitString]) -> int:
    value = 0
    for acc in accumulators:
        value ^= acc.value
    return value


def _estimate(
    counts: list[dict[int, int]], accepted: int, config: EpochConfig
) -> dict[int, float]:
    params = config.mech
    if isinstance(params, mech.RrParams):
        return {1: mech.rr_estimate(counts[0].get(1, 0), accepted, params)}
    if isinstance(params, mech.TwoRoundBinaryParams):
        return {
            1: mech.two_round_estimate(
                counts[0].get(1, 0), counts[1].get(1, 0), params.pi_s
            )
        }
    if isinstance(params, mech.CalibratedParams):
        return {
            1: mech.calibrated_estimate(
                counts[0].get(1, 0), counts[1].get(1, 0), params
            )
        }
    return {
        v: mech.two_round_estimate(
            counts[0].get(v, 0), counts[1].get(v, 0), params.pi_s
        )
        for v in config.value_ids
    }


def build_chunk(
    writes: Sequence[PlannedWrite],
    config: EpochConfig,
    keys_rng: np.random.Generator | None,
    verify_rng: np.random.Generator | None,
    crypto: bool,
    two_row_owners: frozenset[int] = frozenset(),
) -> SubmissionChunk:
    """Craft the submissions for a batch of owners.

    Owners listed in ``two_row_owners`` claim two slots in their first
    write's indicator vector, the shape verification exists to catch. Their
    key material is left untouched; a rejected submission never reaches the
    accumulators anyway.
    """
    owner_ids = tuple(sorted({w.owner_id for w in writes}))
    if not crypto:
        if two_row_owners:
            raise ValueError("two-row writers need the verification layer")
        return SubmissionChunk(owner_ids, tuple(writes), None, None, None)
    keys = []
    for write in writes:
        message = (
            0 if write.value_id is None else encode_message(write.value_id, config)
        )
        pf = PointFunction(a=write.slot, b=message)
        keys.append(tuple(fss_gen(pf, config.fss, keys_rng)))
    count = len(writes)
    indicators = np.zeros((count, config.db_slots), np.uint64)
    flagged_first: set[int] = set()
    for idx, write in enumerate(writes):
        if write.owner_id in two_row_owners and write.owner_id not in flagged_first:
            flagged_first.add(write.owner_id)
            indicators[idx, write.slot] = 1
            indicators[idx, (write.slot + 1) % config.db_slots] = 1
        elif write.value_id is not None:
            indicators[idx, write.slot] = 1
    shares = verify.additive_share_batch(indicators, config.parties, verify_rng)
    if config.blinding_kind == "square":
        blinding = verify_rng.integers(
            1, verify.MODULUS, size=(count, config.db_slots), dtype=np.uint64
        )
    else:
        blinding = verify.make_blinding_batch(
            config.blinding_kind, config.db_slots, config.parties, count, verify_rng
        )
    return SubmissionChunk(owner_ids, tuple(writes), tuple(keys), shares, blinding)


def run_epoch(
    population: np.ndarray,
    config: EpochConfig,
    crypto: bool = True,
    attackers: Iterable[int] = (),
) -> EpochResult:
    """Simulate one epoch end to end; deterministic in ``config.master_seed``.

    ``attackers`` are owner indices that submit a two-row write (crypto mode
    only); the pipeline is expected to exclude and flag them.
    """
    population = np.asarray(population)
    if population.size == 0:
        raise PopulationSpecError("population must be nonempty")
    two_row = frozenset(int(a) for a in attackers)
    if two_row and not crypto:
        raise ValueError("two-row writers need the verification layer")
    out_of_range = [a for a in two_row if not 0 <= a < population.size]
    if out_of_range:
        raise ValueError(f"attacker indices out of range: {sorted(out_of_range)}")
    rngs = _streams(config.master_seed)
    claims = _claims(population, config, rngs["privatize"])
    writes = _plan_writes(claims, config, rngs["slots"])
    collector = EpochCollector(config, crypto=crypto)
    start = 0
    while start < len(writes):
        end = start
        boundary = writes[start].owner_id + _CHUNK_OWNERS
        while end < len(writes) and writes[end].owner_id < boundary:
            end += 1
        chunk = build_chunk(
            writes[start:end],
            config,
            rngs["keys"],
            rngs["verify"],
            crypto,
            two_row,
        )
        collector.submit(chunk)
        start = end
    return collector.finalize()
