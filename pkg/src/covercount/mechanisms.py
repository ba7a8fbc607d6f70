"""Local privatization mechanisms and their estimators.

Randomized response is the single-round baseline: two biased coins decide
whether an owner answers truthfully or emits a random answer, and the
aggregate is de-biased afterwards. Its noise grows with the square root of
the whole population.

The two-round mechanisms instead sample a small truthful cohort and drown it
in chaff that is *repeated* across rounds. One three-sided die per owner
(truthful / chaff-yes / chaff-no) decides round one; in round two sampled
owners silently drop out while everyone else repeats their round-one answer
verbatim, so the round difference isolates the sampled truthful count
exactly. Estimator noise then depends only on the truthful subpopulation,
not the total population.

Scalar functions consume one ``rng.random(...)`` block per owner in a
documented order; the ``*_population`` variants draw the same uniforms in the
same order, so a vectorized simulation is draw-for-draw identical to the
scalar loop under the same generator state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateCalibrationError,
    InfiniteLeakageError,
    InvalidTruthError,
    OutOfGridError,
    UndefinedLeakageError,
)

__all__ = [
    "RrParams",
    "TwoRoundBinaryParams",
    "TwoRoundMultiParams",
    "CalibratedParams",
    "TwoRoundResponse",
    "GridSpec",
    "rr_privatize",
    "rr_privatize_population",
    "rr_estimate",
    "rr_noise_stddev",
    "rr_epsilon",
    "two_round_binary",
    "two_round_binary_population",
    "two_round_estimate",
    "two_round_multi",
    "two_round_multi_population",
    "two_round_epsilon_binary",
    "two_round_epsilon_multi",
    "calibrated_privatize",
    "calibrated_population",
    "calibrated_estimate",
    "row_major_index",
    "discretize",
]

_PROB_TOL = 1e-12


def _check_prob(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class RrParams:
    """Randomized response coins.

    ``pi1`` is the probability of answering truthfully; otherwise a second
    coin with heads probability ``pi2`` supplies the answer. Degenerate
    endpoint values are allowed so the edge behavior stays expressible; the
    leakage calculator rejects settings where the bound diverges.
    """

    pi1: float
    pi2: float

    def __post_init__(self):
        _check_prob("pi1", self.pi1)
        _check_prob("pi2", self.pi2)

    @property
    def chaff_yes_rate(self) -> float:
        """Probability a truthful-No owner still answers 1."""
        return (1.0 - self.pi1) * self.pi2

    @property
    def yes_rate(self) -> float:
        """Probability a truthful-Yes owner answers 1."""
        return self.pi1 + self.chaff_yes_rate


@dataclass(frozen=True)
class TwoRoundBinaryParams:
    """Three-sided die for the binary two-round mechanism: truthful with
    probability ``pi_s``, chaff-Yes with ``pi_yes``, chaff-No with ``pi_no``.
    The sides must sum to one."""

    pi_s: float
    pi_yes: float
    pi_no: float

    def __post_init__(self):
        _check_prob("pi_s", self.pi_s)
        _check_prob("pi_yes", self.pi_yes)
        _check_prob("pi_no", self.pi_no)
        if abs(self.pi_s + self.pi_yes + self.pi_no - 1.0) > _PROB_TOL:
            raise ValueError("die probabilities must sum to 1")


@dataclass(frozen=True)
class TwoRoundMultiParams:
    """Multi-value two-round mechanism: every domain value is claimed
    independently with probability ``pi_v`` (chaff), and the owner's truthful
    value is additionally claimed with probability ``pi_s``."""

    pi_s: float
    pi_v: float

    def __post_init__(self):
        # The sampling draw and the per-value chaff draws are independent,
        # so the two rates are not constrained to sum below one.
        _check_prob("pi_s", self.pi_s)
        _check_prob("pi_v", self.pi_v)
        if self.pi_s <= 0.0:
            raise ValueError("pi_s must be positive")
        if self.pi_v <= 0.0:
            raise ValueError("pi_v must be positive")


@dataclass(frozen=True)
class CalibratedParams:
    """Two independent rounds with per-truth response rates.

    Truthful-Yes owners answer 1 with rate ``pi_s_yes_1`` in round one and
    the strictly smaller ``pi_s_yes_2`` in round two; truthful-No owners use
    the same rate in both rounds so they cancel in the round difference.
    ``pi_no`` records the non-response weight from the round definitions; it
    is implied by the rates above and not drawn from.
    """

    pi_s_yes_1: float
    pi_s_yes_2: float
    pi_s_no_1: float
    pi_s_no_2: float
    pi_no: float = 0.0

    def __post_init__(self):
        for name in ("pi_s_yes_1", "pi_s_yes_2", "pi_s_no_1", "pi_s_no_2", "pi_no"):
            _check_prob(name, getattr(self, name))
        if not self.pi_s_yes_1 > self.pi_s_yes_2:
            raise ValueError("pi_s_yes_1 must exceed pi_s_yes_2")
        if abs(self.pi_s_no_1 - self.pi_s_no_2) > _PROB_TOL:
            raise ValueError("truthful-No rates must match across rounds")


@dataclass(frozen=True)
class TwoRoundResponse:
    """What one owner uploads.

    ``round1``/``round2`` are bits for the binary mechanisms and frozensets
    of claimed values for the multi-value mechanism. ``round2 is None`` marks
    an explicit abstention. ``sampled`` records the die outcome where the
    rounds are coupled by one; it is ``None`` for the calibrated mechanism,
    whose rounds are drawn independently.
    """

    round1: int | frozenset
    round2: int | frozenset | None
    sampled: bool | None = None


# ---------------------------------------------------------------------------
# Randomized response
# ---------------------------------------------------------------------------


def rr_privatize(truth: int, params: RrParams, rng: np.random.Generator) -> int:
    """One owner's randomized-response answer. Consumes one uniform."""
    if truth not in (0, 1):
        raise InvalidTruthError(f"binary truth expected, got {truth!r}")
    u = rng.random()
    threshold = params.yes_rate if truth else params.chaff_yes_rate
    return int(u < threshold)


def rr_privatize_population(
    truths: np.ndarray, params: RrParams, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized ``rr_privatize``; draw-for-draw identical to the loop."""
    truths = np.asarray(truths)
    u = rng.random(len(truths))
    thresholds = np.where(truths == 1, params.yes_rate, params.chaff_yes_rate)
    return (u < thresholds).astype(np.int64)


def rr_estimate(private_sum: float, total: int, params: RrParams) -> float:
    """De-biased truthful-Yes estimate from the privatized sum.

    Subtracts the expected chaff contribution of the whole population and
    rescales by the truthful-answer rate ``pi1``.
    """
    if total < 0:
        raise ValueError("total must be non-negative")
    if params.pi1 == 0.0:
        raise ZeroDivisionError("pi1 = 0 leaves no truthful signal to rescale")
    return (private_sum - params.chaff_yes_rate * total) / params.pi1


class NoiseStddev(NamedTuple):
    exact: float
    approximate: float


def rr_noise_stddev(params: RrParams, total: int) -> NoiseStddev:
    """Standard deviation of the chaff noise on the privatized sum.

    The chaff is Binomial(total, q) with q the chaff-yes rate, so the exact
    value is sqrt(total * q * (1 - q)); the companion field drops the
    (1 - q) factor, the rounder figure usually quoted.
    """
    q = params.chaff_yes_rate
    return NoiseStddev(
        exact=math.sqrt(total * q * (1.0 - q)),
        approximate=math.sqrt(total * q),
    )


def rr_epsilon(params: RrParams) -> float:
    """Log-ratio of the answer-1 likelihoods between the two truths:
    ln((pi1 + (1-pi1)*pi2) / ((1-pi1)*pi2))."""
    q = params.chaff_yes_rate
    if q <= 0.0:
        raise InfiniteLeakageError(
            "a truthful-No owner can never answer 1; the ratio diverges"
        )
    return math.log(params.yes_rate / q)


# ---------------------------------------------------------------------------
# Two-round binary mechanism
# ---------------------------------------------------------------------------


def two_round_binary(
    truth: int, params: TwoRoundBinaryParams, rng: np.random.Generator
) -> TwoRoundResponse:
    """One owner's coupled two-round answer. Consumes one uniform.

    A single die roll drives both rounds: truthful owners answer their truth
    in round one and abstain in round two; chaff owners repeat the same
    random answer in both rounds.
    """
    if truth not in (0, 1):
        raise InvalidTruthError(f"binary truth expected, got {truth!r}")
    u = rng.random()
    if u < params.pi_s:
        return TwoRoundResponse(round1=truth, round2=None, sampled=True)
    chaff = int(u < params.pi_s + params.pi_yes)
    return TwoRoundResponse(round1=chaff, round2=chaff, sampled=False)


class BinaryRounds(NamedTuple):
    """Vectorized binary responses: abstainers have ``round2 == 0`` and are
    flagged by ``sampled``."""

    round1: np.ndarray
    round2: np.ndarray
    sampled: np.ndarray


def two_round_binary_population(
    truths: np.ndarray, params: TwoRoundBinaryParams, rng: np.random.Generator
) -> BinaryRounds:
    truths = np.asarray(truths)
    u = rng.random(len(truths))
    sampled = u < params.pi_s
    chaff = (~sampled) & (u < params.pi_s + params.pi_yes)
    round1 = np.where(sampled, truths == 1, chaff)
    round2 = np.where(sampled, False, chaff)
    return BinaryRounds(
        round1.astype(np.int64), round2.astype(np.int64), sampled
    )


def two_round_estimate(sum1: float, sum2: float, pi_s: float) -> float:
    """Rescaled round difference; unbiased for the truthful-Yes count."""
    if pi_s <= 0.0:
        raise ValueError("pi_s must be positive")
    return (sum1 - sum2) / pi_s


def two_round_epsilon_binary(params: TwoRoundBinaryParams) -> float:
    """Leakage of the coupled binary rounds.

    Both truths can emit either round-one answer, so the bound is the larger
    log-ratio between the truthful-plus-chaff and chaff-only rates.
    """
    if params.pi_yes <= 0.0:
        raise InfiniteLeakageError("pi_yes = 0 makes a truthful 1 unexplainable")
    ratio = (params.pi_yes + params.pi_s) / params.pi_yes
    return max(math.log(ratio), math.log(1.0 / ratio))


# ---------------------------------------------------------------------------
# Two-round multi-value mechanism
# ---------------------------------------------------------------------------


def two_round_multi(
    truth: int | None,
    domain: Sequence[int],
    params: TwoRoundMultiParams,
    rng: np.random.Generator,
) -> TwoRoundResponse:
    """One owner's claimed-value sets. Consumes ``1 + len(domain)`` uniforms.

    Round one claims every domain value independently with probability
    ``pi_v``, plus the truth when the owner is sampled. Round two repeats
    round one except a sampled owner withdraws the truth. Owners whose truth
    is not in the queried domain (``truth is None``) contribute chaff only.
    """
    domain = list(domain)
    if truth is not None and truth not in domain:
        raise InvalidTruthError(f"truth {truth!r} is not in the queried domain")
    u_sample = rng.random()
    includes = rng.random(len(domain))
    sampled = bool(u_sample < params.pi_s) and truth is not None
    claims = {v for v, u in zip(domain, includes) if u < params.pi_v}
    round1 = frozenset(claims | {truth}) if sampled else frozenset(claims)
    round2 = frozenset(round1 - {truth}) if sampled else round1
    return TwoRoundResponse(round1=round1, round2=round2, sampled=sampled)


class MultiRounds(NamedTuple):
    """Vectorized multi-value responses as owner x domain claim matrices."""

    round1: np.ndarray
    round2: np.ndarray
    sampled: np.ndarray


def two_round_multi_population(
    truths: np.ndarray,
    domain: Sequence[int],
    params: TwoRoundMultiParams,
    rng: np.random.Generator,
) -> MultiRounds:
    """Vectorized ``two_round_multi``; draw-for-draw identical to the loop.

    ``truths`` may contain -1 (or any value outside the domain codes used
    here) only as -1, meaning "not in the queried domain".
    """
    domain = list(domain)
    truths = np.asarray(truths)
    bad = set(np.unique(truths).tolist()) - set(domain) - {-1}
    if bad:
        raise InvalidTruthError(f"truths {sorted(bad)} are not in the queried domain")
    n = len(truths)
    u = rng.random((n, 1 + len(domain)))
    sampled = (u[:, 0] < params.pi_s) & (truths != -1)
    claims = u[:, 1:] < params.pi_v
    truth_onehot = np.zeros((n, len(domain)), dtype=bool)
    for j, v in enumerate(domain):
        truth_onehot[:, j] = truths == v
    round1 = claims | (truth_onehot & sampled[:, None])
    round2 = round1 & ~(truth_onehot & sampled[:, None])
    return MultiRounds(round1, round2, sampled)


def two_round_epsilon_multi(params: TwoRoundMultiParams) -> float:
    """Leakage of the multi-value rounds, the larger of the per-round bounds.

    Round one compares claim rates (pi_v + pi_s vs pi_v); round two compares
    withdrawal rates (pi_v - pi_s vs pi_v). The round-two bound only exists
    when pi_v > pi_s; otherwise a withdrawal is unexplainable by chaff.
    """
    if params.pi_v <= params.pi_s:
        raise UndefinedLeakageError(
            "round-two leakage requires pi_v > pi_s "
            f"(got pi_v={params.pi_v}, pi_s={params.pi_s})"
        )
    round1 = math.log((params.pi_v + params.pi_s) / params.pi_v)
    round2 = math.log(params.pi_v / (params.pi_v - params.pi_s))
    return max(round1, round2)


# ---------------------------------------------------------------------------
# Calibrated two-round mechanism
# ---------------------------------------------------------------------------


def calibrated_privatize(
    truth: int, params: CalibratedParams, rng: np.random.Generator
) -> TwoRoundResponse:
    """One owner's two independently drawn answers. Consumes two uniforms,
    round one first."""
    if truth not in (0, 1):
        raise InvalidTruthError(f"binary truth expected, got {truth!r}")
    u1 = rng.random()
    u2 = rng.random()
    if truth:
        r1, r2 = params.pi_s_yes_1, params.pi_s_yes_2
    else:
        r1, r2 = params.pi_s_no_1, params.pi_s_no_2
    return TwoRoundResponse(round1=int(u1 < r1), round2=int(u2 < r2), sampled=None)


class CalibratedRounds(NamedTuple):
    round1: np.ndarray
    round2: np.ndarray


def calibrated_population(
    truths: np.ndarray, params: CalibratedParams, rng: np.random.Generator
) -> CalibratedRounds:
    truths = np.asarray(truths)
    u = rng.random((len(truths), 2))
    r1 = np.where(truths == 1, params.pi_s_yes_1, params.pi_s_no_1)
    r2 = np.where(truths == 1, params.pi_s_yes_2, params.pi_s_no_2)
    return CalibratedRounds(
        (u[:, 0] < r1).astype(np.int64), (u[:, 1] < r2).astype(np.int64)
    )


def calibrated_estimate(sum1: float, sum2: float, params: CalibratedParams) -> float:
    """Round difference rescaled by the truthful-Yes rate gap."""
    divisor = params.pi_s_yes_1 - params.pi_s_yes_2
    if divisor <= 0.0:
        raise DegenerateCalibrationError("round-one Yes rate must exceed round two's")
    return (sum1 - sum2) / divisor


# ---------------------------------------------------------------------------
# Grid discretization
# ---------------------------------------------------------------------------

_MILES_PER_DEGREE = 69.0  # equirectangular approximation, fine at city scale


def row_major_index(row: int, col: int, width: int) -> int:
    """0-based row-major cell index."""
    if width <= 0:
        raise ValueError("width must be positive")
    if not (0 <= row and 0 <= col < width):
        raise ValueError("cell out of range")
    return row * width + col


@dataclass(frozen=True)
class GridSpec:
    """Square grid anchored at a southwest origin corner.

    ``id_bits`` must be even: the grid has 2**(id_bits / 2) cells per side so
    every cell index fits in ``id_bits`` bits.
    """

    origin_lat: float
    origin_lon: float
    cell_miles: float
    id_bits: int

    def __post_init__(self):
        if self.cell_miles <= 0:
            raise ValueError("cell_miles must be positive")
        if self.id_bits < 2 or self.id_bits % 2:
            raise ValueError("id_bits must be even and at least 2")

    @property
    def side(self) -> int:
        return 1 << (self.id_bits // 2)


def discretize(lat: float, lon: float, grid: GridSpec) -> int:
    """Map a coordinate to its cell index, row-major from the origin corner."""
    north_miles = (lat - grid.origin_lat) * _MILES_PER_DEGREE
    east_miles = (lon - grid.origin_lon) * _MILES_PER_DEGREE * math.cos(
        math.radians(grid.origin_lat)
    )
    row = math.floor(north_miles / grid.cell_miles)
    col = math.floor(east_miles / grid.cell_miles)
    if not (0 <= row < grid.side and 0 <= col < grid.side):
        raise OutOfGridError(
            f"({lat}, {lon}) falls outside the {grid.side}x{grid.side} grid"
        )
    return row_major_index(row, col, grid.side)
