"""Economic constants and the reputation/token arithmetic.

All quantities are exact integers: reputation ("Bateekh") in milli-units
(mB), the utility token ("Tofu") in whole units. Multipliers are milli-scale
factors (1000 = x1.0) combined with a fixed nesting of floor divisions, so
every node computes bit-identical rewards. Floor division here is Python's
`//` (round toward negative infinity).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping


@dataclass(frozen=True)
class EconParams:
    initial_bateekh: int = 1_000  # mB granted at registration
    base_upvote: int = 10_000  # mB, before multipliers
    base_downvote: int = 2_000  # mB, flat debit
    decay_horizon: int = 10_000  # blocks until age decay bottoms out
    weight_min: int = 500  # voter-weight clamp, milli-scale
    weight_max: int = 2_000
    rate_grant: int = 5_000  # mB per staff-rating star
    award_cost: int = 5  # Tofu
    award_to_recipient: int = 4
    award_burn: int = 1
    award_bateekh: int = 25_000  # mB
    mint_threshold: int = 100_000  # lifetime mB per mint crossing
    mint_amount: int = 10  # Tofu per crossing
    max_supply: int = 1_000_000  # Tofu
    genesis_rewards_pool: int = 600_000
    genesis_treasury: int = 300_000
    genesis_dev_fund: int = 100_000
    flag_penalty: int = 10_000  # mB

    def __post_init__(self) -> None:
        buckets = (
            self.genesis_rewards_pool + self.genesis_treasury + self.genesis_dev_fund
        )
        if buckets != self.max_supply:
            raise ValueError(
                f"genesis buckets sum {buckets} != max_supply {self.max_supply}"
            )
        if self.award_to_recipient + self.award_burn != self.award_cost:
            raise ValueError("award split must sum to award cost")
        for name, v in self.__dict__.items():
            if v < 0:
                raise ValueError(f"{name} must be non-negative")

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: Mapping[str, int]) -> "EconParams":
        return cls(**{k: int(v) for k, v in d.items()})


def voter_weight(voter_bateekh: int, p: EconParams) -> int:
    """Milli-scale weight of a voter: 1.0 at the initial grant, growing with
    reputation, clamped to [weight_min, weight_max]."""
    if voter_bateekh < 0:
        raise ValueError("bateekh must be non-negative")
    w = 1000 + (voter_bateekh - p.initial_bateekh) // 100
    return max(p.weight_min, min(p.weight_max, w))


def age_decay(age_blocks: int, p: EconParams) -> int:
    """Linear decay from 1000 at age 0 down to a floor of 250 at the horizon."""
    if age_blocks < 0:
        raise ValueError("age must be non-negative")
    if age_blocks >= p.decay_horizon:
        return 250
    return 1000 - (750 * age_blocks) // p.decay_horizon


def staff_multiplier(ratings: Mapping[str, int], p: EconParams) -> int:
    """Neutral 1000 with no staff ratings; otherwise 600 + 200 * best star."""
    if not ratings:
        return 1000
    best = max(ratings.values())
    if not 1 <= best <= 5:
        raise ValueError(f"star out of range: {best}")
    return 600 + 200 * best


def vote_delta(base: int, w: int, d: int, s: int) -> int:
    """Reward for one upvote. The nesting order of the three floor divisions
    is normative; reassociating changes low-order digits."""
    return ((base * w // 1000) * d // 1000) * s // 1000


def redeem_split(price: int) -> tuple[int, int]:
    """Split a redemption price into (burned, to_treasury); a tenth rounded
    up is burned."""
    if price < 1:
        raise ValueError("price must be >= 1")
    burn = -(-price // 10)
    return burn, price - burn


def rank_score(up: int, down: int, stars: Mapping[str, int]) -> int:
    """Feed ordering score; ties are broken by creation height (newer first)
    at the query layer."""
    return 10 * (up - down) + 20 * sum(stars.values())
