"""Proof-of-authority scheduling, chain scoring, and fork choice.

Validators take strict round-robin turns. The scheduled (in-turn) validator
for height h is the one at index h mod n in genesis order; any other
validator may step in after a per-offset timestamp delay, so the chain stays
live when the in-turn validator is down. In-turn blocks carry more fork
weight, so the schedule wins whenever it is available.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .keys import address_to_hex
from .ledger import Block, ChainError


@dataclass(frozen=True)
class ConsensusParams:
    block_interval: int = 5  # seconds between blocks
    wait_step: int = 2  # extra delay per out-of-turn offset
    in_turn_weight: int = 2
    out_turn_weight: int = 1

    def __post_init__(self) -> None:
        if self.block_interval <= 0 or self.wait_step <= 0:
            raise ValueError("block_interval and wait_step must be positive")
        if not (self.in_turn_weight > self.out_turn_weight > 0):
            raise ValueError("need in_turn_weight > out_turn_weight > 0")

    def to_dict(self) -> dict:
        return {
            "block_interval": self.block_interval,
            "wait_step": self.wait_step,
            "in_turn_weight": self.in_turn_weight,
            "out_turn_weight": self.out_turn_weight,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConsensusParams":
        return cls(**{k: int(v) for k, v in d.items()})


@dataclass(frozen=True)
class ValidatorSet:
    validators: tuple[bytes, ...]  # addresses in genesis order, never mutated
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.validators:
            raise ValueError("validator set must be non-empty")
        if len(set(self.validators)) != len(self.validators):
            raise ValueError("duplicate validator addresses")
        object.__setattr__(
            self, "_index", {a: i for i, a in enumerate(self.validators)}
        )

    @property
    def n(self) -> int:
        return len(self.validators)

    def __contains__(self, address: bytes) -> bool:
        return address in self._index

    def index_of(self, address: bytes) -> int:
        try:
            return self._index[address]
        except KeyError:
            raise ChainError("NotAValidator", address_to_hex(address)) from None

    def scheduled(self, height: int) -> bytes:
        """The in-turn proposer for a height."""
        return self.validators[height % self.n]


def proposer_offset(height: int, proposer: bytes, vset: ValidatorSet) -> int:
    """How far past its scheduled turn the proposer is; 0 means in-turn."""
    if height < 1:
        raise ValueError("height must be >= 1")
    return (vset.index_of(proposer) - height) % vset.n


def min_timestamp(parent_ts: int, k: int, params: ConsensusParams) -> int:
    """Earliest consensus-valid timestamp for a block at offset k."""
    if k < 0:
        raise ValueError("offset must be non-negative")
    return parent_ts + params.block_interval + k * params.wait_step


def block_weight(block: Block, vset: ValidatorSet, params: ConsensusParams) -> int:
    if block.header.height == 0:
        return 0
    k = proposer_offset(block.header.height, block.header.proposer, vset)
    return params.in_turn_weight if k == 0 else params.out_turn_weight


def chain_score(chain: Sequence[Block], vset: ValidatorSet, params: ConsensusParams) -> int:
    """Sum of block weights over the non-genesis blocks of a chain."""
    return sum(block_weight(b, vset, params) for b in chain)


def verify_block_consensus(
    block: Block, parent: Block, vset: ValidatorSet, params: ConsensusParams
) -> None:
    """Consensus validity: proposer is in the set and the timestamp respects
    both strict monotonicity and the out-of-turn delay bound."""
    h = block.header
    if h.proposer not in vset:
        raise ChainError("NotAValidator", address_to_hex(h.proposer))
    k = proposer_offset(h.height, h.proposer, vset)
    bound = min_timestamp(parent.header.timestamp, k, params)
    if h.timestamp < bound or h.timestamp <= parent.header.timestamp:
        raise ChainError(
            "TooEarly", f"timestamp {h.timestamp} < bound {bound} (k={k})"
        )


def head_sort_key(score: int, head: Block) -> tuple:
    # Max score, then max height, then lexicographically smallest head hash.
    return (score, head.header.height, _inverted(head.block_hash()))


def _inverted(h: bytes) -> bytes:
    return bytes(255 - b for b in h)


def fork_choice(
    heads: Sequence[Sequence[Block]], vset: ValidatorSet, params: ConsensusParams
) -> Sequence[Block]:
    """Pick the canonical chain among fully validated candidates."""
    if not heads:
        raise ValueError("fork_choice over empty candidate set")
    return max(
        heads, key=lambda c: head_sort_key(chain_score(c, vset, params), c[-1])
    )
