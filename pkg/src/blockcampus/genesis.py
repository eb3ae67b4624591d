"""Genesis file: consortium membership, consensus/economic constants, and
bootstrap accounts. The genesis block and its state are derived entirely
from this file, so two nodes handed the same genesis JSON agree on the
chain from byte zero."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .codec import canonical_encode, from_hex
from .consensus import ConsensusParams, ValidatorSet
from .econ import EconParams
from .keys import address_from_hex, address_to_hex, derive_address
from .ledger import GENESIS_PARENT, Block, BlockHeader, compute_tx_root
from .state import (
    MODERATOR_ROLES,
    ROLE_ADMIN,
    ROLE_OWNER,
    ROLES,
    Account,
    WorldState,
    state_root,
)

ZERO_ADDRESS = bytes(20)


@dataclass(frozen=True)
class BootstrapAccount:
    pubkey: bytes
    username: str
    role: str

    @property
    def address(self) -> bytes:
        return derive_address(self.pubkey)

    def to_dict(self) -> dict:
        return {
            "address": address_to_hex(self.address),
            "pubkey": self.pubkey.hex(),
            "username": self.username,
            "role": self.role,
        }


@dataclass(frozen=True)
class GenesisFile:
    chain_id: str
    validators: tuple[bytes, ...]
    consensus: ConsensusParams = field(default_factory=ConsensusParams)
    econ: EconParams = field(default_factory=EconParams)
    bootstrap_accounts: tuple[BootstrapAccount, ...] = ()
    services: tuple[dict, ...] = ()
    genesis_timestamp: int = 0

    def __post_init__(self) -> None:
        if not self.validators:
            raise ValueError("validators must be non-empty")
        roles = [a.role for a in self.bootstrap_accounts]
        if ROLE_OWNER not in roles or ROLE_ADMIN not in roles:
            raise ValueError("bootstrap accounts need at least one Owner and one Admin")
        for a in self.bootstrap_accounts:
            if a.role not in ROLES:
                raise ValueError(f"bad bootstrap role {a.role!r}")
        known = {a.address for a in self.bootstrap_accounts}
        for v in self.validators:
            if v not in known:
                raise ValueError(
                    f"validator {address_to_hex(v)} has no bootstrap pubkey"
                )

    def validator_set(self) -> ValidatorSet:
        return ValidatorSet(validators=self.validators)

    def proposer_pubkeys(self) -> dict[bytes, bytes]:
        return {a.address: a.pubkey for a in self.bootstrap_accounts}

    def initial_state(self) -> WorldState:
        state = WorldState(chain_id=self.chain_id, params=self.econ)
        for a in self.bootstrap_accounts:
            state.accounts[a.address] = Account(
                address=a.address,
                pubkey=a.pubkey,
                username=a.username,
                role=a.role,
                bateekh=self.econ.initial_bateekh,
            )
        for svc in self.services:
            state.services[svc["id"]] = {
                "name": svc["name"],
                "price": int(svc["price"]),
            }
        return state

    def genesis_block(self) -> Block:
        state = self.initial_state()
        header = BlockHeader(
            chain_id=self.chain_id,
            height=0,
            parent_hash=GENESIS_PARENT,
            timestamp=self.genesis_timestamp,
            tx_root=compute_tx_root(()),
            state_root=state_root(state),
            proposer=ZERO_ADDRESS,
            signature=bytes(64),
        )
        return Block(header=header, transactions=())

    def to_dict(self) -> dict:
        return {
            "chain_id": self.chain_id,
            "validators": [address_to_hex(v) for v in self.validators],
            "consensus": self.consensus.to_dict(),
            "econ": self.econ.to_dict(),
            "bootstrap_accounts": [a.to_dict() for a in self.bootstrap_accounts],
            "services": [dict(s) for s in self.services],
            "genesis_timestamp": self.genesis_timestamp,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "GenesisFile":
        accounts = tuple(
            BootstrapAccount(
                pubkey=from_hex(a["pubkey"]),
                username=a["username"],
                role=a["role"],
            )
            for a in d["bootstrap_accounts"]
        )
        # Address fields in the file are redundant with pubkeys; reject mismatch.
        for given, acct in zip(d["bootstrap_accounts"], accounts):
            if "address" in given and address_from_hex(given["address"]) != acct.address:
                raise ValueError(f"address/pubkey mismatch for {acct.username!r}")
        return cls(
            chain_id=d["chain_id"],
            validators=tuple(address_from_hex(v) for v in d["validators"]),
            consensus=ConsensusParams.from_dict(d["consensus"]),
            econ=EconParams.from_dict(d["econ"]),
            bootstrap_accounts=accounts,
            services=tuple(dict(s) for s in d.get("services", ())),
            genesis_timestamp=int(d.get("genesis_timestamp", 0)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(canonical_encode(self.to_dict()) + b"\n")

    @classmethod
    def load(cls, path: str | Path) -> "GenesisFile":
        return cls.from_dict(json.loads(Path(path).read_text()))
