"""Blocks, signed transactions, and structural chain validation.

All types are immutable values; every function here is pure. The hash chain
is the tamper-evidence mechanism: a block's hash covers its full canonical
header (including the proposer signature), and each header commits to the
parent hash, the transaction root, and the post-execution state root.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Mapping, Sequence

from .codec import from_hex, hash_of
from .keys import SIGNATURE_LEN, address_from_hex, address_to_hex, derive_address, sign, verify

GENESIS_PARENT = bytes(32)


class ChainError(Exception):
    """Validation failure carrying a stable error code."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        super().__init__(f"{code}: {detail}" if detail else code)


@dataclass(frozen=True)
class SignedTransaction:
    chain_id: str
    nonce: int
    sender_pubkey: bytes
    kind: str
    payload: Mapping[str, Any]
    signature: bytes

    @property
    def sender(self) -> bytes:
        return derive_address(self.sender_pubkey)

    def signing_envelope(self) -> dict:
        return {
            "chain_id": self.chain_id,
            "nonce": self.nonce,
            "sender_pubkey": self.sender_pubkey,
            "kind": self.kind,
            "payload": dict(self.payload),
        }

    def signing_digest(self) -> bytes:
        return hash_of(self.signing_envelope())

    def tx_hash(self) -> bytes:
        return hash_of(self.to_dict())

    def to_dict(self) -> dict:
        return {
            "chain_id": self.chain_id,
            "nonce": self.nonce,
            "sender_pubkey": self.sender_pubkey.hex(),
            "kind": self.kind,
            "payload": dict(self.payload),
            "signature": self.signature.hex(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SignedTransaction":
        return cls(
            chain_id=d["chain_id"],
            nonce=int(d["nonce"]),
            sender_pubkey=from_hex(d["sender_pubkey"]),
            kind=d["kind"],
            payload=dict(d["payload"]),
            signature=from_hex(d["signature"]),
        )


def make_tx(
    *,
    chain_id: str,
    nonce: int,
    sender_pubkey: bytes,
    kind: str,
    payload: Mapping[str, Any],
) -> SignedTransaction:
    """Build an unsigned transaction (signature zeroed) ready for sign_tx."""
    if nonce < 0:
        raise ValueError("nonce must be non-negative")
    return SignedTransaction(
        chain_id=chain_id,
        nonce=nonce,
        sender_pubkey=sender_pubkey,
        kind=kind,
        payload=dict(payload),
        signature=bytes(SIGNATURE_LEN),
    )


def sign_tx(unsigned: SignedTransaction, secret: bytes) -> SignedTransaction:
    """Sign the transaction envelope; the resulting tx verifies under sender_pubkey."""
    sig = sign(secret, unsigned.signing_digest())
    signed = replace(unsigned, signature=sig)
    if not verify_tx_signature(signed):
        raise ValueError("secret does not match sender_pubkey")
    return signed


def verify_tx_signature(tx: SignedTransaction) -> bool:
    return verify(tx.sender_pubkey, tx.signature, tx.signing_digest())


@dataclass(frozen=True)
class BlockHeader:
    chain_id: str
    height: int
    parent_hash: bytes
    timestamp: int
    tx_root: bytes
    state_root: bytes
    proposer: bytes  # 20-byte address
    signature: bytes

    def signing_envelope(self) -> dict:
        return {
            "chain_id": self.chain_id,
            "height": self.height,
            "parent_hash": self.parent_hash,
            "timestamp": self.timestamp,
            "tx_root": self.tx_root,
            "state_root": self.state_root,
            "proposer": address_to_hex(self.proposer),
        }

    def signing_digest(self) -> bytes:
        return hash_of(self.signing_envelope())

    def to_dict(self) -> dict:
        d = self.signing_envelope()
        d["parent_hash"] = self.parent_hash.hex()
        d["tx_root"] = self.tx_root.hex()
        d["state_root"] = self.state_root.hex()
        d["signature"] = self.signature.hex()
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "BlockHeader":
        return cls(
            chain_id=d["chain_id"],
            height=int(d["height"]),
            parent_hash=from_hex(d["parent_hash"]),
            timestamp=int(d["timestamp"]),
            tx_root=from_hex(d["tx_root"]),
            state_root=from_hex(d["state_root"]),
            proposer=address_from_hex(d["proposer"]),
            signature=from_hex(d["signature"]),
        )


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    transactions: tuple[SignedTransaction, ...]

    def block_hash(self) -> bytes:
        return hash_of(self.header.to_dict())

    def to_dict(self) -> dict:
        return {
            "header": self.header.to_dict(),
            "transactions": [tx.to_dict() for tx in self.transactions],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Block":
        return cls(
            header=BlockHeader.from_dict(d["header"]),
            transactions=tuple(
                SignedTransaction.from_dict(t) for t in d["transactions"]
            ),
        )


def compute_tx_root(txs: Sequence[SignedTransaction]) -> bytes:
    """Flat commitment to block contents: hash of the ordered list of tx hashes."""
    return hash_of([tx.tx_hash() for tx in txs])


def sign_header(header: BlockHeader, secret: bytes) -> BlockHeader:
    return replace(header, signature=sign(secret, header.signing_digest()))


def validate_block_structure(
    block: Block,
    parent: Block,
    proposer_pubkeys: Mapping[bytes, bytes],
) -> None:
    """Structural validation of a child block against its parent.

    `proposer_pubkeys` maps validator address -> ed25519 pubkey, as registered
    in genesis. Raises ChainError with one of: BadHeight, BadParent,
    BadChainId, BadTxRoot, BadTxSig, BadProposerSig.
    """
    h = block.header
    if h.parent_hash != parent.block_hash():
        raise ChainError("BadParent", "parent_hash does not match parent block")
    if h.height != parent.header.height + 1:
        raise ChainError(
            "BadHeight", f"expected {parent.header.height + 1}, got {h.height}"
        )
    if h.chain_id != parent.header.chain_id:
        raise ChainError("BadChainId", h.chain_id)
    if h.tx_root != compute_tx_root(block.transactions):
        raise ChainError("BadTxRoot")
    for tx in block.transactions:
        if tx.chain_id != h.chain_id:
            raise ChainError("BadTxSig", "tx chain_id mismatch")
        if not verify_tx_signature(tx):
            raise ChainError("BadTxSig", tx.tx_hash().hex())
    pubkey = proposer_pubkeys.get(h.proposer)
    if pubkey is None or not verify(pubkey, h.signature, h.signing_digest()):
        raise ChainError("BadProposerSig", address_to_hex(h.proposer))
