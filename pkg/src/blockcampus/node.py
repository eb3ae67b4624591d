"""Full-node assembly: mempool, block production, gossip handling, and sync.

A node is a single logical event loop: every inbound message, timer tick,
or API command mutates it one at a time. Outbound traffic is queued on
`outbox` as (destination, message) pairs and drained by the enclosing
transport — the deterministic simulator in tests, an HTTP poster in the
real process. The node itself never touches a socket or a wall clock.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

from .consensus import (
    head_sort_key,
    min_timestamp,
    proposer_offset,
    verify_block_consensus,
)
from .content import BlobStore, verify_cid
from .genesis import GenesisFile
from .keys import Keypair, address_to_hex
from .ledger import (
    Block,
    BlockHeader,
    ChainError,
    SignedTransaction,
    compute_tx_root,
    sign_header,
    validate_block_structure,
    verify_tx_signature,
)
from .state import WorldState, apply_block, apply_transaction, state_root

BROADCAST = "*"
SNAPSHOT_INTERVAL = 64  # heights between retained full-state snapshots
MAX_BLOCKS_PER_RESPONSE = 128
DEFAULT_POOL_CAP = 10_000
DEFAULT_PER_SENDER_PER_BLOCK = 16


# --- wire messages ----------------------------------------------------------

def msg_tx(tx: SignedTransaction) -> dict:
    return {"type": "TxGossip", "tx": tx.to_dict()}


def msg_block(block: Block) -> dict:
    return {"type": "BlockGossip", "block": block.to_dict()}


def msg_get_blocks(from_height: int, to_height: int) -> dict:
    return {"type": "GetBlocks", "from_height": from_height, "to_height": to_height}


def msg_blocks(blocks: list[Block]) -> dict:
    return {"type": "Blocks", "blocks": [b.to_dict() for b in blocks]}


def msg_content_request(cid: str) -> dict:
    return {"type": "ContentRequest", "cid": cid}


def msg_content_response(cid: str, data: Optional[bytes]) -> dict:
    return {
        "type": "ContentResponse",
        "cid": cid,
        "data": data.hex() if data is not None else None,
    }


# --- mempool ----------------------------------------------------------------

class Mempool:
    """Per-sender, nonce-ordered pool of signature-valid transactions."""

    def __init__(
        self,
        cap: int = DEFAULT_POOL_CAP,
        per_sender_per_block: int = DEFAULT_PER_SENDER_PER_BLOCK,
    ):
        self.cap = cap
        self.per_sender_per_block = per_sender_per_block
        self.by_sender: dict[bytes, dict[int, SignedTransaction]] = {}
        self.hashes: set[bytes] = set()

    def __len__(self) -> int:
        return len(self.hashes)

    def __iter__(self) -> Iterator[SignedTransaction]:
        for sender in sorted(self.by_sender):
            for nonce in sorted(self.by_sender[sender]):
                yield self.by_sender[sender][nonce]

    def add(self, tx: SignedTransaction, account_nonce: int) -> Optional[str]:
        """Admit a transaction; returns a rejection reason or None."""
        h = tx.tx_hash()
        if h in self.hashes:
            return "DuplicateTx"
        if not verify_tx_signature(tx):
            return "BadSignature"
        if tx.nonce < account_nonce:
            return "BadNonce"
        if len(self.hashes) >= self.cap:
            return "PoolFull"
        queue = self.by_sender.setdefault(tx.sender, {})
        if tx.nonce in queue:
            return "DuplicateTx"
        queue[tx.nonce] = tx
        self.hashes.add(h)
        return None

    def remove(self, tx: SignedTransaction) -> None:
        queue = self.by_sender.get(tx.sender)
        if queue and queue.get(tx.nonce) is not None:
            if queue[tx.nonce].tx_hash() == tx.tx_hash():
                self.hashes.discard(tx.tx_hash())
                del queue[tx.nonce]
                if not queue:
                    del self.by_sender[tx.sender]

    def prune_below(self, sender: bytes, account_nonce: int) -> None:
        queue = self.by_sender.get(sender)
        if not queue:
            return
        for nonce in [n for n in queue if n < account_nonce]:
            self.hashes.discard(queue[nonce].tx_hash())
            del queue[nonce]
        if not queue:
            del self.by_sender[sender]

    def select(self, base_state: WorldState, height: int) -> list[SignedTransaction]:
        """Pick transactions for a block: sender-address order, then nonce,
        each validated against the evolving state. Invalid ones are evicted."""
        chosen: list[SignedTransaction] = []
        state = base_state
        for sender in sorted(self.by_sender):
            taken = 0
            acct = state.accounts.get(sender)
            start_nonce = acct.nonce if acct else 0
            queue = self.by_sender[sender]
            nonce = start_nonce
            while nonce in queue and taken < self.per_sender_per_block:
                tx = queue[nonce]
                try:
                    state, _ = apply_transaction(state, tx, height)
                except ChainError:
                    self.remove(tx)
                    break  # later nonces from this sender cannot apply either
                chosen.append(tx)
                taken += 1
                nonce += 1
        return chosen


# --- node -------------------------------------------------------------------

@dataclass
class BlockMeta:
    height: int
    cum_score: int
    parent: bytes


class Node:
    def __init__(
        self,
        genesis: GenesisFile,
        node_id: str,
        keypair: Optional[Keypair] = None,
        blob_store: Optional[BlobStore] = None,
    ):
        self.genesis = genesis
        self.node_id = node_id
        self.keypair = keypair
        self.vset = genesis.validator_set()
        self.params = genesis.consensus
        self.proposer_pubkeys = genesis.proposer_pubkeys()
        self.blobs = blob_store if blob_store is not None else BlobStore()

        gblock = genesis.genesis_block()
        ghash = gblock.block_hash()
        self.blocks: dict[bytes, Block] = {ghash: gblock}
        self.meta: dict[bytes, BlockMeta] = {
            ghash: BlockMeta(height=0, cum_score=0, parent=b"")
        }
        self.snapshots: dict[bytes, WorldState] = {ghash: genesis.initial_state()}
        self.head_hash = ghash
        self.head_state = genesis.initial_state()

        self.mempool = Mempool()
        self.orphans: dict[bytes, list[Block]] = {}  # parent hash -> waiting blocks
        self.seen_tx: set[bytes] = set()
        self.invalid_blocks: set[bytes] = set()
        self.outbox: list[tuple[str, dict]] = []
        self._produced_on: set[tuple[bytes, int]] = set()

    # -- views --------------------------------------------------------------

    @property
    def head(self) -> Block:
        return self.blocks[self.head_hash]

    @property
    def head_height(self) -> int:
        return self.head.header.height

    def head_state_root(self) -> bytes:
        return state_root(self.head_state)

    def is_validator(self) -> bool:
        return self.keypair is not None and self.keypair.address in self.vset

    def canonical_chain(self) -> list[Block]:
        chain = []
        h = self.head_hash
        while h:
            chain.append(self.blocks[h])
            h = self.meta[h].parent
        chain.reverse()
        return chain

    def block_at_height(self, height: int) -> Optional[Block]:
        h = self.head_hash
        while h:
            m = self.meta[h]
            if m.height == height:
                return self.blocks[h]
            if m.height < height:
                return None
            h = m.parent
        return None

    # -- transaction intake --------------------------------------------------

    def submit_tx(self, tx: SignedTransaction) -> Optional[str]:
        """Admit to the mempool and gossip once; returns rejection reason or None."""
        h = tx.tx_hash()
        if h in self.seen_tx:
            return "DuplicateTx"
        acct = self.head_state.accounts.get(tx.sender)
        account_nonce = acct.nonce if acct else 0
        reason = self.mempool.add(tx, account_nonce)
        if reason is not None:
            return reason
        if tx.nonce == account_nonce:
            # next-in-line for its sender: dry-run against the committed head
            # so callers get the state-level rejection code immediately.
            # Future nonces stay queued unchecked; select() vets them later.
            try:
                apply_transaction(self.head_state, tx, self.head_height + 1)
            except ChainError as e:
                self.mempool.remove(tx)
                return e.code
        self.seen_tx.add(h)
        self.outbox.append((BROADCAST, msg_tx(tx)))
        return None

    # -- block production ----------------------------------------------------

    def tick(self, now: int) -> Optional[Block]:
        """Produce a block if this node is a validator whose turn (or
        fallback slot) has arrived. `now` is seconds on the consensus clock."""
        if not self.is_validator():
            return None
        me = self.keypair.address
        height = self.head_height + 1
        k = proposer_offset(height, me, self.vset)
        parent = self.head
        eligible = max(
            min_timestamp(parent.header.timestamp, k, self.params),
            parent.header.timestamp + 1,
        )
        if now < eligible:
            return None
        if (self.head_hash, height) in self._produced_on:
            return None
        block = self._build_block(parent, now)
        self._produced_on.add((self.head_hash, height))
        self._accept_block(block, origin=None)
        return block

    def _build_block(self, parent: Block, now: int) -> Block:
        height = parent.header.height + 1
        txs = self.mempool.select(self.head_state, height)
        state = self.head_state
        for tx in txs:
            state, _ = apply_transaction(state, tx, height)
        if state is self.head_state:
            state = state.clone()
        state.height_applied = height
        header = BlockHeader(
            chain_id=self.genesis.chain_id,
            height=height,
            parent_hash=parent.block_hash(),
            timestamp=now,
            tx_root=compute_tx_root(txs),
            state_root=state_root(state),
            proposer=self.keypair.address,
            signature=bytes(64),
        )
        header = sign_header(header, self.keypair.secret)
        return Block(header=header, transactions=tuple(txs))

    # -- message handling ----------------------------------------------------

    def receive(self, msg: dict, sender: str) -> None:
        kind = msg.get("type")
        if kind == "TxGossip":
            tx = SignedTransaction.from_dict(msg["tx"])
            h = tx.tx_hash()
            if h in self.seen_tx:
                return
            self.seen_tx.add(h)
            acct = self.head_state.accounts.get(tx.sender)
            if self.mempool.add(tx, acct.nonce if acct else 0) is None:
                self.outbox.append((BROADCAST, msg_tx(tx)))
        elif kind == "BlockGossip":
            self.handle_block(Block.from_dict(msg["block"]), origin=sender)
        elif kind == "GetBlocks":
            lo = max(1, int(msg["from_height"]))
            hi = min(int(msg["to_height"]), self.head_height)
            hi = min(hi, lo + MAX_BLOCKS_PER_RESPONSE - 1)
            blocks = [
                b for h in range(lo, hi + 1) if (b := self.block_at_height(h))
            ]
            if blocks:
                self.outbox.append((sender, msg_blocks(blocks)))
        elif kind == "Blocks":
            for bd in msg["blocks"][:MAX_BLOCKS_PER_RESPONSE]:
                self.handle_block(Block.from_dict(bd), origin=sender)
        elif kind == "ContentRequest":
            self.outbox.append(
                (sender, msg_content_response(msg["cid"], self.blobs.get(msg["cid"])))
            )
        elif kind == "ContentResponse":
            data = msg.get("data")
            if data is not None and verify_cid(msg["cid"], bytes.fromhex(data)):
                self.blobs.put(bytes.fromhex(data))

    def handle_block(self, block: Block, origin: Optional[str]) -> bool:
        """Validate and store an incoming block; returns True if accepted."""
        h = block.block_hash()
        if h in self.blocks or h in self.invalid_blocks:
            return False
        parent_hash = block.header.parent_hash
        if parent_hash not in self.blocks:
            # Unknown ancestry: park it and ask the sender for the gap.
            self.orphans.setdefault(parent_hash, []).append(block)
            if origin is not None:
                lo = max(1, block.header.height - MAX_BLOCKS_PER_RESPONSE)
                self.outbox.append(
                    (origin, msg_get_blocks(lo, block.header.height - 1))
                )
            return False
        return self._validate_and_accept(block, origin)

    def _validate_and_accept(self, block: Block, origin: Optional[str]) -> bool:
        h = block.block_hash()
        parent = self.blocks[block.header.parent_hash]
        try:
            validate_block_structure(block, parent, self.proposer_pubkeys)
            verify_block_consensus(block, parent, self.vset, self.params)
            parent_state = self.state_for(block.header.parent_hash)
            new_state, _ = apply_block(parent_state, block)
        except ChainError:
            self.invalid_blocks.add(h)
            return False
        self._accept_block(block, origin, precomputed_state=new_state)
        return True

    def _accept_block(
        self,
        block: Block,
        origin: Optional[str],
        precomputed_state: Optional[WorldState] = None,
    ) -> None:
        h = block.block_hash()
        pm = self.meta[block.header.parent_hash]
        k = proposer_offset(block.header.height, block.header.proposer, self.vset)
        weight = (
            self.params.in_turn_weight if k == 0 else self.params.out_turn_weight
        )
        self.blocks[h] = block
        self.meta[h] = BlockMeta(
            height=block.header.height,
            cum_score=pm.cum_score + weight,
            parent=block.header.parent_hash,
        )
        if precomputed_state is None:
            precomputed_state, _ = apply_block(self.state_for(self.meta[h].parent), block)
        if block.header.height % SNAPSHOT_INTERVAL == 0:
            self.snapshots[h] = precomputed_state.clone()
        # Re-gossip a newly accepted block exactly once.
        self.outbox.append((BROADCAST, msg_block(block)))
        self._maybe_adopt(h, precomputed_state)
        # Orphans waiting on this block can now be validated.
        for child in self.orphans.pop(h, []):
            self._validate_and_accept(child, origin)

    def _maybe_adopt(self, h: bytes, state: WorldState) -> None:
        cand = head_sort_key(self.meta[h].cum_score, self.blocks[h])
        cur = head_sort_key(self.meta[self.head_hash].cum_score, self.head)
        if cand > cur:
            self.head_hash = h
            self.head_state = state
            for sender, acct in state.accounts.items():
                self.mempool.prune_below(sender, acct.nonce)

    def state_for(self, block_hash: bytes) -> WorldState:
        """State after the given block: nearest retained snapshot, replayed
        forward along the branch."""
        if block_hash == self.head_hash:
            return self.head_state
        path: list[bytes] = []
        h = block_hash
        while h not in self.snapshots:
            path.append(h)
            h = self.meta[h].parent
        state = self.snapshots[h]
        for bh in reversed(path):
            state, _ = apply_block(state, self.blocks[bh])
        return state

    def request_content(self, cid: str) -> None:
        if not self.blobs.has(cid):
            self.outbox.append((BROADCAST, msg_content_request(cid)))

    def drain_outbox(self) -> list[tuple[str, dict]]:
        out, self.outbox = self.outbox, []
        return out
