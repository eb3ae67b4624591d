"""Seeded deterministic discrete-event network simulator.

Runs many nodes with configurable link latency, message loss, and timed
partitions. All simulated time is integer milliseconds and all randomness
flows from one seeded RNG, so a given SimConfig always yields a
byte-identical trace. Events are processed strictly in (time, insertion
sequence) order.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from .genesis import BootstrapAccount, GenesisFile
from .keys import Keypair
from .ledger import SignedTransaction
from .node import BROADCAST, Node
from .state import ROLE_ADMIN, ROLE_OWNER

MS = 1000
TICK_MS = 1000  # block-production timer granularity


@dataclass(frozen=True)
class Partition:
    start_ms: int
    end_ms: int
    side_a: frozenset  # node indices; everyone else is on side B

    def blocks_link(self, t_ms: int, a: int, b: int) -> bool:
        if not (self.start_ms <= t_ms < self.end_ms):
            return False
        return (a in self.side_a) != (b in self.side_a)

    def to_dict(self) -> dict:
        return {
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "side_a": sorted(self.side_a),
        }


@dataclass(frozen=True)
class SimConfig:
    seed: int
    n_nodes: int
    validator_indices: tuple[int, ...]
    latency_ms: tuple[int, int] = (10, 50)
    drop_prob: float = 0.0
    partitions: tuple[Partition, ...] = ()
    crashed: tuple[int, ...] = ()  # node indices that never tick or receive

    def __post_init__(self) -> None:
        if self.n_nodes < 1 or not self.validator_indices:
            raise ValueError("need at least one node and one validator")
        if any(i < 0 or i >= self.n_nodes for i in self.validator_indices):
            raise ValueError("validator index out of range")
        lo, hi = self.latency_ms
        if not (0 <= lo <= hi):
            raise ValueError("bad latency range")
        if not 0.0 <= self.drop_prob < 1.0:
            raise ValueError("drop_prob must be in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_nodes": self.n_nodes,
            "validator_indices": list(self.validator_indices),
            "latency_ms": list(self.latency_ms),
            "drop_prob": self.drop_prob,
            "partitions": [p.to_dict() for p in self.partitions],
            "crashed": list(self.crashed),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SimConfig":
        return cls(
            seed=int(d["seed"]),
            n_nodes=int(d["n_nodes"]),
            validator_indices=tuple(int(i) for i in d["validator_indices"]),
            latency_ms=tuple(int(x) for x in d.get("latency_ms", (10, 50))),
            drop_prob=float(d.get("drop_prob", 0.0)),
            partitions=tuple(
                Partition(
                    start_ms=int(p["start_ms"]),
                    end_ms=int(p["end_ms"]),
                    side_a=frozenset(int(i) for i in p["side_a"]),
                )
                for p in d.get("partitions", ())
            ),
            crashed=tuple(int(i) for i in d.get("crashed", ())),
        )


def make_test_genesis(
    n_validators: int,
    chain_id: str = "blockcampus-sim",
    n_users: int = 0,
    consensus=None,
    econ=None,
) -> tuple[GenesisFile, list[Keypair], list[Keypair]]:
    """Deterministic genesis for simulations: n validator keypairs (the first
    is also Owner, the second Admin when present) plus optional student users.
    Returns (genesis, validator_keypairs, user_keypairs)."""
    from .consensus import ConsensusParams
    from .econ import EconParams

    vkeys = [Keypair.from_secret(bytes([1 + i]) * 32) for i in range(n_validators)]
    ukeys = [Keypair.from_secret(bytes([101 + i]) * 32) for i in range(n_users)]
    accounts = []
    for i, kp in enumerate(vkeys):
        role = ROLE_OWNER if i == 0 else (ROLE_ADMIN if i == 1 else ROLE_ADMIN)
        accounts.append(
            BootstrapAccount(pubkey=kp.pubkey, username=f"validator-{i}", role=role)
        )
    if n_validators == 1:
        # Still need an Admin: reuse a dedicated admin key.
        admin = Keypair.from_secret(bytes([99]) * 32)
        accounts.append(
            BootstrapAccount(pubkey=admin.pubkey, username="admin-0", role=ROLE_ADMIN)
        )
        ukeys.insert(0, admin)
    genesis = GenesisFile(
        chain_id=chain_id,
        validators=tuple(kp.address for kp in vkeys),
        consensus=consensus or ConsensusParams(),
        econ=econ or EconParams(),
        bootstrap_accounts=tuple(accounts),
    )
    return genesis, vkeys, ukeys


class Trace:
    def __init__(self, config: SimConfig):
        self.config = config
        self.events: list[dict] = []

    def record(self, event: dict) -> None:
        self.events.append(event)

    def to_jsonl(self) -> str:
        lines = [json.dumps({"config": self.config.to_dict()}, sort_keys=True)]
        lines += [json.dumps(e, sort_keys=True) for e in self.events]
        return "\n".join(lines) + "\n"


class Simulation:
    """Event-queue execution of a node network."""

    def __init__(
        self,
        config: SimConfig,
        genesis: Optional[GenesisFile] = None,
        validator_keypairs: Optional[list[Keypair]] = None,
    ):
        self.config = config
        if genesis is None:
            genesis, vkeys, _ = make_test_genesis(len(config.validator_indices))
        elif validator_keypairs is not None:
            vkeys = validator_keypairs
        else:
            raise ValueError("custom genesis requires validator_keypairs")
        self.genesis = genesis
        self.nodes: list[Node] = []
        vit = iter(vkeys)
        for i in range(config.n_nodes):
            kp = next(vit) if i in config.validator_indices else None
            self.nodes.append(Node(genesis, node_id=f"n{i}", keypair=kp))
        self.rng = random.Random(config.seed)
        self.now_ms = 0
        self._seq = 0
        self._queue: list[tuple[int, int, str, Any]] = []
        self.trace = Trace(config)
        for i in range(config.n_nodes):
            self._schedule(TICK_MS, "tick", i)

    # -- scheduling ----------------------------------------------------------

    def _schedule(self, t_ms: int, kind: str, data: Any) -> None:
        heapq.heappush(self._queue, (t_ms, self._seq, kind, data))
        self._seq += 1

    def schedule_tx(self, t_ms: int, node_idx: int, tx: SignedTransaction) -> None:
        self._schedule(t_ms, "submit", (node_idx, tx))

    def _link_open(self, src: int, dst: int) -> bool:
        if src in self.config.crashed or dst in self.config.crashed:
            return False
        for p in self.config.partitions:
            if p.blocks_link(self.now_ms, src, dst):
                return False
        return True

    def _dispatch_outbox(self, src: int) -> None:
        for dest, msg in self.nodes[src].drain_outbox():
            targets = (
                [i for i in range(self.config.n_nodes) if i != src]
                if dest == BROADCAST
                else [int(dest[1:])]
            )
            for dst in targets:
                if not self._link_open(src, dst):
                    continue
                if self.config.drop_prob > 0 and self.rng.random() < self.config.drop_prob:
                    continue
                delay = self.rng.randint(*self.config.latency_ms)
                self._schedule(self.now_ms + delay, "deliver", (src, dst, msg))

    # -- run loop ------------------------------------------------------------

    def run(self, duration_ms: int) -> Trace:
        end = self.now_ms + duration_ms
        while self._queue and self._queue[0][0] <= end:
            t_ms, _, kind, data = heapq.heappop(self._queue)
            self.now_ms = t_ms
            if kind == "tick":
                i = data
                if i not in self.config.crashed:
                    block = self.nodes[i].tick(t_ms // MS)
                    if block is not None:
                        self.trace.record(
                            {
                                "t_ms": t_ms,
                                "type": "block_produced",
                                "node": i,
                                "height": block.header.height,
                                "hash": block.block_hash().hex(),
                                "proposer": block.header.proposer.hex(),
                                "n_txs": len(block.transactions),
                            }
                        )
                    self._dispatch_outbox(i)
                self._schedule(t_ms + TICK_MS, "tick", i)
            elif kind == "deliver":
                src, dst, msg = data
                if dst not in self.config.crashed:
                    before = self.nodes[dst].head_hash
                    self.nodes[dst].receive(msg, sender=f"n{src}")
                    after = self.nodes[dst].head_hash
                    if after != before:
                        self.trace.record(
                            {
                                "t_ms": t_ms,
                                "type": "head_switch",
                                "node": dst,
                                "height": self.nodes[dst].head_height,
                                "hash": after.hex(),
                            }
                        )
                    self._dispatch_outbox(dst)
            elif kind == "submit":
                i, tx = data
                if i not in self.config.crashed:
                    reason = self.nodes[i].submit_tx(tx)
                    self.trace.record(
                        {
                            "t_ms": t_ms,
                            "type": "tx_submitted",
                            "node": i,
                            "tx": tx.tx_hash().hex(),
                            "rejected": reason,
                        }
                    )
                    self._dispatch_outbox(i)
        self.now_ms = end
        return self.trace

    def finalize_trace(self) -> Trace:
        for i, node in enumerate(self.nodes):
            self.trace.record(
                {
                    "t_ms": self.now_ms,
                    "type": "final",
                    "node": i,
                    "height": node.head_height,
                    "head": node.head_hash.hex(),
                    "state_root": node.head_state_root().hex(),
                }
            )
        return self.trace

    def heads(self) -> list[tuple[int, bytes, bytes]]:
        return [
            (n.head_height, n.head_hash, n.head_state_root()) for n in self.nodes
        ]


def run_simulation(
    config: SimConfig,
    duration_ms: int,
    genesis: Optional[GenesisFile] = None,
    validator_keypairs: Optional[list[Keypair]] = None,
) -> Trace:
    sim = Simulation(config, genesis=genesis, validator_keypairs=validator_keypairs)
    sim.run(duration_ms)
    return sim.finalize_trace()
