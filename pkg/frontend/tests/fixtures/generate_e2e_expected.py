"""Regenerate e2e_expected.json: final balances for the fixed E2E scenario,
computed by the independent replay oracle rather than the state machine.

    python3 frontend/tests/fixtures/generate_e2e_expected.py
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[3]
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT))

from blockcampus.keys import Keypair, address_to_hex, sign  # noqa: E402
from blockcampus.ledger import make_tx, sign_tx  # noqa: E402
from blockcampus.state import registration_digest  # noqa: E402

from e2e_server import ADMIN_SECRET, USER_SECRETS, make_genesis  # noqa: E402
from tests.oracle import replay  # noqa: E402

HERE = Path(__file__).resolve().parent


def main() -> None:
    genesis = make_genesis()
    admin = Keypair.from_secret(ADMIN_SECRET)
    users = {k: Keypair.from_secret(v) for k, v in USER_SECRETS.items()}
    nonces = {k: 0 for k in users}
    log = []

    def tx(who: str, kind: str, payload: dict):
        key = users[who]
        signed = sign_tx(
            make_tx(chain_id=genesis.chain_id, nonce=nonces[who],
                    sender_pubkey=key.pubkey, kind=kind, payload=payload),
            key.secret,
        )
        nonces[who] += 1
        # one height per phase keeps ages tiny, matching the live run where
        # every step lands within a few one-second blocks
        log.append((signed, len(log) + 1))
        return signed

    def register(who: str, role: str):
        key = users[who]
        digest = registration_digest(genesis.chain_id, key.pubkey, who, role)
        return tx(who, "RegisterUser", {
            "username": who,
            "role": role,
            "admin_pubkey": admin.pubkey.hex(),
            "admin_sig": sign(admin.secret, digest).hex(),
        })

    register("alice", "Student")
    register("bob", "Student")
    register("carol", "TA")
    tx("carol", "CreateCommunity", {"id": "campus", "name": "Campus"})
    tx("alice", "JoinCommunity", {"id": "campus"})
    tx("bob", "JoinCommunity", {"id": "campus"})
    question = tx("alice", "PostQuestion",
                  {"community": "campus", "title": "What is a blockchain?",
                   "cid": "sha256-" + "11" * 32})
    answers = [
        tx("bob", "PostAnswer",
           {"question_id": question.tx_hash().hex(), "cid": "sha256-" + "22" * 32})
        for _ in range(4)
    ]
    for answer in answers:
        tx("carol", "StaffRate",
           {"post_id": answer.tx_hash().hex(), "stars": 5})
    tx("alice", "Vote",
       {"post_id": answers[0].tx_hash().hex(), "direction": "up"})
    tx("bob", "GiveAward", {"post_id": question.tx_hash().hex()})
    tx("alice", "RedeemService", {"service_id": "coffee"})

    accounts, buckets = replay(genesis, log)
    expected = {
        "accounts": {
            who: accounts[users[who].address]
            | {"address": address_to_hex(users[who].address)}
            for who in users
        },
        "buckets": buckets,
    }
    (HERE / "e2e_expected.json").write_text(json.dumps(expected, indent=2))
    print(json.dumps(expected, indent=2))


if __name__ == "__main__":
    main()
