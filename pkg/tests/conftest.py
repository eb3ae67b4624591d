import pytest

from blockcampus.genesis import BootstrapAccount, GenesisFile
from blockcampus.keys import Keypair, address_to_hex
from blockcampus.ledger import SignedTransaction, make_tx, sign_tx
from blockcampus.state import (
    ROLE_ADMIN,
    ROLE_OWNER,
    WorldState,
    apply_transaction,
    registration_digest,
)

CHAIN_ID = "blockcampus-test"


def kp(tag: int) -> Keypair:
    """Deterministic keypair from a one-byte tag."""
    return Keypair.from_secret(bytes([tag]) * 32)


@pytest.fixture
def owner_key():
    return kp(1)


@pytest.fixture
def admin_key():
    return kp(2)


@pytest.fixture
def validator_keys():
    return [kp(1), kp(2), kp(3), kp(4)]


@pytest.fixture
def genesis(validator_keys):
    accounts = [
        BootstrapAccount(
            pubkey=validator_keys[0].pubkey, username="owner", role=ROLE_OWNER
        ),
        BootstrapAccount(
            pubkey=validator_keys[1].pubkey, username="admin", role=ROLE_ADMIN
        ),
        BootstrapAccount(
            pubkey=validator_keys[2].pubkey, username="val-2", role=ROLE_ADMIN
        ),
        BootstrapAccount(
            pubkey=validator_keys[3].pubkey, username="val-3", role=ROLE_ADMIN
        ),
    ]
    return GenesisFile(
        chain_id=CHAIN_ID,
        validators=tuple(k.address for k in validator_keys),
        bootstrap_accounts=tuple(accounts),
    )


def build_tx(key: Keypair, nonce: int, kind: str, payload: dict,
             chain_id: str = CHAIN_ID) -> SignedTransaction:
    unsigned = make_tx(
        chain_id=chain_id,
        nonce=nonce,
        sender_pubkey=key.pubkey,
        kind=kind,
        payload=payload,
    )
    return sign_tx(unsigned, key.secret)


def registration_tx(user: Keypair, admin: Keypair, username: str, role: str,
                    chain_id: str = CHAIN_ID) -> SignedTransaction:
    digest = registration_digest(chain_id, user.pubkey, username, role)
    return build_tx(
        user,
        0,
        "RegisterUser",
        {
            "username": username,
            "role": role,
            "admin_pubkey": admin.pubkey.hex(),
            "admin_sig": admin.sign(digest).hex(),
        },
        chain_id=chain_id,
    )


def apply_ok(state: WorldState, tx: SignedTransaction, height: int = 1):
    new, events = apply_transaction(state, tx, height)
    return new, events


def register_user(state: WorldState, user: Keypair, admin: Keypair,
                  username: str, role: str = "Student", height: int = 1):
    tx = registration_tx(user, admin, username, role, chain_id=state.chain_id)
    new, _ = apply_transaction(state, tx, height)
    return new


def addr_hex(key: Keypair) -> str:
    return address_to_hex(key.address)
