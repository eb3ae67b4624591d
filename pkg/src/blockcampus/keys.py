"""Ed25519 keypairs and address derivation.

An address is the first 20 bytes of the SHA-256 of the raw 32-byte public
key, rendered as "0x" + 40 lowercase hex chars everywhere it crosses an
interface boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .codec import from_hex, sha256

ADDRESS_LEN = 20
PUBKEY_LEN = 32
SIGNATURE_LEN = 64


def derive_address(pubkey: bytes) -> bytes:
    """First 20 bytes of sha256(pubkey)."""
    if len(pubkey) != PUBKEY_LEN:
        raise ValueError(f"pubkey must be {PUBKEY_LEN} bytes, got {len(pubkey)}")
    return sha256(pubkey)[:ADDRESS_LEN]


def address_to_hex(addr: bytes) -> str:
    if len(addr) != ADDRESS_LEN:
        raise ValueError(f"address must be {ADDRESS_LEN} bytes")
    return "0x" + addr.hex()


def address_from_hex(s: str) -> bytes:
    if not s.startswith("0x") or len(s) != 2 + 2 * ADDRESS_LEN:
        raise ValueError(f"bad address rendering: {s!r}")
    return from_hex(s[2:])


def sign(secret: bytes, message: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(secret).sign(message)


def verify(pubkey: bytes, signature: bytes, message: bytes) -> bool:
    if len(pubkey) != PUBKEY_LEN or len(signature) != SIGNATURE_LEN:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(pubkey).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


@dataclass(frozen=True)
class Keypair:
    secret: bytes
    pubkey: bytes

    @classmethod
    def generate(cls) -> "Keypair":
        sk = Ed25519PrivateKey.generate()
        return cls._from_private(sk)

    @classmethod
    def from_secret(cls, secret: bytes) -> "Keypair":
        return cls._from_private(Ed25519PrivateKey.from_private_bytes(secret))

    @classmethod
    def _from_private(cls, sk: Ed25519PrivateKey) -> "Keypair":
        from cryptography.hazmat.primitives.serialization import (
            Encoding,
            NoEncryption,
            PrivateFormat,
            PublicFormat,
        )

        secret = sk.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())
        pubkey = sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        return cls(secret=secret, pubkey=pubkey)

    @property
    def address(self) -> bytes:
        return derive_address(self.pubkey)

    def sign(self, message: bytes) -> bytes:
        return sign(self.secret, message)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(
                {"pubkey_hex": self.pubkey.hex(), "secret_hex": self.secret.hex()},
                sort_keys=True,
                separators=(",", ":"),
            )
            + "\n"
        )

    @classmethod
    def load(cls, path: str | Path) -> "Keypair":
        data = json.loads(Path(path).read_text())
        kp = cls.from_secret(from_hex(data["secret_hex"]))
        if kp.pubkey != from_hex(data["pubkey_hex"]):
            raise ValueError(f"keypair file {path} is inconsistent")
        return kp
