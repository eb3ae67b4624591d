"""Content-addressed blob store for post bodies.

Transactions carry only CIDs; the bytes live off-chain here and replicate
between peers on demand. A CID is "sha256-" + 64 hex chars of the content
hash, so every returned blob is self-certifying: anything that does not hash
to its CID is discarded, whatever peer or disk it came from.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Callable, Iterable, Optional

from .codec import sha256

MAX_BLOB_SIZE = 256 * 1024

_CID_RE = re.compile(r"^sha256-[0-9a-f]{64}$")


class TooLarge(ValueError):
    pass


def cid_for(data: bytes) -> str:
    return "sha256-" + sha256(data).hex()


def is_valid_cid(cid: str) -> bool:
    return bool(_CID_RE.match(cid))


def verify_cid(cid: str, data: bytes) -> bool:
    return is_valid_cid(cid) and cid_for(data) == cid


class BlobStore:
    """Local blob store. With a root directory, blobs live one file per CID
    under a two-level hex fanout (ab/cd/sha256-abcd...); without one, blobs
    stay in memory (used by simulated nodes)."""

    def __init__(self, root: str | Path | None = None):
        self.root = Path(root) if root is not None else None
        self._mem: dict[str, bytes] = {}
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, cid: str) -> Path:
        digest = cid.split("-", 1)[1]
        return self.root / digest[:2] / digest[2:4] / cid  # type: ignore[operator]

    def put(self, data: bytes) -> str:
        if len(data) > MAX_BLOB_SIZE:
            raise TooLarge(f"{len(data)} bytes exceeds {MAX_BLOB_SIZE}")
        cid = cid_for(data)
        if self.root is None:
            self._mem[cid] = bytes(data)
        else:
            path = self._path(cid)
            if not path.exists():
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(".tmp")
                tmp.write_bytes(data)
                tmp.rename(path)
        return cid

    def get(self, cid: str) -> Optional[bytes]:
        if not is_valid_cid(cid):
            return None
        if self.root is None:
            data = self._mem.get(cid)
            if data is not None and not verify_cid(cid, data):
                del self._mem[cid]
                return None
            return data
        path = self._path(cid)
        if not path.exists():
            return None
        data = path.read_bytes()
        if not verify_cid(cid, data):
            # Corrupted on disk: evict rather than ever serving bad bytes.
            path.unlink(missing_ok=True)
            return None
        return data

    def has(self, cid: str) -> bool:
        return self.get(cid) is not None

    def __len__(self) -> int:
        if self.root is None:
            return len(self._mem)
        return sum(1 for _ in self.root.glob("*/*/sha256-*"))

    def fetch_from_peers(
        self, cid: str, peers: Iterable[Callable[[str], Optional[bytes]]]
    ) -> Optional[bytes]:
        """Ask peers in order for a blob; keep and return the first response
        that verifies, silently discarding anything else."""
        local = self.get(cid)
        if local is not None:
            return local
        for fetch in peers:
            data = fetch(cid)
            if data is not None and verify_cid(cid, data):
                self.put(data)
                return data
        return None
