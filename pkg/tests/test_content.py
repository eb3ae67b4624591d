import pytest

from blockcampus.content import (
    MAX_BLOB_SIZE,
    BlobStore,
    TooLarge,
    cid_for,
    verify_cid,
)

EMPTY_CID = "sha256-e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


@pytest.fixture(params=["disk", "memory"])
def store(request, tmp_path):
    return BlobStore(tmp_path / "blobs") if request.param == "disk" else BlobStore()


def test_put_get_roundtrip(store):
    cid = store.put(b"hello world")
    assert store.get(cid) == b"hello world"


def test_put_idempotent(store):
    data = b"same bytes"
    assert store.put(data) == store.put(data)
    assert len(store) == 1


def test_empty_content_cid(store):
    assert store.put(b"") == EMPTY_CID


def test_size_limit(store):
    store.put(b"x" * MAX_BLOB_SIZE)
    with pytest.raises(TooLarge):
        store.put(b"x" * (MAX_BLOB_SIZE + 1))


def test_unknown_cid_absent(store):
    assert store.get("sha256-" + "ab" * 32) is None


def test_malformed_cid_absent(store):
    assert store.get("not-a-cid") is None
    assert store.get("sha256-XYZ") is None


def test_distinct_content_distinct_cids(store):
    cids = {store.put(bytes([i])) for i in range(10)}
    assert len(cids) == 10
    assert len(store) == 10


def test_corrupted_disk_entry_evicted(tmp_path):
    store = BlobStore(tmp_path / "blobs")
    cid = store.put(b"precious")
    path = store._path(cid)
    path.write_bytes(b"corrupted")
    assert store.get(cid) is None
    assert not path.exists()


def test_fetch_from_honest_peer(store):
    data = b"remote content"
    cid = cid_for(data)
    assert store.fetch_from_peers(cid, [lambda c: data]) == data
    assert store.get(cid) == data  # replicated locally


def test_malicious_peer_discarded(store):
    data = b"the real bytes"
    cid = cid_for(data)
    calls = []

    def evil(c):
        calls.append("evil")
        return b"wrong bytes entirely"

    def honest(c):
        calls.append("honest")
        return data

    assert store.fetch_from_peers(cid, [evil, honest]) == data
    assert calls == ["evil", "honest"]
    assert store.get(cid) == data


def test_no_peer_has_it(store):
    assert store.fetch_from_peers("sha256-" + "cd" * 32, [lambda c: None]) is None


def test_fuzz_corrupting_peers_never_poison(store):
    import random

    rng = random.Random(3)
    for _ in range(50):
        data = rng.randbytes(rng.randrange(1, 64))
        cid = cid_for(data)
        corrupt = bytearray(data)
        corrupt[rng.randrange(len(corrupt))] ^= 0xFF
        got = store.fetch_from_peers(cid, [lambda c: bytes(corrupt)])
        assert got is None
        assert store.get(cid) is None
    # self-certification: anything returned for a cid hashes to that cid
    for _ in range(20):
        data = rng.randbytes(8)
        cid = store.put(data)
        assert verify_cid(cid, store.get(cid))
