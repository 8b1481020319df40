import pytest

from conftest import make_node
from crowdrep import canon
from crowdrep.crypto import keccak256
from crowdrep.errors import (
    AlreadyCommitted,
    AuthFailure,
    CommitmentMismatch,
    NotAccepted,
    NotAssigned,
    PastDue,
)
from crowdrep.submission import fetch_for_evaluator


def accepted_agreement(n_workers=5):
    node, workers, poster = make_node(n_workers=n_workers, enroll=True)
    tid = node.post_task(poster, "t", ["coding"], 1000, 5000, 5000)
    node.apply_task(workers[0], tid)
    aid = node.create_agreement(poster, tid, workers[0], 1000, 100, 5, 12)
    node.accept(workers[0], aid, 100)
    return node, workers, poster, tid, aid


def committed_submission(n_workers=5):
    node, workers, poster, tid, aid = accepted_agreement(n_workers)
    plaintext = canon.encode({"work": "done", "agreement": aid})
    sid, keys = node.commit(workers[0], aid, keccak256(plaintext))
    return node, workers, poster, tid, aid, sid, plaintext


def test_commit_creates_submission_and_marks_task():
    node, workers, poster, tid, aid, sid, _ = committed_submission()
    assert node.state.tasks[tid].status == "submitted"
    assert node.state.submissions[sid].commitment is not None
    entry = [e for e in node.entries if e.kind == "submit_hash"][0]
    assert entry.gas_charged == 114_068


def test_commit_returns_evaluator_public_keys():
    node, workers, poster, tid, aid = accepted_agreement()
    plaintext = b"deliverable"
    sid, keys = node.commit(workers[0], aid, keccak256(plaintext))
    pool = node.state.pools[sid][0]
    assert keys == [node.state.accounts[e].public_key for e in pool.selected]
    assert len(keys) == node.params.evaluators_per_submission


def test_second_commit_rejected():
    node, workers, poster, tid, aid, sid, _ = committed_submission()
    with pytest.raises(AlreadyCommitted):
        node.commit(workers[0], aid, keccak256(b"other"))


def test_commit_past_due_rejected():
    node, workers, poster, tid, aid = accepted_agreement()
    node.tick(13)  # due date 12; the agreement defaults
    with pytest.raises((PastDue, NotAccepted)):
        node.commit(workers[0], aid, keccak256(b"late"))


def test_reveal_produces_distinct_addresses_per_evaluator():
    node, workers, poster, tid, aid, sid, plaintext = committed_submission()
    addresses = node.reveal(workers[0], sid, plaintext)
    assert len(addresses) == 3
    assert len(set(addresses)) == 3
    submission = node.state.submissions[sid]
    assert set(submission.encrypted_refs.values()) == set(addresses)
    for address in addresses:
        assert address in node.state.store
        assert keccak256(node.state.store.get(address)) == address


def test_reveal_with_altered_plaintext_rejected():
    node, workers, poster, tid, aid, sid, plaintext = committed_submission()
    with pytest.raises(CommitmentMismatch):
        node.reveal(workers[0], sid, plaintext + b"!")


def test_assigned_evaluator_roundtrip_matches_commitment():
    node, workers, poster, tid, aid, sid, plaintext = committed_submission()
    node.reveal(workers[0], sid, plaintext)
    pool = node.state.pools[sid][0]
    commitment = node.state.submissions[sid].commitment
    for evaluator in pool.selected:
        fetched = node.fetch_for_evaluator(evaluator, sid)
        assert fetched == plaintext
        assert keccak256(fetched) == commitment


def test_unassigned_account_cannot_fetch():
    node, workers, poster, tid, aid, sid, plaintext = committed_submission()
    node.reveal(workers[0], sid, plaintext)
    pool = node.state.pools[sid][0]
    outsider = next(w for w in workers if w not in pool.selected and w != workers[0])
    with pytest.raises(NotAssigned):
        node.fetch_for_evaluator(outsider, sid)


def test_key_substitution_attack_fails_auth():
    # an envelope re-signed under a different worker key must not
    # authenticate as the submitting worker
    node, workers, poster, tid, aid, sid, plaintext = committed_submission()
    node.reveal(workers[0], sid, plaintext)
    pool = node.state.pools[sid][0]
    evaluator = pool.selected[0]
    impostor_secret = node.keyring[workers[1]]
    recipient_key = node.state.accounts[evaluator].public_key
    forged = node.state.cipher.seal(recipient_key, impostor_secret, plaintext)
    # splice the forged envelope into a copy of the store mapping
    address = node.state.submissions[sid].encrypted_refs[evaluator]
    node.state.store._blobs[address] = forged  # simulate hostile storage
    with pytest.raises(AuthFailure):
        node.fetch_for_evaluator(evaluator, sid)


def test_tampered_envelope_fails_auth():
    node, workers, poster, tid, aid, sid, plaintext = committed_submission()
    node.reveal(workers[0], sid, plaintext)
    pool = node.state.pools[sid][0]
    evaluator = pool.selected[0]
    address = node.state.submissions[sid].encrypted_refs[evaluator]
    blob = bytearray(node.state.store.get(address))
    blob[-1] ^= 0x01
    node.state.store._blobs[address] = bytes(blob)
    with pytest.raises(AuthFailure):
        node.fetch_for_evaluator(evaluator, sid)


def test_content_store_is_append_only_and_addressed():
    node, *_ = committed_submission()
    store = node.state.store
    a1 = store.put(b"blob one")
    a2 = store.put(b"blob one")
    assert a1 == a2 == keccak256(b"blob one")
    assert store.get(a1) == b"blob one"


def test_store_dump_and_manifest(tmp_path):
    from crowdrep.submission import dump_store, store_manifest
    node, workers, poster, tid, aid, sid, plaintext = committed_submission()
    node.reveal(workers[0], sid, plaintext)
    dump_store(node.state, str(tmp_path))
    manifest = store_manifest(node.state)
    assert str(sid) in manifest
    for evaluator_hex, address_hex in manifest[str(sid)].items():
        blob_path = tmp_path / "blobs" / address_hex
        assert blob_path.exists()
        assert keccak256(blob_path.read_bytes()).hex() == address_hex
    assert (tmp_path / "manifest.json").exists()
