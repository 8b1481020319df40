import dataclasses

import pytest

from conftest import ENDOWMENT, make_node
from crowdrep import canon
from crowdrep.crypto import MacSigner, ZERO_DIGEST, account_id_for
from crowdrep.errors import InvalidChain, UnknownSender
from crowdrep.ledger import (
    Ledger,
    compute_entry_hash,
    entries_from_bytes,
    entries_to_bytes,
    read_snapshot,
    verify_chain,
    write_snapshot,
)


def build_chain(n_extra_tasks=0):
    node, workers, poster = make_node(n_workers=2)
    for i in range(n_extra_tasks):
        node.post_task(poster, f"task {i}", ["coding"], 1000 + i, 5000, 5000)
    return node


def test_empty_chain_verifies():
    assert verify_chain([]).ok


def test_genesis_entry_uses_zero_prev_hash():
    node = build_chain()
    assert node.entries[0].index == 0
    assert node.entries[0].prev_hash == ZERO_DIGEST


def test_registration_can_open_a_chain():
    # a bare chain may start with a self-registering entry, no genesis
    signer = MacSigner()
    ledger = Ledger(signer)
    key = signer.keygen(b"first-worker")
    sender = account_id_for(key.public)
    args = {"role": "worker", "public_key": key.public, "profile_ref": b"\x00" * 32,
            "skills": ["coding"], "deposit_paid": 1, "endowment": 2}
    entry = ledger.append("create_worker", args, sender, key.secret, 229_786)
    assert entry.index == 0 and entry.prev_hash == ZERO_DIGEST
    assert ledger.verify().ok


def test_chain_linkage():
    node = build_chain(n_extra_tasks=3)
    entries = node.entries
    assert len(entries) >= 6
    assert entries[5].index == 5
    assert entries[5].prev_hash == entries[4].entry_hash
    for i in range(1, len(entries)):
        assert entries[i].prev_hash == entries[i - 1].entry_hash


def test_post_task_gas_recorded():
    node = build_chain(n_extra_tasks=1)
    post = [e for e in node.entries if e.kind == "post_task"][0]
    assert post.gas_charged == 250_502


def test_valid_chain_verifies_ok():
    node = build_chain(n_extra_tasks=4)
    report = node.ledger.verify()
    assert report.ok and report.describe() == "ok"


def _mutate(entry, **changes):
    return dataclasses.replace(entry, **changes)


def test_mutated_payload_detected():
    node = build_chain(n_extra_tasks=4)
    entries = list(node.entries)
    args = entries[3].args()
    args["deposit_paid"] = args.get("deposit_paid", 0) + 1 if "deposit_paid" in args else 1
    tampered = canon.encode(args)
    entries[3] = _mutate(entries[3], payload=tampered)
    report = verify_chain(entries)
    assert not report.ok
    assert report.bad_index == 3
    assert "hash-mismatch" in report.reason


def test_any_bit_flip_detected_at_or_before_entry():
    node = build_chain(n_extra_tasks=2)
    entries = list(node.entries)
    target = 4
    base = entries[target]
    variants = [
        _mutate(base, index=base.index + 1),
        _mutate(base, prev_hash=bytes(32)),
        _mutate(base, payload=base.payload[:-1] + bytes([base.payload[-1] ^ 1])),
        _mutate(base, sender=bytes(20)),
        _mutate(base, signature=base.signature[:-1] + bytes([base.signature[-1] ^ 1])),
        _mutate(base, gas_charged=base.gas_charged + 1),
        _mutate(base, entry_hash=base.entry_hash[:-1] + bytes([base.entry_hash[-1] ^ 1])),
    ]
    for variant in variants:
        mutated = entries.copy()
        mutated[target] = variant
        report = verify_chain(mutated)
        assert not report.ok
        assert report.bad_index is not None and report.bad_index <= target


def test_resigned_forgery_breaks_downstream_link():
    # re-signing a mutated entry with the true key still breaks the
    # chain at the next link because prev_hash no longer matches
    node = build_chain(n_extra_tasks=2)
    entries = list(node.entries)
    target = 3
    base = entries[target]
    args = base.args()
    args["reward"] = 999_999
    payload = canon.encode(args)
    signer = MacSigner()
    key = node.keyring[base.sender]
    from crowdrep.ledger import signing_message
    signature = signer.sign(key, signing_message(base.index, base.prev_hash, payload))
    entry_hash = compute_entry_hash(base.index, base.prev_hash, payload, base.sender,
                                    signature, base.gas_charged)
    entries[target] = _mutate(base, payload=payload, signature=signature,
                              entry_hash=entry_hash)
    report = verify_chain(entries)
    assert not report.ok and report.bad_index == target + 1


def test_signature_under_wrong_sender_rejected():
    node = build_chain(n_extra_tasks=1)
    entries = list(node.entries)
    # claim the post_task entry came from the other registered account
    idx = next(e.index for e in entries if e.kind == "post_task")
    base = entries[idx]
    other = next(e.sender for e in entries if e.kind == "create_worker")
    forged_hash = compute_entry_hash(base.index, base.prev_hash, base.payload, other,
                                     base.signature, base.gas_charged)
    entries[idx] = _mutate(base, sender=other, entry_hash=forged_hash)
    report = verify_chain(entries)
    assert not report.ok and report.bad_index == idx
    assert "signature" in report.reason


def test_unregistered_sender_rejected_on_append():
    node = build_chain()
    ghost = b"\x99" * 20
    with pytest.raises(UnknownSender):
        node.state.check_entry_payload("post_task", ghost, {
            "title": "x", "skills": [], "reward": 1, "metadata_ref": b"\x00" * 32,
            "w_c": 5000, "w_q": 5000})


def test_snapshot_roundtrip(tmp_path):
    node = build_chain(n_extra_tasks=3)
    path = tmp_path / "trace.bin"
    write_snapshot(node.entries, str(path))
    loaded = read_snapshot(str(path))
    assert loaded == node.entries
    assert verify_chain(loaded).ok
    sidecar = path.with_name("trace.bin.sidecar.json")
    assert sidecar.exists()
    text = sidecar.read_text()
    assert '"post_task"' in text and '"gas": 250502' in text


def test_snapshot_bytes_reject_garbage():
    with pytest.raises(InvalidChain):
        entries_from_bytes(b"not a ledger")
    node = build_chain()
    data = entries_to_bytes(node.entries)
    with pytest.raises(InvalidChain):
        entries_from_bytes(data[:-3])
