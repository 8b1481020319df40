"""Fold determinism, prefix application, and the reputation pipeline
(volunteer deltas, quota credits, blended submission updates)."""

import pytest

from conftest import ENDOWMENT, make_node, run_task_to_consensus
from crowdrep import Node, ProtocolParams, canon
from crowdrep.crypto import keccak256
from crowdrep.errors import InvalidChain
from crowdrep.params import SCALE
from crowdrep.state import PlatformState, replay


def scenario_node():
    node, workers, poster = make_node(n_workers=6, enroll=True)
    tid, aid, sid = run_task_to_consensus(node, workers, poster, workers[0],
                                          [(80, 90), (82, 88), (20, 15)])
    node.settle(aid)
    return node


def test_replay_reproduces_state_root():
    node = scenario_node()
    replayed = replay(node.entries)
    assert replayed.state_root() == node.state.state_root()
    assert replayed.canonical_bytes() == node.state.canonical_bytes()


def test_replay_twice_identical():
    node = scenario_node()
    a = replay(node.entries)
    b = replay(node.entries)
    assert a.state_root() == b.state_root()


def test_prefix_fold_then_incremental_matches_full_replay():
    node = scenario_node()
    entries = node.entries
    k = len(entries) // 2
    state = replay(entries[:k], verify=False)
    for entry in entries[k:]:
        state.apply_entry(entry)
    assert state.state_root() == replay(entries).state_root()


def test_replay_refuses_broken_chain():
    import dataclasses
    node = scenario_node()
    entries = list(node.entries)
    entries[4] = dataclasses.replace(entries[4], gas_charged=entries[4].gas_charged + 1)
    with pytest.raises(InvalidChain):
        replay(entries)


def test_volunteer_rep_deltas_applied():
    node, workers, poster = make_node(n_workers=5, enroll=True)
    tid, aid, sid = run_task_to_consensus(node, workers, poster, workers[0],
                                          [(70, 70)] * 3)
    pool = node.state.pools[sid][0]
    # all volunteers, exact agreement: eScore 100, delta +alpha*100 = +25
    for evaluator in pool.selected:
        assert node.state.accounts[evaluator].reputation == SCALE + 25 * SCALE


def test_volunteer_outlier_penalized():
    node, workers, poster = make_node(n_workers=5, enroll=True)
    tid, aid, sid = run_task_to_consensus(node, workers, poster, workers[0],
                                          [(80, 80), (82, 82), (20, 20)])
    result = node.state.consensus[sid][0]
    assert len(result.outliers) == 1
    outlier = next(iter(result.outliers))
    final = node.state.finals[sid]
    # eScore of the outlier, then -alpha * eScore
    from crowdrep.reputation import evaluator_score, volunteer_rep_delta
    e = evaluator_score(final.complete_score, final.quality_score, 20, 20)
    delta = volunteer_rep_delta(e, True, node.params.alpha)
    assert delta < 0
    assert node.state.accounts[outlier].reputation == max(0, SCALE + delta)


def _drive_submission(node, poster, worker, tag, score):
    tid = node.post_task(poster, tag, ["coding"], 1000, 5000, 5000)
    node.apply_task(worker, tid)
    aid = node.create_agreement(poster, tid, worker, 1000, 100,
                                node.state.clock + 5, node.state.clock + 12)
    node.accept(worker, aid, 100)
    plaintext = tag.encode()
    sid, _ = node.commit(worker, aid, keccak256(plaintext))
    node.reveal(worker, sid, plaintext)
    for e in node.state.pools[sid][0].selected:
        node.submit_evaluation(e, sid, score, score)
    return sid


def test_quota_credits_and_blended_update():
    """A worker who owes y=2 evaluations banks credits as an obligated
    evaluator; the blended update fires once both are in.

    Four workers means every panel is forced (pool == x), so who
    evaluates whom is fully deterministic.
    """
    params = ProtocolParams(volunteer_threshold="none")
    node, workers, poster = make_node(n_workers=4, enroll=True, params=params)
    alice, bob, carol, dave = workers

    # alice commits her own work; the other three evaluate it at 80
    sid_a = _drive_submission(node, poster, alice, "alice deliverable", 80)
    assert node.state.submissions[sid_a].evaluated
    # quota unmet: the blended update stays queued
    assert node.state.pending_rep[alice] == [sid_a]
    rep_before = node.state.accounts[alice].reputation
    assert rep_before == SCALE  # untouched so far

    # alice is obligated on every later panel (forced selection): two
    # in-consensus evaluations bank two eScore-100 credits
    _drive_submission(node, poster, bob, "bob deliverable", 75)
    assert node.state.credits[alice] == [100 * SCALE]
    assert node.state.pending_rep[alice] == [sid_a]
    _drive_submission(node, poster, carol, "carol deliverable", 75)

    # quota met: (1-0.25)*80 + 0.25*100 = 85 added to reputation
    assert not node.state.pending_rep.get(alice)
    assert not node.state.credits.get(alice)
    assert node.state.accounts[alice].reputation == rep_before + 85 * SCALE


def test_unknown_state_root_changes_with_any_entry():
    node, workers, poster = make_node(n_workers=2)
    root_before = node.state.state_root()
    node.post_task(poster, "t", ["coding"], 1000, 5000, 5000)
    assert node.state.state_root() != root_before
