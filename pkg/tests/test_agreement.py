import pytest

from conftest import make_node, run_task_to_consensus
from crowdrep import canon
from crowdrep.errors import (
    BadDeadlines,
    Expired,
    NotAccepted,
    NotAnApplicant,
    NotEvaluated,
    WrongCaller,
    WrongDeposit,
    WrongEscrowAmount,
)
from crowdrep.params import SCALE


def setup_open_task(n_workers=2, reward=1000):
    node, workers, poster = make_node(n_workers=n_workers)
    tid = node.post_task(poster, "t", ["coding"], reward, 5000, 5000)
    for w in workers:
        node.apply_task(w, tid)
    return node, workers, poster, tid


def test_wrong_escrow_rejected():
    node, workers, poster, tid = setup_open_task()
    with pytest.raises(WrongEscrowAmount):
        node.create_agreement(poster, tid, workers[0], 999, 100, 5, 10)


def test_non_applicant_rejected():
    node, workers, poster = make_node(n_workers=2)
    tid = node.post_task(poster, "t", ["coding"], 1000, 5000, 5000)
    node.apply_task(workers[0], tid)
    with pytest.raises(NotAnApplicant):
        node.create_agreement(poster, tid, workers[1], 1000, 100, 5, 10)


def test_bad_deadlines_rejected():
    node, workers, poster, tid = setup_open_task()
    with pytest.raises(BadDeadlines):
        node.create_agreement(poster, tid, workers[0], 1000, 100, 10, 5)


def test_create_agreement_gas():
    node, workers, poster, tid = setup_open_task()
    node.create_agreement(poster, tid, workers[0], 1000, 100, 5, 10)
    entry = [e for e in node.entries if e.kind == "create_agreement"][0]
    assert entry.gas_charged == 198_134


def test_create_then_poster_cancel_returns_escrow():
    node, workers, poster, tid = setup_open_task()
    wallet_before = node.state.accounts[poster].wallet
    aid = node.create_agreement(poster, tid, workers[0], 1000, 100, 5, 10)
    assert node.state.accounts[poster].wallet == wallet_before - 1000
    node.cancel_agreement(poster, aid)
    assert node.state.accounts[poster].wallet == wallet_before
    assert node.state.agreements[aid].state == "cancelled"
    assert node.state.tasks[tid].status == "cancelled"
    assert node.state.conservation_residual() == 0


def test_accept_happy_path():
    node, workers, poster, tid = setup_open_task()
    aid = node.create_agreement(poster, tid, workers[0], 1000, 100, 5, 10)
    node.accept(workers[0], aid, 100)
    agreement = node.state.agreements[aid]
    assert agreement.state == "accepted"
    assert agreement.worker_deposit == 100


def test_accept_by_wrong_worker_leaves_agreement_unchanged():
    node, workers, poster, tid = setup_open_task()
    aid = node.create_agreement(poster, tid, workers[0], 1000, 100, 5, 10)
    deposit_before = node.state.accounts[workers[1]].wallet
    with pytest.raises(WrongCaller):
        node.accept(workers[1], aid, 100)
    assert node.state.agreements[aid].state == "created"
    assert node.state.accounts[workers[1]].wallet == deposit_before  # deposit returned


def test_accept_wrong_deposit():
    node, workers, poster, tid = setup_open_task()
    aid = node.create_agreement(poster, tid, workers[0], 1000, 100, 5, 10)
    with pytest.raises(WrongDeposit):
        node.accept(workers[0], aid, 99)


def test_accept_after_deadline_expired_and_autocancelled():
    node, workers, poster, tid = setup_open_task()
    wallet_before = node.state.accounts[poster].wallet
    aid = node.create_agreement(poster, tid, workers[0], 1000, 100, 5, 10)
    fired = node.tick(6)  # deadline is 5
    assert ("cancelled", aid) in fired
    assert node.state.accounts[poster].wallet == wallet_before
    with pytest.raises(Expired):
        node.accept(workers[0], aid, 100)


def test_poster_cannot_cancel_after_acceptance():
    node, workers, poster, tid = setup_open_task()
    aid = node.create_agreement(poster, tid, workers[0], 1000, 100, 5, 10)
    node.accept(workers[0], aid, 100)
    with pytest.raises(NotAccepted):
        node.cancel_agreement(poster, aid)


def test_tick_no_expirations_fires_nothing():
    node, workers, poster, tid = setup_open_task()
    node.create_agreement(poster, tid, workers[0], 1000, 100, 5, 10)
    assert node.tick(3) == []


def test_tick_idempotent_at_fixed_time():
    node, workers, poster, tid = setup_open_task()
    node.create_agreement(poster, tid, workers[0], 1000, 100, 5, 10)
    first = node.tick(6)
    second = node.tick(6)
    assert len(first) == 1
    assert second == []


def test_default_pays_poster_escrow_and_deposit():
    node, workers, poster, tid = setup_open_task()
    poster_start = node.state.accounts[poster].wallet
    worker_start = node.state.accounts[workers[0]].wallet
    aid = node.create_agreement(poster, tid, workers[0], 1000, 100, 5, 10)
    node.accept(workers[0], aid, 100)
    fired = node.tick(11)  # due date 10, no commitment
    assert ("defaulted", aid) in fired
    assert node.state.agreements[aid].state == "defaulted"
    assert node.state.accounts[poster].wallet == poster_start + 100
    assert node.state.accounts[workers[0]].wallet == worker_start - 100
    assert node.state.conservation_residual() == 0


def test_settle_perfect_scores_pays_everything_to_worker():
    node, workers, poster = make_node(n_workers=5, enroll=True)
    tid, aid, sid = run_task_to_consensus(
        node, workers, poster, workers[0], [(100, 100)] * 3,
        reward=1000, acceptance_fee=100)
    reward, fee_returned, remainder = node.settle(aid)
    assert (reward, fee_returned, remainder) == (1000, 100, 0)
    assert node.state.agreements[aid].state == "settled"
    assert node.state.tasks[tid].status == "evaluated"


def test_settle_reward_eq_arithmetic():
    node, workers, poster = make_node(n_workers=5, enroll=True)
    tid, aid, sid = run_task_to_consensus(
        node, workers, poster, workers[0], [(80, 80)] * 3,
        reward=1000, acceptance_fee=100)
    reward, fee_returned, remainder = node.settle(aid)
    assert reward == 800           # final 80 on escrow 1000
    assert fee_returned == 80      # complete 80 on fee 100
    assert remainder == 220
    assert node.state.conservation_residual() == 0


def test_settle_fee_return_half():
    node, workers, poster = make_node(n_workers=5, enroll=True)
    tid, aid, sid = run_task_to_consensus(
        node, workers, poster, workers[0], [(50, 100)] * 3,
        reward=1000, acceptance_fee=100)
    _, fee_returned, _ = node.settle(aid)
    assert fee_returned == 50      # complete 50 on fee 100


def test_settle_requires_evaluation():
    node, workers, poster, tid = setup_open_task()
    aid = node.create_agreement(poster, tid, workers[0], 1000, 100, 5, 10)
    node.accept(workers[0], aid, 100)
    with pytest.raises(NotEvaluated):
        node.settle(aid)


def test_settlement_conserves_currency_exactly():
    node, workers, poster = make_node(n_workers=6, enroll=True)
    # two agree, one clear outlier: consensus reached with its removal
    scores = [(40, 80), (40, 80), (70, 19)]
    tid, aid, sid = run_task_to_consensus(
        node, workers, poster, workers[0], scores,
        reward=999_883, acceptance_fee=77_777)
    escrow, deposit = 999_883, 77_777
    reward, fee_returned, remainder = node.settle(aid)
    assert escrow + deposit == reward + fee_returned + remainder
    assert node.state.conservation_residual() == 0


def test_terminal_states_are_absorbing():
    node, workers, poster, tid = setup_open_task()
    aid = node.create_agreement(poster, tid, workers[0], 1000, 100, 5, 10)
    node.cancel_agreement(poster, aid)
    with pytest.raises(NotAccepted):
        node.cancel_agreement(poster, aid)
    node.tick(6)
    with pytest.raises(Expired):
        node.accept(workers[0], aid, 100)
