import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from crowdrep import Node, ProtocolParams
from crowdrep import canon

ETHER = 10 ** 18
ENDOWMENT = 10 * ETHER


def make_node(n_workers=0, skills=("coding",), params=None, seed=7,
              enroll=False) -> tuple[Node, list[bytes], bytes]:
    """Node with a genesis chain, n registered workers, and one poster."""
    node = Node.create(params=params, seed=seed)
    fee = node.params.registration_fee
    workers = []
    for i in range(n_workers):
        key = node.keygen(f"worker-{i}".encode())
        workers.append(node.register_worker(key, skills, fee, ENDOWMENT))
    poster_key = node.keygen(b"poster-0")
    poster = node.register_poster(poster_key, fee, ENDOWMENT)
    if enroll:
        for w in workers:
            node.become_evaluator(w)
    return node, workers, poster


def run_task_to_consensus(node, workers, poster, worker, scores,
                          reward=1_000_000, acceptance_fee=100_000,
                          w_c=5000, w_q=5000, skills=("coding",),
                          payload=b"deliverable"):
    """Drive one task from posting through a complete first-round sheet.

    `scores` maps panel position -> (c, q); callables receive the
    evaluator id. Returns (task_id, agreement_id, submission_id).
    """
    tid = node.post_task(poster, "task", skills, reward, w_c, w_q)
    node.apply_task(worker, tid)
    deadline = node.state.clock + 5
    due = node.state.clock + 12
    aid = node.create_agreement(poster, tid, worker, reward, acceptance_fee, deadline, due)
    node.accept(worker, aid, acceptance_fee)
    plaintext = canon.encode({"payload": payload, "agreement": aid})
    sid, keys = node.commit(worker, aid, node.commitment_for(plaintext))
    assert keys is not None
    node.reveal(worker, sid, plaintext)
    pool = node.state.pools[sid][-1]
    for position, evaluator in enumerate(pool.selected):
        c, q = scores[position] if not callable(scores) else scores(evaluator)
        node.submit_evaluation(evaluator, sid, c, q)
    return tid, aid, sid


@pytest.fixture
def small_platform():
    return make_node(n_workers=5, enroll=True)
