import random

import pytest

from conftest import make_node
from crowdrep.errors import BadWeights, NonPositiveReward, NotATaskPoster, TaskNotOpen, UnknownWorker
from crowdrep.marketplace import listing, search


def test_post_symmetric_weights():
    node, _, poster = make_node()
    tid = node.post_task(poster, "symmetric", ["coding"], 1000, 5000, 5000)
    task = node.state.tasks[tid]
    assert task.status == "open"
    assert task.w_c + task.w_q == 10_000


def test_post_bad_weights():
    node, _, poster = make_node()
    with pytest.raises(BadWeights):
        node.post_task(poster, "lopsided", ["coding"], 1000, 7000, 4000)


def test_post_nonpositive_reward():
    node, _, poster = make_node()
    with pytest.raises(NonPositiveReward):
        node.post_task(poster, "free work", ["coding"], 0, 5000, 5000)


def test_worker_cannot_post():
    node, workers, _ = make_node(n_workers=1)
    with pytest.raises(NotATaskPoster):
        node.post_task(workers[0], "sneaky", ["coding"], 1000, 5000, 5000)


def test_search_empty_filter_returns_all():
    node, _, poster = make_node()
    for i in range(4):
        node.post_task(poster, f"t{i}", ["coding"], 100 + i, 5000, 5000)
    assert [t.task_id for t in search(node.state)] == [0, 1, 2, 3]


def test_search_by_skill():
    node, _, poster = make_node()
    node.post_task(poster, "code", ["coding"], 100, 5000, 5000)
    node.post_task(poster, "design", ["design"], 100, 5000, 5000)
    hits = search(node.state, skills=["coding"])
    assert [t.title for t in hits] == ["code"]


def test_search_matches_linear_scan_oracle():
    node, _, poster = make_node()
    rng = random.Random(17)
    skill_pool = ["coding", "design", "writing", "data"]
    for i in range(40):
        skills = rng.sample(skill_pool, rng.randint(1, 2))
        node.post_task(poster, f"task {i}", skills, rng.randint(1, 5000), 5000, 5000)
    offered = {"coding", "writing"}
    min_reward = 2500
    got = search(node.state, skills=offered, min_reward=min_reward, status="open")
    want = [t for _, t in sorted(node.state.tasks.items())
            if set(t.skills_required) <= offered
            and t.reward >= min_reward and t.status == "open"]
    assert got == want


def test_search_is_pure():
    node, _, poster = make_node()
    node.post_task(poster, "t", ["coding"], 100, 5000, 5000)
    before = node.state.state_root()
    search(node.state, skills=["coding"], min_reward=1, status="open")
    assert node.state.state_root() == before


def test_apply_idempotent():
    node, workers, poster = make_node(n_workers=1)
    tid = node.post_task(poster, "t", ["coding"], 100, 5000, 5000)
    first = node.apply_task(workers[0], tid)
    second = node.apply_task(workers[0], tid)
    assert first == second == {workers[0]}


def test_apply_counting():
    node, workers, poster = make_node(n_workers=6)
    tid = node.post_task(poster, "t", ["coding"], 100, 5000, 5000)
    for w in workers:
        node.apply_task(w, tid)
    assert len(node.state.tasks[tid].applicants) == len(workers)


def test_apply_to_non_open_task_rejected():
    node, workers, poster = make_node(n_workers=2)
    tid = node.post_task(poster, "t", ["coding"], 100, 5000, 5000)
    node.apply_task(workers[0], tid)
    node.create_agreement(poster, tid, workers[0], 100, 10, 5, 10)
    with pytest.raises(TaskNotOpen):
        node.apply_task(workers[1], tid)


def test_unknown_worker_cannot_apply():
    node, _, poster = make_node()
    tid = node.post_task(poster, "t", ["coding"], 100, 5000, 5000)
    with pytest.raises(UnknownWorker):
        node.apply_task(poster, tid)  # posters are not workers


def test_listing_shape():
    node, workers, poster = make_node(n_workers=1)
    node.post_task(poster, "t", ["coding"], 100, 5000, 5000)
    rows = listing(node.state)
    assert rows[0]["task_id"] == 0
    assert rows[0]["status"] == "open"
    assert rows[0]["applicants"] == 0
