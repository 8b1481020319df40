"""Task posting, public search over the folded state, and worker
applications."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Iterable

from .errors import (
    BadWeights,
    NonPositiveReward,
    NotATaskPoster,
    TaskNotOpen,
    UnknownWorker,
)
from .params import SCALE

if TYPE_CHECKING:
    from .state import PlatformState

STATUSES = ("open", "agreed", "submitted", "evaluated", "cancelled")


@dataclass
class Task:
    task_id: int
    poster: bytes
    title: str
    skills_required: tuple[str, ...]
    reward: int
    metadata_ref: bytes
    w_c: int                      # completeness weight, scaled
    w_q: int                      # quality weight, scaled
    status: str = "open"
    applicants: set[bytes] = field(default_factory=set)
    posted_at: int = 0

    def to_canon(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "poster": self.poster,
            "title": self.title,
            "skills_required": list(self.skills_required),
            "reward": self.reward,
            "metadata_ref": self.metadata_ref,
            "w_c": self.w_c,
            "w_q": self.w_q,
            "status": self.status,
            "applicants": sorted(self.applicants),
            "posted_at": self.posted_at,
        }


def check_post_task(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    account = state.account(sender)
    if account.role != "task_poster" or account.status != "active":
        raise NotATaskPoster(f"{sender.hex()} is not an active task poster")
    if args["reward"] <= 0:
        raise NonPositiveReward("task reward must be positive")
    w_c, w_q = args["w_c"], args["w_q"]
    if w_c < 0 or w_q < 0 or w_c + w_q != SCALE:
        raise BadWeights(f"weights must sum to 1 (scaled {SCALE}), got {w_c}+{w_q}")


def apply_post_task(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> Task:
    task = Task(
        task_id=state.next_task_id,
        poster=sender,
        title=args["title"],
        skills_required=tuple(sorted(args["skills"])),
        reward=args["reward"],
        metadata_ref=args["metadata_ref"],
        w_c=args["w_c"],
        w_q=args["w_q"],
        posted_at=state.clock,
    )
    state.next_task_id += 1
    state.tasks[task.task_id] = task
    state.emit("task_posted", task=task.task_id, poster=sender)
    return task


def check_apply(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    account = state.accounts.get(sender)
    if account is None or not account.is_active_worker:
        raise UnknownWorker(f"{sender.hex()} is not an active worker")
    task = state.task(args["task_id"])
    if task.status != "open":
        raise TaskNotOpen(f"task {task.task_id} is {task.status}")


def apply_apply(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> set[bytes]:
    task = state.tasks[args["task_id"]]
    task.applicants.add(sender)   # idempotent set insert
    return set(task.applicants)


def search(state: "PlatformState", skills: Iterable[str] | None = None,
           min_reward: int | None = None, status: str | None = None) -> list[Task]:
    """Pure read: every task matching all provided predicates, by id.

    A skills filter matches tasks whose requirements the given skill
    set covers.
    """
    offered = set(skills) if skills is not None else None
    results = []
    for task_id in sorted(state.tasks):
        task = state.tasks[task_id]
        if offered is not None and not set(task.skills_required) <= offered:
            continue
        if min_reward is not None and task.reward < min_reward:
            continue
        if status is not None and task.status != status:
            continue
        results.append(task)
    return results


def listing(state: "PlatformState") -> list[dict[str, Any]]:
    """JSON/CSV-ready task listing."""
    return [{
        "task_id": t.task_id,
        "poster": t.poster.hex(),
        "title": t.title,
        "skills": ",".join(t.skills_required),
        "reward": t.reward,
        "status": t.status,
        "applicants": len(t.applicants),
    } for t in search(state)]
