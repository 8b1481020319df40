"""Deterministic multi-agent simulation harness: honest and adversarial
agent populations drive the full protocol over discrete ticks."""

from .config import AgentSpec, ScenarioConfig, TaskPlan
from .runner import SimResult, Simulation, run_scenario
from .analysis import ablate, reciprocity_exposure

__all__ = [
    "AgentSpec", "ScenarioConfig", "TaskPlan",
    "SimResult", "Simulation", "run_scenario",
    "ablate", "reciprocity_exposure",
]
