"""Concrete scenario records shared by the generator and the simulator."""

from __future__ import annotations

from dataclasses import dataclass, field

from .metric_graph import SubSegment


@dataclass(frozen=True)
class AgentSpec:
    agent_id: str
    entrance: int
    direction: int
    distance: float
    speed: float
    itinerary: tuple[SubSegment, ...]


@dataclass(frozen=True)
class ConcreteScenario:
    """Agents in creation order plus the per-run context.

    ``signal_rotation`` shifts the light programs arm-wise: arm ``i`` runs
    the program that arm ``i - signal_rotation`` has in the map.
    """

    junction: str
    key: str
    agents: tuple[AgentSpec, ...]
    signal_rotation: int = 0
    labels: dict = field(default_factory=dict, compare=False)
