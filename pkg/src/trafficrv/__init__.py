"""Runtime verification of traffic rules at road junctions.

Maps become metric graphs, scenarios are enumerated up to rotation, a small
simulator produces traces, and first-order LTLf properties are checked on
them by a finite monitor.
"""

from .campaign import PROFILES, CampaignConfig, run_campaign
from .logic import builtin, parse_formula
from .map_model import MapModel, load_map
from .metric_graph import INF, MetricGraph, Position, Segment
from .monitor import Verdict, check, check_oracle
from .scenario_gen import AbstractScenario, concretize, enumerate_maximal, quotient_by_rotation
from .simulator import ControllerParams, FaultConfig, SchedulerConfig, estimate_safe_speed, run_scenario

__all__ = [
    "INF",
    "PROFILES",
    "AbstractScenario",
    "CampaignConfig",
    "ControllerParams",
    "FaultConfig",
    "MapModel",
    "MetricGraph",
    "Position",
    "SchedulerConfig",
    "Segment",
    "Verdict",
    "builtin",
    "check",
    "check_oracle",
    "concretize",
    "enumerate_maximal",
    "estimate_safe_speed",
    "load_map",
    "parse_formula",
    "quotient_by_rotation",
    "run_campaign",
    "run_scenario",
]
