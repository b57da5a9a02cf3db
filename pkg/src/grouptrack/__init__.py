"""Deterministic simulator for energy-aware multi-mode group tracking."""

from .channel import NoiseProfile, PathLossParams
from .energy import EnergyLedger, EnergyParams
from .harness import RunResult, ScenarioConfig, run_scenario, scenario_config
from .movement import FlockingParams, Trajectory, WorldConfig, generate_tracks
from .multilat import AnchorObservation, Method, PositionEstimate, Variant
from .protocol import ClusterView, MembershipState
from .tracker import AlgorithmVariant, TrackerConfig, TrackerSim

__version__ = "0.1.0"

__all__ = [
    "AlgorithmVariant",
    "AnchorObservation",
    "ClusterView",
    "EnergyLedger",
    "EnergyParams",
    "FlockingParams",
    "MembershipState",
    "Method",
    "NoiseProfile",
    "PathLossParams",
    "PositionEstimate",
    "RunResult",
    "ScenarioConfig",
    "TrackerConfig",
    "TrackerSim",
    "Trajectory",
    "Variant",
    "WorldConfig",
    "generate_tracks",
    "run_scenario",
    "scenario_config",
]
