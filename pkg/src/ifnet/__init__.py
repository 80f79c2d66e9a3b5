"""Slotted simulator for wireless networks with interference-aware decoding and cross-layer adaptation."""

from .engine import AdaptationConfig, RunReport, ScenarioConfig, Simulation, run

__all__ = ["AdaptationConfig", "RunReport", "ScenarioConfig", "Simulation", "run"]
