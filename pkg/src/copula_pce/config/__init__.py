"""Scenario configuration for copula-pce.

Provides JSON scenario loading with a 3-layer merge strategy:
compiled defaults -> scenario document -> runtime overrides.
"""

from copula_pce.config.canonical import CANONICAL_SCENARIOS, canonical_scenario
from copula_pce.config.loader import load_scenario
from copula_pce.config.types import (
    MonomialConfig,
    QuadratureConfig,
    RuntimeConfig,
    Scenario,
    ValidationConfig,
)

__all__ = [
    "CANONICAL_SCENARIOS",
    "MonomialConfig",
    "QuadratureConfig",
    "RuntimeConfig",
    "Scenario",
    "ValidationConfig",
    "canonical_scenario",
    "load_scenario",
]
