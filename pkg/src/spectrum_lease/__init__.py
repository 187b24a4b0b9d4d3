"""Two-seller dynamic spectrum leasing: monopoly plans, Epoch II equilibria,
reserve search, a cooperative benchmark and a protocol simulator."""

from .core import EpochLayout, Scenario, ScenarioError, SolverError, validate_scenario
from .nash import GameParams, find_all_equilibria, select_equilibrium
from .reserve import algorithm1_search
from .simulate import replay, run_simulation

__version__ = "0.1.0"

__all__ = [
    "EpochLayout", "GameParams", "Scenario", "ScenarioError", "SolverError",
    "algorithm1_search", "find_all_equilibria", "replay", "run_simulation",
    "select_equilibrium", "validate_scenario",
]
