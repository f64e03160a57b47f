"""Walking character interacting two ways with loose, deformable terrain."""
from .engine import Layers, RunResult, init_world, run, step
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario

__all__ = ["Layers", "RunResult", "Scenario", "ScenarioError", "init_world",
           "load_scenario", "parse_scenario", "run", "step"]
