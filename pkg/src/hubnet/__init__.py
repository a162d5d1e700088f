"""Hub-weighted sparse regression.

Stage one fits the edge-out regression of every feature on all others and
turns the absolute row sums of the coefficient matrix into penalty factors.
Stage two is a weighted lasso or elastic net with those factors, so features
that predict many others are penalized less.
"""
from . import edgeout, harness, numcore, penreg, simgen
from .edgeout import EdgeOutConfig, EdgeOutFit, HubWeights, hub_weights, select_theta
from .errors import HubNetError
from .harness import MetricsRow, compare, evaluate, run_hubnet
from .penreg import PenalizedFit, PenaltySpec, cv, lambda_path, wfit
from .simgen import HubGraphSpec, ScenarioSpec, SimData, gen_hub_graph, gen_scenario

__all__ = [
    "EdgeOutConfig",
    "EdgeOutFit",
    "HubGraphSpec",
    "HubNetError",
    "HubWeights",
    "MetricsRow",
    "PenalizedFit",
    "PenaltySpec",
    "ScenarioSpec",
    "SimData",
    "compare",
    "cv",
    "edgeout",
    "evaluate",
    "gen_hub_graph",
    "gen_scenario",
    "harness",
    "hub_weights",
    "lambda_path",
    "numcore",
    "penreg",
    "run_hubnet",
    "select_theta",
    "simgen",
    "wfit",
]
