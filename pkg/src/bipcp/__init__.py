"""Two-type contact process on a random connection hypergraph."""

from .phase import AsymptoticScale, ModelParams, a_star, classify
from .hypergraph import RootSpec, StaticGraph, Window, sample
from .contact import Rates, SimConfig, estimate_theta, run, run_star
from .combinatorics import CombinatorialPath, discovery_tree, enumerate_paths

__all__ = [
    "AsymptoticScale", "ModelParams", "a_star", "classify",
    "RootSpec", "StaticGraph", "Window", "sample",
    "Rates", "SimConfig", "estimate_theta", "run", "run_star",
    "CombinatorialPath", "discovery_tree", "enumerate_paths",
]
