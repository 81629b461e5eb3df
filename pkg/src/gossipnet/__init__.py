"""Distributed-averaging simulator with local-metric rate prediction.

Subpackages: graph (topologies), metrics (local graph metrics), spectral
(gossip matrices and convergence checks), engine (async/sync simulators),
analysis (rate estimation, regression, anomaly detection), cli.
"""

from .graph import Graph, GraphSpec, generate, rewire_random, fail_links
from .metrics import MetricAverages, graph_averages
from .spectral import expected_weight_matrix, uniform_neighbor_probabilities, verify_convergence
from .engine import SimConfig, States, Trace, init_states, run_async, run_sync
from .analysis import RateModel, build_corpus, estimate_gamma, fit_model

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "GraphSpec",
    "generate",
    "rewire_random",
    "fail_links",
    "MetricAverages",
    "graph_averages",
    "expected_weight_matrix",
    "uniform_neighbor_probabilities",
    "verify_convergence",
    "SimConfig",
    "States",
    "Trace",
    "init_states",
    "run_async",
    "run_sync",
    "RateModel",
    "build_corpus",
    "estimate_gamma",
    "fit_model",
    "__version__",
]
