"""Simulation and verification toolkit for social learning where Bayesian
agents broadcast samples from their posteriors over a network.

Two exactly solvable engines: a Gaussian model on arbitrary graphs, driven
by a deterministic conditional-moment recursion, and a two-agent binary
game with exact transcript-conditional grid inference (sampling vs action
messages). A Monte-Carlo harness aggregates agreement and learning
diagnostics over seeded replicas.
"""

from .binary_edge import (
    BinaryEdgeState,
    BinarySignalModel,
    EdgeRunResult,
    InconsistentTranscriptError,
    action_limit_posterior,
    apply_messages,
    belief_of,
    init_edge_state,
    run_edge,
    step_edge,
    true_posterior,
)
from .config import ConfigError, DiagnosticsConfig, RunConfig, load_config
from .gaussian import (
    GaussianMomentState,
    GaussianPosterior,
    GaussianSignalStructure,
    GaussianTrajectory,
    MomentPlan,
    NumericalDegeneracyError,
    bayes_oracle,
    init_moments,
    moment_plan,
    posterior_params,
    simulate_realization,
    step_moments,
)
from .montecarlo import (
    DiagnosticSpec,
    ReplicaSummary,
    agreement_gap,
    averaging_strictly_helps_check,
    cdf_mix_estimate,
    message_increment_covariance,
    run_replicas,
)
from .network import NetworkGraph, build_topology, connected_components, is_connected

__version__ = "0.1.0"

__all__ = [
    "BinaryEdgeState",
    "BinarySignalModel",
    "ConfigError",
    "DiagnosticSpec",
    "DiagnosticsConfig",
    "EdgeRunResult",
    "GaussianMomentState",
    "GaussianPosterior",
    "GaussianSignalStructure",
    "GaussianTrajectory",
    "InconsistentTranscriptError",
    "MomentPlan",
    "NetworkGraph",
    "NumericalDegeneracyError",
    "ReplicaSummary",
    "RunConfig",
    "action_limit_posterior",
    "agreement_gap",
    "apply_messages",
    "averaging_strictly_helps_check",
    "bayes_oracle",
    "belief_of",
    "build_topology",
    "cdf_mix_estimate",
    "connected_components",
    "init_edge_state",
    "init_moments",
    "is_connected",
    "load_config",
    "message_increment_covariance",
    "moment_plan",
    "posterior_params",
    "run_edge",
    "run_replicas",
    "simulate_realization",
    "step_edge",
    "step_moments",
    "true_posterior",
]
