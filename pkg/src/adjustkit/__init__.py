"""Covariate-adjustment validity on mixed causal graphs.

The package decides whether a covariate set supports adjustment for the
causal effect of treatments on outcomes in a graph with directed and
bidirected edges, constructs valid sets when they exist, and checks every
graphical verdict numerically against exact discrete structural models.
"""

from .criteria import (
    AdjustmentQuery,
    CriterionVerdict,
    ForbiddenDescendant,
    OpenBackdoorPath,
    OpenNonCausalPath,
    TreatmentDescendant,
    adjustment_criterion,
    backdoor_criterion,
    canonical_adjustment_set,
    enumerate_adjustment_sets,
    exists_adjustment_set,
    helper_conditioning_set,
    magnification_check,
    magnify,
    proper_backdoor_graph,
    strip_to_backdoor,
    verdict_from_json,
    verdict_to_json,
)
from .graph import (
    Admg,
    CycleError,
    GraphError,
    GraphParseError,
    UnknownNodeError,
    ancestors,
    cut_incoming,
    cut_outgoing,
    descendants,
    expand_bidirected,
    latent_project,
    parse_graph,
    proper_causal_nodes,
    remove_nodes,
    topological_order,
)
from .scm import (
    Counterexample,
    DiscreteScm,
    Dist,
    PositivityError,
    SoundnessReport,
    StateSpaceError,
    adjustment_estimand,
    counterfactual_joint,
    interventional,
    joint_observed,
    random_scm,
    scm_from_json,
    scm_to_json,
    search_counterexample,
    verify_soundness,
)
from .separation import (
    Path,
    Route,
    SepVerdict,
    Step,
    d_connected_nodes,
    d_separated,
    direct_route,
    enumerate_paths,
    find_inducing_path,
    path_blocked,
    path_from_string,
    route_blocked,
)
from .twin import TwinGraph, graphical_ignorability, noise_linked, twin_network

__version__ = "0.1.0"

__all__ = [
    "AdjustmentQuery",
    "Admg",
    "Counterexample",
    "CriterionVerdict",
    "CycleError",
    "DiscreteScm",
    "Dist",
    "ForbiddenDescendant",
    "GraphError",
    "GraphParseError",
    "OpenBackdoorPath",
    "OpenNonCausalPath",
    "Path",
    "PositivityError",
    "Route",
    "SepVerdict",
    "SoundnessReport",
    "StateSpaceError",
    "Step",
    "TreatmentDescendant",
    "TwinGraph",
    "UnknownNodeError",
    "adjustment_criterion",
    "adjustment_estimand",
    "ancestors",
    "backdoor_criterion",
    "canonical_adjustment_set",
    "counterfactual_joint",
    "cut_incoming",
    "cut_outgoing",
    "d_connected_nodes",
    "d_separated",
    "descendants",
    "direct_route",
    "enumerate_adjustment_sets",
    "enumerate_paths",
    "exists_adjustment_set",
    "expand_bidirected",
    "find_inducing_path",
    "graphical_ignorability",
    "helper_conditioning_set",
    "interventional",
    "joint_observed",
    "latent_project",
    "magnification_check",
    "magnify",
    "noise_linked",
    "parse_graph",
    "path_blocked",
    "path_from_string",
    "proper_backdoor_graph",
    "proper_causal_nodes",
    "random_scm",
    "remove_nodes",
    "route_blocked",
    "scm_from_json",
    "scm_to_json",
    "search_counterexample",
    "strip_to_backdoor",
    "topological_order",
    "twin_network",
    "verdict_from_json",
    "verdict_to_json",
    "verify_soundness",
]
