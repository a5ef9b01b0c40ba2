"""Graphical validity tests for covariate adjustment.

The central question: given treatments X, outcomes Y, and candidate
covariates Z in a mixed graph, does conditioning on Z turn the observed
conditional distribution into the post-intervention one?  The adjustment
criterion here answers it exactly:

1. no covariate may descend, once edges into X are cut, from a non-treatment
   node sitting on a proper causal path from X to Y, and
2. every non-causal path from X to Y must be blocked by Z.

The back-door criterion is the classic sufficient test; the magnification
check is an equivalent formulation that trades counterfactual reasoning for
auxiliary nodes spliced into the graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Union

from .graph import (
    HEAD,
    TAIL,
    Admg,
    GraphError,
    ancestors,
    cut_incoming,
    cut_outgoing,
    descendants,
    proper_causal_nodes,
    remove_nodes,
)
from .separation import (
    Path,
    d_connected_nodes,
    d_separated,
    enumerate_paths,
    path_blocked,
    path_from_string,
)

__all__ = [
    "AdjustmentQuery",
    "CriterionVerdict",
    "ForbiddenDescendant",
    "OpenBackdoorPath",
    "OpenNonCausalPath",
    "TreatmentDescendant",
    "adjustment_criterion",
    "backdoor_criterion",
    "canonical_adjustment_set",
    "enumerate_adjustment_sets",
    "exists_adjustment_set",
    "helper_conditioning_set",
    "magnification_check",
    "magnify",
    "proper_backdoor_graph",
    "strip_to_backdoor",
    "verdict_from_json",
    "verdict_to_json",
]


@dataclass(frozen=True)
class AdjustmentQuery:
    """Treatments, outcomes, and candidate covariates; sets must be disjoint."""

    treatments: frozenset[str]
    outcomes: frozenset[str]
    covariates: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "treatments", frozenset(self.treatments))
        object.__setattr__(self, "outcomes", frozenset(self.outcomes))
        object.__setattr__(self, "covariates", frozenset(self.covariates))
        if not self.treatments or not self.outcomes:
            raise ValueError("treatment and outcome sets must be nonempty")
        if (
            self.treatments & self.outcomes
            or self.treatments & self.covariates
            or self.outcomes & self.covariates
        ):
            raise ValueError("treatments, outcomes, and covariates must be pairwise disjoint")


@dataclass(frozen=True)
class ForbiddenDescendant:
    """A covariate descends (post-intervention) from a node on a proper causal path."""

    offender: str
    causal_node: str


@dataclass(frozen=True)
class OpenNonCausalPath:
    """A non-causal path from treatments to outcomes stays open given the covariates."""

    path: Path


@dataclass(frozen=True)
class TreatmentDescendant:
    """A covariate is a descendant of the treatment set."""

    offender: str


@dataclass(frozen=True)
class OpenBackdoorPath:
    """A path starting with an arrowhead at the treatments stays open."""

    path: Path


Failure = Union[ForbiddenDescendant, OpenNonCausalPath, TreatmentDescendant, OpenBackdoorPath]


@dataclass(frozen=True)
class CriterionVerdict:
    holds: bool
    failure: Failure | None = None

    @property
    def witness_path(self) -> Path | None:
        if isinstance(self.failure, (OpenNonCausalPath, OpenBackdoorPath)):
            return self.failure.path
        return None


def _checked_query(graph: Admg, query: AdjustmentQuery) -> AdjustmentQuery:
    graph.node_subset(query.treatments | query.outcomes | query.covariates)
    return query


def backdoor_criterion(graph: Admg, query: AdjustmentQuery) -> CriterionVerdict:
    """Classic sufficient test: no covariate descends from the treatments,
    and the covariates block every path into the back of the treatment set.
    """
    _checked_query(graph, query)
    x, y, z = query.treatments, query.outcomes, query.covariates
    offenders = sorted(z & descendants(graph, x))
    if offenders:
        return CriterionVerdict(False, TreatmentDescendant(offenders[0]))
    stripped = cut_outgoing(graph, x)
    verdict = d_separated(stripped, x, y, z)
    if verdict.separated:
        return CriterionVerdict(True)
    return CriterionVerdict(False, OpenBackdoorPath(verdict.witness))


def _backdoor_holds(graph: Admg, x, y, z) -> bool:
    """Decision-only back-door test (no witness materialization)."""
    if frozenset(z) & descendants(graph, x):
        return False
    return d_separated(cut_outgoing(graph, x), x, y, z).separated


def _is_causal(path: Path) -> bool:
    return all(s.source_mark == TAIL and s.target_mark == HEAD for s in path.steps)


def proper_backdoor_graph(graph: Admg, treatments, outcomes) -> Admg:
    """Remove the first edge of every proper causal path from the treatments."""
    return _proper_backdoor_graph(
        graph, graph.node_subset(treatments), graph.node_subset(outcomes)
    )


@lru_cache(maxsize=4096)
def _proper_backdoor_graph(graph: Admg, treatments, outcomes) -> Admg:
    pcn = proper_causal_nodes(graph, treatments, outcomes)
    drop = {
        (a, b)
        for (a, b) in graph.directed
        if a in treatments and b in pcn and b not in treatments
    }
    return Admg(graph.nodes, graph.directed - drop, graph.bidirected)


def adjustment_criterion(graph: Admg, query: AdjustmentQuery, mode: str = "fast") -> CriterionVerdict:
    """Complete test for covariate-adjustment validity.

    ``fast`` decides the path condition by separation in the proper
    back-door graph; ``reference`` enumerates every non-causal path and
    checks blocking directly.  Both return the same ``holds``.
    """
    if mode not in ("fast", "reference"):
        raise ValueError(f"unknown mode: {mode!r}")
    _checked_query(graph, query)
    x, y, z = query.treatments, query.outcomes, query.covariates

    pcn = proper_causal_nodes(graph, x, y)
    amenable = pcn - x
    mutilated = cut_incoming(graph, x)
    forbidden = descendants(mutilated, amenable) if amenable else frozenset()
    offenders = sorted(z & forbidden)
    if offenders:
        offender = offenders[0]
        causal_node = min(
            w for w in amenable if offender in descendants(mutilated, frozenset({w}))
        )
        return CriterionVerdict(False, ForbiddenDescendant(offender, causal_node))

    if mode == "reference":
        open_paths = [
            p
            for p in enumerate_paths(graph, x, y)
            if not _is_causal(p) and not path_blocked(graph, p, z)
        ]
        if open_paths:
            best = min(open_paths, key=lambda p: (len(p.steps), p.nodes, tuple(s.arrow for s in p.steps)))
            return CriterionVerdict(False, OpenNonCausalPath(best))
        return CriterionVerdict(True)

    verdict = d_separated(proper_backdoor_graph(graph, x, y), x, y, z)
    if verdict.separated:
        return CriterionVerdict(True)
    return CriterionVerdict(False, OpenNonCausalPath(verdict.witness))


def strip_to_backdoor(graph: Admg, query: AdjustmentQuery) -> frozenset[str]:
    """Drop treatment descendants from the covariates.

    When the adjustment criterion holds for the original covariates, the
    stripped set satisfies the back-door criterion.
    """
    _checked_query(graph, query)
    return query.covariates - descendants(graph, query.treatments)


def canonical_adjustment_set(graph: Admg, treatments, outcomes) -> frozenset[str]:
    """Ancestors of treatments or outcomes, minus both sets and minus every
    node on a proper causal path.  Valid whenever any valid set exists.
    """
    treatments = graph.node_subset(treatments)
    outcomes = graph.node_subset(outcomes)
    pcn = proper_causal_nodes(graph, treatments, outcomes)
    return ancestors(graph, treatments | outcomes) - treatments - outcomes - pcn


def exists_adjustment_set(graph: Admg, treatments, outcomes) -> bool:
    """Whether any covariate set makes adjustment valid for this pair."""
    canonical = canonical_adjustment_set(graph, treatments, outcomes)
    query = AdjustmentQuery(frozenset(treatments), frozenset(outcomes), canonical)
    return adjustment_criterion(graph, query).holds


def enumerate_adjustment_sets(
    graph: Admg,
    treatments,
    outcomes,
    candidates=None,
    limit: int = 16,
) -> list[frozenset[str]]:
    """Valid adjustment sets drawn from ``candidates``, smallest first
    (ties in size broken lexicographically), up to ``limit`` of them.
    """
    if limit <= 0:
        raise ValueError("limit must be positive")
    treatments = graph.node_subset(treatments)
    outcomes = graph.node_subset(outcomes)
    if candidates is None:
        candidates = frozenset(graph.nodes) - treatments - outcomes
    else:
        candidates = graph.node_subset(candidates)
        if candidates & (treatments | outcomes):
            raise GraphError("candidates must avoid treatments and outcomes")
    pool = sorted(candidates)
    out: list[frozenset[str]] = []
    for size in range(len(pool) + 1):
        for combo in combinations(pool, size):
            query = AdjustmentQuery(treatments, outcomes, frozenset(combo))
            if adjustment_criterion(graph, query).holds:
                out.append(frozenset(combo))
                if len(out) >= limit:
                    return out
    return out


def _fresh(name: str, taken: set[str]) -> str:
    while name in taken:
        name += "_"
    taken.add(name)
    return name


def magnify(graph: Admg, mediated_edges=()) -> Admg:
    """Splice auxiliary nodes into the graph.

    Every bidirected edge {A, B} becomes an explicit observable source
    ``__W_<A>_<B>`` with edges into both ends; every directed edge in
    ``mediated_edges`` is replaced by a mediator ``__C_<A>_<B>`` (endpoints
    name-sorted) sitting between tail and head.  The result is a DAG.
    """
    mediated = {tuple(e) for e in mediated_edges}
    unknown = mediated - set(graph.directed)
    if unknown:
        a, b = sorted(unknown)[0]
        raise GraphError(f"cannot mediate {a} -> {b}: not a directed edge of the graph")
    return _magnify(graph, tuple(sorted(mediated)))


@lru_cache(maxsize=2048)
def _magnify(graph: Admg, mediated_tuple) -> Admg:
    mediated = set(mediated_tuple)
    taken = set(graph.nodes)
    directed = set(graph.directed) - mediated
    extra: list[str] = []
    for a, b in sorted(graph.bidirected):
        w = _fresh(f"__W_{a}_{b}", taken)
        extra.append(w)
        directed.add((w, a))
        directed.add((w, b))
    for a, b in sorted(mediated):
        lo, hi = sorted((a, b))
        c = _fresh(f"__C_{lo}_{hi}", taken)
        extra.append(c)
        directed.add((a, c))
        directed.add((c, b))
    return Admg(graph.nodes + tuple(extra), frozenset(directed), frozenset())


def helper_conditioning_set(graph: Admg, treatments, outcomes, covariates) -> frozenset[str]:
    """Covariate ancestors that the treatments cannot reach but the outcomes
    can: ancestors of the covariates, outside the treatments' descendants,
    still connected to the outcomes given the covariates once the treatment
    nodes are deleted.  Covariates and outcomes themselves are excluded.
    """
    treatments = graph.node_subset(treatments)
    outcomes = graph.node_subset(outcomes)
    covariates = graph.node_subset(covariates)
    anc = ancestors(graph, covariates)
    nondesc = frozenset(graph.nodes) - descendants(graph, treatments)
    pruned = remove_nodes(graph, treatments)
    linked = d_connected_nodes(pruned, outcomes, covariates)
    return (anc & nondesc & linked) - covariates - outcomes


def magnification_check(graph: Admg, query: AdjustmentQuery) -> bool:
    """Adjustment validity decided on the magnified graph.

    Mediators replace the outcomes' outgoing edges, bidirected edges become
    explicit sources, and three separation statements are checked: the
    helper set plus non-descendant covariates satisfies the back-door
    criterion, the helpers are separated from the treatments given the
    covariates, and the descendant covariates are separated from the
    outcomes given everything else.  Agrees with ``adjustment_criterion``
    on every query.
    """
    _checked_query(graph, query)
    x, y, z = query.treatments, query.outcomes, query.covariates
    outgoing_from_y = {(a, b) for (a, b) in graph.directed if a in y}
    magnified = magnify(graph, outgoing_from_y)
    z_nd = z - descendants(graph, x)
    z_d = z & descendants(graph, x)
    helpers = helper_conditioning_set(magnified, x, y, z)
    if not _backdoor_holds(magnified, x, y, helpers | z_nd):
        return False
    if helpers and not d_separated(magnified, x, helpers, z).separated:
        return False
    if z_d and not d_separated(magnified, y, z_d, x | z_nd | helpers).separated:
        return False
    return True


_FAILURE_KINDS = {
    ForbiddenDescendant: "forbidden_descendant",
    OpenNonCausalPath: "open_noncausal_path",
    TreatmentDescendant: "treatment_descendant",
    OpenBackdoorPath: "open_backdoor_path",
}


def verdict_to_json(criterion: str, verdict: CriterionVerdict) -> dict:
    """Render a verdict as the stable JSON document the CLI emits."""
    failure = None
    witness = None
    f = verdict.failure
    if isinstance(f, ForbiddenDescendant):
        failure = {"kind": _FAILURE_KINDS[type(f)], "offender": f.offender, "causal_node": f.causal_node}
    elif isinstance(f, TreatmentDescendant):
        failure = {"kind": _FAILURE_KINDS[type(f)], "offender": f.offender}
    elif isinstance(f, (OpenNonCausalPath, OpenBackdoorPath)):
        failure = {"kind": _FAILURE_KINDS[type(f)], "path": str(f.path)}
        witness = str(f.path)
    return {
        "criterion": criterion,
        "holds": verdict.holds,
        "failure": failure,
        "witness_path": witness,
    }


def verdict_from_json(doc: dict | str) -> tuple[str, CriterionVerdict]:
    """Parse a verdict document back into objects (inverse of verdict_to_json)."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    failure = None
    raw = doc.get("failure")
    if raw is not None:
        kind = raw["kind"]
        if kind == "forbidden_descendant":
            failure = ForbiddenDescendant(raw["offender"], raw["causal_node"])
        elif kind == "treatment_descendant":
            failure = TreatmentDescendant(raw["offender"])
        elif kind == "open_noncausal_path":
            failure = OpenNonCausalPath(path_from_string(raw["path"]))
        elif kind == "open_backdoor_path":
            failure = OpenBackdoorPath(path_from_string(raw["path"]))
        else:
            raise ValueError(f"unknown failure kind: {kind!r}")
    return doc["criterion"], CriterionVerdict(doc["holds"], failure)
