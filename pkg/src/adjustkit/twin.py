"""Twin networks: a factual and a post-intervention world in one DAG.

The construction duplicates every node the intervention can reach, leaves
the rest shared between worlds, replaces bidirected edges with explicit
exogenous parents feeding both worlds, and cuts all edges into the
intervened copies.  Counterfactual independence questions then reduce to
plain separation queries on the combined graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .graph import Admg, descendants
from .separation import d_separated

__all__ = ["TwinGraph", "graphical_ignorability", "noise_linked", "twin_network"]

COUNTERFACTUAL_SUFFIX = "@do"


@dataclass
class TwinGraph:
    """A two-world DAG plus name maps back to the original graph.

    ``factual_of`` maps each original node to its factual copy (same name);
    ``counterfactual_of`` maps it to the post-intervention copy, which for
    nodes the intervention cannot reach is the single shared copy.
    """

    graph: Admg
    factual_of: dict[str, str] = field(repr=False)
    counterfactual_of: dict[str, str] = field(repr=False)


def twin_network(graph: Admg, treatments) -> TwinGraph:
    """Build the two-world graph for an intervention on ``treatments``.

    Descendants of the treatments get a second copy named ``<node>@do``;
    everything else is shared.  Each bidirected edge {A, B} becomes an
    exogenous node ``__U_<A>_<B>`` with edges into A and B in both worlds,
    except that no edge enters a treatment copy: the ``@do`` copies of the
    treatments are parentless.
    """
    return _twin_network(graph, graph.node_subset(treatments))


@lru_cache(maxsize=1024)
def _twin_network(graph: Admg, treatments) -> TwinGraph:
    affected = descendants(graph, treatments)
    copy_of = {
        v: v + COUNTERFACTUAL_SUFFIX if v in affected else v for v in graph.nodes
    }
    taken = set(graph.nodes) | set(copy_of.values())
    directed: set[tuple[str, str]] = set()
    for a, b in graph.directed:
        directed.add((a, b))
        if b in affected and b not in treatments:
            directed.add((copy_of[a], copy_of[b]))
    latents: list[str] = []
    for a, b in sorted(graph.bidirected):
        u = f"__U_{a}_{b}"
        while u in taken:
            u += "_"
        taken.add(u)
        latents.append(u)
        for end in (a, b):
            directed.add((u, end))
            if end in affected and end not in treatments:
                directed.add((u, copy_of[end]))
    nodes = (
        graph.nodes
        + tuple(copy_of[v] for v in graph.nodes if v in affected)
        + tuple(latents)
    )
    twin = Admg(nodes, frozenset(directed), frozenset())
    return TwinGraph(twin, {v: v for v in graph.nodes}, copy_of)


def noise_linked(twin: TwinGraph) -> Admg:
    """The twin graph with a bidirected edge tying each duplicated node to
    its copy.

    A duplicated node and its post-intervention copy are driven by the same
    exogenous noise, so the worlds stay dependent through it even when no
    directed cross-world path exists.  ``twin_network`` leaves these links
    implicit to keep the dumped structure minimal; separation queries must
    put them back or they claim independences no model satisfies.
    Intervened copies stay unlinked: setting a node by intervention severs
    its noise along with its parents.
    """
    links = frozenset(
        (v, copy)
        for v, copy in twin.counterfactual_of.items()
        # a parentless copy is an intervened one: every other duplicated
        # node inherits at least one parent from the mutilated graph
        if copy != v and twin.graph.parents(copy)
    )
    return Admg(twin.graph.nodes, twin.graph.directed, twin.graph.bidirected | links)


def graphical_ignorability(graph: Admg, query) -> bool:
    """Whether the post-intervention outcomes are separated from the
    treatments by the covariates, read off the twin network.

    True exactly when the adjustment criterion accepts the covariates.
    """
    x, y, z = query.treatments, query.outcomes, query.covariates
    graph.node_subset(x | y | z)
    twin = twin_network(graph, x)
    outcome_copies = frozenset(twin.counterfactual_of[v] for v in y)
    return d_separated(noise_linked(twin), x, outcome_copies, z).separated
