"""Acyclic directed mixed graphs and their structural transforms.

An :class:`Admg` stores named nodes, directed edges, and bidirected edges.
A bidirected edge stands for an unobserved common cause that has been
marginalized out, so the graph is the latent-projection view of a causal
model; :func:`expand_bidirected` recovers an explicit-latent DAG when one
is needed.  Graphs are immutable: every transform returns a new instance.

A small text format is supported for files and pipelines::

    # comment
    node A B C
    A -> B
    B <-> C

Nodes may be declared up front with ``node`` lines or implicitly at first
mention in an edge.  Node order is first-mention order and is preserved by
serialization.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

HEAD = "head"
TAIL = "tail"

NodeSet = frozenset[str]

__all__ = [
    "HEAD",
    "TAIL",
    "Admg",
    "CycleError",
    "GraphError",
    "GraphParseError",
    "UnknownNodeError",
    "ancestors",
    "cut_incoming",
    "cut_outgoing",
    "descendants",
    "expand_bidirected",
    "incident_marks",
    "latent_project",
    "parse_graph",
    "proper_causal_nodes",
    "remove_nodes",
    "topological_order",
]


class GraphError(ValueError):
    """Base class for graph construction and query errors."""


class GraphParseError(GraphError):
    """Raised on malformed graph text; carries the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class CycleError(GraphError):
    """Raised when the directed part of a graph contains a cycle."""


class UnknownNodeError(GraphError):
    """Raised when an operation names a node the graph does not contain."""


_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:@do)?")


@dataclass(frozen=True, repr=False)
class Admg:
    """Acyclic directed mixed graph.

    Directed edges are (tail, head) pairs; bidirected edges are stored as
    name-sorted pairs.  ``nodes`` keeps first-mention order, which is what
    serialization and derived graphs preserve.
    """

    nodes: tuple[str, ...] = ()
    directed: frozenset[tuple[str, str]] = frozenset()
    bidirected: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "directed", frozenset(self.directed))
        object.__setattr__(self, "bidirected", frozenset(self.bidirected))
        known = set()
        for name in self.nodes:
            if not name or not isinstance(name, str) or any(c.isspace() for c in name):
                raise GraphError(f"bad node name: {name!r}")
            if name in known:
                raise GraphError(f"node {name} listed twice")
            known.add(name)
        parents: dict[str, set[str]] = {v: set() for v in self.nodes}
        children: dict[str, set[str]] = {v: set() for v in self.nodes}
        spouses: dict[str, set[str]] = {v: set() for v in self.nodes}
        for a, b in self.directed:
            if a not in known or b not in known:
                raise UnknownNodeError(f"edge {a} -> {b} uses an undeclared node")
            if a == b:
                raise GraphError(f"self-loop on {a}")
            children[a].add(b)
            parents[b].add(a)
        for pair in self.bidirected:
            a, b = pair
            if (a, b) != tuple(sorted(pair)):
                raise GraphError(f"bidirected pair {pair} is not name-sorted")
            if a not in known or b not in known:
                raise UnknownNodeError(f"edge {a} <-> {b} uses an undeclared node")
            if a == b:
                raise GraphError(f"self-loop on {a}")
            spouses[a].add(b)
            spouses[b].add(a)
        object.__setattr__(self, "_parents", {v: frozenset(s) for v, s in parents.items()})
        object.__setattr__(self, "_children", {v: frozenset(s) for v, s in children.items()})
        object.__setattr__(self, "_spouses", {v: frozenset(s) for v, s in spouses.items()})
        object.__setattr__(self, "_anc_cache", {})
        object.__setattr__(self, "_desc_cache", {})
        self._check_acyclic()

    def _check_acyclic(self):
        indeg = {v: len(self._parents[v]) for v in self.nodes}
        ready = [v for v in self.nodes if indeg[v] == 0]
        seen = 0
        while ready:
            v = ready.pop()
            seen += 1
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if seen != len(self.nodes):
            cycle = sorted(v for v, d in indeg.items() if d > 0)
            raise CycleError(f"cycle detected in directed part (involving {', '.join(cycle)})")

    @classmethod
    def build(cls, directed=(), bidirected=(), nodes=()) -> "Admg":
        """Build a graph collecting nodes in first-mention order."""
        order: dict[str, None] = {}
        for v in nodes:
            order.setdefault(v, None)
        d = []
        for a, b in directed:
            order.setdefault(a, None)
            order.setdefault(b, None)
            d.append((a, b))
        bi = []
        for a, b in bidirected:
            order.setdefault(a, None)
            order.setdefault(b, None)
            bi.append(tuple(sorted((a, b))))
        return cls(tuple(order), frozenset(d), frozenset(bi))

    def parents(self, v: str) -> NodeSet:
        self._require(v)
        return self._parents[v]

    def children(self, v: str) -> NodeSet:
        self._require(v)
        return self._children[v]

    def spouses(self, v: str) -> NodeSet:
        """Nodes joined to ``v`` by a bidirected edge."""
        self._require(v)
        return self._spouses[v]

    def _require(self, v: str):
        if v not in self._parents:
            raise UnknownNodeError(f"unknown node: {v}")

    def node_subset(self, names) -> NodeSet:
        out = frozenset(names)
        for v in out:
            self._require(v)
        return out

    def to_text(self) -> str:
        """Serialize to the graph text format (round-trips through parse_graph)."""
        lines = []
        if self.nodes:
            lines.append("node " + " ".join(self.nodes))
        for a, b in sorted(self.directed):
            lines.append(f"{a} -> {b}")
        for a, b in sorted(self.bidirected):
            lines.append(f"{a} <-> {b}")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        d = ", ".join(f"{a} -> {b}" for a, b in sorted(self.directed))
        bi = ", ".join(f"{a} <-> {b}" for a, b in sorted(self.bidirected))
        edges = "; ".join(s for s in (d, bi) if s)
        return f"<Admg [{' '.join(self.nodes)}] {edges}>"


def _tokens(line: str, lineno: int):
    """Split one line of graph text into (token, column) pairs."""
    out = []
    pos = 0
    n = len(line)
    while pos < n:
        ch = line[pos]
        if ch.isspace():
            pos += 1
            continue
        if line.startswith("<->", pos):
            out.append(("<->", pos + 1))
            pos += 3
            continue
        if line.startswith("->", pos):
            out.append(("->", pos + 1))
            pos += 2
            continue
        m = _NAME_RE.match(line, pos)
        if m:
            out.append((m.group(0), pos + 1))
            pos = m.end()
            continue
        raise GraphParseError(f"unexpected character {ch!r}", lineno, pos + 1)
    return out


def parse_graph(text: str) -> Admg:
    """Parse graph text into an :class:`Admg`.

    Raises :class:`GraphParseError` on syntax problems (with line and
    column), on duplicate edges, and :class:`CycleError` when the directed
    part is cyclic.
    """
    order: dict[str, None] = {}
    directed: list[tuple[str, str]] = []
    bidirected: list[tuple[str, str]] = []
    seen_directed: set[tuple[str, str]] = set()
    seen_bidirected: set[tuple[str, str]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line, lineno)
        if not toks:
            continue
        first, first_col = toks[0]
        if first == "node":
            if len(toks) < 2:
                raise GraphParseError("node line declares no nodes", lineno, first_col)
            for tok, col in toks[1:]:
                if tok in ("->", "<->"):
                    raise GraphParseError("arrow in node declaration", lineno, col)
                order.setdefault(tok, None)
            continue
        shape_ok = (
            len(toks) == 3
            and toks[1][0] in ("->", "<->")
            and toks[0][0] not in ("->", "<->")
            and toks[2][0] not in ("->", "<->")
        )
        if not shape_ok:
            col = first_col
            for i, (tok, c) in enumerate(toks):
                is_arrow = tok in ("->", "<->")
                if i > 2 or is_arrow != (i == 1):
                    col = c
                    break
            raise GraphParseError("expected 'A -> B', 'A <-> B', or a node declaration", lineno, col)
        tail, arrow, head = toks[0][0], toks[1][0], toks[2][0]
        order.setdefault(tail, None)
        order.setdefault(head, None)
        if tail == head:
            raise GraphParseError(f"self-loop on {tail}", lineno, first_col)
        if arrow == "->":
            if (tail, head) in seen_directed:
                raise GraphParseError(f"duplicate edge {tail} -> {head}", lineno, first_col)
            seen_directed.add((tail, head))
            directed.append((tail, head))
        else:
            pair = tuple(sorted((tail, head)))
            if pair in seen_bidirected:
                raise GraphParseError(f"duplicate edge {tail} <-> {head}", lineno, first_col)
            seen_bidirected.add(pair)
            bidirected.append(pair)
    return Admg(tuple(order), frozenset(directed), frozenset(bidirected))


def _closure(graph: Admg, seeds: NodeSet, neighbors) -> NodeSet:
    out = set(seeds)
    stack = list(seeds)
    while stack:
        v = stack.pop()
        for w in neighbors(v):
            if w not in out:
                out.add(w)
                stack.append(w)
    return frozenset(out)


def ancestors(graph: Admg, nodes) -> NodeSet:
    """Reflexive transitive closure over parent edges."""
    nodes = graph.node_subset(nodes)
    cache = graph._anc_cache
    out = set()
    for v in nodes:
        if v not in cache:
            cache[v] = _closure(graph, frozenset({v}), graph.parents)
        out |= cache[v]
    return frozenset(out)


def descendants(graph: Admg, nodes) -> NodeSet:
    """Reflexive transitive closure over child edges."""
    nodes = graph.node_subset(nodes)
    cache = graph._desc_cache
    out = set()
    for v in nodes:
        if v not in cache:
            cache[v] = _closure(graph, frozenset({v}), graph.children)
        out |= cache[v]
    return frozenset(out)


def cut_incoming(graph: Admg, targets) -> Admg:
    """Drop every edge with an arrowhead at a member of ``targets``.

    Directed edges pointing into the set and bidirected edges touching it
    are removed; this is the graph after an intervention on ``targets``.
    """
    return _cut_incoming(graph, graph.node_subset(targets))


@lru_cache(maxsize=4096)
def _cut_incoming(graph: Admg, targets: NodeSet) -> Admg:
    directed = frozenset(e for e in graph.directed if e[1] not in targets)
    bidirected = frozenset(e for e in graph.bidirected if e[0] not in targets and e[1] not in targets)
    return Admg(graph.nodes, directed, bidirected)


def cut_outgoing(graph: Admg, sources) -> Admg:
    """Drop directed edges whose tail is in ``sources``; bidirected edges stay."""
    return _cut_outgoing(graph, graph.node_subset(sources))


@lru_cache(maxsize=4096)
def _cut_outgoing(graph: Admg, sources: NodeSet) -> Admg:
    directed = frozenset(e for e in graph.directed if e[0] not in sources)
    return Admg(graph.nodes, directed, graph.bidirected)


def remove_nodes(graph: Admg, dropped) -> Admg:
    """Delete nodes together with every edge that touches them."""
    return _remove_nodes(graph, graph.node_subset(dropped))


@lru_cache(maxsize=4096)
def _remove_nodes(graph: Admg, dropped: NodeSet) -> Admg:
    keep = tuple(v for v in graph.nodes if v not in dropped)
    directed = frozenset(e for e in graph.directed if e[0] not in dropped and e[1] not in dropped)
    bidirected = frozenset(e for e in graph.bidirected if e[0] not in dropped and e[1] not in dropped)
    return Admg(keep, directed, bidirected)


def incident_marks(graph: Admg, v: str):
    """Edges at ``v`` as (other_end, mark_at_v, mark_at_other) triples.

    Deterministic order: by neighbor name, then outgoing directed,
    incoming directed, bidirected.
    """
    out = []
    for w in graph.children(v):
        out.append((w, 0, TAIL, HEAD))
    for w in graph.parents(v):
        out.append((w, 1, HEAD, TAIL))
    for w in graph.spouses(v):
        out.append((w, 2, HEAD, HEAD))
    out.sort()
    return [(w, mv, mw) for w, _, mv, mw in out]


def _link_marks(graph: Admg, a: str, b: str, interior: NodeSet) -> set[tuple[str, str]]:
    """End-mark pairs of collider-free simple paths from a to b through ``interior``.

    Only paths whose internal nodes all lie in ``interior`` count.  A pair
    (mark_at_a, mark_at_b) is reported once no matter how many paths carry it.
    """
    marks: set[tuple[str, str]] = set()

    def walk(v, entry_mark, first_mark, visited):
        for w, mv, mw in incident_marks(graph, v):
            if entry_mark == HEAD and mv == HEAD:
                continue  # collider at v: closed once the interior is marginalized
            fm = mv if first_mark is None else first_mark
            if w == b:
                marks.add((fm, mw))
                continue
            if w == a or w in visited or w not in interior:
                continue
            walk(w, mw, fm, visited | {w})

    walk(a, None, None, frozenset())
    return marks


def latent_project(graph: Admg, hidden) -> Admg:
    """Marginalize ``hidden`` out of the graph.

    Retained nodes A, B gain a directed edge A -> B when some directed path
    A -> ... -> B runs entirely through hidden nodes, and a bidirected edge
    when some collider-free path with arrowheads at both ends does.
    Projecting the empty set returns the graph unchanged.
    """
    return _latent_project(graph, graph.node_subset(hidden))


@lru_cache(maxsize=2048)
def _latent_project(graph: Admg, hidden: NodeSet) -> Admg:
    keep = tuple(v for v in graph.nodes if v not in hidden)
    directed = set()
    bidirected = set()
    for a in keep:
        for b in keep:
            if a == b:
                continue
            marks = _link_marks(graph, a, b, hidden)
            if (TAIL, HEAD) in marks:
                directed.add((a, b))
            if a < b and (HEAD, HEAD) in marks:
                bidirected.add((a, b))
    return Admg(keep, frozenset(directed), frozenset(bidirected))


def proper_causal_nodes(graph: Admg, treatments, outcomes) -> NodeSet:
    """Nodes lying on a directed path from ``treatments`` to ``outcomes``
    that meets the treatment set only at its start.

    Endpoints are included.  Computed on the graph with edges into the
    treatment set removed, where reachability from the treatments can never
    re-enter them.
    """
    treatments = graph.node_subset(treatments)
    outcomes = graph.node_subset(outcomes)
    if treatments & outcomes:
        raise GraphError("treatment and outcome sets overlap")
    return _proper_causal_nodes(graph, treatments, outcomes)


@lru_cache(maxsize=8192)
def _proper_causal_nodes(graph: Admg, treatments: NodeSet, outcomes: NodeSet) -> NodeSet:
    stripped = cut_incoming(graph, treatments)
    return descendants(stripped, treatments) & ancestors(stripped, outcomes)


def expand_bidirected(graph: Admg, prefix: str = "__U") -> tuple[Admg, dict[tuple[str, str], str]]:
    """Replace each bidirected edge with an explicit exogenous parent.

    Returns the expanded DAG plus a map from each original bidirected pair
    to the fresh latent node that replaced it.  Latents are named
    ``<prefix>_<A>_<B>`` with name-sorted endpoints.
    """
    return _expand_bidirected(graph, prefix)


@lru_cache(maxsize=2048)
def _expand_bidirected(graph: Admg, prefix: str) -> tuple[Admg, dict[tuple[str, str], str]]:
    taken = set(graph.nodes)
    mapping: dict[tuple[str, str], str] = {}
    directed = set(graph.directed)
    extra = []
    for a, b in sorted(graph.bidirected):
        u = f"{prefix}_{a}_{b}"
        while u in taken:
            u += "_"
        taken.add(u)
        mapping[(a, b)] = u
        extra.append(u)
        directed.add((u, a))
        directed.add((u, b))
    return Admg(graph.nodes + tuple(extra), frozenset(directed), frozenset()), mapping


def topological_order(graph: Admg) -> tuple[str, ...]:
    """Topological order of the directed part, stable in node order."""
    index = {v: i for i, v in enumerate(graph.nodes)}
    indeg = {v: len(graph.parents(v)) for v in graph.nodes}
    import heapq

    ready = [index[v] for v in graph.nodes if indeg[v] == 0]
    heapq.heapify(ready)
    out = []
    while ready:
        v = graph.nodes[heapq.heappop(ready)]
        out.append(v)
        for c in sorted(graph.children(v)):
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, index[c])
    return tuple(out)
