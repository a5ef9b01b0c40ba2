"""Paths, routes, blocking, and separation queries over mixed graphs.

Bidirected edges carry arrowheads at both ends, so every rule here treats
them exactly like a hidden common cause would: a node is a collider on a
walk when both adjacent edge marks point into it.  Separation decisions
run in linear time by arrowhead-aware reachability; the path enumerator
doubles as the reference checker and supplies deterministic witnesses.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .graph import (
    HEAD,
    TAIL,
    Admg,
    GraphError,
    ancestors,
    descendants,
    incident_marks,
)

__all__ = [
    "Path",
    "Route",
    "SepVerdict",
    "Step",
    "d_connected_nodes",
    "d_separated",
    "direct_route",
    "enumerate_paths",
    "find_inducing_path",
    "path_blocked",
    "path_from_string",
    "route_blocked",
]

_ARROWS = {(TAIL, HEAD): "->", (HEAD, TAIL): "<-", (HEAD, HEAD): "<->"}
_MARKS = {arrow: marks for marks, arrow in _ARROWS.items()}


@dataclass(frozen=True)
class Step:
    """One edge traversal: marks are the edge's arrow ends at each node."""

    source: str
    target: str
    source_mark: str
    target_mark: str

    def __post_init__(self):
        if self.source == self.target:
            raise GraphError("step endpoints must differ")
        if (self.source_mark, self.target_mark) not in _ARROWS:
            raise GraphError(
                f"illegal mark pair ({self.source_mark}, {self.target_mark})"
            )

    @property
    def arrow(self) -> str:
        return _ARROWS[(self.source_mark, self.target_mark)]

    def exists_in(self, graph: Admg) -> bool:
        if self.source_mark == TAIL:
            return (self.source, self.target) in graph.directed
        if self.target_mark == TAIL:
            return (self.target, self.source) in graph.directed
        return tuple(sorted((self.source, self.target))) in graph.bidirected


def _check_chain(start: str, steps: tuple[Step, ...]):
    at = start
    for s in steps:
        if s.source != at:
            raise GraphError(f"steps do not chain at {s.source} (expected {at})")
        at = s.target


@dataclass(frozen=True)
class Path:
    """A walk that visits no node twice."""

    start: str
    steps: tuple[Step, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        _check_chain(self.start, self.steps)
        seen = {self.start}
        for s in self.steps:
            if s.target in seen:
                raise GraphError(f"node {s.target} repeated on path")
            seen.add(s.target)

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.start,) + tuple(s.target for s in self.steps)

    @property
    def end(self) -> str:
        return self.steps[-1].target if self.steps else self.start

    def validate_in(self, graph: Admg):
        for v in self.nodes:
            graph._require(v)
        for s in self.steps:
            if not s.exists_in(graph):
                raise GraphError(f"step {s.source} {s.arrow} {s.target} is not an edge of the graph")

    def __str__(self):
        out = [self.start]
        for s in self.steps:
            out.append(s.arrow)
            out.append(s.target)
        return " ".join(out)


@dataclass(frozen=True)
class Route:
    """A walk that may revisit nodes; visits carry occurrence labels."""

    start: str
    steps: tuple[Step, ...]
    occurrence_labels: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise GraphError("a route needs at least one step")
        _check_chain(self.start, self.steps)
        counts: dict[str, int] = {}
        labels = []
        for v in self.node_sequence:
            labels.append(counts.get(v, 0))
            counts[v] = labels[-1] + 1
        object.__setattr__(self, "occurrence_labels", tuple(labels))

    @property
    def node_sequence(self) -> tuple[str, ...]:
        return (self.start,) + tuple(s.target for s in self.steps)

    @property
    def end(self) -> str:
        return self.steps[-1].target

    def validate_in(self, graph: Admg):
        for v in self.node_sequence:
            graph._require(v)
        for s in self.steps:
            if not s.exists_in(graph):
                raise GraphError(f"step {s.source} {s.arrow} {s.target} is not an edge of the graph")

    def __str__(self):
        out = [self.start]
        for s in self.steps:
            out.append(s.arrow)
            out.append(s.target)
        return " ".join(out)


def path_from_string(text: str) -> Path:
    """Inverse of ``str(path)``: parse 'X -> A <-> B <- Y' into a Path."""
    toks = text.split()
    if not toks or len(toks) % 2 == 0:
        raise GraphError(f"malformed path text: {text!r}")
    start = toks[0]
    steps = []
    at = start
    for i in range(1, len(toks), 2):
        arrow, nxt = toks[i], toks[i + 1]
        if arrow not in _MARKS:
            raise GraphError(f"malformed path text: {text!r}")
        sm, tm = _MARKS[arrow]
        steps.append(Step(at, nxt, sm, tm))
        at = nxt
    return Path(start, tuple(steps))


def _triples_blocked(graph: Admg, visits: tuple[str, ...], steps: tuple[Step, ...], given: frozenset[str]) -> bool:
    for i in range(1, len(visits) - 1):
        collider = steps[i - 1].target_mark == HEAD and steps[i].source_mark == HEAD
        if collider:
            if not (descendants(graph, frozenset({visits[i]})) & given):
                return True
        elif visits[i] in given:
            return True
    return False


def path_blocked(graph: Admg, path: Path, given) -> bool:
    """Whether conditioning on ``given`` blocks the path.

    A non-collider on the path blocks when it is in ``given``; a collider
    blocks when neither it nor any of its descendants is.
    """
    path.validate_in(graph)
    given = graph.node_subset(given)
    return _triples_blocked(graph, path.nodes, path.steps, given)


def route_blocked(graph: Admg, route: Route, given) -> bool:
    """Route-level blocking: the same triple rule applied per visit."""
    route.validate_in(graph)
    given = graph.node_subset(given)
    return _triples_blocked(graph, route.node_sequence, route.steps, given)


def enumerate_paths(graph: Admg, sources, sinks, max_len: int | None = None) -> list[Path]:
    """All paths from ``sources`` to ``sinks`` touching sources only at the
    start and sinks only at the end, in deterministic (lexicographic) order.

    ``max_len`` caps the number of steps; by default it is the node count,
    which no simple path can exceed.
    """
    sources = graph.node_subset(sources)
    sinks = graph.node_subset(sinks)
    if sources & sinks:
        raise GraphError("endpoint sets overlap")
    if max_len is None:
        max_len = len(graph.nodes)
    found: list[Path] = []

    def extend(start, v, steps, visited):
        if len(steps) >= max_len:
            return
        for w, mv, mw in incident_marks(graph, v):
            step = Step(v, w, mv, mw)
            if w in sinks:
                found.append(Path(start, steps + (step,)))
                continue
            if w in sources or w in visited:
                continue
            extend(start, w, steps + (step,), visited | {w})

    for a in sorted(sources):
        extend(a, a, (), {a})
    return found


def _path_key(path: Path):
    return (len(path.steps), path.nodes, tuple(s.arrow for s in path.steps))


def _connected_closure(graph: Admg, src: frozenset[str], given: frozenset[str], stop_at: frozenset[str] = frozenset()) -> set[str]:
    """Nodes reachable from ``src`` along walks kept open by ``given``.

    Walks never pass through ``src`` or ``stop_at`` internally (they may end
    there).  Openness is judged per visit: entering and leaving a node
    through arrowheads needs a conditioned descendant, anything else needs
    the node itself unconditioned.
    """
    open_collider: dict[str, bool] = {}

    def collider_open(v: str) -> bool:
        if v not in open_collider:
            open_collider[v] = bool(descendants(graph, frozenset({v})) & given)
        return open_collider[v]

    seen: set[tuple[str, bool]] = set()
    reached: set[str] = set()
    queue: deque[tuple[str, bool]] = deque()

    def push(w: str, mw: str):
        state = (w, mw == HEAD)
        if state in seen:
            return
        seen.add(state)
        reached.add(w)
        if w not in src and w not in stop_at:
            queue.append(state)

    for a in sorted(src):
        for w, _mv, mw in incident_marks(graph, a):
            push(w, mw)
    while queue:
        v, came_head = queue.popleft()
        for w, mv, mw in incident_marks(graph, v):
            if came_head and mv == HEAD:
                if not collider_open(v):
                    continue
            elif v in given:
                continue
            push(w, mw)
    return reached


class SepVerdict:
    """Outcome of a separation query.

    ``witness`` is ``None`` when separated; otherwise it is the shortest
    open path (ties broken by lexicographic node sequence), computed on
    first access.
    """

    __slots__ = ("separated", "_graph", "_first", "_second", "_given", "_witness", "_have_witness")

    def __init__(self, separated: bool, graph: Admg, first, second, given):
        self.separated = separated
        self._graph = graph
        self._first = first
        self._second = second
        self._given = given
        self._witness = None
        self._have_witness = False

    @property
    def witness(self) -> Path | None:
        if self.separated:
            return None
        if not self._have_witness:
            candidates = [
                p
                for p in enumerate_paths(self._graph, self._first, self._second)
                if not path_blocked(self._graph, p, self._given)
            ]
            if not candidates:
                raise AssertionError("reachability reported a connection but no open path exists")
            self._witness = min(candidates, key=_path_key)
            self._have_witness = True
        return self._witness

    def __repr__(self):
        return f"SepVerdict(separated={self.separated})"


def d_separated(graph: Admg, first, second, given) -> SepVerdict:
    """Decide whether ``given`` blocks every path between the node sets.

    The three sets must be pairwise disjoint.  The decision runs by
    reachability; the witness, when the sets are connected, is drawn from
    full path enumeration so repeated runs agree exactly.
    """
    first = graph.node_subset(first)
    second = graph.node_subset(second)
    given = graph.node_subset(given)
    if first & second or first & given or second & given:
        raise GraphError("query sets must be pairwise disjoint")
    connected = False
    if first and second:
        reached = _connected_closure(graph, first, given, stop_at=second)
        connected = bool(reached & second)
    return SepVerdict(not connected, graph, first, second, given)


def d_connected_nodes(graph: Admg, sources, given) -> frozenset[str]:
    """Nodes joined to ``sources`` by at least one open path given ``given``.

    Members of ``sources`` count as connected to themselves.
    """
    sources = graph.node_subset(sources)
    given = graph.node_subset(given)
    if sources & given:
        raise GraphError("query sets must be pairwise disjoint")
    return frozenset(_connected_closure(graph, sources, given)) | sources


def direct_route(graph: Admg, route: Route) -> Path:
    """Collapse a route onto the path it carries.

    Starting from the last visit of the start node, each hop follows the
    route's next edge and then jumps forward to the last visit of the node
    just reached, until the route's final node is the current one.  The
    result never repeats a node, and openness under any conditioning set
    survives the collapse.
    """
    route.validate_in(graph)
    seq = route.node_sequence
    last = {v: i for i, v in enumerate(seq)}
    pos = last[seq[0]]
    steps: list[Step] = []
    while pos != len(seq) - 1:
        steps.append(route.steps[pos])
        pos = last[seq[pos + 1]]
    return Path(seq[0], tuple(steps))


def find_inducing_path(graph: Admg, first, second) -> Path | None:
    """Find a path between the sets whose interior nodes are all colliders
    and whose every node is an ancestor of one of the sets.

    Such a path exists exactly when no conditioning set separates the two
    sets.  Returns the shortest one (lexicographic tie-break) or ``None``.
    """
    first = graph.node_subset(first)
    second = graph.node_subset(second)
    if first & second:
        raise GraphError("query sets must be pairwise disjoint")
    ancestors_union = ancestors(graph, first) | ancestors(graph, second)
    best = None
    for path in enumerate_paths(graph, first, second):
        if any(v not in ancestors_union for v in path.nodes):
            continue
        interior_ok = all(
            path.steps[i - 1].target_mark == HEAD and path.steps[i].source_mark == HEAD
            for i in range(1, len(path.nodes) - 1)
        )
        if not interior_ok:
            continue
        if best is None or _path_key(path) < _path_key(best):
            best = path
    return best
