"""Shared fixtures: the example graphs, deterministic graph families, and
slow brute-force oracles that the fast implementations are checked against.
"""

from __future__ import annotations

import random
from functools import lru_cache
from itertools import combinations, product
from pathlib import Path

import pytest

from adjustkit import Admg, AdjustmentQuery, CycleError, parse_graph
from adjustkit.separation import Path as GraphPath
from adjustkit.separation import Route, Step, enumerate_paths, path_blocked
from adjustkit.graph import incident_marks

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"

NAMES = "ABCDEFG"


def load_fixture(name: str) -> Admg:
    return parse_graph((FIXTURE_DIR / name).read_text())


@pytest.fixture(scope="session")
def fig1a() -> Admg:
    return load_fixture("fig1a.g")


@pytest.fixture(scope="session")
def fig1b() -> Admg:
    return load_fixture("fig1b.g")


@pytest.fixture(scope="session")
def fig1c() -> Admg:
    return load_fixture("fig1c.g")


def graph_from_edges(directed=(), bidirected=(), nodes=()) -> Admg:
    """Convenience constructor used all over the tests."""
    lines = []
    if nodes:
        lines.append("node " + " ".join(nodes))
    lines += [f"{a} -> {b}" for a, b in directed]
    lines += [f"{a} <-> {b}" for a, b in bidirected]
    return parse_graph("\n".join(lines))


# --- deterministic graph families ------------------------------------------


@lru_cache(maxsize=None)
def all_mixed_graphs(n: int) -> tuple[Admg, ...]:
    """Every ADMG on n named nodes (small n only)."""
    nodes = tuple(NAMES[:n])
    dir_pairs = [(a, b) for a in nodes for b in nodes if a != b]
    bi_pairs = list(combinations(nodes, 2))
    out = []
    for dmask in range(1 << len(dir_pairs)):
        directed = frozenset(p for i, p in enumerate(dir_pairs) if dmask >> i & 1)
        try:
            base = Admg(nodes, directed, frozenset())
        except CycleError:
            continue
        out.append(base)
        for bmask in range(1, 1 << len(bi_pairs)):
            bidirected = frozenset(p for i, p in enumerate(bi_pairs) if bmask >> i & 1)
            out.append(Admg(nodes, directed, bidirected))
    return tuple(out)


@lru_cache(maxsize=None)
def all_dags(n: int) -> tuple[Admg, ...]:
    """Every directed-only graph on n nodes that is acyclic."""
    nodes = tuple(NAMES[:n])
    dir_pairs = [(a, b) for a in nodes for b in nodes if a != b]
    out = []
    for dmask in range(1 << len(dir_pairs)):
        directed = frozenset(p for i, p in enumerate(dir_pairs) if dmask >> i & 1)
        try:
            out.append(Admg(nodes, directed, frozenset()))
        except CycleError:
            continue
    return tuple(out)


def random_admg(rng: random.Random, n_nodes=None, max_edges: int = 8) -> Admg:
    """A random ADMG; directed edges follow a shuffled topological order so
    the result is acyclic by construction."""
    n = n_nodes if n_nodes is not None else rng.randint(2, 5)
    nodes = list(NAMES[:n])
    order = nodes[:]
    rng.shuffle(order)
    pos = {v: i for i, v in enumerate(order)}
    dir_candidates = [(a, b) for a in nodes for b in nodes if pos[a] < pos[b]]
    bi_candidates = list(combinations(nodes, 2))
    budget = rng.randint(0, max_edges)
    n_dir = rng.randint(0, min(budget, len(dir_candidates)))
    directed = rng.sample(dir_candidates, n_dir)
    n_bi = min(budget - n_dir, len(bi_candidates))
    bidirected = rng.sample(bi_candidates, rng.randint(0, n_bi)) if n_bi > 0 else []
    return Admg(tuple(nodes), frozenset(directed), frozenset(bidirected))


@lru_cache(maxsize=None)
def graph_family(count: int = 300, base_seed: int = 1000) -> tuple[Admg, ...]:
    """The seeded family the acceptance sweeps run over: ``count`` graphs on
    at most 5 nodes with at most 8 edges."""
    return tuple(
        random_admg(random.Random(base_seed + i), max_edges=8) for i in range(count)
    )


def all_queries(graph: Admg):
    """Every (X, Y, Z) split of the graph's nodes with X, Y nonempty.

    Each node independently plays treatment, outcome, covariate, or none;
    enumeration order is fixed by sorted node names.
    """
    nodes = sorted(graph.nodes)
    for assign in product(range(4), repeat=len(nodes)):
        x = frozenset(v for v, a in zip(nodes, assign) if a == 0)
        y = frozenset(v for v, a in zip(nodes, assign) if a == 1)
        if not x or not y:
            continue
        z = frozenset(v for v, a in zip(nodes, assign) if a == 2)
        yield AdjustmentQuery(x, y, z)


def singleton_pairs(graph: Admg):
    for a, b in combinations(sorted(graph.nodes), 2):
        yield frozenset({a}), frozenset({b})


def subsets_of(pool):
    pool = sorted(pool)
    for size in range(len(pool) + 1):
        for combo in combinations(pool, size):
            yield frozenset(combo)


# --- brute-force oracles ----------------------------------------------------


def brute_d_separated(graph: Admg, a, b, z) -> bool:
    """Path-enumeration reference for the reachability-based decision."""
    return all(path_blocked(graph, p, z) for p in enumerate_paths(graph, a, b))


def brute_proper_causal_nodes(graph: Admg, treatments, outcomes) -> frozenset[str]:
    """Nodes on some directed path from X to Y that avoids X after its start.

    Plain DFS over directed edges; paths may run through outcome nodes and
    keep going, and every prefix ending inside Y marks its nodes.
    """
    treatments = frozenset(treatments)
    outcomes = frozenset(outcomes)
    found: set[str] = set()

    def walk(v, trail):
        if v in outcomes:
            found.update(trail)
        for w in sorted(graph.children(v)):
            if w in treatments or w in trail:
                continue
            walk(w, trail + (w,))

    for x in sorted(treatments):
        walk(x, (x,))
    return frozenset(found)


def random_route(rng: random.Random, graph: Admg, max_steps: int | None = None):
    """A random walk through the graph's edges, or None if the start node
    has no incident edges."""
    if max_steps is None:
        max_steps = 3 * len(graph.nodes)
    start = rng.choice(graph.nodes)
    steps = []
    at = start
    for _ in range(rng.randint(1, max_steps)):
        options = incident_marks(graph, at)
        if not options:
            break
        w, mv, mw = rng.choice(options)
        steps.append(Step(at, w, mv, mw))
        at = w
    if not steps:
        return None
    return Route(start, tuple(steps))


def route_from_paths(first: GraphPath, second: GraphPath) -> Route:
    """Concatenate two paths sharing an endpoint into one route."""
    assert first.end == second.start
    return Route(first.start, first.steps + second.steps)
