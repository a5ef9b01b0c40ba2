"""Exact discrete structural models for validating graphical verdicts.

Every graphical claim in this package can be checked numerically: a random
structural model is drawn over the graph (bidirected edges become explicit
latent parents), the observed joint and any post-intervention distribution
are computed exactly by enumeration, and the adjustment functional is
compared against the ground truth.  Counterfactual joints use a canonical
functionalization: each node's mechanism draws one independent response per
parent-value row, so worlds that agree on a node's parents agree on the
node.  That pins cross-world behavior to one concrete model among the many
consistent with the conditional probability tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Mapping

import numpy as np

from .criteria import AdjustmentQuery, adjustment_criterion
from .graph import Admg, expand_bidirected

__all__ = [
    "Counterexample",
    "DiscreteScm",
    "Dist",
    "PositivityError",
    "SoundnessReport",
    "StateSpaceError",
    "adjustment_estimand",
    "counterfactual_joint",
    "independence_gap",
    "interventional",
    "joint_observed",
    "random_scm",
    "scm_from_json",
    "scm_to_json",
    "search_counterexample",
    "verify_soundness",
]

STATE_SPACE_LIMIT = 1 << 20
_ROW_SUM_TOL = 1e-12
_DIST_SUM_TOL = 1e-9


class StateSpaceError(ValueError):
    """Raised when an exact computation would enumerate too many cells."""


class PositivityError(ValueError):
    """Raised when the adjustment functional hits P(x, z) = 0 with P(z) > 0."""

    def __init__(self, assignment: dict[str, int]):
        cell = ", ".join(f"{k}={v}" for k, v in sorted(assignment.items()))
        super().__init__(f"positivity violation at covariate cell {{{cell}}}")
        self.assignment = dict(assignment)


@dataclass
class Dist:
    """A dense joint distribution over name-sorted variables."""

    names: tuple[str, ...]
    sizes: tuple[int, ...]
    probs: np.ndarray

    def __post_init__(self):
        self.names = tuple(self.names)
        self.sizes = tuple(self.sizes)
        if self.names != tuple(sorted(self.names)):
            raise ValueError("Dist variables must be name-sorted")
        if len(self.names) != len(self.sizes):
            raise ValueError("names and sizes disagree")
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != self.sizes:
            raise ValueError(f"table shape {self.probs.shape} does not match sizes {self.sizes}")
        if self.probs.min(initial=0.0) < -_ROW_SUM_TOL:
            raise ValueError("negative probability cell")
        total = float(self.probs.sum())
        if abs(total - 1.0) > _DIST_SUM_TOL:
            raise ValueError(f"distribution sums to {total}, not 1")

    def marginal(self, names) -> "Dist":
        keep = tuple(sorted(frozenset(names)))
        missing = frozenset(keep) - frozenset(self.names)
        if missing:
            raise ValueError(f"variables not in distribution: {sorted(missing)}")
        drop_axes = tuple(i for i, n in enumerate(self.names) if n not in keep)
        arr = self.probs.sum(axis=drop_axes) if drop_axes else self.probs
        sizes = tuple(s for n, s in zip(self.names, self.sizes) if n in keep)
        return Dist(keep, sizes, arr)

    def slice_at(self, assignment: Mapping[str, int]) -> "Dist":
        """Unnormalized slice: fix some variables, keep the rest's axes."""
        arr = self.probs
        names = list(self.names)
        sizes = list(self.sizes)
        for v in sorted(assignment, key=names.index, reverse=True):
            i = names.index(v)
            val = assignment[v]
            if not 0 <= val < sizes[i]:
                raise ValueError(f"value {val} out of domain for {v}")
            arr = np.take(arr, val, axis=i)
            del names[i], sizes[i]
        out = Dist.__new__(Dist)
        out.names = tuple(names)
        out.sizes = tuple(sizes)
        out.probs = arr
        return out

    def cell(self, assignment: Mapping[str, int]) -> float:
        if frozenset(assignment) != frozenset(self.names):
            raise ValueError("assignment must cover exactly the distribution's variables")
        idx = tuple(assignment[n] for n in self.names)
        return float(self.probs[idx])

    def max_abs_diff(self, other: "Dist") -> float:
        if self.names != other.names or self.sizes != other.sizes:
            raise ValueError("distributions are over different variables")
        return float(np.abs(self.probs - other.probs).max())

    def total_variation(self, other: "Dist") -> float:
        if self.names != other.names or self.sizes != other.sizes:
            raise ValueError("distributions are over different variables")
        return 0.5 * float(np.abs(self.probs - other.probs).sum())


@dataclass(eq=False)
class DiscreteScm:
    """A discrete structural model over an expanded (explicit-latent) DAG.

    ``cpts[v]`` has one axis per parent (parents name-sorted) plus a final
    axis for ``v``; each row along the final axis sums to one.  The latent
    projection of ``expanded_dag`` over ``latents`` equals ``graph``.
    """

    graph: Admg
    expanded_dag: Admg
    domains: dict[str, int]
    cpts: dict[str, np.ndarray]
    latents: tuple[str, ...]
    seed: int | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def observed(self) -> tuple[str, ...]:
        return self.graph.nodes

    def parent_list(self, v: str) -> list[str]:
        return sorted(self.expanded_dag.parents(v))

    def validate(self):
        from .graph import latent_project

        for v in self.expanded_dag.nodes:
            expected = tuple(self.domains[p] for p in self.parent_list(v)) + (self.domains[v],)
            table = self.cpts[v]
            if table.shape != expected:
                raise ValueError(f"cpt for {v} has shape {table.shape}, expected {expected}")
            if table.min(initial=0.0) < 0:
                raise ValueError(f"cpt for {v} has a negative entry")
            sums = table.sum(axis=-1)
            if np.abs(sums - 1.0).max(initial=0.0) > _ROW_SUM_TOL:
                raise ValueError(f"cpt rows for {v} do not sum to 1")
        if latent_project(self.expanded_dag, self.latents) != self.graph:
            raise ValueError("expanded DAG does not project back onto the model's graph")


def random_scm(graph: Admg, seed: int, domain_size: int = 2, positivity_eps: float = 0.05) -> DiscreteScm:
    """Draw a random model over the graph, deterministically from the seed.

    Every node (latents included) gets ``domain_size`` states; each CPT row
    is uniform on the simplex shrunk so that all entries are at least
    ``positivity_eps``, which keeps every joint configuration possible.
    """
    return _random_scm_cached(graph, int(seed), int(domain_size), float(positivity_eps))


@lru_cache(maxsize=None)
def _random_scm_cached(graph: Admg, seed: int, domain_size: int, positivity_eps: float) -> DiscreteScm:
    if domain_size < 2:
        raise ValueError("domain_size must be at least 2")
    if not 0.0 <= positivity_eps < 1.0 / domain_size:
        raise ValueError("positivity_eps must lie in [0, 1/domain_size)")
    dag, mapping = expand_bidirected(graph)
    latents = tuple(sorted(mapping.values()))
    domains = {v: domain_size for v in dag.nodes}
    rng = np.random.default_rng(seed)
    cpts: dict[str, np.ndarray] = {}
    for v in dag.nodes:
        parents = sorted(dag.parents(v))
        rows = int(np.prod([domains[p] for p in parents])) if parents else 1
        table = rng.dirichlet(np.ones(domain_size), size=rows)
        table = positivity_eps + (1.0 - domain_size * positivity_eps) * table
        shape = tuple(domains[p] for p in parents) + (domain_size,)
        cpts[v] = table.reshape(shape)
    scm = DiscreteScm(graph, dag, domains, cpts, latents, seed=seed)
    scm.validate()
    return scm


def _guard(cells: int):
    if cells > STATE_SPACE_LIMIT:
        raise StateSpaceError(f"state space of {cells} cells exceeds the limit of {STATE_SPACE_LIMIT}")


def _assemble(scm: DiscreteScm, skip_cpts: frozenset[str], clamp: Mapping[str, int]) -> tuple[list[str], np.ndarray]:
    """Multiply the model's CPTs over all non-clamped variables.

    Returns the remaining axis names (sorted) and the unnormalized table;
    clamped variables contribute their fixed value and lose their axis.
    """
    names = sorted(scm.domains)
    pos = {n: i for i, n in enumerate(names)}
    sizes = [scm.domains[n] for n in names]
    _guard(math.prod(sizes))
    acc = np.ones(sizes)
    for v in names:
        if v in skip_cpts:
            continue
        axes = scm.parent_list(v) + [v]
        order = sorted(range(len(axes)), key=lambda i: pos[axes[i]])
        table = np.transpose(scm.cpts[v], order)
        shape = [1] * len(names)
        for n in axes:
            shape[pos[n]] = scm.domains[n]
        acc = acc * table.reshape(shape)
    for v in sorted(clamp, key=pos.get, reverse=True):
        val = clamp[v]
        if not 0 <= val < scm.domains[v]:
            raise ValueError(f"value {val} out of domain for {v}")
        acc = np.take(acc, val, axis=pos[v])
        names.remove(v)
    return names, acc


def _post_joint(scm: DiscreteScm, x: Mapping[str, int]) -> Dist:
    """Joint over the observed non-intervened variables after do(x)."""
    key = ("post", tuple(sorted(x.items())))
    if key not in scm._cache:
        for v in x:
            if v not in scm.observed:
                raise ValueError(f"cannot intervene on {v}: not an observed node")
        names, acc = _assemble(scm, frozenset(x), dict(x))
        latent_axes = tuple(i for i, n in enumerate(names) if n in scm.latents)
        arr = acc.sum(axis=latent_axes) if latent_axes else acc
        keep = tuple(n for n in names if n not in scm.latents)
        sizes = tuple(scm.domains[n] for n in keep)
        total = float(arr.sum())
        scm._cache[key] = Dist(keep, sizes, arr / total)
    return scm._cache[key]


def joint_observed(scm: DiscreteScm) -> Dist:
    """Exact observational joint over the graph's nodes, latents summed out."""
    return _post_joint(scm, {})


def interventional(scm: DiscreteScm, x: Mapping[str, int], outcomes) -> Dist:
    """Ground-truth P(outcomes | do(x)) by truncated factorization.

    With ``x`` empty this reproduces observational marginals exactly, cell
    for cell, because the same summation runs in both cases.
    """
    outcomes = frozenset(outcomes)
    if not outcomes:
        raise ValueError("outcomes must be nonempty")
    overlap = outcomes & frozenset(x)
    if overlap:
        raise ValueError(f"outcomes overlap the intervention: {sorted(overlap)}")
    for v in outcomes:
        if v not in scm.observed:
            raise ValueError(f"unknown outcome node: {v}")
    return _post_joint(scm, x).marginal(outcomes)


def _embed(dist: Dist, names: tuple[str, ...], sizes: tuple[int, ...]) -> np.ndarray:
    """Broadcast a marginal's table into the axis layout of ``names``."""
    shape = [1] * len(names)
    for n, s in zip(dist.names, dist.sizes):
        shape[names.index(n)] = s
    return dist.probs.reshape(shape)


def adjustment_estimand(dist: Dist, x: Mapping[str, int], outcomes, covariates) -> Dist:
    """The adjustment functional sum_z P(y | x, z) P(z) from an observed joint.

    Covariate cells with P(z) = 0 are skipped; a cell with P(z) > 0 but
    P(x, z) = 0 raises :class:`PositivityError` naming the cell.
    """
    x = dict(x)
    treatments = frozenset(x)
    outcomes = frozenset(outcomes)
    covariates = frozenset(covariates)
    if not treatments or not outcomes:
        raise ValueError("treatments and outcomes must be nonempty")
    if treatments & outcomes or treatments & covariates or outcomes & covariates:
        raise ValueError("treatments, outcomes, and covariates must be pairwise disjoint")
    missing = (treatments | outcomes | covariates) - frozenset(dist.names)
    if missing:
        raise ValueError(f"variables not in distribution: {sorted(missing)}")

    pxyz = dist.marginal(treatments | outcomes | covariates).slice_at(x)
    pxz = dist.marginal(treatments | covariates).slice_at(x)
    pz = dist.marginal(covariates)

    names, sizes = pxyz.names, pxyz.sizes
    b = _embed(pxz, names, sizes)
    c = _embed(pz, names, sizes)
    mask = np.broadcast_to(c > 0, pxyz.probs.shape)
    bad = mask & np.broadcast_to(b <= 0, pxyz.probs.shape)
    if bad.any():
        z_names = pz.names
        flat = np.argwhere(np.broadcast_to((c > 0) & (b <= 0), pxyz.probs.shape))[0]
        cell = {n: int(flat[names.index(n)]) for n in z_names}
        raise PositivityError(cell)
    ratio = np.divide(c, b, out=np.zeros(np.broadcast_shapes(c.shape, b.shape)), where=b > 0)
    weighted = pxyz.probs * ratio
    z_axes = tuple(i for i, n in enumerate(names) if n in covariates)
    arr = weighted.sum(axis=z_axes) if z_axes else weighted
    keep = tuple(n for n in names if n in outcomes)
    keep_sizes = tuple(s for n, s in zip(names, sizes) if n in outcomes)
    return Dist(keep, keep_sizes, arr)


def _world_label(node: str, intervention: Mapping[str, int]) -> str:
    if not intervention:
        return node
    inside = ",".join(f"{k}={v}" for k, v in sorted(intervention.items()))
    return f"{node}@do({inside})"


def counterfactual_joint(scm: DiscreteScm, terms) -> Dist:
    """Exact joint over counterfactual terms.

    ``terms`` is an iterable of ``(node, intervention)`` pairs; an empty or
    ``None`` intervention denotes the factual world.  Terms from worlds that
    share an intervention live in the same world.  Across worlds each node
    keeps one uniform response variable: given a parent row, the node's value
    is the inverse CDF of its table row at that response (domain order fixes
    the inversion).  A configuration's weight is then the measure of responses
    consistent with every world at once, so any single world reproduces the
    plain table semantics while cross-world behavior is pinned down
    canonically.  This is one functionalization among many consistent with
    the tables; independence claims tested elsewhere hold for all of them.
    """
    parsed: list[tuple[str, tuple[tuple[str, int], ...]]] = []
    for node, intervention in terms:
        if node not in scm.observed:
            raise ValueError(f"unknown term node: {node}")
        items = tuple(sorted((intervention or {}).items()))
        for k, val in items:
            if k not in scm.observed:
                raise ValueError(f"cannot intervene on {k}: not an observed node")
            if not 0 <= val < scm.domains[k]:
                raise ValueError(f"value {val} out of domain for {k}")
        parsed.append((node, items))
    if not parsed:
        raise ValueError("at least one term is required")
    by_label: dict[str, tuple[str, tuple[tuple[str, int], ...]]] = {}
    for node, items in parsed:
        label = _world_label(node, dict(items))
        if label in by_label:
            raise ValueError(f"duplicate counterfactual term: {label}")
        by_label[label] = (node, items)

    worlds = sorted({items for _, items in parsed})
    world_index = {items: i for i, items in enumerate(worlds)}
    intervened = [frozenset(dict(items)) for items in worlds]
    obs = scm.observed
    lat = scm.latents
    free = [
        (w, v)
        for w in range(len(worlds))
        for v in obs
        if v not in intervened[w]
    ]
    _guard(math.prod([scm.domains[u] for u in lat] + [scm.domains[v] for _, v in free]))

    order = tuple(sorted(by_label))
    out_sizes = tuple(scm.domains[by_label[lab][0]] for lab in order)
    probs = np.zeros(out_sizes)

    lat_domains = [range(scm.domains[u]) for u in lat]
    free_domains = [range(scm.domains[v]) for _, v in free]
    parent_lists = {v: scm.parent_list(v) for v in obs}
    base_values = [dict(items) for items in worlds]
    # cum[v][row + (c,)] is P(v < c | row); the response interval for value c
    # under that row is [cum[row + (c,)], cum[row + (c + 1,)]).
    cum = {
        v: np.concatenate(
            [np.zeros(scm.cpts[v].shape[:-1] + (1,)), np.cumsum(scm.cpts[v], axis=-1)],
            axis=-1,
        )
        for v in obs
    }

    for lat_vals in product(*lat_domains):
        lat_map = dict(zip(lat, lat_vals))
        p_lat = 1.0
        for u, val in lat_map.items():
            p_lat *= float(scm.cpts[u][val])
        for free_vals in product(*free_domains):
            values = [dict(base) for base in base_values]
            for (w, v), val in zip(free, free_vals):
                values[w][v] = val
            p = p_lat
            for v in obs:
                lo, hi = 0.0, 1.0
                for w in range(len(worlds)):
                    if v in intervened[w]:
                        continue  # clamped by the intervention, no mechanism factor
                    row = tuple(
                        lat_map[q] if q in lat_map else values[w][q]
                        for q in parent_lists[v]
                    )
                    val = values[w][v]
                    lo = max(lo, float(cum[v][row + (val,)]))
                    hi = min(hi, float(cum[v][row + (val + 1,)]))
                    if hi <= lo:
                        p = 0.0
                        break
                if p == 0.0:
                    break
                p *= hi - lo
            if p == 0.0:
                continue
            idx = tuple(
                values[world_index[by_label[lab][1]]][by_label[lab][0]]
                for lab in order
            )
            probs[idx] += p

    total = float(probs.sum())
    return Dist(order, out_sizes, probs / total)


def independence_gap(dist: Dist, first, second, given) -> float:
    """Largest deviation from P(a, b | z) = P(a | z) P(b | z) over cells with P(z) > 0."""
    first = frozenset(first)
    second = frozenset(second)
    given = frozenset(given)
    if first & second or first & given or second & given:
        raise ValueError("sets must be pairwise disjoint")
    pabz = dist.marginal(first | second | given)
    paz = dist.marginal(first | given)
    pbz = dist.marginal(second | given)
    pz = dist.marginal(given)
    names, sizes = pabz.names, pabz.sizes
    a = _embed(paz, names, sizes)
    b = _embed(pbz, names, sizes)
    c = _embed(pz, names, sizes)
    mask = np.broadcast_to(c > 0, pabz.probs.shape)
    num = np.abs(pabz.probs * c - a * b)
    denom = np.broadcast_to(c * c, pabz.probs.shape)
    gaps = np.zeros(pabz.probs.shape)
    gaps[mask] = num[mask] / denom[mask]
    return float(gaps.max(initial=0.0))


@dataclass
class Counterexample:
    """A concrete model on which the adjustment functional is wrong."""

    scm: DiscreteScm
    gap: float
    x: dict[str, int]
    trial: int
    scm_seed: int

    def to_json(self) -> dict:
        return {
            "found": True,
            "trial": self.trial,
            "seed": self.scm_seed,
            "gap": self.gap,
            "x": dict(sorted(self.x.items())),
        }


@dataclass
class SoundnessReport:
    """Outcome of comparing the adjustment functional to ground truth."""

    passed: bool
    trials: int
    max_gap: float
    worst_seed: int | None
    worst_x: dict[str, int] | None
    failures: list[dict]

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "trials": self.trials,
            "max_gap": self.max_gap,
            "worst_seed": self.worst_seed,
            "worst_x": self.worst_x,
            "failures": self.failures,
        }


def _treatment_assignments(scm: DiscreteScm, treatments: frozenset[str]):
    names = sorted(treatments)
    for combo in product(*[range(scm.domains[n]) for n in names]):
        yield dict(zip(names, combo))


def search_counterexample(
    graph: Admg,
    query: AdjustmentQuery,
    trials: int = 200,
    delta: float = 0.01,
    seed: int = 0,
    domain_size: int = 2,
    positivity_eps: float = 0.05,
) -> Counterexample | None:
    """Hunt for a model where adjusting on the covariates gets the
    interventional distribution wrong by more than ``delta`` total variation.

    Only meaningful when the criterion rejects the covariates; refuses
    otherwise.  Trial ``i`` uses model seed ``seed + i``, so reported
    witnesses are reproducible.
    """
    if adjustment_criterion(graph, query).holds:
        raise ValueError("the adjustment criterion holds; there is no counterexample to search for")
    for trial in range(trials):
        scm = random_scm(graph, seed + trial, domain_size, positivity_eps)
        observed = joint_observed(scm)
        worst_gap, worst_x = 0.0, None
        for x in _treatment_assignments(scm, query.treatments):
            estimate = adjustment_estimand(observed, x, query.outcomes, query.covariates)
            truth = interventional(scm, x, query.outcomes)
            gap = estimate.total_variation(truth)
            if gap > worst_gap:
                worst_gap, worst_x = gap, x
        if worst_gap > delta:
            return Counterexample(scm, worst_gap, worst_x, trial, seed + trial)
    return None


def verify_soundness(
    graph: Admg,
    query: AdjustmentQuery,
    trials: int = 100,
    tol: float = 1e-9,
    seed: int = 0,
    domain_size: int = 2,
    positivity_eps: float = 0.05,
) -> SoundnessReport:
    """Check that the adjustment functional matches ground truth cell by cell
    on ``trials`` random models.  Refuses queries the criterion rejects.
    """
    if not adjustment_criterion(graph, query).holds:
        raise ValueError("the adjustment criterion fails; soundness verification is undefined")
    max_gap, worst_seed, worst_x = 0.0, None, None
    failures: list[dict] = []
    for trial in range(trials):
        scm = random_scm(graph, seed + trial, domain_size, positivity_eps)
        observed = joint_observed(scm)
        for x in _treatment_assignments(scm, query.treatments):
            estimate = adjustment_estimand(observed, x, query.outcomes, query.covariates)
            truth = interventional(scm, x, query.outcomes)
            gap = estimate.max_abs_diff(truth)
            if gap > max_gap:
                max_gap, worst_seed, worst_x = gap, seed + trial, x
            if gap > tol:
                failures.append({"seed": seed + trial, "x": dict(sorted(x.items())), "gap": gap})
    return SoundnessReport(not failures, trials, max_gap, worst_seed, worst_x, failures)


def scm_to_json(scm: DiscreteScm) -> dict:
    """Serialize a model: nodes, domains, parents, CPT rows in row-major
    order of the name-sorted parents."""
    return {
        "nodes": list(scm.expanded_dag.nodes),
        "latents": list(scm.latents),
        "domains": {v: scm.domains[v] for v in scm.expanded_dag.nodes},
        "parents": {v: scm.parent_list(v) for v in scm.expanded_dag.nodes},
        "cpt": {v: scm.cpts[v].reshape(-1).tolist() for v in scm.expanded_dag.nodes},
        "seed": scm.seed,
    }


def scm_from_json(doc: dict) -> DiscreteScm:
    """Rebuild a model serialized by :func:`scm_to_json`."""
    from .graph import latent_project

    nodes = tuple(doc["nodes"])
    latents = tuple(doc["latents"])
    domains = {v: int(doc["domains"][v]) for v in nodes}
    directed = frozenset(
        (p, v) for v in nodes for p in doc["parents"][v]
    )
    dag = Admg(nodes, directed, frozenset())
    cpts = {}
    for v in nodes:
        parents = sorted(dag.parents(v))
        if parents != list(doc["parents"][v]):
            raise ValueError(f"parents of {v} must be name-sorted in the document")
        shape = tuple(domains[p] for p in parents) + (domains[v],)
        cpts[v] = np.asarray(doc["cpt"][v], dtype=float).reshape(shape)
    graph = latent_project(dag, latents)
    scm = DiscreteScm(graph, dag, domains, cpts, latents, seed=doc.get("seed"))
    scm.validate()
    return scm
