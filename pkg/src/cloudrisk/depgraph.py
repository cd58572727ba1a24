"""AND/OR dependency-graph reliability analysis.

Cloud services compose other services: an AND node needs every child up, an
OR node needs any child up. When two branches silently share a component,
compositional reliability math overstates the truth. This module computes

* ``reliability_naive`` — the compositional formula, treating every child
  subtree as independent even when shared (what a provider believes when it
  cannot see below its direct suppliers), and
* ``reliability_exact`` / ``reliability_mc`` — the actual reliability over
  independent *leaves*, which shared interior nodes correlate,

and surfaces the shared nodes responsible for the gap.

Leaf "up" probabilities are per-demand (the chance the component works when
asked), not rates over time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._kernels import AND, LEAF, OR, GraphProgram, evaluate_bulk
from .errors import ConfigError, TooLarge

EXACT_ENUMERATION_LIMIT = 24   # leaves; 2^24 states is the desk-scale ceiling
RATIONAL_ENUMERATION_LIMIT = 16

_KIND_CODE = {"leaf": LEAF, "and": AND, "or": OR}


@dataclass
class Node:
    kind: str                    # "leaf" | "and" | "or"
    p_up: float = 0.0            # leaves only
    p_up_exact: Fraction = Fraction(0)
    children: tuple = ()


@dataclass
class DepGraph:
    """A validated, acyclic AND/OR graph with leaf failure probabilities."""

    nodes: dict
    root: str
    topo: list = field(default_factory=list)       # children before parents
    leaves: list = field(default_factory=list)     # sorted leaf ids

    @staticmethod
    def from_dict(raw: dict) -> "DepGraph":
        try:
            node_specs = raw["nodes"]
            root = raw["root"]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"graph needs 'nodes' and 'root': {exc}") from None
        nodes: dict[str, Node] = {}
        for node_id, spec in node_specs.items():
            if not isinstance(spec, dict) or len(spec) != 1:
                raise ConfigError(
                    f"node {node_id!r} must be exactly one of "
                    f"{{'leaf': p}}, {{'and': [...]}}, {{'or': [...]}} "
                    "(k-of-n gates and other forms are not supported)"
                )
            kind, value = next(iter(spec.items()))
            if kind == "leaf":
                p = float(value)
                if not 0.0 <= p <= 1.0:
                    raise ConfigError(f"leaf {node_id!r} probability {p} outside [0,1]")
                # the decimal literal, not the binary double, is the exact value
                nodes[node_id] = Node("leaf", p_up=p, p_up_exact=Fraction(str(value)))
            elif kind in ("and", "or"):
                children = tuple(value)
                if not children:
                    raise ConfigError(f"{kind} node {node_id!r} needs at least one child")
                nodes[node_id] = Node(kind, children=children)
            else:
                raise ConfigError(
                    f"node {node_id!r} has unsupported kind {kind!r} "
                    "(only leaf/and/or gates exist; cycles and k-of-n are rejected)"
                )
        if root not in nodes:
            raise ConfigError(f"root {root!r} is not a node")
        for node_id, node in nodes.items():
            for child in node.children:
                if child not in nodes:
                    raise ConfigError(f"node {node_id!r} references unknown child {child!r}")
        graph = DepGraph(nodes, root)
        graph.topo = graph._topo_sort()
        graph.leaves = sorted(n for n, node in nodes.items() if node.kind == "leaf")
        return graph

    @staticmethod
    def from_file(path) -> "DepGraph":
        with open(path, "r", encoding="utf-8") as fh:
            return DepGraph.from_dict(json.load(fh))

    def _topo_sort(self) -> list:
        order, state = [], {}  # state: 1 in progress, 2 done
        def visit(node_id, stack):
            if state.get(node_id) == 2:
                return
            if state.get(node_id) == 1:
                cycle = " -> ".join(stack + [node_id])
                raise ConfigError(f"dependency cycle: {cycle} (cyclic graphs are rejected)")
            state[node_id] = 1
            for child in self.nodes[node_id].children:
                visit(child, stack + [node_id])
            state[node_id] = 2
            order.append(node_id)
        for node_id in sorted(self.nodes):
            visit(node_id, [])
        return order

    def compile(self) -> GraphProgram:
        index = {node_id: i for i, node_id in enumerate(self.topo)}
        leaf_index = {leaf: i for i, leaf in enumerate(self.leaves)}
        n = len(self.topo)
        ntype = np.zeros(n, dtype=np.int8)
        leaf_slot = np.zeros(n, dtype=np.int32)
        offsets = np.zeros(n + 1, dtype=np.int32)
        children = []
        for i, node_id in enumerate(self.topo):
            node = self.nodes[node_id]
            ntype[i] = _KIND_CODE[node.kind]
            if node.kind == "leaf":
                leaf_slot[i] = leaf_index[node_id]
            else:
                children.extend(index[c] for c in node.children)
            offsets[i + 1] = len(children)
        return GraphProgram(
            ntype=ntype, leaf_slot=leaf_slot, offsets=offsets,
            children=np.asarray(children, dtype=np.int32),
            root=index[self.root], n_leaves=len(self.leaves),
        )

    def leaf_probs(self) -> np.ndarray:
        return np.array([self.nodes[leaf].p_up for leaf in self.leaves])


def evaluate(graph: DepGraph, up: dict) -> bool:
    """Is the root up under a full truth assignment to the leaves?

    Each node is evaluated once in topological order, so shared nodes take a
    single consistent value.
    """
    missing = set(graph.leaves) - set(up)
    if missing:
        raise ValueError(f"assignment missing leaves: {sorted(missing)}")
    vals: dict[str, bool] = {}
    for node_id in graph.topo:
        node = graph.nodes[node_id]
        if node.kind == "leaf":
            vals[node_id] = bool(up[node_id])
        elif node.kind == "and":
            vals[node_id] = all(vals[c] for c in node.children)
        else:
            vals[node_id] = any(vals[c] for c in node.children)
    return vals[graph.root]


def find_shared(graph: DepGraph) -> list:
    """Nodes with two or more parents: the hidden common dependencies this
    analysis exists to surface. Sorted by (in-degree descending, id)."""
    indeg: dict[str, int] = {}
    for node in graph.nodes.values():
        for child in node.children:
            indeg[child] = indeg.get(child, 0) + 1
    shared = [n for n, d in indeg.items() if d >= 2]
    return sorted(shared, key=lambda n: (-indeg[n], n))


def _enumerate_states(n_leaves: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.uint64)
    return ((idx[:, None] >> np.arange(n_leaves, dtype=np.uint64)) & 1).astype(np.uint8)


def reliability_exact(graph: DepGraph, use_numba: bool | None = None) -> float:
    """Exact reliability by summing P(state) over all up-states of the
    independent leaves. Guarded at 2^24 states."""
    n = len(graph.leaves)
    if n > EXACT_ENUMERATION_LIMIT:
        raise TooLarge(
            f"{n} leaves exceeds the exact enumeration guard of "
            f"{EXACT_ENUMERATION_LIMIT}; use reliability_mc"
        )
    prog = graph.compile()
    probs = graph.leaf_probs()
    total = 0.0
    chunk = 1 << 16
    for start in range(0, 1 << n, chunk):
        stop = min(start + chunk, 1 << n)
        states = _enumerate_states(n, start, stop)
        up = evaluate_bulk(prog, states, use_numba=use_numba).astype(bool)
        weights = np.prod(np.where(states.astype(bool), probs, 1.0 - probs), axis=1)
        total += float(weights[up].sum())
    return total


def exact_error_bound(graph: DepGraph) -> float:
    """Stated bound on the floating-point error of reliability_exact."""
    n = len(graph.leaves)
    return (2 * n + 2) * np.finfo(np.float64).eps


def reliability_exact_rational(graph: DepGraph) -> Fraction:
    """Exact rational reliability from the leaves' decimal literals; pins
    fixture values like 891/1000 with no floating-point involved."""
    n = len(graph.leaves)
    if n > RATIONAL_ENUMERATION_LIMIT:
        raise TooLarge(f"{n} leaves exceeds the rational enumeration guard")
    total = Fraction(0)
    for mask in range(1 << n):
        up = {leaf: bool((mask >> i) & 1) for i, leaf in enumerate(graph.leaves)}
        if evaluate(graph, up):
            w = Fraction(1)
            for i, leaf in enumerate(graph.leaves):
                p = graph.nodes[leaf].p_up_exact
                w *= p if up[leaf] else 1 - p
            total += w
    return total


def reliability_naive(graph: DepGraph) -> float:
    """Compositional fault-tree formula assuming subtree independence:
    AND -> product, OR -> 1 - prod(1 - .). Shared subtrees are implicitly
    duplicated, which is exactly the blind spot being modeled; with no
    sharing it coincides with the exact value."""
    memo: dict[str, float] = {}
    for node_id in graph.topo:
        node = graph.nodes[node_id]
        if node.kind == "leaf":
            memo[node_id] = node.p_up
        elif node.kind == "and":
            memo[node_id] = math.prod(memo[c] for c in node.children)
        else:
            memo[node_id] = 1.0 - math.prod(1.0 - memo[c] for c in node.children)
    return memo[graph.root]


@dataclass
class MCEstimate:
    estimate: float
    stderr: float
    samples: int
    seed: int


def reliability_mc(graph: DepGraph, samples: int, seed: int,
                   use_numba: bool | None = None) -> MCEstimate:
    """Monte Carlo reliability: i.i.d. leaf sampling, mean of evaluate,
    binomial standard error. Reproducible per seed, and independent of which
    kernel (jitted or numpy) evaluates the samples."""
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    prog = graph.compile()
    probs = graph.leaf_probs()
    rng = np.random.default_rng(seed)
    ups = 0
    chunk = 1 << 16
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        states = (rng.random((k, len(probs))) < probs).astype(np.uint8)
        ups += int(evaluate_bulk(prog, states, use_numba=use_numba).sum())
        done += k
    p_hat = ups / samples
    stderr = math.sqrt(p_hat * (1.0 - p_hat) / samples)
    return MCEstimate(p_hat, stderr, samples, seed)


@dataclass
class ReliabilityReport:
    actual: float
    naive: float
    gap: float
    method: str                   # "exact" | "mc"
    shared: list
    samples: int = 0
    seed: int = 0
    stderr: float = 0.0
    error_bound: float = 0.0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def analyze(graph: DepGraph, method: str = "exact", samples: int = 100_000,
            seed: int = 0, use_numba: bool | None = None) -> ReliabilityReport:
    """One-stop report: actual vs naive reliability plus the shared nodes."""
    naive = reliability_naive(graph)
    shared = find_shared(graph)
    if method == "exact":
        actual = reliability_exact(graph, use_numba=use_numba)
        return ReliabilityReport(actual, naive, abs(naive - actual), "exact", shared,
                                 error_bound=exact_error_bound(graph))
    if method == "mc":
        est = reliability_mc(graph, samples, seed, use_numba=use_numba)
        return ReliabilityReport(est.estimate, naive, abs(naive - est.estimate), "mc",
                                 shared, samples=samples, seed=seed, stderr=est.stderr)
    raise ConfigError(f"unknown method {method!r} (expected 'exact' or 'mc')")
