"""Network construction, inspection and edge-list serialization.

A :class:`Network` is an undirected simple graph over dense node ids
``0..n-1``. Self-reflection in a debate is part of the protocol, so self-loops
are never stored.
"""

from __future__ import annotations

import itertools
import math
import random
import statistics
from collections import deque
from dataclasses import asdict, dataclass
from functools import cached_property
from typing import Iterable, NamedTuple

from .errors import InvalidNode, InvalidParameter, ParseError

GENERATOR_KINDS = ("complete", "empty", "gilbert", "scale_free")

# Canonical weights of the directed preferential-attachment process.
SCALE_FREE_DEFAULTS = {"alpha": 0.41, "beta": 0.54, "gamma": 0.05, "delta_in": 0.2, "delta_out": 0.0}
GILBERT_DEFAULT_P = 0.2


@dataclass(frozen=True)
class Network:
    n: int
    edges: frozenset[tuple[int, int]]
    label: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameter(f"network needs at least one node, got n={self.n}")
        normalized = set()
        for u, v in self.edges:
            if u == v:
                raise InvalidParameter(f"self-pair ({u}, {v}) cannot be stored")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise InvalidNode(f"edge ({u}, {v}) has an endpoint outside [0, {self.n})")
            normalized.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(normalized))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], label: str = "") -> "Network":
        return cls(n, frozenset((int(u), int(v)) for u, v in edges), label)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Sorted neighbour tuple per node."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbours(self, v: int) -> tuple[int, ...]:
        _check_node(self, v)
        return self.adjacency[v]

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def relabel(self, label: str) -> "Network":
        return Network(self.n, self.edges, label)


@dataclass(frozen=True)
class GeneratorParams:
    kind: str
    n: int
    seed: int = 0
    p: float = GILBERT_DEFAULT_P
    alpha: float = SCALE_FREE_DEFAULTS["alpha"]
    beta: float = SCALE_FREE_DEFAULTS["beta"]
    gamma: float = SCALE_FREE_DEFAULTS["gamma"]
    label: str = ""

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise InvalidParameter(f"unknown generator kind {self.kind!r}; expected one of {GENERATOR_KINDS}")
        if self.n < 1:
            raise InvalidParameter(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidParameter(f"p must lie in [0, 1], got {self.p}")
        _check_weights(self.alpha, self.beta, self.gamma)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorParams":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvalidParameter(f"unknown generator fields: {sorted(unknown)}")
        return cls(**data)


def _check_node(net: Network, v: int) -> None:
    if not 0 <= v < net.n:
        raise InvalidNode(f"node {v} not in network of size {net.n}")


def _check_weights(alpha: float, beta: float, gamma: float) -> None:
    if min(alpha, beta, gamma) < 0:
        raise InvalidParameter("alpha, beta, gamma must be non-negative")
    if abs(alpha + beta + gamma - 1.0) > 1e-9:
        raise InvalidParameter(f"alpha + beta + gamma must equal 1, got {alpha + beta + gamma}")


def complete_network(n: int, label: str = "complete") -> Network:
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    return Network(n, frozenset(itertools.combinations(range(n), 2)), label)


def empty_network(n: int, label: str = "empty") -> Network:
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    return Network(n, frozenset(), label)


def gilbert_network(n: int, p: float = GILBERT_DEFAULT_P, seed: int = 0, label: str = "gilbert") -> Network:
    """G(n, p): every unordered pair kept independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(f"p must lie in [0, 1], got {p}")
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    rng = random.Random(seed)
    edges = [pair for pair in itertools.combinations(range(n), 2) if rng.random() < p]
    return Network(n, frozenset(edges), label)


def scale_free_network(
    n: int,
    alpha: float = SCALE_FREE_DEFAULTS["alpha"],
    beta: float = SCALE_FREE_DEFAULTS["beta"],
    gamma: float = SCALE_FREE_DEFAULTS["gamma"],
    seed: int = 0,
    *,
    delta_in: float = SCALE_FREE_DEFAULTS["delta_in"],
    delta_out: float = SCALE_FREE_DEFAULTS["delta_out"],
    label: str = "scale_free",
) -> Network:
    """Directed preferential-attachment growth, simplified to an undirected graph.

    Starts from the directed 3-cycle 0->1->2->0 and repeats one of three moves
    until ``n`` nodes exist:

    * ``alpha``: a new node ``v`` links to ``w`` chosen by ``in_degree + delta_in``
      (the new node is already a candidate, so ``w == v`` can occur);
    * ``beta``: an edge ``v -> w`` with ``v`` chosen by ``out_degree + delta_out``
      and ``w`` by ``in_degree + delta_in``;
    * ``gamma``: ``v`` chosen by ``out_degree + delta_out`` links to a new node.

    Random draws are consumed in the same order as ``networkx.scale_free_graph``,
    so an integer ``seed`` reproduces that generator's graph. Self-loops are
    dropped and parallel or antiparallel edges merged.
    """
    _check_weights(alpha, beta, gamma)
    if n < 3:
        raise InvalidParameter(f"scale-free growth needs n >= 3, got {n}")
    if delta_in < 0 or delta_out < 0:
        raise InvalidParameter("delta_in and delta_out must be non-negative")

    rng = random.Random(seed)
    # one entry per unit of out-/in-degree, so uniform choice is degree-proportional
    sources = [0, 1, 2]
    targets = [0, 1, 2]
    nodes = [0, 1, 2]
    directed = [(0, 1), (1, 2), (2, 0)]

    def choose(candidates: list[int], delta: float) -> int:
        if delta > 0:
            bias = len(nodes) * delta
            if rng.random() < bias / (bias + len(candidates)):
                return rng.choice(nodes)
        return rng.choice(candidates)

    while len(nodes) < n:
        r = rng.random()
        if r < alpha:
            v = len(nodes)
            nodes.append(v)
            w = choose(targets, delta_in)
        elif r < alpha + beta:
            v = choose(sources, delta_out)
            w = choose(targets, delta_in)
        else:
            v = choose(sources, delta_out)
            w = len(nodes)
            nodes.append(w)
        sources.append(v)
        targets.append(w)
        directed.append((v, w))

    edges = {(min(u, v), max(u, v)) for u, v in directed if u != v}
    return Network(n, frozenset(edges), label)


def generate(params: GeneratorParams) -> Network:
    label = params.label or params.kind
    if params.kind == "complete":
        return complete_network(params.n, label)
    if params.kind == "empty":
        return empty_network(params.n, label)
    if params.kind == "gilbert":
        return gilbert_network(params.n, params.p, params.seed, label)
    return scale_free_network(params.n, params.alpha, params.beta, params.gamma, params.seed, label=label)


def degree(net: Network, v: int) -> int:
    _check_node(net, v)
    return len(net.adjacency[v])


def degrees(net: Network) -> list[int]:
    return [len(a) for a in net.adjacency]


def select_hubs(net: Network, k: int) -> list[int]:
    """The ``k`` highest-degree nodes, ties broken by lowest id."""
    if not 0 <= k <= net.n:
        raise InvalidParameter(f"cannot select {k} hubs from {net.n} nodes")
    deg = degrees(net)
    return sorted(range(net.n), key=lambda v: (-deg[v], v))[:k]


def select_periphery(net: Network, k: int, seed: int = 0) -> list[int]:
    """Sample ``k`` nodes from the lowest-degree strata.

    Nodes are drawn uniformly without replacement from the minimum-degree
    stratum; if it is too small, all of it is taken and sampling continues in
    the next-lowest stratum.
    """
    if not 0 <= k <= net.n:
        raise InvalidParameter(f"cannot select {k} periphery nodes from {net.n} nodes")
    rng = random.Random(seed)
    deg = degrees(net)
    chosen: list[int] = []
    for d in sorted(set(deg)):
        need = k - len(chosen)
        if need == 0:
            break
        stratum = [v for v in range(net.n) if deg[v] == d]
        if len(stratum) <= need:
            chosen.extend(stratum)
        else:
            chosen.extend(rng.sample(stratum, need))
    return chosen


def connected_components(net: Network) -> list[list[int]]:
    seen = [False] * net.n
    comps = []
    for start in range(net.n):
        if seen[start]:
            continue
        seen[start] = True
        comp = [start]
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in net.adjacency[u]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    queue.append(w)
        comps.append(sorted(comp))
    return comps


class Diameter(NamedTuple):
    value: int
    connected: bool


def _eccentricity(net: Network, source: int) -> int:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in net.adjacency[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return max(dist.values())


def diameter(net: Network) -> Diameter:
    """Longest shortest path within the largest component.

    ``connected`` is False when the graph has more than one component; the
    value then describes only the largest one (lowest node id on size ties).
    """
    comps = connected_components(net)
    largest = max(comps, key=len)
    value = max(_eccentricity(net, v) for v in largest)
    return Diameter(value, len(comps) == 1)


def degree_summary(net: Network) -> dict:
    deg = degrees(net)
    return {
        "n": net.n,
        "edges": net.n_edges,
        "max_degree": max(deg),
        "median_degree": statistics.median(deg),
        "mean_degree": 2 * net.n_edges / net.n,
        "density": 0.0 if net.n < 2 else net.n_edges / math.comb(net.n, 2),
    }


def serialize_network(net: Network) -> str:
    lines = []
    if net.label:
        lines.append(f"# label={net.label}")
    lines.append(f"n={net.n}")
    lines.extend(f"{u} {v}" for u, v in net.sorted_edges())
    return "\n".join(lines) + "\n"


def parse_network(text: str, label: str | None = None) -> Network:
    """Parse the edge-list format.

    First non-comment line is ``n=<count>``; each further non-empty line is
    ``<u> <v>`` with ``u < v``. Lines starting with ``#`` are comments, except
    that ``# label=<text>`` supplies the label when none is passed in.
    """
    n = None
    found_label = ""
    edges: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("label="):
                found_label = body[len("label="):].strip()
            continue
        if n is None:
            if not line.startswith("n="):
                raise ParseError(f"expected header 'n=<count>', got {line!r}", lineno)
            try:
                n = int(line[2:])
            except ValueError:
                raise ParseError(f"bad node count {line[2:]!r}", lineno) from None
            if n < 1:
                raise ParseError(f"node count must be >= 1, got {n}", lineno)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected '<u> <v>', got {line!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer node id in {line!r}", lineno) from None
        if u == v:
            raise ParseError(f"self-loop {u} {v} not allowed", lineno)
        if u > v:
            raise ParseError(f"edge must be written with u < v, got {u} {v}", lineno)
        if u < 0 or v >= n:
            raise ParseError(f"node index outside [0, {n})", lineno)
        if (u, v) in edges:
            raise ParseError(f"duplicate edge {u} {v}", lineno)
        edges.add((u, v))
    if n is None:
        raise ParseError("missing header 'n=<count>'")
    return Network(n, frozenset(edges), found_label if label is None else label)
