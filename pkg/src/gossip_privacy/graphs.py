"""Graph representation, generators and structural metrics.

Graphs are undirected, simple and connected, with nodes labelled 0..n-1.
Random families take a seed and are regenerated (bounded retries) until
connected, so the same spec and seed always give the same graph.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

FAMILIES = (
    "complete",
    "star",
    "ring",
    "grid2d",
    "random_regular",
    "erdos_renyi",
    "geometric_random",
    "rewired_regular",
)
RANDOM_FAMILIES = frozenset({"random_regular", "erdos_renyi", "geometric_random", "rewired_regular"})


class GraphError(ValueError):
    """Invalid graph, graph document or generator parameters."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected connected simple graph.

    ``adjacency[i]`` is the sorted tuple of neighbours of node ``i``.
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 2:
            raise GraphError(f"graph needs at least 2 nodes, got n={self.n}")
        if len(self.adjacency) != self.n:
            raise GraphError("adjacency must have one entry per node")
        sets = [set(a) for a in self.adjacency]
        for i, nbrs in enumerate(self.adjacency):
            if len(sets[i]) != len(nbrs):
                raise GraphError(f"duplicate edge at node {i}")
            if any(nbrs[k] > nbrs[k + 1] for k in range(len(nbrs) - 1)):
                raise GraphError(f"neighbour list of node {i} is not sorted")
            for j in nbrs:
                if j == i:
                    raise GraphError(f"self-loop at node {i}")
                if not 0 <= j < self.n:
                    raise GraphError(f"neighbour {j} of node {i} out of range")
                if i not in sets[j]:
                    raise GraphError(f"edge ({i},{j}) is not symmetric")
        if not is_connected(self.n, self.adjacency):
            raise GraphError(f"graph is disconnected (n={self.n}, |E|={self.num_edges})")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for e in edges:
            if len(e) != 2:
                raise GraphError(f"edge {e!r} must have two endpoints")
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u},{v}) out of range for n={n}")
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if v in nbrs[u]:
                raise GraphError(f"duplicate edge ({u},{v})")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.adjacency == other.adjacency

    def __hash__(self):
        return hash((self.n, self.adjacency))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.num_edges})"

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.adjacency[i]

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max())

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """Edges as ``(u, v)`` with ``u < v``, sorted lexicographically."""
        return tuple((u, v) for u in range(self.n) for v in self.adjacency[u] if u < v)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, indices)`` arrays for vectorised neighbour lookup."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum(self.degrees)
        indices = np.fromiter((j for a in self.adjacency for j in a), dtype=np.int64,
                              count=int(indptr[-1]))
        return indptr, indices


def is_connected(n: int, adjacency: Sequence[Sequence[int]]) -> bool:
    seen = [False] * n
    seen[0] = True
    stack = [0]
    count = 1
    while stack:
        u = stack.pop()
        for v in adjacency[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                stack.append(v)
    return count == n


def bfs_distances(g: Graph, source: int) -> list[int]:
    """Hop distances from ``source`` by plain breadth-first search."""
    dist = [-1] * g.n
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in g.adjacency[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GraphMetrics:
    distances: np.ndarray
    diameter: int
    max_degree: int


def shortest_paths(g: Graph) -> GraphMetrics:
    """All-pairs hop distances, diameter and maximum degree."""
    indptr, indices = g.csr
    adj = csr_matrix((np.ones(indices.size), indices, indptr), shape=(g.n, g.n))
    dist = shortest_path(adj, method="D", directed=False, unweighted=True)
    dist = dist.astype(np.int64)
    dist.setflags(write=False)
    return GraphMetrics(distances=dist, diameter=int(dist.max()), max_degree=g.max_degree)


def decay_centrality(g: Graph, i: int, beta: float, metrics: GraphMetrics | None = None) -> float:
    """Sum of ``beta ** d(i, j)`` over all nodes ``j != i``."""
    if not 0.0 < beta < 1.0:
        raise ValueError(f"decay parameter must lie in (0, 1), got {beta}")
    if not 0 <= i < g.n:
        raise ValueError(f"node {i} not in graph")
    d = metrics.distances[i] if metrics is not None else np.asarray(bfs_distances(g, i))
    others = np.delete(d, i)
    return float(np.sum(beta ** others.astype(float)))


def min_decay_centrality(g: Graph, beta: float, metrics: GraphMetrics | None = None) -> float:
    metrics = metrics or shortest_paths(g)
    return min(decay_centrality(g, i, beta, metrics) for i in range(g.n))


# ---------------------------------------------------------------------------
# Deterministic families
# ---------------------------------------------------------------------------


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple(tuple(j for j in range(n) if j != i) for i in range(n)))


def star_graph(n: int) -> Graph:
    """Star with centre 0."""
    return Graph.from_edges(n, ((0, j) for j in range(1, n)))


def ring_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError(f"ring needs n >= 3, got {n}")
    return Graph.from_edges(n, ((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, ((i, i + 1) for i in range(n - 1)))


def grid_graph(n: int) -> Graph:
    """Square 2-D grid, row-major ids; ``n`` must be a perfect square."""
    side = math.isqrt(n)
    if side * side != n or side < 2:
        raise GraphError(f"grid2d needs a perfect square n >= 4, got {n}")
    edges = []
    for r in range(side):
        for c in range(side):
            u = r * side + c
            if c + 1 < side:
                edges.append((u, u + 1))
            if r + 1 < side:
                edges.append((u, u + side))
    return Graph.from_edges(n, edges)


# ---------------------------------------------------------------------------
# Random families
# ---------------------------------------------------------------------------


def _adjacency_from_sets(nbrs: list[set[int]]) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(sorted(s)) for s in nbrs)


def _regular_attempt(n: int, d: int, rng: np.random.Generator) -> list[set[int]] | None:
    # Pairing model that rejects unsuitable pairs instead of whole pairings;
    # restarts (returns None) only when no suitable pair remains.
    nbrs: list[set[int]] = [set() for _ in range(n)]
    stubs = np.repeat(np.arange(n), d)
    while stubs.size:
        rng.shuffle(stubs)
        leftover = []
        for u, v in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
            if u != v and v not in nbrs[u]:
                nbrs[u].add(v)
                nbrs[v].add(u)
            else:
                leftover.extend((u, v))
        if len(leftover) == stubs.size:
            pool = sorted(set(leftover))
            if not any(b not in nbrs[a] for k, a in enumerate(pool) for b in pool[k + 1:]):
                return None
        stubs = np.array(leftover, dtype=np.int64)
    return nbrs


def random_regular_graph(n: int, degree: int, rng: np.random.Generator, max_retries: int = 100) -> Graph:
    if degree < 1 or degree >= n or (n * degree) % 2:
        raise GraphError(f"no {degree}-regular graph on {n} nodes (need 1 <= d < n, n*d even)")
    for _ in range(max_retries):
        nbrs = _regular_attempt(n, degree, rng)
        if nbrs is not None and is_connected(n, nbrs):
            return Graph(n, _adjacency_from_sets(nbrs))
    raise GraphError(f"random_regular: no connected graph after {max_retries} attempts")


def erdos_renyi_graph(n: int, p: float, rng: np.random.Generator, max_retries: int = 100) -> Graph:
    if not 0.0 < p <= 1.0:
        raise GraphError(f"edge probability must lie in (0, 1], got {p}")
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(max_retries):
        keep = rng.random(iu.size) < p
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in zip(iu[keep].tolist(), ju[keep].tolist()):
            nbrs[u].add(v)
            nbrs[v].add(u)
        if is_connected(n, nbrs):
            return Graph(n, _adjacency_from_sets(nbrs))
    raise GraphError(f"erdos_renyi(n={n}, p={p}): no connected graph after {max_retries} attempts")


def geometric_random_graph(
    n: int,
    rng: np.random.Generator,
    radius: float | None = None,
    avg_degree: float | None = None,
    max_retries: int = 100,
) -> Graph:
    """Nodes uniform in the unit square, linked when closer than the radius.

    With ``avg_degree`` the radius is set per draw to the distance of the
    ``round(avg_degree * n / 2)``-th closest pair, so the realised mean degree
    hits the target exactly.
    """
    if (radius is None) == (avg_degree is None):
        raise GraphError("geometric_random needs exactly one of radius / avg_degree")
    if avg_degree is not None and not 0 < avg_degree < n - 1:
        raise GraphError(f"average degree must lie in (0, n-1), got {avg_degree}")
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(max_retries):
        pos = rng.random((n, 2))
        dist = np.hypot(*(pos[iu] - pos[ju]).T)
        if avg_degree is not None:
            m = max(1, int(round(avg_degree * n / 2)))
            keep = np.argsort(dist, kind="stable")[:m]
        else:
            keep = np.flatnonzero(dist < radius)
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in zip(iu[keep].tolist(), ju[keep].tolist()):
            nbrs[u].add(v)
            nbrs[v].add(u)
        if is_connected(n, nbrs):
            return Graph(n, _adjacency_from_sets(nbrs))
    raise GraphError(f"geometric_random(n={n}): no connected graph after {max_retries} attempts")


def _reachable(nbrs: list[set[int]], src: int, dst: int) -> bool:
    seen = {src}
    stack = [src]
    while stack:
        u = stack.pop()
        if u == dst:
            return True
        for v in nbrs[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def rewire(g: Graph, p: float, rng: np.random.Generator) -> Graph:
    """Replace each edge (x, y) by (x, z) with probability ``p``.

    The kept endpoint x is picked by a fair coin, z is uniform over nodes that
    are neither x nor already adjacent to x. A rewiring that would disconnect
    the graph is rolled back.
    """
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"rewiring probability must lie in [0, 1], got {p}")
    nbrs = [set(a) for a in g.adjacency]
    n = g.n
    for u, v in g.edges:
        # one draw per edge keeps the stream aligned across different p
        coin, flip, pick = rng.random(3)
        if coin >= p:
            continue
        x, y = (u, v) if flip < 0.5 else (v, u)
        candidates = [z for z in range(n) if z != x and z not in nbrs[x]]
        if not candidates:
            continue
        z = candidates[min(int(pick * len(candidates)), len(candidates) - 1)]
        nbrs[x].discard(y)
        nbrs[y].discard(x)
        nbrs[x].add(z)
        nbrs[z].add(x)
        if not _reachable(nbrs, y, x):
            nbrs[x].discard(z)
            nbrs[z].discard(x)
            nbrs[x].add(y)
            nbrs[y].add(x)
    return Graph(n, _adjacency_from_sets(nbrs))


# ---------------------------------------------------------------------------
# Spec-driven construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphSpec:
    family: str
    n: int
    degree: int | None = None
    p: float | None = None
    radius: float | None = None
    avg_degree: float | None = None
    rewiring: float = 0.0
    seed: int | None = None
    max_retries: int = 100

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise GraphError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.n < 2:
            raise GraphError(f"n must be >= 2, got {self.n}")
        if self.family in RANDOM_FAMILIES and self.seed is None:
            raise GraphError(f"family {self.family} is random and needs a seed")
        if self.family == "ring" and self.n < 3:
            raise GraphError("ring needs n >= 3")
        if self.family == "grid2d":
            side = math.isqrt(self.n)
            if side * side != self.n or side < 2:
                raise GraphError(f"grid2d needs a perfect square n, got {self.n}")
        if self.family in ("random_regular", "rewired_regular"):
            d = self.degree
            if d is None or d < 1 or d >= self.n or (d * self.n) % 2:
                raise GraphError(f"{self.family} needs degree d with 1 <= d < n and d*n even, got {d}")
        if self.family == "rewired_regular" and not 0.0 <= self.rewiring <= 1.0:
            raise GraphError(f"rewiring probability must lie in [0, 1], got {self.rewiring}")
        if self.family == "erdos_renyi":
            if (self.p is None) == (self.avg_degree is None):
                raise GraphError("erdos_renyi needs exactly one of p / avg_degree")
        if self.family == "geometric_random":
            if (self.radius is None) == (self.avg_degree is None):
                raise GraphError("geometric_random needs exactly one of radius / avg_degree")


def build_graph(spec: GraphSpec) -> Graph:
    spec.validate()
    fam, n = spec.family, spec.n
    if fam == "complete":
        return complete_graph(n)
    if fam == "star":
        return star_graph(n)
    if fam == "ring":
        return ring_graph(n)
    if fam == "grid2d":
        return grid_graph(n)
    rng = np.random.default_rng(spec.seed)
    if fam == "random_regular":
        return random_regular_graph(n, spec.degree, rng, spec.max_retries)
    if fam == "rewired_regular":
        base = random_regular_graph(n, spec.degree, rng, spec.max_retries)
        return rewire(base, spec.rewiring, rng)
    if fam == "erdos_renyi":
        p = spec.p if spec.p is not None else spec.avg_degree / (n - 1)
        return erdos_renyi_graph(n, p, rng, spec.max_retries)
    return geometric_random_graph(n, rng, radius=spec.radius, avg_degree=spec.avg_degree,
                                  max_retries=spec.max_retries)


# ---------------------------------------------------------------------------
# JSON edge-list documents
# ---------------------------------------------------------------------------


def save_graph(g: Graph, meta: dict | None = None) -> bytes:
    doc = {"n": g.n, "edges": [list(e) for e in g.edges]}
    if meta:
        doc["meta"] = meta
    return json.dumps(doc, separators=(",", ":")).encode("utf-8")


def load_graph(data: bytes | str) -> Graph:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise GraphError(f"malformed graph document: {exc}") from None
    if not isinstance(doc, dict) or "n" not in doc or "edges" not in doc:
        raise GraphError('graph document must be an object with "n" and "edges"')
    n, edges = doc["n"], doc["edges"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise GraphError('"n" must be an integer')
    if not isinstance(edges, list) or not all(
        isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in e)
        for e in edges
    ):
        raise GraphError('"edges" must be a list of [u, v] integer pairs')
    return Graph.from_edges(n, edges)


def graph_meta(data: bytes | str) -> dict:
    doc = json.loads(data)
    return doc.get("meta", {}) if isinstance(doc, dict) else {}
