"""Undirected graphs and their spectral operators.

Graphs are dense-matrix backed: the target scale is tens of nodes, so every
operator (adjacency, Laplacian, random-walk diffusion) is a plain float64
numpy array.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGraph, InvalidParams, IsolatedNode

UNNORMALIZED = "unnormalized"
SYMMETRIC = "symmetric"
LAPLACIAN_NORMS = (UNNORMALIZED, SYMMETRIC)

GRAPH_KINDS = ("path", "cycle", "complete", "star", "grid", "erdos_renyi")


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph with optional node features and scalar targets.

    Edges are stored once as (u, v) with u < v; no self-loops, no duplicates.
    """

    num_nodes: int
    edges: tuple[tuple[int, int], ...]
    node_features: np.ndarray | None = None
    graph_targets: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.num_nodes < 1:
            raise InvalidGraph(f"num_nodes must be positive, got {self.num_nodes}")
        canonical = []
        seen = set()
        for e in self.edges:
            if len(e) != 2:
                raise InvalidGraph(f"edge {e!r} is not a pair")
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise InvalidGraph(f"self-loop at node {u}")
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise InvalidGraph(f"edge ({u},{v}) endpoint outside [0,{self.num_nodes})")
            if u > v:
                u, v = v, u
            if (u, v) in seen:
                raise InvalidGraph(f"duplicate edge ({u},{v})")
            seen.add((u, v))
            canonical.append((u, v))
        object.__setattr__(self, "edges", tuple(canonical))
        if self.node_features is not None:
            x = np.asarray(self.node_features, dtype=np.float64)
            if x.ndim != 2 or x.shape[0] != self.num_nodes:
                raise InvalidGraph(
                    f"node_features must be ({self.num_nodes}, d), got shape {x.shape}"
                )
            if not np.all(np.isfinite(x)):
                raise InvalidGraph("node_features contains non-finite values")
            object.__setattr__(self, "node_features", x)

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.num_nodes)
        for u, v in self.edges:
            d[u] += 1.0
            d[v] += 1.0
        return d

    def with_features(self, x: np.ndarray) -> "Graph":
        return Graph(self.num_nodes, self.edges, x, dict(self.graph_targets))


def build_adjacency(g: Graph) -> np.ndarray:
    """Symmetric 0/1 adjacency matrix of g."""
    a = np.zeros((g.num_nodes, g.num_nodes))
    for u, v in g.edges:
        a[u, v] = 1.0
        a[v, u] = 1.0
    return a


def build_laplacian(g: Graph, norm: str = UNNORMALIZED) -> np.ndarray:
    """Graph Laplacian: D - A, or its symmetric normalization I - D^{-1/2} A D^{-1/2}.

    Isolated nodes are allowed; the symmetric norm treats their D^{-1/2}
    diagonal entry as 0.
    """
    if norm not in LAPLACIAN_NORMS:
        raise InvalidParams(f"unknown Laplacian norm {norm!r}")
    a = build_adjacency(g)
    d = g.degrees()
    if norm == UNNORMALIZED:
        return np.diag(d) - a
    d_inv_sqrt = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 0.0)
    return np.eye(g.num_nodes) - (d_inv_sqrt[:, None] * a) * d_inv_sqrt[None, :]


def build_diffusion(g: Graph) -> np.ndarray:
    """Row-stochastic random-walk matrix P = D^{-1} A.

    Raises IsolatedNode for degree-0 nodes: one-step walk probabilities are
    undefined there, so callers must prune or reject such graphs.
    """
    d = g.degrees()
    zero = np.nonzero(d == 0)[0]
    if zero.size:
        raise IsolatedNode(int(zero[0]))
    return build_adjacency(g) / d[:, None]


def count_components(g: Graph) -> int:
    """Connected component count via union-find (test oracle for the spectrum)."""
    parent = list(range(g.num_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in g.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    return len({find(i) for i in range(g.num_nodes)})


def permute_graph(g: Graph, perm: list[int]) -> Graph:
    """Relabel nodes: new index of old node i is perm[i]."""
    if sorted(perm) != list(range(g.num_nodes)):
        raise InvalidParams("perm must be a permutation of range(num_nodes)")
    edges = [(perm[u], perm[v]) for u, v in g.edges]
    x = None
    if g.node_features is not None:
        x = np.empty_like(g.node_features)
        for old, new in enumerate(perm):
            x[new] = g.node_features[old]
    return Graph(g.num_nodes, tuple(edges), x, dict(g.graph_targets))


def _path_edges(n):
    return [(i, i + 1) for i in range(n - 1)]


def generate_graph(kind: str, params: dict | None = None, seed: int = 0) -> Graph:
    """Deterministic graph generators used for fixtures and synthetic datasets.

    Kinds: path, cycle, complete, star (params: n); grid (params: rows, cols);
    erdos_renyi (params: n, p) which resamples until no node is isolated.
    """
    params = dict(params or {})
    if kind not in GRAPH_KINDS:
        raise InvalidParams(f"unknown graph kind {kind!r}")

    if kind == "grid":
        rows, cols = int(params.get("rows", 0)), int(params.get("cols", 0))
        if rows < 1 or cols < 1:
            raise InvalidParams("grid needs rows >= 1 and cols >= 1")
        n = rows * cols
        edges = []
        for r in range(rows):
            for c in range(cols):
                i = r * cols + c
                if c + 1 < cols:
                    edges.append((i, i + 1))
                if r + 1 < rows:
                    edges.append((i, i + cols))
        return Graph(n, tuple(edges))

    n = int(params.get("n", 0))
    if n < 1:
        raise InvalidParams(f"{kind} needs n >= 1")

    if kind == "path":
        return Graph(n, tuple(_path_edges(n)))
    if kind == "cycle":
        if n < 3:
            raise InvalidParams("cycle needs n >= 3")
        return Graph(n, tuple(_path_edges(n) + [(0, n - 1)]))
    if kind == "complete":
        return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))
    if kind == "star":
        return Graph(n, tuple((0, i) for i in range(1, n)))

    # erdos_renyi
    p = float(params.get("p", -1.0))
    if not 0.0 <= p <= 1.0:
        raise InvalidParams(f"erdos_renyi needs p in [0,1], got {p}")
    if n < 2:
        raise InvalidParams("erdos_renyi needs n >= 2")
    rng = np.random.default_rng(seed)
    for _ in range(200):
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
        g = Graph(n, tuple(edges))
        if np.all(g.degrees() > 0):
            return g
    raise InvalidParams(
        f"could not sample an isolated-node-free G({n}, {p}) in 200 attempts"
    )
