"""Communication graphs and doubly stochastic combination matrices.

Combination weights follow the Metropolis-Hastings rule, which is doubly
stochastic by construction on undirected graphs. Validation of connectivity,
self-loops and the spectral contraction condition is separate from
construction so externally supplied matrices can be checked too.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, TopologyError

STOCHASTIC_TOL = 1e-12

GRAPH_KINDS = ("ring", "path", "complete", "custom")


@dataclass(frozen=True)
class Graph:
    """Undirected communication graph over agents 0..num_agents-1."""

    num_agents: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.num_agents < 1:
            raise ConfigurationError("graph needs at least one agent")
        for i, j in self.edges:
            if not (0 <= i < self.num_agents and 0 <= j < self.num_agents):
                raise ConfigurationError(f"edge ({i},{j}) references an agent >= {self.num_agents}")
            if i == j:
                raise ConfigurationError(f"self edge ({i},{i}) not allowed; self-loops come from weights")

    def degree(self, i: int) -> int:
        return sum(1 for e in self.edges if i in e)

    def neighbors(self, i: int) -> list[int]:
        out = set()
        for a, b in self.edges:
            if a == i:
                out.add(b)
            elif b == i:
                out.add(a)
        return sorted(out)

    def is_connected(self) -> bool:
        if self.num_agents == 1:
            return True
        seen = {0}
        stack = [0]
        while stack:
            node = stack.pop()
            for nb in self.neighbors(node):
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == self.num_agents

    def diameter(self) -> int:
        """Longest shortest path; raises on disconnected graphs."""
        if not self.is_connected():
            raise TopologyError("diameter undefined for a disconnected graph")
        worst = 0
        for src in range(self.num_agents):
            dist = {src: 0}
            frontier = [src]
            while frontier:
                nxt = []
                for node in frontier:
                    for nb in self.neighbors(node):
                        if nb not in dist:
                            dist[nb] = dist[node] + 1
                            nxt.append(nb)
                frontier = nxt
            worst = max(worst, max(dist.values()))
        return worst


def _norm_edge(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def build_graph(kind: str, num_agents: int, edges=None) -> Graph:
    """Construct a named topology, or wrap a custom edge list.

    kind: one of "ring", "path", "complete", "custom".
    """
    if num_agents < 2:
        raise ConfigurationError(f"need at least 2 agents, got {num_agents}")
    if kind == "ring":
        es = {_norm_edge(i, (i + 1) % num_agents) for i in range(num_agents)}
    elif kind == "path":
        es = {(i, i + 1) for i in range(num_agents - 1)}
    elif kind == "complete":
        es = {(i, j) for i in range(num_agents) for j in range(i + 1, num_agents)}
    elif kind == "custom":
        if edges is None:
            raise ConfigurationError("custom graph requires an edge list")
        es = set()
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if not (0 <= i < num_agents and 0 <= j < num_agents):
                raise ConfigurationError(f"edge ({i},{j}) out of range for {num_agents} agents")
            if i != j:
                es.add(_norm_edge(i, j))
    else:
        raise ConfigurationError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")
    return Graph(num_agents, frozenset(es))


def metropolis_weights(graph: Graph) -> np.ndarray:
    """Doubly stochastic combination matrix via the Metropolis-Hastings rule.

    c_ij = 1 / (1 + max(deg_i, deg_j)) for each edge, diagonal takes the
    remainder. Requires a connected graph.
    """
    if not graph.is_connected():
        raise TopologyError("metropolis weights require a connected graph")
    n = graph.num_agents
    c = np.zeros((n, n))
    for i, j in graph.edges:
        w = 1.0 / (1.0 + max(graph.degree(i), graph.degree(j)))
        c[i, j] = w
        c[j, i] = w
    for i in range(n):
        c[i, i] = 1.0 - (c[i].sum() - c[i, i])
    return c


def validate_combination_matrix(c: np.ndarray, graph: Graph | None = None) -> None:
    """Raise TopologyError unless c is a graph-respecting doubly stochastic matrix."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise TopologyError(f"combination matrix must be square, got shape {c.shape}")
    if np.any(c < 0):
        raise TopologyError("combination matrix has negative entries")
    if np.max(np.abs(c.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
        raise TopologyError("rows do not sum to 1")
    if np.max(np.abs(c.sum(axis=0) - 1.0)) > STOCHASTIC_TOL:
        raise TopologyError("columns do not sum to 1")
    if graph is not None:
        if graph.num_agents != c.shape[0]:
            raise TopologyError("matrix size does not match graph")
        for i in range(c.shape[0]):
            for j in range(c.shape[0]):
                if i != j and c[i, j] > 0 and _norm_edge(i, j) not in graph.edges:
                    raise TopologyError(f"positive weight ({i},{j}) without an edge")


def check_strong_connectivity(c: np.ndarray) -> bool:
    """True iff the support digraph of c is strongly connected and at least
    one agent keeps a positive self weight."""
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    if not np.any(np.diag(c) > 0):
        return False
    adj = c > 0

    def reaches_all(start: int, mat) -> bool:
        seen = np.zeros(n, dtype=bool)
        seen[start] = True
        stack = [start]
        while stack:
            node = stack.pop()
            for nb in np.nonzero(mat[node])[0]:
                if not seen[nb]:
                    seen[nb] = True
                    stack.append(nb)
        return bool(seen.all())

    return reaches_all(0, adj) and reaches_all(0, adj.T)


def spectral_contraction_value(c: np.ndarray, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Spectral norm of C^T (I - 11^T/K) C, by power iteration.

    Values below 1 certify that averaging contracts the disagreement
    component. The iterate matrix is symmetric PSD, so the spectral norm is
    its largest eigenvalue.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    proj = np.eye(n) - np.ones((n, n)) / n
    m = c.T @ proj @ c
    # deterministic start vector with components in every eigenspace
    v = np.cos(np.arange(1, n + 1, dtype=float))
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = m @ v
        norm = np.linalg.norm(w)
        if norm < tol:
            return 0.0
        v_next = w / norm
        lam_next = float(v_next @ m @ v_next)
        if abs(lam_next - lam) < tol:
            return lam_next
        lam, v = lam_next, v_next
    return lam
