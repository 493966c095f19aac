"""Topology statistics and centrality scores."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateGraph, EmptyGraph, InvalidDamping
from .graph import NodeId, WeightedGraph, node_sort_key, undirected_view

DIRECTIONS = ("in", "out", "total")


@dataclass(frozen=True)
class ScoreMap:
    scores: dict[NodeId, float]
    metric: str
    params: dict[str, Any] = field(default_factory=dict)
    iterations: int = 0
    converged: bool = True
    eigenvalue: float | None = None

    def __getitem__(self, node: NodeId) -> float:
        return self.scores[node]

    def __len__(self) -> int:
        return len(self.scores)

    def ranked(self, kind: str | None = None) -> list[tuple[NodeId, float]]:
        """Nodes by descending score, ties broken by ascending node id."""
        items = [(n, s) for n, s in self.scores.items() if kind is None or n.kind == kind]
        items.sort(key=lambda item: (-item[1], node_sort_key(item[0])))
        return items

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(["node_id", "kind", "score"])
            for node, score in self.ranked():
                writer.writerow([node.id, node.kind, repr(score)])


@dataclass(frozen=True)
class TopologySummary:
    n_nodes: int
    n_edges: int
    directed: bool
    density: float | None
    avg_path_length: float | None
    n_components: int
    largest_component_fraction: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def density(g: WeightedGraph) -> float:
    n = g.n_nodes
    if n < 2:
        raise DegenerateGraph(f"density needs at least 2 nodes, got {n}")
    possible = n * (n - 1) if g.directed else n * (n - 1) / 2
    return g.n_edges / possible


def _components(g: WeightedGraph) -> tuple[int, np.ndarray]:
    return connected_components(g.adjacency, directed=g.directed, connection="weak")


def _largest_component(labels: np.ndarray) -> np.ndarray:
    """Node indices of the largest component; ties go to the one holding the lowest index."""
    counts = np.bincount(labels)
    best = int(np.argmax(counts))  # argmax returns the first maximum, i.e. lowest label
    return np.flatnonzero(labels == best)


def _bfs_totals(pull: sp.csr_matrix, words: int = 8) -> tuple[int, int]:
    """Sum of shortest-path lengths and number of reachable ordered pairs.

    Bit-parallel BFS: each node carries a bitset of the sources that have
    reached it, so one sweep over the edge list advances ``64 * words``
    searches by one level.  ``pull[v]`` lists the nodes with an arc into v.
    """
    n = pull.shape[0]
    indptr, indices = pull.indptr, pull.indices
    nonempty = np.flatnonzero(np.diff(indptr) > 0)
    starts = indptr[nonempty]
    total = 0
    pairs = 0
    if len(indices) == 0:
        return 0, 0
    batch = 64 * words
    one = np.uint64(1)
    for first in range(0, n, batch):
        src = np.arange(first, min(n, first + batch))
        offs = src - first
        width = (len(src) + 63) // 64
        visited = np.zeros((n, width), dtype=np.uint64)
        visited[src, offs // 64] = one << (offs % 64).astype(np.uint64)
        frontier = visited
        level = 0
        while True:
            level += 1
            reduced = np.bitwise_or.reduceat(frontier[indices], starts, axis=0)
            reached = np.zeros_like(visited)
            reached[nonempty] = reduced
            new = reached & ~visited
            found = int(np.bitwise_count(new).sum())
            if found == 0:
                break
            total += level * found
            pairs += found
            visited = visited | new
            frontier = new
    return total, pairs


def average_path_length(g: WeightedGraph, *, undirected: bool = False) -> float | None:
    """Mean unweighted shortest-path length over reachable ordered pairs.

    Only the largest weakly connected component is considered.  Paths follow
    edge direction on directed graphs unless ``undirected`` is set.  Returns
    ``None`` when that component has fewer than two nodes.
    """
    if g.n_nodes == 0:
        raise EmptyGraph("average path length of an empty graph")
    _, labels = _components(g)
    comp = _largest_component(labels)
    if len(comp) < 2:
        return None
    adj = g.adjacency
    if undirected and g.directed:
        adj = adj + adj.T
    sub = adj[comp][:, comp]
    pull = sp.csr_matrix(sub.T)
    pull.sort_indices()
    total, pairs = _bfs_totals(pull)
    if pairs == 0:
        return None
    return total / pairs


def weighted_degree(g: WeightedGraph, direction: str = "total") -> ScoreMap:
    """Sum of incident edge weights.  Undirected graphs ignore ``direction``."""
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    adj = g.adjacency
    out_w = np.asarray(adj.sum(axis=1)).ravel()
    in_w = np.asarray(adj.sum(axis=0)).ravel()
    if not g.directed:
        values = out_w
    elif direction == "out":
        values = out_w
    elif direction == "in":
        values = in_w
    else:
        values = out_w + in_w
    scores = {n: float(values[i]) for i, n in enumerate(g.nodes)}
    return ScoreMap(scores, "weighted_degree", {"direction": direction})


def eigenvector_centrality(g: WeightedGraph, tol: float = 1e-9, max_iter: int = 1000) -> ScoreMap:
    """Max-normalised principal eigenvector of the undirected view.

    Power iteration on ``A + s I`` where ``s`` is the mean weighted degree.
    The shift leaves eigenvectors unchanged, stops the iteration from
    oscillating on bipartite graphs, and is at most the leading eigenvalue,
    so the returned vector ``v`` (top entry exactly 1) satisfies
    ``|Av - lam v|_inf / lam <= 2 * tol`` on convergence, ``lam`` being the
    reported ``eigenvalue``.
    """
    n = g.n_nodes
    if n == 0:
        raise EmptyGraph("eigenvector centrality of an empty graph")
    adj = undirected_view(g).adjacency
    params = {"tol": tol, "max_iter": max_iter}
    if adj.nnz == 0:
        return ScoreMap({v: 1.0 for v in g.nodes}, "eigenvector", params, 0, True, 0.0)
    shift = float(adj.sum()) / n
    x = np.ones(n)
    lam = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        y = adj @ x + shift * x
        top = float(y.max())
        y /= top
        lam = top - shift
        if float(np.abs(y - x).max()) < tol:
            converged = True
            break
        x = y
    # On convergence keep the iterate whose image produced ``top``: for it the
    # residual identity above is exact.
    scores = {v: float(x[i]) for i, v in enumerate(g.nodes)}
    return ScoreMap(scores, "eigenvector", params, it, converged, lam)


def pagerank(g: WeightedGraph, damping: float = 0.85, tol: float = 1e-9, max_iter: int = 1000) -> ScoreMap:
    """Damped random-walk stationary distribution.

    Transitions are proportional to edge weight; nodes without out-edges
    spread their mass uniformly.  Stops when the L1 change drops below ``tol``.
    """
    n = g.n_nodes
    if n == 0:
        raise EmptyGraph("pagerank of an empty graph")
    if not 0 < damping < 1:
        raise InvalidDamping(f"damping must lie in (0, 1), got {damping}")
    adj = g.adjacency
    out_w = np.asarray(adj.sum(axis=1)).ravel()
    dangling = out_w == 0
    inv = np.zeros(n)
    inv[~dangling] = 1.0 / out_w[~dangling]
    step = sp.csr_matrix((sp.diags(inv) @ adj).T)
    x = np.full(n, 1.0 / n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        y = damping * (step @ x + x[dangling].sum() / n) + (1.0 - damping) / n
        y /= y.sum()
        err = float(np.abs(y - x).sum())
        x = y
        if err < tol:
            converged = True
            break
    scores = {v: float(x[i]) for i, v in enumerate(g.nodes)}
    return ScoreMap(scores, "pagerank", {"damping": damping, "tol": tol, "max_iter": max_iter}, it, converged)


def topology_summary(g: WeightedGraph, *, undirected_paths: bool = False) -> TopologySummary:
    if g.n_nodes == 0:
        raise EmptyGraph("topology of an empty graph")
    n_comp, labels = _components(g)
    largest = len(_largest_component(labels))
    return TopologySummary(
        n_nodes=g.n_nodes,
        n_edges=g.n_edges,
        directed=g.directed,
        density=density(g) if g.n_nodes >= 2 else None,
        avg_path_length=average_path_length(g, undirected=undirected_paths),
        n_components=int(n_comp),
        largest_component_fraction=largest / g.n_nodes,
    )
