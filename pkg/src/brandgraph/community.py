"""Louvain community detection, modularity and per-community statistics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .errors import EmptyGraph, PartitionMismatch
from .graph import POST, NodeId, WeightedGraph, undirected_view
from .metrics import ScoreMap
from .rng import Stream

MIN_GAIN = 1e-12


@dataclass(frozen=True)
class CommunityPartition:
    assignment: dict[NodeId, int]
    q: float
    n_communities: int
    seed: int | None = None
    resolution: float = 1.0
    q_history: tuple[float, ...] = ()

    def members(self) -> dict[int, list[NodeId]]:
        out: dict[int, list[NodeId]] = {c: [] for c in range(self.n_communities)}
        for node, c in self.assignment.items():
            out[c].append(node)
        return out

    def write_csv(self, path: str | Path, rename: Callable[[NodeId], str] | None = None) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(["node_id", "kind", "community"])
            for node, c in self.assignment.items():
                writer.writerow([rename(node) if rename else node.id, node.kind, c])


def _labels(g: WeightedGraph, partition: CommunityPartition | Mapping[NodeId, int]) -> np.ndarray:
    assignment = partition.assignment if isinstance(partition, CommunityPartition) else partition
    if len(assignment) != g.n_nodes or any(n not in g for n in assignment):
        raise PartitionMismatch("partition does not cover exactly the graph's nodes")
    raw = np.fromiter((assignment[n] for n in g.nodes), dtype=np.int64, count=g.n_nodes)
    _, dense = np.unique(raw, return_inverse=True)
    return dense.ravel()


def modularity(
    g: WeightedGraph,
    partition: CommunityPartition | Mapping[NodeId, int],
    resolution: float = 1.0,
) -> float:
    """Weighted Newman modularity of ``partition`` on the undirected view of ``g``.

    A graph without edges has modularity 0.
    """
    if g.n_nodes == 0:
        raise EmptyGraph("modularity of an empty graph")
    labels = _labels(g, partition)
    adj = undirected_view(g).adjacency.tocoo()
    if adj.nnz == 0:
        return 0.0
    row_c = labels[adj.row]
    same = row_c == labels[adj.col]
    n_comm = int(labels.max()) + 1
    tot = np.bincount(row_c, weights=adj.data, minlength=n_comm)
    inner = np.bincount(row_c[same], weights=adj.data[same], minlength=n_comm)
    m2 = tot.sum()
    return float((inner / m2).sum() - resolution * ((tot / m2) ** 2).sum())


# ---------------------------------------------------------------- Louvain


class _Level:
    """Aggregated graph for one Louvain level: symmetric neighbour lists plus self-loops."""

    def __init__(self, nbrs: list[list[int]], wts: list[list[float]], loops: list[float]):
        self.nbrs = nbrs
        self.wts = wts
        self.loops = loops
        self.n = len(nbrs)
        self.strength = [loops[i] + sum(wts[i]) for i in range(self.n)]

    @classmethod
    def from_adjacency(cls, adj) -> _Level:
        indptr = adj.indptr.tolist()
        indices = adj.indices.tolist()
        data = adj.data.tolist()
        n = adj.shape[0]
        nbrs = [indices[indptr[i] : indptr[i + 1]] for i in range(n)]
        wts = [data[indptr[i] : indptr[i + 1]] for i in range(n)]
        return cls(nbrs, wts, [0.0] * n)

    def quality(self, comm: list[int], m2: float, resolution: float) -> float:
        inner: dict[int, float] = {}
        tot: dict[int, float] = {}
        for i in range(self.n):
            c = comm[i]
            tot[c] = tot.get(c, 0.0) + self.strength[i]
            acc = self.loops[i]
            for j, w in zip(self.nbrs[i], self.wts[i]):
                if comm[j] == c:
                    acc += w
            inner[c] = inner.get(c, 0.0) + acc
        return sum(inner.values()) / m2 - resolution * sum((t / m2) ** 2 for t in tot.values())

    def aggregate(self, comm: list[int], n_comm: int) -> _Level:
        merged: list[dict[int, float]] = [{} for _ in range(n_comm)]
        loops = [0.0] * n_comm
        for i in range(self.n):
            ci = comm[i]
            loops[ci] += self.loops[i]
            row = merged[ci]
            for j, w in zip(self.nbrs[i], self.wts[i]):
                cj = comm[j]
                if cj == ci:
                    loops[ci] += w
                else:
                    row[cj] = row.get(cj, 0.0) + w
        nbrs = [sorted(row) for row in merged]
        wts = [[merged[c][d] for d in nbrs[c]] for c in range(n_comm)]
        return _Level(nbrs, wts, loops)


def _local_moves(
    level: _Level, order: list[int], m2: float, resolution: float, history: list[float]
) -> tuple[list[int], bool]:
    comm = list(range(level.n))
    tot = list(level.strength)
    strength = level.strength
    moved_any = False
    while True:
        moved = 0
        for i in order:
            ci = comm[i]
            ki = strength[i]
            links: dict[int, float] = {}
            for j, w in zip(level.nbrs[i], level.wts[i]):
                cj = comm[j]
                links[cj] = links.get(cj, 0.0) + w
            tot[ci] -= ki
            scale = resolution * ki / m2
            own_gain = links.get(ci, 0.0) - tot[ci] * scale
            best, best_gain = ci, own_gain
            for c, w in links.items():
                gain = w - tot[c] * scale
                if gain > best_gain or (gain == best_gain and c < best):
                    best, best_gain = c, gain
            if best != ci and 2.0 * (best_gain - own_gain) / m2 > MIN_GAIN:
                comm[i] = best
                moved += 1
            else:
                best = ci
            tot[best] += ki
        if moved == 0:
            break
        moved_any = True
        history.append(level.quality(comm, m2, resolution))
    return comm, moved_any


def _renumber(comm: list[int]) -> tuple[list[int], int]:
    mapping: dict[int, int] = {}
    out = [mapping.setdefault(c, len(mapping)) for c in comm]
    return out, len(mapping)


def louvain(g: WeightedGraph, resolution: float = 1.0, seed: int = 0) -> CommunityPartition:
    """Two-phase Louvain modularity maximisation on the undirected view of ``g``.

    Each level shuffles the node order with the seeded stream, sweeps local
    moves until a full pass changes nothing (a move needs a modularity gain
    above ``1e-12``; equal gains go to the lowest community id), then folds
    communities into super-nodes.  Stops when a level makes no move.

    Final community ids are ordered by size, largest first, ties by the
    earliest member in graph order.
    """
    n = g.n_nodes
    if n == 0:
        raise EmptyGraph("louvain on an empty graph")
    adj = undirected_view(g).adjacency
    stream = Stream(seed)
    membership = list(range(n))
    history: list[float] = []
    m2 = float(adj.sum())
    if m2 > 0:
        level = _Level.from_adjacency(adj)
        while True:
            order = list(range(level.n))
            stream.shuffle(order)
            comm, moved = _local_moves(level, order, m2, resolution, history)
            if not moved:
                break
            comm, n_comm = _renumber(comm)
            membership = [comm[c] for c in membership]
            level = level.aggregate(comm, n_comm)

    sizes: dict[int, int] = {}
    first: dict[int, int] = {}
    for i, c in enumerate(membership):
        sizes[c] = sizes.get(c, 0) + 1
        first.setdefault(c, i)
    ranked = sorted(sizes, key=lambda c: (-sizes[c], first[c]))
    final_id = {c: k for k, c in enumerate(ranked)}
    assignment = {node: final_id[membership[i]] for i, node in enumerate(g.nodes)}
    q = modularity(g, assignment, resolution)
    return CommunityPartition(assignment, q, len(ranked), seed, resolution, tuple(history))


# ---------------------------------------------------------------- statistics


@dataclass(frozen=True)
class CommunityRow:
    id: int
    n_nodes: int
    pct_nodes: float
    n_posts: int
    top_posts: list[tuple[str, float]] = field(default_factory=list)


@dataclass(frozen=True)
class CommunityStats:
    communities: list[CommunityRow]
    n_nodes: int

    def largest(self, k: int) -> list[CommunityRow]:
        return sorted(self.communities, key=lambda r: (-r.n_nodes, r.id))[:k]

    def top_share(self, k: int = 5) -> float:
        """Percentage of all nodes held by the ``k`` largest communities."""
        return sum(r.pct_nodes for r in self.largest(k))


def community_stats(g: WeightedGraph, p: CommunityPartition, pagerank_scores: ScoreMap) -> CommunityStats:
    if set(p.assignment) != set(g.nodes) or len(p.assignment) != g.n_nodes:
        raise PartitionMismatch("partition does not cover exactly the graph's nodes")
    members = p.members()
    total = g.n_nodes
    rows = []
    for cid in range(p.n_communities):
        nodes = members[cid]
        posts = [(n, pagerank_scores[n]) for n in nodes if n.kind == POST]
        posts.sort(key=lambda item: (-item[1], item[0].id))
        rows.append(
            CommunityRow(
                id=cid,
                n_nodes=len(nodes),
                pct_nodes=100.0 * len(nodes) / total,
                n_posts=len(posts),
                top_posts=[(n.id, s) for n, s in posts],
            )
        )
    return CommunityStats(rows, total)
