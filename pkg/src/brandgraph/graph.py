"""Engagement graphs: the user->post bipartite graph and its user-user projection."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np
import scipy.sparse as sp

from .ingest import EVENT_KINDS, PageDataset, escape_cell

POST = "post"
USER = "user"


class NodeId(NamedTuple):
    kind: str
    id: str

    def __str__(self) -> str:
        return f"{self.kind}:{self.id}"


def node_sort_key(node: NodeId) -> tuple[str, str]:
    """Deterministic node order used for tie-breaks: id first, then kind."""
    return (node.id, node.kind)


class WeightedGraph:
    """Simple weighted graph with O(deg) incident-edge access.

    Instances are treated as immutable once constructed.  Node order is the
    order given to the constructor and is what every algorithm in the package
    uses as its "deterministic node ordering".
    """

    def __init__(
        self,
        nodes: Iterable[NodeId],
        edges: Iterable[tuple[NodeId, NodeId, float]] = (),
        *,
        directed: bool,
    ):
        self.directed = directed
        self._nodes: tuple[NodeId, ...] = tuple(nodes)
        self._index = {n: i for i, n in enumerate(self._nodes)}
        if len(self._index) != len(self._nodes):
            raise ValueError("duplicate node")
        self._succ: dict[NodeId, dict[NodeId, float]] = {n: {} for n in self._nodes}
        self._pred = {n: {} for n in self._nodes} if directed else self._succ
        self._n_edges = 0
        for u, v, w in edges:
            self._add_edge(u, v, float(w))

    def _add_edge(self, u: NodeId, v: NodeId, w: float) -> None:
        if u not in self._index or v not in self._index:
            raise ValueError(f"edge endpoint not in node set: {u} -> {v}")
        if u == v:
            raise ValueError(f"self-loop on {u}")
        if not (w > 0 and np.isfinite(w)):
            raise ValueError(f"edge weight must be positive and finite, got {w}")
        if v in self._succ[u]:
            raise ValueError(f"duplicate edge {u} -> {v}")
        self._succ[u][v] = w
        self._pred[v][u] = w
        self._n_edges += 1

    # -- basic access ------------------------------------------------------

    @property
    def nodes(self) -> tuple[NodeId, ...]:
        return self._nodes

    @property
    def n_nodes(self) -> int:
        return len(self._nodes)

    @property
    def n_edges(self) -> int:
        return self._n_edges

    def __contains__(self, node: object) -> bool:
        return node in self._index

    def index(self, node: NodeId) -> int:
        return self._index[node]

    def successors(self, node: NodeId) -> Mapping[NodeId, float]:
        return self._succ[node]

    def predecessors(self, node: NodeId) -> Mapping[NodeId, float]:
        return self._pred[node]

    def incident(self, node: NodeId) -> Iterator[tuple[NodeId, float]]:
        """Every edge touching ``node`` as ``(other endpoint, weight)``."""
        yield from self._succ[node].items()
        if self.directed:
            yield from self._pred[node].items()

    def weight(self, u: NodeId, v: NodeId) -> float:
        """Weight of edge u->v (either orientation when undirected); 0.0 if absent."""
        return self._succ[u].get(v, 0.0)

    def edges(self) -> Iterator[tuple[NodeId, NodeId, float]]:
        """Edges in node order; undirected edges are reported once, lower index first."""
        for u in self._nodes:
            iu = self._index[u]
            for v, w in self._succ[u].items():
                if self.directed or iu < self._index[v]:
                    yield u, v, w

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Weighted adjacency in node order; ``A[i, j]`` is the weight of i->j."""
        n = self.n_nodes
        rows, cols, vals = [], [], []
        for u, v, w in self.edges():
            i, j = self._index[u], self._index[v]
            rows.append(i)
            cols.append(j)
            vals.append(w)
            if not self.directed:
                rows.append(j)
                cols.append(i)
                vals.append(w)
        mat = sp.csr_matrix(
            (np.asarray(vals, dtype=np.float64), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
            shape=(n, n),
        )
        mat.sort_indices()
        return mat

    def subgraph(self, keep: Iterable[NodeId]) -> WeightedGraph:
        keep_set = set(keep)
        nodes = [n for n in self._nodes if n in keep_set]
        edges = [(u, v, w) for u, v, w in self.edges() if u in keep_set and v in keep_set]
        return WeightedGraph(nodes, edges, directed=self.directed)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        if self.directed != other.directed or set(self._nodes) != set(other._nodes):
            return False
        if self.n_edges != other.n_edges:
            return False
        return all(other.weight(u, v) == w for u, v, w in self.edges())

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"<{type(self).__name__} {kind} nodes={self.n_nodes} edges={self.n_edges}>"


class EngagementGraph(WeightedGraph):
    """Directed bipartite graph whose edges all run from a user to a post."""

    def __init__(self, nodes, edges=(), *, kind_weights: Mapping[str, float], owner: str | None = None):
        super().__init__(nodes, edges, directed=True)
        self.kind_weights = dict(kind_weights)
        self.owner = owner
        for u, v, _ in self.edges():
            if u.kind != USER or v.kind != POST:
                raise ValueError(f"engagement edge must run user->post, got {u} -> {v}")

    @property
    def post_nodes(self) -> list[NodeId]:
        return [n for n in self.nodes if n.kind == POST]

    @property
    def user_nodes(self) -> list[NodeId]:
        return [n for n in self.nodes if n.kind == USER]


class UserGraph(WeightedGraph):
    """Undirected user-user graph."""

    def __init__(self, nodes, edges=()):
        super().__init__(nodes, edges, directed=False)
        for n in self.nodes:
            if n.kind != USER:
                raise ValueError(f"user graph holds only user nodes, got {n}")


def default_kind_weights() -> dict[str, float]:
    return {k: 1.0 for k in EVENT_KINDS}


def _check_kind_weights(kind_weights: Mapping[str, float] | None) -> dict[str, float]:
    weights = default_kind_weights()
    for k, w in (kind_weights or {}).items():
        if k not in weights:
            raise ValueError(f"unknown event kind {k!r}")
        if not w >= 0:
            raise ValueError(f"kind weight for {k!r} must be >= 0, got {w}")
        weights[k] = float(w)
    return weights


def build_engagement_graph(ds: PageDataset, kind_weights: Mapping[str, float] | None = None) -> EngagementGraph:
    """Directed user->post graph.

    Every post is a node; users appear only if they have at least one event.
    ``weight(u, p) = sum_k kind_weights[k] * count(u, p, k)``; edges whose
    weight comes out as zero are dropped.
    """
    weights = _check_kind_weights(kind_weights)
    edge_w: dict[tuple[str, str], float] = {}
    engaged: set[str] = set()
    for e in ds.events:
        engaged.add(e.user_id)
        key = (e.user_id, e.post_id)
        edge_w[key] = edge_w.get(key, 0.0) + weights[e.kind] * e.count
    nodes = [NodeId(POST, p.post_id) for p in ds.posts]
    nodes += [NodeId(USER, u.user_id) for u in ds.users if u.user_id in engaged]
    edges = [(NodeId(USER, u), NodeId(POST, p), w) for (u, p), w in edge_w.items() if w > 0]
    return EngagementGraph(nodes, edges, kind_weights=weights, owner=ds.owner_id)


def project_user_user(g: EngagementGraph, include_reply_edges: bool = False, ds: PageDataset | None = None) -> UserGraph:
    """Co-engagement projection onto users.

    ``weight(u, v)`` is the number of distinct posts both users engaged.  With
    ``include_reply_edges`` every ``comment_reply`` event by ``u`` on a post the
    page owner commented on adds its count to ``(u, owner)``.
    """
    users = g.user_nodes
    posts = g.post_nodes
    uidx = {u: i for i, u in enumerate(users)}
    pidx = {p: i for i, p in enumerate(posts)}
    rows, cols = [], []
    for u, p, _ in g.edges():
        rows.append(uidx[u])
        cols.append(pidx[p])
    incidence = sp.csr_matrix(
        (np.ones(len(rows), dtype=np.int64), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(len(users), len(posts)),
    )
    shared = sp.triu(incidence @ incidence.T, k=1).tocoo()
    weights: dict[tuple[int, int], float] = {
        (int(i), int(j)): float(c) for i, j, c in zip(shared.row, shared.col, shared.data) if c > 0
    }

    if include_reply_edges:
        if ds is None:
            raise ValueError("reply edges need the source dataset")
        owner = ds.owner_id
        owner_node = NodeId(USER, owner) if owner is not None else None
        if owner_node is not None and owner_node in uidx:
            owner_posts = {
                e.post_id for e in ds.events if e.user_id == owner and e.kind in ("comment", "comment_reply")
            }
            oi = uidx[owner_node]
            for e in ds.events:
                if e.kind != "comment_reply" or e.user_id == owner or e.post_id not in owner_posts:
                    continue
                ui = uidx[NodeId(USER, e.user_id)]
                key = (min(ui, oi), max(ui, oi))
                weights[key] = weights.get(key, 0.0) + e.count

    edges = [(users[i], users[j], w) for (i, j), w in sorted(weights.items())]
    return UserGraph(users, edges)


def undirected_view(g: WeightedGraph) -> WeightedGraph:
    """Undirected copy of ``g``; opposite directed edges merge by summing weights."""
    if not g.directed:
        return g
    merged: dict[tuple[int, int], float] = {}
    for u, v, w in g.edges():
        i, j = g.index(u), g.index(v)
        key = (i, j) if i < j else (j, i)
        merged[key] = merged.get(key, 0.0) + w
    nodes = g.nodes
    return WeightedGraph(nodes, ((nodes[i], nodes[j], w) for (i, j), w in merged.items()), directed=False)


# ---------------------------------------------------------------- export


def write_graphml(g: WeightedGraph, path: str | Path) -> None:
    root = ET.Element("graphml", {"xmlns": "http://graphml.graphdrawing.org/xmlns"})
    ET.SubElement(root, "key", {"id": "kind", "for": "node", "attr.name": "kind", "attr.type": "string"})
    ET.SubElement(root, "key", {"id": "weight", "for": "edge", "attr.name": "weight", "attr.type": "double"})
    graph = ET.SubElement(root, "graph", {"id": "G", "edgedefault": "directed" if g.directed else "undirected"})
    for n in g.nodes:
        el = ET.SubElement(graph, "node", {"id": str(n)})
        ET.SubElement(el, "data", {"key": "kind"}).text = n.kind
    for u, v, w in g.edges():
        el = ET.SubElement(graph, "edge", {"source": str(u), "target": str(v)})
        ET.SubElement(el, "data", {"key": "weight"}).text = repr(w)
    ET.indent(root)
    Path(path).write_bytes(ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n")


def write_edgelist(g: WeightedGraph, path: str | Path) -> None:
    lines = ["src\tdst\tweight"]
    lines += [f"{escape_cell(str(u))}\t{escape_cell(str(v))}\t{w!r}" for u, v, w in g.edges()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")
