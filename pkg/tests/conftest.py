from __future__ import annotations

import random
from datetime import datetime, timezone

import pytest

from brandgraph.graph import NodeId, WeightedGraph
from brandgraph.ingest import EngagementEvent, PageDataset, PostRecord, UserRecord

T0 = datetime(2015, 6, 9, tzinfo=timezone.utc)
T1 = datetime(2015, 12, 9, tzinfo=timezone.utc)

_ACCEPTANCE: list[str] = []


def u(name: str) -> NodeId:
    return NodeId("user", name)


def p(name: str) -> NodeId:
    return NodeId("post", name)


def graph(n: int, edges, directed: bool = False, kind: str = "user") -> WeightedGraph:
    """Graph on nodes ``0..n-1`` (ids zero-padded so string order equals numeric order)."""
    nodes = [NodeId(kind, f"{i:03d}") for i in range(n)]
    weighted = [(nodes[e[0]], nodes[e[1]], e[2] if len(e) > 2 else 1.0) for e in edges]
    return WeightedGraph(nodes, weighted, directed=directed)


def path_graph(n: int) -> WeightedGraph:
    return graph(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> WeightedGraph:
    return graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_graph(leaves: int) -> WeightedGraph:
    return graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def two_triangles(bridge: bool = False) -> WeightedGraph:
    edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]
    if bridge:
        edges.append((2, 3))
    return graph(6, edges)


def random_graph(rng: random.Random, n: int, p_edge: float, directed: bool = False, weighted: bool = True):
    edges = []
    for a in range(n):
        for b in range(n):
            if a == b or (not directed and b < a):
                continue
            if rng.random() < p_edge:
                edges.append((a, b, rng.choice([0.5, 1.0, 2.0, 3.0]) if weighted else 1.0))
    return graph(n, edges, directed=directed)


def dataset(posts, users, events, **meta) -> PageDataset:
    """Small dataset from tuples: posts ``(id, type, text[, permalink])``, users ``(id, owner)``, events ``(u, p, kind, count)``."""
    post_recs = []
    for i, row in enumerate(posts):
        permalink = row[3] if len(row) > 3 else None
        post_recs.append(PostRecord(row[0], row[1], T0.replace(day=10 + i % 18), row[2], permalink))
    return PageDataset(
        page_id=meta.get("page_id", "page"),
        country=meta.get("country", "France"),
        language=meta.get("language", "fr"),
        culture_label=meta.get("culture_label", "individualistic"),
        posts=tuple(post_recs),
        users=tuple(UserRecord(uid, owner) for uid, owner in users),
        events=tuple(EngagementEvent(*e) for e in events),
        window_start=T0,
        window_end=T1,
    )


def minimal_dataset() -> PageDataset:
    return dataset([("p1", "photo", "Bonne fête des mères")], [("u1", False)], [("u1", "p1", "like", 1)])


def random_bipartite(rng: random.Random, n_users: int, n_posts: int, p_edge: float) -> PageDataset:
    posts = [(f"p{j}", "photo", "") for j in range(n_posts)]
    users = [(f"u{i}", False) for i in range(n_users)]
    events = []
    for i in range(n_users):
        for j in range(n_posts):
            if rng.random() < p_edge:
                events.append((f"u{i}", f"p{j}", rng.choice(["like", "comment", "share"]), rng.randint(1, 3)))
    return dataset(posts, users, events)


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; lines are echoed in the terminal summary."""

    def record(name: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
