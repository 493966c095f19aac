"""Ranked tables, single-page analyses and two-page comparison reports.

Serialisation is deterministic: JSON with sorted keys, CSV per RFC 4180
(CRLF, minimal quoting), markdown tables with fixed headers.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

from .community import CommunityPartition, CommunityStats, community_stats, louvain
from .config import RunConfig
from .content import CommunityTheme, classify_post, community_theme, default_lexicon, load_lexicon, theme_distribution
from .errors import BrandgraphError, StageError
from .graph import POST, USER, EngagementGraph, NodeId, build_engagement_graph, project_user_user
from .ingest import DatasetStats, PageDataset, dataset_stats
from .layout import forceatlas2, recent_post_subgraph, render_svg
from .metrics import ScoreMap, TopologySummary, eigenvector_centrality, pagerank, topology_summary, weighted_degree

OWNER_LABEL = "Page owner"
POST_COLUMNS = ["Post_id", "Type_post", "Eigenvector Centrality", "Community"]
USER_COLUMNS = ["User_Id", "Weighted Out-Degree", "Community"]
COMMUNITY_COLUMNS = ["Cluster_Id", "Theme", "Nb of posts", "% Nodes"]
THEME_SOURCE = "automated (lexicon)"


# ---------------------------------------------------------------- masking


class Masker:
    """Stable one-way relabelling of user ids.

    Non-owner ids become ``user_`` plus a salted SHA-256 prefix, widened past
    10 hex digits only if two ids of the page would collide.  The owner is
    always shown as ``Page owner``.
    """

    def __init__(self, user_ids, owner_id: str | None, salt: str, enabled: bool = True):
        self.owner_id = owner_id
        self.enabled = enabled
        self._salt = salt.encode("utf-8")
        self._map: dict[str, str] = {}
        if enabled:
            ids = sorted(set(user_ids) - {owner_id})
            digests = {u: hashlib.sha256(self._salt + b"\x00" + u.encode("utf-8")).hexdigest() for u in ids}
            width = 10
            while len({d[:width] for d in digests.values()}) < len(digests):
                width += 2
            self._map = {u: "user_" + d[:width] for u, d in digests.items()}

    def user(self, user_id: str) -> str:
        if user_id == self.owner_id:
            return OWNER_LABEL
        if not self.enabled:
            return user_id
        if user_id not in self._map:
            digest = hashlib.sha256(self._salt + b"\x00" + user_id.encode("utf-8")).hexdigest()
            self._map[user_id] = "user_" + digest[:10]
        return self._map[user_id]

    def node(self, node: NodeId) -> str:
        return self.user(node.id) if node.kind == USER else node.id


def default_salt(page_id: str, seed: int) -> str:
    return f"{page_id}:{seed}"


# ---------------------------------------------------------------- tables


@dataclass(frozen=True)
class RankedTable:
    title: str
    columns: list[str]
    rows: list[list[Any]]
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row {row!r} does not have {len(self.columns)} cells")

    def to_dict(self) -> dict[str, Any]:
        return {"title": self.title, "columns": list(self.columns), "rows": [list(r) for r in self.rows],
                "provenance": self.provenance}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(self.columns)
        writer.writerows([_csv_cell(c) for c in row] for row in self.rows)
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [_md_row(self.columns), "|" + "|".join(" --- " for _ in self.columns) + "|"]
        lines += [_md_row([_md_cell(c) for c in row]) for row in self.rows]
        return "\n".join(lines) + "\n"


def _csv_cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else str(value)


def _md_cell(value: Any) -> str:
    if isinstance(value, float):
        text = f"{value:.6f}".rstrip("0").rstrip(".")
        return text or "0"
    return "" if value is None else str(value)


def _md_row(cells) -> str:
    return "| " + " | ".join(str(c).replace("|", "\\|").replace("\n", " ") for c in cells) + " |"


def top_posts(
    g: EngagementGraph,
    scores: ScoreMap,
    partition: CommunityPartition,
    k: int = 10,
    post_types: Mapping[str, str] | None = None,
) -> RankedTable:
    """The ``k`` posts with the highest eigenvector score (ties by post id)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    post_types = post_types or {}
    ranked = [(n, s) for n, s in scores.ranked(POST) if n in g][:k]
    rows = [[n.id, post_types.get(n.id, ""), s, partition.assignment.get(n)] for n, s in ranked]
    return RankedTable(f"The {k} most popular posts ranked by eigenvector centrality", POST_COLUMNS, rows,
                       {"metric": scores.metric, **scores.params, "k": k})


def top_users(
    g: EngagementGraph,
    scores: ScoreMap,
    partition: CommunityPartition,
    k: int = 10,
    label: Callable[[NodeId], str] | None = None,
) -> RankedTable:
    """The ``k`` users with the highest weighted out-degree (ties by raw user id)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    label = label or (lambda n: OWNER_LABEL if n.id == getattr(g, "owner", None) else n.id)
    ranked = [(n, s) for n, s in scores.ranked(USER) if n in g][:k]
    rows = [[label(n), s, partition.assignment.get(n)] for n, s in ranked]
    return RankedTable(f"The {k} most influential users ranked by weighted out-degree", USER_COLUMNS, rows,
                       {"metric": scores.metric, **scores.params, "k": k})


# ---------------------------------------------------------------- page analysis


@dataclass(frozen=True)
class PageAnalysis:
    page_id: str
    country: str
    language: str
    culture_label: str
    stats: DatasetStats
    topology: TopologySummary
    top_posts: RankedTable
    top_users: RankedTable
    communities: CommunityStats
    themes: dict[int, CommunityTheme]
    modularity: float
    masked: bool
    provenance: dict[str, Any] = field(default_factory=dict)
    user_graph: dict[str, Any] | None = None
    layout_svg: str | None = field(default=None, compare=False, repr=False)

    # derived figures used by comparisons
    @property
    def engagement_per_post(self) -> float:
        return self.stats.total_engagements / self.stats.n_posts if self.stats.n_posts else 0.0

    @property
    def largest_community_pct(self) -> float:
        top = self.communities.largest(1)
        return top[0].pct_nodes if top else 0.0

    @property
    def top5_share(self) -> float:
        return self.communities.top_share(5)

    @property
    def theme_distribution(self) -> dict[str, float]:
        weights = {r.id: r.pct_nodes for r in self.communities.communities}
        return theme_distribution(self.themes.values(), weights)

    def community_table(self, k: int | None = None) -> RankedTable:
        rows = []
        picked = self.communities.largest(k) if k else self.communities.largest(len(self.communities.communities))
        for r in picked:
            theme = self.themes[r.id].dominant_theme if r.id in self.themes else ""
            rows.append([r.id, theme, r.n_posts, r.pct_nodes])
        return RankedTable("Communities by share of nodes", COMMUNITY_COLUMNS, rows, {"theme_source": THEME_SOURCE})

    def to_dict(self) -> dict[str, Any]:
        communities = []
        for r in self.communities.communities:
            t = self.themes.get(r.id)
            communities.append({
                "id": r.id,
                "n_nodes": r.n_nodes,
                "pct_nodes": r.pct_nodes,
                "n_posts": r.n_posts,
                "top_posts": [[pid, s] for pid, s in r.top_posts[:10]],
                "dominant_theme": t.dominant_theme if t else None,
                "label_histogram": t.label_histogram if t else {},
                "top_keywords": [[w, c] for w, c in t.top_keywords[:10]] if t else [],
            })
        return {
            "page": {"page_id": self.page_id, "country": self.country, "language": self.language,
                     "culture_label": self.culture_label},
            "dataset": vars(self.stats).copy(),
            "topology": vars(self.topology).copy(),
            "modularity": self.modularity,
            "n_communities": len(self.communities.communities),
            "largest_community_pct": self.largest_community_pct,
            "top5_share": self.top5_share,
            "engagement_per_post": self.engagement_per_post,
            "theme_distribution": self.theme_distribution,
            "theme_source": THEME_SOURCE,
            "top_posts": self.top_posts.to_dict(),
            "top_users": self.top_users.to_dict(),
            "communities": communities,
            "masked": self.masked,
            "user_graph": self.user_graph,
            "provenance": self.provenance,
        }

    def to_markdown(self, k: int = 10) -> str:
        s, t = self.stats, self.topology
        apl = "n/a" if t.avg_path_length is None else f"{t.avg_path_length:.4f}"
        dens = "n/a" if t.density is None else f"{t.density:.6e}"
        out = [
            f"# Brand page {self.page_id}",
            "",
            f"Country: {self.country}. Language: {self.language}. Culture label: {self.culture_label or 'n/a'}.",
            "",
            "## Data set",
            "",
            _md_row(["Posts", "Users", "Engagements", "Nodes", "Edges", "Density", "Avg path length", "Modularity"]),
            "|" + " --- |" * 8,
            _md_row([s.n_posts, s.n_users, s.total_engagements, t.n_nodes, t.n_edges, dens, apl,
                     f"{self.modularity:.4f}"]),
            "",
            "## " + self.top_posts.title,
            "",
            self.top_posts.to_markdown(),
            "## " + self.top_users.title,
            "",
            self.top_users.to_markdown(),
            f"## The {k} largest communities",
            "",
            f"Themes are {THEME_SOURCE}, not manual labels.",
            "",
            _community_markdown(self.community_table(k)),
            f"Top-5 community share: {self.top5_share:.2f}% of nodes.",
            "",
        ]
        return "\n".join(out)


def _community_markdown(table: RankedTable) -> str:
    rows = [[cid, theme, n_posts, f"{pct:.2f}%"] for cid, theme, n_posts, pct in table.rows]
    return RankedTable(table.title, table.columns, rows).to_markdown()


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (BrandgraphError, ValueError, OSError) as exc:
        raise StageError(name, exc) from exc


def analyze_page(ds: PageDataset, config: RunConfig = RunConfig(), *, layout: bool = True) -> PageAnalysis:
    """Full single-page pipeline: graph, metrics, communities, themes, tables."""
    g = _stage("build", build_engagement_graph, ds, config.kind_weights)
    topo = _stage("metrics", topology_summary, g, undirected_paths=config.undirected_paths)
    eig = _stage("metrics", eigenvector_centrality, g, tol=config.eigenvector_tol, max_iter=config.max_iter)
    outdeg = _stage("metrics", weighted_degree, g, "out")
    part = _stage("community", louvain, g, resolution=config.resolution, seed=config.seed)
    pr = _stage("pagerank", pagerank, g, damping=config.damping, tol=config.pagerank_tol, max_iter=config.max_iter)
    cstats = _stage("community", community_stats, g, part, pr)

    def content_stage():
        lex = load_lexicon(config.lexicon) if config.lexicon else default_lexicon()
        labels = {p.post_id: classify_post(p, lex) for p in ds.posts}
        by_id = ds.post_by_id
        themes = {}
        for row in cstats.communities:
            posts = [by_id[pid] for pid, _ in row.top_posts]
            themes[row.id] = community_theme(posts, [labels[p.post_id] for p in posts], lex, ds.language, row.id)
        return themes

    themes = _stage("content", content_stage)
    masker = Masker((u.user_id for u in ds.users), ds.owner_id,
                    config.mask_salt or default_salt(ds.page_id, config.seed), enabled=config.mask)
    posts_table = top_posts(g, eig, part, config.top_k, {p.post_id: p.post_type for p in ds.posts})
    users_table = top_users(g, outdeg, part, config.top_k, label=masker.node)

    user_graph = None
    if config.user_projection:
        ug = _stage("projection", project_user_user, g, True, ds)
        utopo = _stage("projection", topology_summary, ug)
        user_graph = {"n_nodes": utopo.n_nodes, "n_edges": utopo.n_edges, "density": utopo.density,
                      "n_components": utopo.n_components}

    svg = None
    if layout and config.layout_posts > 0:
        def layout_stage():
            sub = recent_post_subgraph(g, ds, config.layout_posts)
            res = forceatlas2(sub, config.layout)
            return render_svg(sub, res, part, label=lambda n: f"{n.kind}:{masker.node(n)}")

        svg = _stage("layout", layout_stage)

    provenance = {
        "config": config.to_dict(),
        "eigenvector": {"iterations": eig.iterations, "converged": eig.converged, "eigenvalue": eig.eigenvalue},
        "pagerank": {"iterations": pr.iterations, "converged": pr.converged},
        "louvain": {"levels_q": list(part.q_history), "resolution": part.resolution, "seed": part.seed},
    }
    return PageAnalysis(
        page_id=ds.page_id,
        country=ds.country,
        language=ds.language,
        culture_label=ds.culture_label,
        stats=dataset_stats(ds),
        topology=topo,
        top_posts=posts_table,
        top_users=users_table,
        communities=cstats,
        themes=themes,
        modularity=part.q,
        masked=config.mask,
        provenance=provenance,
        user_graph=user_graph,
        layout_svg=svg,
    )


# ---------------------------------------------------------------- comparison


def _delta_map(a: Mapping[str, float], b: Mapping[str, float]) -> dict[str, float]:
    return {key: b.get(key, 0.0) - a.get(key, 0.0) for key in sorted(set(a) | set(b))}


def _figures(p: PageAnalysis) -> dict[str, float | int | None]:
    return {
        "n_posts": p.stats.n_posts,
        "n_users": p.stats.n_users,
        "total_engagements": p.stats.total_engagements,
        "n_nodes": p.topology.n_nodes,
        "n_edges": p.topology.n_edges,
        "density": p.topology.density,
        "avg_path_length": p.topology.avg_path_length,
        "engagement_per_post": p.engagement_per_post,
        "largest_community_pct": p.largest_community_pct,
        "top5_share": p.top5_share,
        "n_communities": len(p.communities.communities),
        "modularity": p.modularity,
    }


def comparison_deltas(a: PageAnalysis, b: PageAnalysis) -> dict[str, Any]:
    """Side-by-side figures and ``b - a`` deltas; recomputable from the two analyses."""
    fa, fb = _figures(a), _figures(b)
    deltas = {k: (None if fa[k] is None or fb[k] is None else fb[k] - fa[k]) for k in fa}
    ta, tb = a.theme_distribution, b.theme_distribution
    lead_a, lead_b = a.communities.largest(1), b.communities.largest(1)
    return {
        "a": fa,
        "b": fb,
        "delta": deltas,
        "theme_distribution": {"a": ta, "b": tb, "delta": _delta_map(ta, tb)},
        "largest_community_theme": {
            "a": a.themes[lead_a[0].id].dominant_theme if lead_a else None,
            "b": b.themes[lead_b[0].id].dominant_theme if lead_b else None,
        },
        "culture_labels": {"a": a.culture_label, "b": b.culture_label},
    }


@dataclass(frozen=True)
class ComparisonReport:
    a: PageAnalysis
    b: PageAnalysis
    deltas: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {"pages": [self.a.page_id, self.b.page_id], "comparison": self.deltas,
                "analyses": {"a": self.a.to_dict(), "b": self.b.to_dict()}}

    def rows(self) -> list[list[Any]]:
        d = self.deltas
        return [[k, d["a"][k], d["b"][k], d["delta"][k]] for k in d["a"]]

    def to_markdown(self) -> str:
        d = self.deltas
        out = [f"# {self.a.page_id} vs {self.b.page_id}", "",
               "Descriptive comparison; deltas are b minus a.", ""]
        out.append(RankedTable("figures", ["Measure", self.a.page_id, self.b.page_id, "Delta"],
                               [[k, _md_cell(x), _md_cell(y), _md_cell(z)] for k, x, y, z in self.rows()]).to_markdown())
        td = d["theme_distribution"]
        theme_rows = [[t, _md_cell(td["a"].get(t, 0.0)), _md_cell(td["b"].get(t, 0.0)), _md_cell(td["delta"][t])]
                      for t in td["delta"]]
        out += ["## Theme distribution (% of nodes by dominant community theme)", "",
                f"Themes are {THEME_SOURCE}.", "",
                RankedTable("themes", ["Theme", self.a.page_id, self.b.page_id, "Delta"], theme_rows).to_markdown()]
        lt = d["largest_community_theme"]
        cl = d["culture_labels"]
        out += [f"Largest community theme: {lt['a']} / {lt['b']}.", "",
                f"Culture labels: {cl['a'] or 'n/a'} / {cl['b'] or 'n/a'}.", ""]
        return "\n".join(out)


def compare_pages(a: PageAnalysis, b: PageAnalysis) -> ComparisonReport:
    return ComparisonReport(a, b, comparison_deltas(a, b))


# ---------------------------------------------------------------- emit


def to_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _summary_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerows([_csv_cell(c) for c in row] for row in rows)
    return buf.getvalue()


def render(report: Any, fmt: str) -> str:
    if fmt not in ("json", "csv", "markdown"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(report, RankedTable):
        return {"json": lambda: to_json(report.to_dict()), "csv": report.to_csv, "markdown": report.to_markdown}[fmt]()
    if isinstance(report, PageAnalysis):
        if fmt == "json":
            return to_json(report.to_dict())
        if fmt == "markdown":
            return report.to_markdown()
        return report.community_table().to_csv()
    if isinstance(report, ComparisonReport):
        if fmt == "json":
            return to_json(report.to_dict())
        if fmt == "markdown":
            return report.to_markdown()
        return _summary_csv([["measure", report.a.page_id, report.b.page_id, "delta"], *report.rows()])
    raise TypeError(f"cannot emit {type(report).__name__}")


def emit(report: Any, fmt: str, path: str | Path) -> None:
    Path(path).write_text(render(report, fmt), encoding="utf-8", newline="")


def write_page_report(analysis: PageAnalysis, out_dir: str | Path) -> Path:
    """Write ``<out_dir>/<page_id>/`` with the analysis, its tables and the layout."""
    root = Path(out_dir) / analysis.page_id
    root.mkdir(parents=True, exist_ok=True)
    emit(analysis, "json", root / "analysis.json")
    emit(analysis, "markdown", root / "analysis.md")
    emit(analysis.top_posts, "csv", root / "top_posts.csv")
    emit(analysis.top_users, "csv", root / "top_users.csv")
    emit(analysis, "csv", root / "communities.csv")
    if analysis.layout_svg is not None:
        (root / "layout.svg").write_text(analysis.layout_svg, encoding="utf-8", newline="")
    return root


def write_comparison(report: ComparisonReport, out_dir: str | Path) -> Path:
    root = Path(out_dir) / "compare"
    root.mkdir(parents=True, exist_ok=True)
    stem = f"{report.a.page_id}_vs_{report.b.page_id}"
    emit(report, "json", root / f"{stem}.json")
    emit(report, "markdown", root / f"{stem}.md")
    return root
