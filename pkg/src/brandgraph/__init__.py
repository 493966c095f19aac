"""Engagement-graph analytics for brand pages.

Parse page exports, build the user->post engagement graph, score posts and
users, find communities, label their themes, lay the graph out and write
ranked reports comparing two pages.
"""

from .community import CommunityPartition, community_stats, louvain, modularity
from .config import RunConfig
from .graph import EngagementGraph, NodeId, UserGraph, WeightedGraph, build_engagement_graph, project_user_user
from .ingest import PageDataset, parse_page_dataset, write_page_dataset
from .metrics import average_path_length, density, eigenvector_centrality, pagerank, weighted_degree
from .report import PageAnalysis, analyze_page, compare_pages

__version__ = "0.1.0"

__all__ = [
    "CommunityPartition",
    "EngagementGraph",
    "NodeId",
    "PageAnalysis",
    "PageDataset",
    "RunConfig",
    "UserGraph",
    "WeightedGraph",
    "analyze_page",
    "average_path_length",
    "build_engagement_graph",
    "community_stats",
    "compare_pages",
    "density",
    "eigenvector_centrality",
    "louvain",
    "modularity",
    "pagerank",
    "parse_page_dataset",
    "project_user_user",
    "weighted_degree",
    "write_page_dataset",
]
