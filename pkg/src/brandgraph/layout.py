"""ForceAtlas2 layout and SVG rendering."""

from __future__ import annotations

import colorsys
import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping
from xml.sax.saxutils import escape

import numba
import numpy as np

from .community import CommunityPartition
from .errors import EmptyGraph
from .graph import POST, NodeId, WeightedGraph, undirected_view
from .ingest import PageDataset
from .rng import Stream

SPEED_FACTOR = 0.1  # k_s
MAX_NODE_SPEED = 10.0  # k_smax
MAX_SPEED_RISE = 0.5


@dataclass(frozen=True)
class LayoutParams:
    scaling: float = 2.0
    gravity: float = 1.0
    iterations: int = 1000
    jitter_tolerance: float = 1.0
    linlog: bool = False
    seed: int = 0
    approximate: bool = False

    def __post_init__(self):
        if not self.scaling > 0:
            raise ValueError("scaling must be positive")
        if not self.gravity >= 0:
            raise ValueError("gravity must be non-negative")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if not self.jitter_tolerance > 0:
            raise ValueError("jitter tolerance must be positive")


@dataclass(frozen=True)
class LayoutResult:
    positions: dict[NodeId, tuple[float, float]]
    final_max_displacement: float
    iterations_run: int

    def write_csv(self, path: str | Path, rename: Callable[[NodeId], str] | None = None) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(["node_id", "x", "y"])
            for node, (x, y) in self.positions.items():
                writer.writerow([rename(node) if rename else str(node), repr(x), repr(y)])


@numba.njit(cache=True)
def _repulsion_exact(x, y, mass, kr, fx, fy):
    n = x.shape[0]
    for i in range(n):
        xi = x[i]
        yi = y[i]
        ax = 0.0
        ay = 0.0
        for j in range(n):
            dx = xi - x[j]
            dy = yi - y[j]
            d2 = dx * dx + dy * dy
            if d2 > 0.0:
                f = mass[j] / d2
                ax += dx * f
                ay += dy * f
        fx[i] += kr * mass[i] * ax
        fy[i] += kr * mass[i] * ay


@numba.njit(cache=True)
def _repulsion_grid(x, y, mass, kr, fx, fy):
    """Exact repulsion from the 3x3 surrounding cells, cell centre of mass beyond."""
    n = x.shape[0]
    side = max(1, int(math.ceil(n ** (1.0 / 3.0))))
    xmin = x.min()
    ymin = y.min()
    span = max(x.max() - xmin, y.max() - ymin, 1e-9)
    cell = span / side * (1.0 + 1e-9)
    ncell = side * side
    cx = np.empty(n, np.int64)
    cy = np.empty(n, np.int64)
    cmass = np.zeros(ncell)
    cmx = np.zeros(ncell)
    cmy = np.zeros(ncell)
    count = np.zeros(ncell + 1, np.int64)
    for i in range(n):
        a = min(side - 1, int((x[i] - xmin) / cell))
        b = min(side - 1, int((y[i] - ymin) / cell))
        cx[i] = a
        cy[i] = b
        c = b * side + a
        cmass[c] += mass[i]
        cmx[c] += mass[i] * x[i]
        cmy[c] += mass[i] * y[i]
        count[c + 1] += 1
    for c in range(ncell):
        count[c + 1] += count[c]
        if cmass[c] > 0:
            cmx[c] /= cmass[c]
            cmy[c] /= cmass[c]
    members = np.empty(n, np.int64)
    fill = count[:-1].copy()
    for i in range(n):
        c = cy[i] * side + cx[i]
        members[fill[c]] = i
        fill[c] += 1
    for i in range(n):
        ax = 0.0
        ay = 0.0
        for b in range(side):
            for a in range(side):
                c = b * side + a
                if cmass[c] == 0.0:
                    continue
                if abs(a - cx[i]) <= 1 and abs(b - cy[i]) <= 1:
                    for k in range(count[c], count[c + 1]):
                        j = members[k]
                        dx = x[i] - x[j]
                        dy = y[i] - y[j]
                        d2 = dx * dx + dy * dy
                        if d2 > 0.0:
                            f = mass[j] / d2
                            ax += dx * f
                            ay += dy * f
                else:
                    dx = x[i] - cmx[c]
                    dy = y[i] - cmy[c]
                    d2 = dx * dx + dy * dy
                    if d2 > 0.0:
                        f = cmass[c] / d2
                        ax += dx * f
                        ay += dy * f
        fx[i] += kr * mass[i] * ax
        fy[i] += kr * mass[i] * ay


@numba.njit(cache=True)
def _simulate(x, y, mass, src, dst, w, kr, kg, tau, linlog, iterations, approximate):
    n = x.shape[0]
    fx = np.zeros(n)
    fy = np.zeros(n)
    old_fx = np.zeros(n)
    old_fy = np.zeros(n)
    speed = 1.0
    max_disp = 0.0
    for it in range(iterations):
        fx[:] = 0.0
        fy[:] = 0.0
        if approximate:
            _repulsion_grid(x, y, mass, kr, fx, fy)
        else:
            _repulsion_exact(x, y, mass, kr, fx, fy)
        if kg > 0.0:
            for i in range(n):
                d = math.sqrt(x[i] * x[i] + y[i] * y[i])
                if d > 0.0:
                    fx[i] -= kg * mass[i] * x[i] / d
                    fy[i] -= kg * mass[i] * y[i] / d
        for e in range(src.shape[0]):
            a = src[e]
            b = dst[e]
            dx = x[a] - x[b]
            dy = y[a] - y[b]
            if linlog:
                d = math.sqrt(dx * dx + dy * dy)
                f = w[e] * math.log1p(d) / d if d > 0.0 else 0.0
            else:
                f = w[e]
            fx[a] -= dx * f
            fy[a] -= dy * f
            fx[b] += dx * f
            fy[b] += dy * f

        swinging = 0.0
        traction = 0.0
        swg = np.empty(n)
        for i in range(n):
            sx = fx[i] - old_fx[i]
            sy = fy[i] - old_fy[i]
            swg[i] = math.sqrt(sx * sx + sy * sy)
            tx = fx[i] + old_fx[i]
            ty = fy[i] + old_fy[i]
            swinging += mass[i] * swg[i]
            traction += mass[i] * 0.5 * math.sqrt(tx * tx + ty * ty)
        if swinging > 0.0:
            target = tau * traction / swinging
            if it == 0:
                speed = target
            else:
                speed = min(target, speed * (1.0 + MAX_SPEED_RISE))

        max_disp = 0.0
        for i in range(n):
            force = math.sqrt(fx[i] * fx[i] + fy[i] * fy[i])
            local = SPEED_FACTOR * speed / (1.0 + speed * math.sqrt(swg[i]))
            if force > 0.0 and local > MAX_NODE_SPEED / force:
                local = MAX_NODE_SPEED / force
            mx = local * fx[i]
            my = local * fy[i]
            x[i] += mx
            y[i] += my
            disp = math.sqrt(mx * mx + my * my)
            if disp > max_disp:
                max_disp = disp
            old_fx[i] = fx[i]
            old_fy[i] = fy[i]
    return max_disp


def initial_positions(nodes, seed: int) -> dict[NodeId, tuple[float, float]]:
    """Seeded uniform positions in a square of side ``10 * sqrt(n)`` centred on the origin."""
    n = len(nodes)
    side = 10.0 * math.sqrt(max(n, 1))
    draws = Stream(seed).random(2 * n) if n else np.zeros(0)
    return {node: (float((draws[2 * k] - 0.5) * side), float((draws[2 * k + 1] - 0.5) * side)) for k, node in enumerate(nodes)}


def forceatlas2(
    g: WeightedGraph,
    params: LayoutParams = LayoutParams(),
    initial: Mapping[NodeId, tuple[float, float]] | None = None,
) -> LayoutResult:
    """Run ForceAtlas2 on the undirected view of ``g``.

    Forces per iteration: linear (or log) edge attraction ``w * d``, pairwise
    repulsion ``scaling * m_i * m_j / d`` with mass ``degree + 1``, and a
    constant-magnitude pull ``gravity * m_i`` toward the origin.  Node speed
    adapts to swinging (force direction changes) vs traction.
    """
    if g.n_nodes == 0:
        raise EmptyGraph("layout of an empty graph")
    ug = undirected_view(g)
    nodes = ug.nodes
    start = initial if initial is not None else initial_positions(nodes, params.seed)
    x = np.array([start[v][0] for v in nodes], dtype=np.float64)
    y = np.array([start[v][1] for v in nodes], dtype=np.float64)
    degree = np.zeros(len(nodes))
    src, dst, w = [], [], []
    for u, v, wt in ug.edges():
        a, b = ug.index(u), ug.index(v)
        src.append(a)
        dst.append(b)
        w.append(wt)
        degree[a] += 1
        degree[b] += 1
    disp = _simulate(
        x,
        y,
        degree + 1.0,
        np.asarray(src, dtype=np.int64),
        np.asarray(dst, dtype=np.int64),
        np.asarray(w, dtype=np.float64),
        float(params.scaling),
        float(params.gravity),
        float(params.jitter_tolerance),
        bool(params.linlog),
        int(params.iterations),
        bool(params.approximate),
    )
    positions = {v: (float(x[i]), float(y[i])) for i, v in enumerate(nodes)}
    return LayoutResult(positions, float(disp), int(params.iterations))


def recent_post_subgraph(g: WeightedGraph, ds: PageDataset, n_posts: int = 50) -> WeightedGraph:
    """The ``n_posts`` most recent posts and every node linked to them."""
    in_graph = [p for p in ds.posts if NodeId(POST, p.post_id) in g]
    recent = sorted(in_graph, key=lambda p: (p.created_at, p.post_id), reverse=True)[:n_posts]
    keep = {NodeId(POST, p.post_id) for p in recent}
    for post in list(keep):
        keep.update(other for other, _ in g.incident(post))
    return g.subgraph(keep)


def community_color(cid: int) -> str:
    hue = (cid * 137.50776405003785) % 360.0
    r, gr, b = colorsys.hls_to_rgb(hue / 360.0, 0.5, 0.65)
    return f"#{round(r * 255):02x}{round(gr * 255):02x}{round(b * 255):02x}"


def render_svg(
    g: WeightedGraph,
    layout: LayoutResult,
    partition: CommunityPartition | None = None,
    path: str | Path | None = None,
    label: Callable[[NodeId], str] | None = None,
) -> str:
    """Write (and return) an SVG 1.1 drawing of ``g`` at the given positions."""
    missing = [v for v in g.nodes if v not in layout.positions]
    if missing:
        raise ValueError(f"layout lacks {len(missing)} node(s), e.g. {missing[0]}")
    label = label or str
    strength = {v: sum(w for _, w in g.incident(v)) for v in g.nodes}
    lo = min(strength.values(), default=0.0)
    hi = max(strength.values(), default=0.0)

    def radius(v: NodeId) -> float:
        return 2.0 if hi == lo else 2.0 + 18.0 * (strength[v] - lo) / (hi - lo)

    xs = [layout.positions[v][0] for v in g.nodes]
    ys = [layout.positions[v][1] for v in g.nodes]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 0.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 0.0)
    span = max(x1 - x0, y1 - y0) or 1.0
    margin = 0.05 * span
    vb = (x0 - margin, y0 - margin, (x1 - x0) + 2 * margin or 1.0, (y1 - y0) + 2 * margin or 1.0)

    wmax = max((w for _, _, w in g.edges()), default=1.0)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{vb[0]:.3f} {vb[1]:.3f} {vb[2]:.3f} {vb[3]:.3f}">',
        '<g id="edges" stroke="#888888">',
    ]
    for u, v, w in g.edges():
        (ax, ay), (bx, by) = layout.positions[u], layout.positions[v]
        out.append(
            f'<line x1="{ax:.3f}" y1="{ay:.3f}" x2="{bx:.3f}" y2="{by:.3f}" stroke-opacity="{0.8 * w / wmax:.3f}"/>'
        )
    out.append("</g>")
    out.append('<g id="nodes">')
    for v in g.nodes:
        cx, cy = layout.positions[v]
        if partition is not None and v in partition.assignment:
            fill = community_color(partition.assignment[v])
        else:
            fill = "#808080"
        out.append(
            f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{radius(v):.3f}" fill="{fill}">'
            f"<title>{escape(label(v))}</title></circle>"
        )
    out.append("</g>")
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text
