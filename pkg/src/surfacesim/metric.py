"""Separation measures between detection events.

All measures operate on the space-time link graph implied by an
EdgeClassTable: nodes are (syndrome qubit, round) points of one graph
type, edges carry the link probabilities, and a path's probability is
the product of its link probabilities.

* manhattan: the legacy |di| + |dj| + |dt| count in unit stabilizer
  spacing, kept as a comparison baseline.
* d_max: -ln of the single most probable connecting path (a shortest
  path under additive -ln(p) weights).
* d_n: -ln of the summed probability of all simple paths using the
  minimum number of links l, plus paths up to l+n links.
* boundary_distance: cheapest d_max-style escape to a spatial boundary.

Paths never repeat a node: a repeated node corresponds to error pairs
that cancel rather than an error chain.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .edge_analysis import EdgeClassTable

MAX_EXTRA_LINKS = 3  # largest supported n for d_n


@dataclass(frozen=True)
class PathSum:
    """Total probability over an admitted path set."""

    value: float
    path_count: int
    max_links: int


class LinkGraph:
    """Neighbor iteration over (cell, t) nodes for one graph type.

    Rounds outside [t_min, t_max] do not exist; by default the graph is
    unbounded in time, which models the interior of a long window.
    """

    def __init__(self, table: EdgeClassTable, graph: str,
                 t_min: float = -math.inf, t_max: float = math.inf):
        self.table = table
        self.graph = graph
        self.t_min = t_min
        self.t_max = t_max

    def neighbors(self, node: tuple[int, int]):
        cell, t = node
        for other, dt, prob in self.table.neighbors(self.graph, cell):
            t2 = t + dt
            if self.t_min <= t2 <= self.t_max and prob > 0.0:
                yield (other, t2), prob

    def boundary_link(self, cell: int):
        cls = self.table.boundary(self.graph, cell)
        if cls is None or cls.probability <= 0.0:
            return None
        return cls.probability, cls.side


def manhattan(s1: tuple[int, int, int], s2: tuple[int, int, int]) -> float:
    """Legacy separation |i1-i2| + |j1-j2| + |t1-t2| in unit spacing."""
    return float(abs(s1[0] - s2[0]) + abs(s1[1] - s2[1]) + abs(s1[2] - s2[2]))


def d_max(graph: LinkGraph, s1: tuple[int, int], s2: tuple[int, int]) -> float:
    """-ln(probability) of the single most probable path between two nodes.

    Nodes are (flat_cell, t).  Dijkstra over -ln(p) weights with early
    exit at the target.
    """
    if s1 == s2:
        raise ValueError("s1 and s2 must differ")
    dist: dict[tuple[int, int], float] = {s1: 0.0}
    heap = [(0.0, s1)]
    while heap:
        d, node = heapq.heappop(heap)
        if node == s2:
            return d
        if d > dist.get(node, math.inf):
            continue
        for other, prob in graph.neighbors(node):
            nd = d - math.log(prob)
            if nd < dist.get(other, math.inf):
                dist[other] = nd
                heapq.heappush(heap, (nd, other))
    raise ValueError(f"nodes {s1} and {s2} are not connected")


def min_links(graph: LinkGraph, s1, s2, limit: int = 64) -> int:
    """Fewest links connecting two nodes (breadth-first search)."""
    if s1 == s2:
        return 0
    frontier = {s1}
    seen = {s1}
    for depth in range(1, limit + 1):
        nxt = set()
        for node in frontier:
            for other, _ in graph.neighbors(node):
                if other == s2:
                    return depth
                if other not in seen:
                    seen.add(other)
                    nxt.add(other)
        frontier = nxt
        if not frontier:
            break
    raise ValueError(f"no path of <= {limit} links between {s1} and {s2}")


def path_sum(graph: LinkGraph, s1, s2, max_links: int,
             max_paths: int = 2_000_000) -> PathSum:
    """Sum of path probabilities over simple paths of <= max_links links."""
    total = 0.0
    count = 0
    on_path = {s1}

    def dfs(node, prob, links_left):
        nonlocal total, count
        for other, p in graph.neighbors(node):
            if other == s2:
                total += prob * p
                count += 1
                if count > max_paths:
                    raise RuntimeError(
                        f"path enumeration exceeded {max_paths} paths")
            elif links_left > 1 and other not in on_path:
                on_path.add(other)
                dfs(other, prob * p, links_left - 1)
                on_path.discard(other)

    dfs(s1, 1.0, max_links)
    return PathSum(value=total, path_count=count, max_links=max_links)


def d_n(graph: LinkGraph, s1, s2, n: int) -> tuple[float, int]:
    """-ln of the probability summed over minimum-length and up to
    l+n-link simple paths; also returns the admitted path count."""
    if not 0 <= n <= MAX_EXTRA_LINKS:
        raise ValueError(f"n must be in [0, {MAX_EXTRA_LINKS}]")
    l = min_links(graph, s1, s2)
    ps = path_sum(graph, s1, s2, l + n)
    return -math.log(ps.value), ps.path_count


def boundary_distance(graph: LinkGraph, s: tuple[int, int]) -> tuple[float, str]:
    """Cheapest escape from node s to a spatial boundary of its graph type.

    Returns (-ln probability of the best escape chain, boundary side).
    """
    best = math.inf
    best_side = None
    dist: dict[tuple[int, int], float] = {s: 0.0}
    heap = [(0.0, s)]
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist.get(node, math.inf):
            continue
        if d >= best:
            break
        link = graph.boundary_link(node[0])
        if link is not None:
            w = d - math.log(link[0])
            if w < best:
                best, best_side = w, link[1]
        for other, prob in graph.neighbors(node):
            nd = d - math.log(prob)
            if nd < dist.get(other, math.inf) and nd < best:
                dist[other] = nd
                heapq.heappush(heap, (nd, other))
    if best_side is None:
        # Zero-probability model: nothing is reachable.  Report the
        # geometrically nearest side at infinite weight; no detection
        # events can occur in this regime, so the weight is never used.
        lat = graph.table.lattice
        a, b = lat.sublattice_coord(lat.cell(s[0]))
        if graph.graph == "z":
            side = "left" if b + 1 <= lat.distance - 1 - b else "right"
        else:
            side = "top" if a + 1 <= lat.distance - 1 - a else "bottom"
        return math.inf, side
    return best, best_side


class MetricCache:
    """Memoized pair and boundary weights for decoding.

    Pair weights depend only on (cell_u, cell_v, dt) because the circuit
    is periodic in time; boundary weights only on the cell.  Weights are
    evaluated on the unbounded-time graph, which matches the window
    interior exactly.
    """

    def __init__(self, table: EdgeClassTable, graph: str, metric: str):
        if metric not in ("manhattan", "dmax", "d0", "d1", "d2"):
            raise ValueError(f"unknown metric {metric!r}")
        self.table = table
        self.graph_name = graph
        self.metric = metric
        self.graph = LinkGraph(table, graph)
        self.lattice = table.lattice
        self._pair: dict[tuple[int, int, int], float] = {}
        self._boundary: dict[int, tuple[float, str]] = {}
        # Per-source link-count balls for the d_n metrics: one BFS serves
        # every target, instead of one search per pair.
        self._balls: dict[int, dict[tuple[int, int], int]] = {}

    def _min_links(self, cell_u: int, cell_v: int, dt: int) -> int:
        ball = self._balls.get(cell_u)
        if ball is None:
            radius = 2 * self.lattice.distance + 4
            ball = {(cell_u, 0): 0}
            frontier = [(cell_u, 0)]
            for depth in range(1, radius + 1):
                nxt = []
                for node in frontier:
                    for other, _ in self.graph.neighbors(node):
                        if other not in ball:
                            ball[other] = depth
                            nxt.append(other)
                frontier = nxt
            self._balls[cell_u] = ball
        got = ball.get((cell_v, dt))
        if got is None:
            return min_links(self.graph, (cell_u, 0), (cell_v, dt))
        return got

    def pair_weight(self, cell_u: int, t_u: int, cell_v: int, t_v: int) -> float:
        dt = t_v - t_u
        if dt < 0:
            cell_u, cell_v, dt = cell_v, cell_u, -dt
        if self.metric == "manhattan":
            su = self.lattice.sublattice_coord(self.lattice.cell(cell_u))
            sv = self.lattice.sublattice_coord(self.lattice.cell(cell_v))
            return manhattan((*su, 0), (*sv, dt))
        key = (cell_u, cell_v, dt)
        w = self._pair.get(key)
        if w is None:
            s1, s2 = (cell_u, 0), (cell_v, dt)
            if self.metric == "dmax":
                w = d_max(self.graph, s1, s2)
            else:
                l = self._min_links(cell_u, cell_v, dt)
                ps = path_sum(self.graph, s1, s2, l + int(self.metric[1]))
                w = -math.log(ps.value)
            self._pair[key] = w
        return w

    def boundary_weight(self, cell: int) -> tuple[float, str]:
        got = self._boundary.get(cell)
        if got is None:
            if self.metric == "manhattan":
                i, j = self.lattice.cell(cell)
                a, b = self.lattice.sublattice_coord((i, j))
                if self.graph_name == "z":
                    n_cols = self.lattice.distance - 1
                    left, right = b + 1.0, float(n_cols - b)
                    got = (left, "left") if left <= right else (right, "right")
                else:
                    n_rows = self.lattice.distance - 1
                    top, bottom = a + 1.0, float(n_rows - a)
                    got = (top, "top") if top <= bottom else (bottom, "bottom")
            else:
                got = boundary_distance(self.graph, (cell, 0))
            self._boundary[cell] = got
        return got
