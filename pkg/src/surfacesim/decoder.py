"""Window decoding: detection events -> matching -> corrections -> verdict.

The X and Z graphs are decoded independently.  Real detection events are
matched against each other or against their nearest spatial boundary;
the matching minimizes total separation under the chosen metric.

The match graph follows the virtual-twin construction: every real event
gets a virtual partner at its boundary weight, virtual nodes pair among
themselves at zero weight, and real-real edges heavier than the sum of
the two boundary weights are pruned (they can never improve an optimal
matching).  After pruning the graph splits into small connected
components which are solved exactly: clusters up to a size cutoff by
dynamic programming over subsets, larger ones by the blossom solver.
Both routes return the same optimum as blossom on the full graph.

Corrections walk a canonical staircase (vertical leg then horizontal
leg) between matched stabilizers, or straight out of the recorded
boundary side; any such chain is homologically equivalent to the
maximum-probability path, so the failure verdict is unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .edge_analysis import EdgeClassTable
from .lattice import Lattice
from .matching import MatchGraph, Matching, mwpm
from .metric import LinkGraph, MetricCache
from .sim import PauliFrame, SyndromeHistory

DP_MAX_NODES = 12
PRUNE_EPS = 1e-9


@dataclass
class DecodeOutcome:
    """Matched pairs, applied corrections and the logical verdict."""

    matches: dict[str, list[tuple]]
    corrections: dict[str, np.ndarray]  # data-cell flip plane per graph
    logical_x_failed: bool
    logical_z_failed: bool
    residual: dict[str, np.ndarray] | None = None


class Decoder:
    """Reusable decoder for one (lattice, schedule, model, metric) setup.

    Construction precomputes, per graph, the pair-weight table
    wtab[a, b, dt] over all stabilizer pairs within pruning reach and the
    per-stabilizer boundary weights, so decoding a window only does table
    lookups and small exact matchings.
    """

    def __init__(self, table: EdgeClassTable, metric: str = "dmax"):
        self.table = table
        self.lattice = table.lattice
        self.metric = metric
        self.caches = {g: MetricCache(table, g, metric) for g in ("x", "z")}
        self._reach = {g: self._max_reach(g) for g in ("x", "z")}
        from . import _kernels
        self._kernels = _kernels if _kernels.HAVE_NUMBA else None
        self._arrays = {g: self._precompute(g) for g in ("x", "z")}

    def _max_reach(self, graph: str) -> int:
        """Chebyshev-distance cutoff beyond which real-real edges are
        always pruned.  One link moves at most one sublattice unit per
        axis, so a pair at offset L needs at least L links."""
        if self.metric == "manhattan":
            return self.lattice.distance + 1
        probs = [cls.probability for cls in self.table.pair_classes[graph].values()
                 if cls.probability > 0.0]
        if not probs:
            return 1
        w_min = -math.log(max(probs))
        b_max = max(self.caches[graph].boundary_weight(self.lattice.index(c))[0]
                    for c in self.lattice.stabilizers(graph))
        return max(1, int(math.ceil(2.0 * b_max / w_min)))

    def _precompute(self, graph: str) -> dict:
        lat = self.lattice
        cache = self.caches[graph]
        stabs = lat.stabilizers(graph)
        S = len(stabs)
        cells = np.array([lat.index(c) for c in stabs], dtype=np.int32)
        stab_of_cell = np.full(lat.size * lat.size, -1, dtype=np.int32)
        for a, c in enumerate(cells):
            stab_of_cell[c] = a
        sub = np.array([lat.sublattice_coord(c) for c in stabs], dtype=np.int32)
        bw = [cache.boundary_weight(int(c)) for c in cells]
        bvals = np.array([w for w, _ in bw], dtype=np.float64)
        bsides = [side for _, side in bw]
        reach = self._reach[graph]

        wtab = np.full((S, S, reach + 1), np.inf, dtype=np.float64)
        if self.metric == "dmax":
            cutoff = 2.0 * float(bvals.max()) + 1e-9
            lg = LinkGraph(self.table, graph)
            import heapq
            for a in range(S):
                src = (int(cells[a]), 0)
                dist = {src: 0.0}
                heap = [(0.0, src)]
                while heap:
                    d, node = heapq.heappop(heap)
                    if d > dist.get(node, math.inf) or d > cutoff:
                        continue
                    cell, t = node
                    if t >= 0:
                        b = stab_of_cell[cell]
                        if 0 <= t <= reach and d < wtab[a, b, t]:
                            wtab[a, b, t] = d
                    for other, prob in lg.neighbors(node):
                        nd = d - math.log(prob)
                        if nd <= cutoff and nd < dist.get(other, math.inf):
                            dist[other] = nd
                            heapq.heappush(heap, (nd, other))
        else:
            w_min = 0.0
            if self.metric != "manhattan":
                probs = [cls.probability
                         for cls in self.table.pair_classes[graph].values()
                         if cls.probability > 0.0]
                w_min = -math.log(max(probs)) if probs else 1.0
            for a in range(S):
                for b in range(S):
                    cheb = max(abs(int(sub[a, 0]) - int(sub[b, 0])),
                               abs(int(sub[a, 1]) - int(sub[b, 1])))
                    if cheb > reach:
                        continue
                    if not math.isfinite(bvals[a] + bvals[b]):
                        continue  # zero-probability model: never matched
                    for dt in range(reach + 1):
                        if a == b and dt == 0:
                            continue
                        links_lb = max(cheb, dt)
                        if self.metric != "manhattan" and \
                                links_lb * w_min >= bvals[a] + bvals[b]:
                            continue  # pruned anyway; leave inf
                        wtab[a, b, dt] = cache.pair_weight(
                            int(cells[a]), 0, int(cells[b]), dt)
        dir_code = {"left": 0, "right": 1, "top": 2, "bottom": 3}
        bdirs = np.array([dir_code[s] for s in bsides], dtype=np.int32)
        return {"cells": cells, "stab_of_cell": stab_of_cell,
                "sub_a": sub[:, 0].copy(), "sub_b": sub[:, 1].copy(),
                "bvals": bvals, "bsides": bsides, "bdirs": bdirs,
                "wtab": wtab, "reach": reach}

    def decode(self, history: SyndromeHistory, frame: PauliFrame,
               verify: bool = False, collect_matches: bool = True) -> DecodeOutcome:
        matches: dict[str, list[tuple]] = {}
        corrections: dict[str, np.ndarray] = {}
        size = self.lattice.size
        for graph in ("x", "z"):
            corr = np.zeros(size * size, dtype=np.uint8)
            if self._kernels is not None:
                pu, pv, bc, bdir, meta = self._match_events_fast(
                    history, graph, collect=collect_matches)
                self._kernels.apply_corrections(size, pu, pv, bc, bdir, corr)
                if collect_matches:
                    events, pairs, bd = meta
                    matches[graph] = [(events[u], events[v]) for u, v in pairs]
                    matches[graph] += [(events[u], side) for u, side in bd]
                else:
                    matches[graph] = None
            else:
                events = _events_of_graph(history, graph)
                pairs, bd = self._match_graph_events(graph, events)
                matches[graph] = [(events[u], events[v]) for u, v in pairs]
                for u, v in pairs:
                    _staircase_flip(self.lattice, corr, events[u][0], events[v][0])
                for u, side in bd:
                    _boundary_flip(self.lattice, corr, events[u][0], side)
                    matches[graph].append((events[u], side))
            corrections[graph] = corr

        res_x = frame.x.copy()
        res_z = frame.z.copy()
        res_x ^= corrections["z"]  # the z graph tracks data X errors
        res_z ^= corrections["x"]
        lat = self.lattice
        lx = [lat.index(c) for c in lat.logical_x_support]
        lz = [lat.index(c) for c in lat.logical_z_support]
        x_failed = bool(int(res_z[lx].sum()) % 2)
        z_failed = bool(int(res_x[lz].sum()) % 2)

        if verify:
            _assert_trivial_syndrome(lat, res_x, res_z)

        return DecodeOutcome(
            matches=matches, corrections=corrections,
            logical_x_failed=x_failed, logical_z_failed=z_failed,
            residual={"x": res_x, "z": res_z})

    def _match_events_fast(self, history: SyndromeHistory, graph: str,
                           collect: bool = True):
        """Kernel route.  Returns correction arrays (pair cell endpoints,
        boundary cells and exit directions) plus (events, pairs, bd)
        metadata when collect is set."""
        arrays = self._arrays[graph]
        signs = history.signs[graph]
        changed = (signs[:, 1:] != signs[:, :-1])
        t_idx, a_idx = np.nonzero(changed.T)  # sorted by time
        stabs = a_idx.astype(np.int32)
        ts = (t_idx + 1).astype(np.int32)
        cells = arrays["cells"]
        bdirs = arrays["bdirs"]

        pair_u, pair_v, bd_idx, n_pairs, n_bd = self._kernels.solve_components(
            stabs, ts, arrays["wtab"], arrays["bvals"], arrays["reach"],
            arrays["sub_a"], arrays["sub_b"], PRUNE_EPS, 1e-12, DP_MAX_NODES)
        pu = pair_u[:n_pairs]
        pv = pair_v[:n_pairs]
        bn = bd_idx[:n_bd]
        pu_cell = cells[stabs[pu]]
        pv_cell = cells[stabs[pv]]
        bc = cells[stabs[bn]]
        bdir = bdirs[stabs[bn]]
        if not collect:
            return pu_cell, pv_cell, bc, bdir, None
        events = [(int(cells[a]), int(t) + 1) for a, t in zip(a_idx, t_idx)]
        pairs = [(int(u), int(v)) for u, v in zip(pu, pv)]
        bsides = arrays["bsides"]
        bd_meta = [(int(u), bsides[stabs[u]]) for u in bn]
        return pu_cell, pv_cell, bc, bdir, (events, pairs, bd_meta)

    def _match_graph_events(self, graph: str, events: list[tuple[int, int]]):
        """Match events of one graph; returns (real pairs, boundary picks)."""
        k = len(events)
        if k == 0:
            return [], []
        cache = self.caches[graph]
        lat = self.lattice
        bweight = []
        bside = []
        for cell, _t in events:
            w, side = cache.boundary_weight(cell)
            bweight.append(w)
            bside.append(side)
        if k == 1:
            return [], [(0, bside[0])]

        reach = self._reach[graph]
        sub = [lat.sublattice_coord(lat.cell(c)) for c, _ in events]
        order = sorted(range(k), key=lambda u: events[u][1])
        edges: dict[tuple[int, int], float] = {}
        adj: dict[int, list[int]] = {u: [] for u in range(k)}
        for oi, u in enumerate(order):
            cu, tu = events[u]
            for v in order[oi + 1:]:
                cv, tv = events[v]
                if tv - tu > reach:
                    break
                if (abs(sub[u][0] - sub[v][0]) > reach or
                        abs(sub[u][1] - sub[v][1]) > reach):
                    continue
                w = cache.pair_weight(cu, tu, cv, tv)
                if w < bweight[u] + bweight[v] - PRUNE_EPS:
                    edges[(min(u, v), max(u, v))] = w
                    adj[u].append(v)
                    adj[v].append(u)

        pairs: list[tuple[int, int]] = []
        boundary: list[tuple[int, str]] = []
        for comp in _components(k, adj):
            if len(comp) == 1:
                u = comp[0]
                boundary.append((u, bside[u]))
                continue
            local_pairs, local_bd = _solve_component(comp, edges, bweight)
            pairs.extend(local_pairs)
            boundary.extend((u, bside[u]) for u in local_bd)
        return pairs, boundary


def _events_of_graph(history: SyndromeHistory, graph: str) -> list[tuple[int, int]]:
    """(flat_cell, t) detection events of one graph, in scan order."""
    signs = history.signs[graph]
    lat = history.lattice
    stabs = history.lattice.stabilizers(graph)
    changed = signs[:, 1:] != signs[:, :-1]
    return [(lat.index(stabs[a]), int(t) + 1) for a, t in zip(*np.nonzero(changed))]


def _components(k: int, adj: dict[int, list[int]]) -> list[list[int]]:
    seen = [False] * k
    out = []
    for start in range(k):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    stack.append(v)
        out.append(comp)
    return out


def _solve_component(comp: list[int], edges: dict[tuple[int, int], float],
                     bweight: list[float]):
    """Exact minimum of sum(pair weights) + sum(boundary weights of the
    unpaired), over all pairings within one component."""
    k = len(comp)
    if k == 2:
        u, v = comp
        w = edges.get((min(u, v), max(u, v)), math.inf)
        if w <= bweight[u] + bweight[v]:
            return [(u, v)], []
        return [], [u, v]
    if k <= DP_MAX_NODES:
        return _solve_dp(comp, edges, bweight)
    return _solve_blossom(comp, edges, bweight)


def _solve_dp(comp: list[int], edges: dict[tuple[int, int], float],
              bweight: list[float]):
    k = len(comp)
    wmat = [[math.inf] * k for _ in range(k)]
    for a in range(k):
        for b in range(a + 1, k):
            u, v = comp[a], comp[b]
            w = edges.get((min(u, v), max(u, v)))
            if w is not None:
                wmat[a][b] = wmat[b][a] = w
    full = 1 << k
    dp = [math.inf] * full
    choice: list = [None] * full
    dp[0] = 0.0
    for mask in range(1, full):
        a = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << a)
        best = dp[rest] + bweight[comp[a]]
        pick = -1
        row = wmat[a]
        m = rest
        while m:
            b = (m & -m).bit_length() - 1
            m &= m - 1
            w = row[b]
            if w < math.inf:
                cand = dp[rest ^ (1 << b)] + w
                if cand < best:
                    best = cand
                    pick = b
        dp[mask] = best
        choice[mask] = pick
    pairs = []
    bd = []
    mask = full - 1
    while mask:
        a = (mask & -mask).bit_length() - 1
        pick = choice[mask]
        if pick < 0:
            bd.append(comp[a])
            mask ^= 1 << a
        else:
            pairs.append((comp[a], comp[pick]))
            mask ^= (1 << a) | (1 << pick)
    return pairs, bd


def _solve_blossom(comp: list[int], edges: dict[tuple[int, int], float],
                   bweight: list[float]):
    """Reduced form: maximize the gains (b_u + b_v - w_uv) of matched pairs.

    A maximum-weight (not perfect) matching over positive gains minimizes
    sum(pair weights) + sum(boundary weights of the unmatched), exactly the
    virtual-twin objective, without the zero-weight twin clique.
    """
    from .matching import _max_weight_matching
    k = len(comp)
    redges = []
    for a in range(k):
        for b in range(a + 1, k):
            u, v = comp[a], comp[b]
            w = edges.get((min(u, v), max(u, v)))
            if w is not None:
                redges.append((a, b, bweight[u] + bweight[v] - w))
    mate = _max_weight_matching(k, redges, maxcardinality=False)
    pairs = []
    bd = []
    for a in range(k):
        if mate[a] == -1:
            bd.append(comp[a])
        elif a < mate[a]:
            pairs.append((comp[a], comp[mate[a]]))
    return pairs, bd


def build_match_graph(events: list[tuple[int, int]], cache: MetricCache,
                      prune: bool = True) -> tuple[MatchGraph, list[str]]:
    """Augmented match graph over one graph type's events.

    Nodes 0..k-1 are the real events, k..2k-1 their boundary twins; twin
    pairs carry zero weight so unused twins absorb each other.  Returns
    the graph and the boundary side label per real node.
    """
    k = len(events)
    graph = MatchGraph(n_nodes=2 * k)
    sides = []
    bweight = []
    for cell, _t in events:
        w, side = cache.boundary_weight(cell)
        bweight.append(w)
        sides.append(side)
    for u in range(k):
        cu, tu = events[u]
        for v in range(u + 1, k):
            cv, tv = events[v]
            w = cache.pair_weight(cu, tu, cv, tv)
            if prune and w >= bweight[u] + bweight[v] - PRUNE_EPS:
                continue
            graph.add_edge(u, v, w)
    for u in range(k):
        graph.add_edge(u, k + u, bweight[u])
    for u in range(k):
        for v in range(u + 1, k):
            graph.add_edge(k + u, k + v, 0.0)
    return graph, sides


def corrections_from_matching(matching: Matching, events: list[tuple[int, int]],
                              sides: list[str], lattice: Lattice) -> np.ndarray:
    """Data-qubit flip plane realizing a matching from build_match_graph."""
    k = len(events)
    corr = np.zeros(lattice.size * lattice.size, dtype=np.uint8)
    for u, v in matching.pairs:
        if u < k and v < k:
            _staircase_flip(lattice, corr, events[u][0], events[v][0])
        elif u < k <= v:
            _boundary_flip(lattice, corr, events[u][0], sides[u])
        elif v < k <= u:
            _boundary_flip(lattice, corr, events[v][0], sides[v])
    return corr


def _staircase_flip(lattice: Lattice, corr: np.ndarray,
                    cell_u: int, cell_v: int) -> None:
    """Toggle data qubits along the vertical-then-horizontal lattice path."""
    size = lattice.size
    i1, j1 = lattice.cell(cell_u)
    i2, j2 = lattice.cell(cell_v)
    for i in range(min(i1, i2), max(i1, i2), 2):
        corr[(i + 1) * size + j1] ^= 1
    for j in range(min(j1, j2), max(j1, j2), 2):
        corr[i2 * size + (j + 1)] ^= 1


def _boundary_flip(lattice: Lattice, corr: np.ndarray, cell: int, side: str) -> None:
    size = lattice.size
    i, j = lattice.cell(cell)
    if side == "left":
        cols = range(j - 1, -1, -2)
        for jj in cols:
            corr[i * size + jj] ^= 1
    elif side == "right":
        for jj in range(j + 1, size, 2):
            corr[i * size + jj] ^= 1
    elif side == "top":
        for ii in range(i - 1, -1, -2):
            corr[ii * size + j] ^= 1
    elif side == "bottom":
        for ii in range(i + 1, size, 2):
            corr[ii * size + j] ^= 1
    else:
        raise ValueError(f"unknown boundary side {side!r}")


def _assert_trivial_syndrome(lattice: Lattice, res_x: np.ndarray,
                             res_z: np.ndarray) -> None:
    for stab in lattice.z_stabilizers:
        parity = sum(int(res_x[lattice.index(q)]) for q in lattice.supports[stab]) % 2
        if parity:
            raise AssertionError(f"residual X syndrome at {stab}")
    for stab in lattice.x_stabilizers:
        parity = sum(int(res_z[lattice.index(q)]) for q in lattice.supports[stab]) % 2
        if parity:
            raise AssertionError(f"residual Z syndrome at {stab}")


def decode_window(history: SyndromeHistory, frame: PauliFrame,
                  table: EdgeClassTable, metric: str = "dmax",
                  verify: bool = False) -> DecodeOutcome:
    """One-shot convenience wrapper around Decoder."""
    return Decoder(table, metric).decode(history, frame, verify=verify)
