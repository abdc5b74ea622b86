"""Exact point-to-point searches used as references and latency baselines."""

from __future__ import annotations

import heapq
import math
import time
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graph import Graph


class WeightedGraphError(ValueError):
    """BFS variants need unit weights; use dijkstra_distance instead."""


@dataclass
class SearchStats:
    settled_nodes: int = 0
    edge_scans: int = 0
    wall_time: float = 0.0


class SearchResult(NamedTuple):
    distance: int | float | None
    stats: SearchStats
    path: list[int] | None


def _require_unweighted(g: Graph) -> None:
    if g.weighted:
        raise WeightedGraphError("graph has edge weights; use dijkstra_distance")


def _walk(parent: dict, v: int) -> list[int]:
    out = [v]
    while parent[v] is not None:
        v = parent[v]
        out.append(v)
    return out


def bfs_distance(g: Graph, s: int, t: int) -> SearchResult:
    """Single-direction BFS that stops as soon as ``t`` is discovered."""
    _require_unweighted(g)
    t0 = time.perf_counter()
    stats = SearchStats()
    if s == t:
        stats.settled_nodes = 1
        stats.wall_time = time.perf_counter() - t0
        return SearchResult(0, stats, [s])
    adj = g.adj
    parent = {s: None}
    dist = {s: 0}
    queue = deque([s])
    scans = 0
    while queue:
        x = queue.popleft()
        dx = dist[x] + 1
        nbrs = adj[x]
        scans += len(nbrs)
        for y in nbrs:
            if y not in dist:
                dist[y] = dx
                parent[y] = x
                if y == t:
                    stats.settled_nodes, stats.edge_scans = len(dist), scans
                    stats.wall_time = time.perf_counter() - t0
                    return SearchResult(dx, stats, _walk(parent, t)[::-1])
                queue.append(y)
    stats.settled_nodes, stats.edge_scans = len(dist), scans
    stats.wall_time = time.perf_counter() - t0
    return SearchResult(None, stats, None)


def bidirectional_bfs(g: Graph, s: int, t: int) -> SearchResult:
    """Level-synchronous BFS from both ends, always growing the smaller frontier.

    The visited sets stay disjoint until the first crossing edge, so the
    first meeting found while expanding a full level is already optimal.
    """
    _require_unweighted(g)
    t0 = time.perf_counter()
    stats = SearchStats()
    if s == t:
        stats.settled_nodes = 1
        stats.wall_time = time.perf_counter() - t0
        return SearchResult(0, stats, [s])
    adj = g.adj
    par_s, par_t = {s: None}, {t: None}
    dep_s, dep_t = {s: 0}, {t: 0}
    front_s, front_t = [s], [t]
    scans = 0
    meet = None
    while front_s and front_t and meet is None:
        if len(front_s) <= len(front_t):
            front, par, dep, other = front_s, par_s, dep_s, dep_t
        else:
            front, par, dep, other = front_t, par_t, dep_t, dep_s
        nxt = []
        best = None
        for x in front:
            dx = dep[x] + 1
            nbrs = adj[x]
            scans += len(nbrs)
            for y in nbrs:
                if y in other:
                    cand = dx + other[y]
                    if best is None or cand < best[0]:
                        best = (cand, x, y)
                elif y not in dep:
                    dep[y] = dx
                    par[y] = x
                    nxt.append(y)
            if best is not None:
                break
        if best is not None:
            meet = best
        elif front is front_s:
            front_s = nxt
        else:
            front_t = nxt
    stats.settled_nodes = len(dep_s) + len(dep_t)
    stats.edge_scans = scans
    if meet is None:
        stats.wall_time = time.perf_counter() - t0
        return SearchResult(None, stats, None)
    dist, x, y = meet
    # x was expanded on the current side, y belongs to the opposite side
    if par is par_s:
        path = _walk(par_s, x)[::-1] + _walk(par_t, y)
    else:
        path = _walk(par_s, y)[::-1] + _walk(par_t, x)
    stats.wall_time = time.perf_counter() - t0
    return SearchResult(dist, stats, path)


def dijkstra_distance(g: Graph, s: int, t: int) -> SearchResult:
    """Dijkstra with a binary heap; stops when ``t`` is settled.

    Entries are pushed only on strict improvement, so a popped entry is stale
    exactly when its key exceeds the best known distance.
    """
    t0 = time.perf_counter()
    stats = SearchStats()
    weighted = g.weighted
    nbr_lists = g.wadj if weighted else g.adj
    pop, push = heapq.heappop, heapq.heappush
    best = {s: 0}
    parent = {s: None}
    heap = [(0, s)]
    settled = scans = 0
    while heap:
        d, x = pop(heap)
        if d > best[x]:
            continue
        settled += 1
        if x == t:
            stats.settled_nodes, stats.edge_scans = settled, scans
            stats.wall_time = time.perf_counter() - t0
            return SearchResult(float(d) if weighted else d, stats, _walk(parent, t)[::-1])
        nbrs = nbr_lists[x]
        scans += len(nbrs)
        if weighted:
            for y, w in nbrs:
                nd = d + w
                if nd < best.get(y, math.inf):
                    best[y] = nd
                    parent[y] = x
                    push(heap, (nd, y))
        else:
            nd = d + 1
            for y in nbrs:
                if nd < best.get(y, math.inf):
                    best[y] = nd
                    parent[y] = x
                    push(heap, (nd, y))
    stats.settled_nodes, stats.edge_scans = settled, scans
    stats.wall_time = time.perf_counter() - t0
    return SearchResult(None, stats, None)


SEARCHES = {
    "bfs": bfs_distance,
    "bidirectional": bidirectional_bfs,
    "dijkstra": dijkstra_distance,
}


def single_source_distances(g: Graph, s: int) -> np.ndarray:
    """Distances from ``s`` to all nodes; ``inf`` where unreachable."""
    n = g.n
    dist = np.full(n, math.inf)
    if not g.weighted:
        adj = g.adj
        seen = [False] * n
        seen[s] = True
        level = [s]
        d = 0
        while level:
            dist[level] = d
            d += 1
            nxt = []
            for x in level:
                for y in adj[x]:
                    if not seen[y]:
                        seen[y] = True
                        nxt.append(y)
            level = nxt
        return dist
    out = [math.inf] * n
    out[s] = 0.0
    heap = [(0.0, s)]
    wadj = g.wadj
    while heap:
        d, x = heapq.heappop(heap)
        if d > out[x]:
            continue
        for y, w in wadj[x]:
            nd = d + w
            if nd < out[y]:
                out[y] = nd
                heapq.heappush(heap, (nd, y))
    return np.array(out)


def all_pairs_reference(g: Graph, cap: int = 2000) -> np.ndarray:
    """Dense n x n distance matrix from n independent single-source searches."""
    if g.n > cap:
        raise ValueError(f"all-pairs reference limited to n <= {cap}, got n={g.n}")
    return np.vstack([single_source_distances(g, s) for s in range(g.n)]) if g.n else np.zeros((0, 0))


def path_length(g: Graph, path: list[int]) -> float:
    """Total weight of a walk; raises KeyError on a non-edge."""
    return sum(g.edge_weight(a, b) for a, b in zip(path, path[1:]))
