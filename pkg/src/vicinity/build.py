"""Offline phase: landmark sampling and per-node vicinity construction."""

from __future__ import annotations

import heapq
import logging
import math
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, connected_components

log = logging.getLogger(__name__)

NO_PARENT = -1


class BuildError(ValueError):
    pass


@dataclass(frozen=True)
class LandmarkSet:
    """Sampled landmarks plus each node's nearest landmark and its distance.

    ``radius`` holds ints for unweighted graphs and floats otherwise.
    """

    members: tuple[int, ...]
    nearest: list[int]
    radius: list

    def __post_init__(self):
        object.__setattr__(self, "member_set", frozenset(self.members))

    def __contains__(self, u: int) -> bool:
        return u in self.member_set

    def __len__(self) -> int:
        return len(self.members)


@dataclass(eq=False)
class VicinityTable:
    """Exact distances and tree parents from ``owner`` to every vicinity node.

    ``parent[v]`` is the neighbour of ``v`` preceding it on a shortest path
    from the owner; it always lies in the ball, so parent chains never leave
    the table. ``boundary`` is sorted.
    """

    owner: int
    dist: dict = field(default_factory=dict)
    parent: dict = field(default_factory=dict)
    ball_size: int = 0
    boundary: tuple[int, ...] = ()
    radius: float = 0

    def __post_init__(self):
        # set views for C-level intersection in the query path
        self.key_set = frozenset(self.dist)
        self.boundary_set = frozenset(self.boundary)

    def __len__(self) -> int:
        return len(self.dist)

    def __contains__(self, v: int) -> bool:
        return v in self.dist

    @property
    def entries(self) -> dict:
        return {v: (d, self.parent[v]) for v, d in self.dist.items()}

    @property
    def ball(self) -> set:
        return {v for v, d in self.dist.items() if d < self.radius}

    def __eq__(self, other) -> bool:
        if not isinstance(other, VicinityTable):
            return NotImplemented
        return (self.owner, self.dist, self.parent, self.ball_size, self.boundary) == (
            other.owner, other.dist, other.parent, other.ball_size, other.boundary)


@dataclass(eq=False)
class LandmarkTable:
    """Full single-source shortest-path tree from one landmark.

    Unreachable nodes have distance -1 (unweighted) or inf (weighted) and
    parent -1.
    """

    landmark: int
    dist: np.ndarray
    parent: np.ndarray

    def distance(self, v: int):
        d = self.dist[v]
        if self.dist.dtype.kind == "i":
            return None if d < 0 else int(d)
        return None if math.isinf(d) else float(d)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LandmarkTable):
            return NotImplemented
        return (self.landmark == other.landmark and np.array_equal(self.dist, other.dist)
                and np.array_equal(self.parent, other.parent))


@dataclass(eq=False)
class Oracle:
    graph: Graph
    alpha: float
    seed: int
    landmarks: LandmarkSet
    landmark_tables: dict[int, LandmarkTable]
    vicinities: list
    stats: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        """True when every node has a vicinity and every landmark a table."""
        return (all(v is not None for v in self.vicinities)
                and len(self.landmark_tables) == len(self.landmarks))

    def query(self, s: int, t: int, path: bool = False):
        from .query import query_distance, query_path
        return query_path(self, s, t) if path else query_distance(self, s, t)


def landmark_probability(degree: int, alpha: float, n: int) -> float:
    """Degree-proportional inclusion probability, clamped to 1."""
    return min(1.0, 2.0 * degree / (alpha * math.sqrt(n)))


def expected_landmark_count(g: Graph, alpha: float) -> float:
    return sum(landmark_probability(d, alpha, g.n) for d in g.degrees)


def sample_landmarks(g: Graph, alpha: float, seed: int) -> LandmarkSet:
    """Sample landmarks with probability ``min(1, 2 deg(u) / (alpha sqrt(n)))``.

    One uniform draw per node in id order, so for a fixed seed the sampled set
    shrinks monotonically as ``alpha`` grows. A component that draws no
    landmark gets its highest-degree node (smallest id on ties).
    """
    if not alpha > 0:
        raise BuildError(f"alpha must be positive, got {alpha}")
    n = g.n
    if n == 0:
        return LandmarkSet((), [], [])
    deg = np.diff(g.indptr)
    p = np.minimum(1.0, 2.0 * deg / (alpha * math.sqrt(n)))
    draws = np.random.default_rng(seed).random(n)
    chosen = set(np.flatnonzero(draws < p).tolist())

    comp, sizes = connected_components(g)
    covered = {comp[u] for u in chosen}
    if len(covered) < len(sizes):
        best: dict[int, int] = {}
        for u in range(n):
            c = comp[u]
            if c not in covered and (c not in best or deg[u] > deg[best[c]]):
                best[c] = u
        chosen.update(best.values())
    return landmarks_from_members(g, chosen)


def landmarks_from_members(g: Graph, members) -> LandmarkSet:
    """LandmarkSet for an explicitly chosen member set."""
    members = tuple(sorted(set(int(a) for a in members)))
    if any(not 0 <= a < g.n for a in members):
        raise BuildError("landmark id out of range")
    nearest, radius = _nearest_landmarks(g, members)
    if any(a < 0 for a in nearest):
        raise BuildError("every connected component needs at least one landmark")
    return LandmarkSet(members, nearest, radius)


def _nearest_landmarks(g: Graph, members) -> tuple[list[int], list]:
    """Multi-source sweep; ties go to the smallest landmark id."""
    n = g.n
    nearest = [-1] * n
    if not g.weighted:
        radius = [-1] * n
        queue = deque()
        for a in members:  # sorted: FIFO order then keeps each level sorted by landmark id
            nearest[a] = a
            radius[a] = 0
            queue.append(a)
        adj = g.adj
        while queue:
            x = queue.popleft()
            dx, lx = radius[x] + 1, nearest[x]
            for y in adj[x]:
                if radius[y] < 0:
                    radius[y] = dx
                    nearest[y] = lx
                    queue.append(y)
        return nearest, radius
    radius = [math.inf] * n
    heap = [(0.0, a, a) for a in members]
    heapq.heapify(heap)
    done = [False] * n
    wadj = g.wadj
    while heap:
        d, a, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        nearest[x] = a
        radius[x] = d
        for y, w in wadj[x]:
            if not done[y]:
                nd = d + w
                if nd < radius[y] or (nd == radius[y] and a < nearest[y]):
                    radius[y] = nd
                    nearest[y] = a
                    heapq.heappush(heap, (nd, a, y))
    return nearest, radius


def compute_boundary(g: Graph, vic: VicinityTable) -> tuple[int, ...]:
    """Vicinity nodes with at least one neighbour outside the vicinity."""
    adj = g.adj
    keys = vic.dist
    return tuple(sorted(v for v in keys if any(x not in keys for x in adj[v])))


def build_vicinity(g: Graph, u: int, landmarks: LandmarkSet) -> VicinityTable:
    """Vicinity of ``u``: its ball (nodes strictly closer than the nearest
    landmark) together with the ball's neighbours.

    On weighted graphs a ball neighbour is kept only when one of its shortest
    paths from ``u`` enters it directly from the ball.
    """
    r = landmarks.radius[u]
    if u in landmarks or r <= 0:
        return VicinityTable(owner=u)
    if g.weighted:
        return _weighted_vicinity(g, u, r)

    adj = g.adj
    dist = {u: 0}
    parent = {u: NO_PARENT}
    frontier = [u]
    ball_size = 0
    depth = 0
    while depth < r and frontier:
        ball_size += len(frontier)
        depth += 1
        nxt = []
        for x in frontier:
            for y in adj[x]:
                if y not in dist:
                    dist[y] = depth
                    parent[y] = x
                    nxt.append(y)
        frontier = nxt
    # ball nodes only have neighbours inside the vicinity; check the outer shell
    outer = frontier if depth == r else ()
    boundary = tuple(sorted(y for y in outer if any(z not in dist for z in adj[y])))
    return VicinityTable(owner=u, dist=dist, parent=parent, ball_size=ball_size, boundary=boundary, radius=r)


def _weighted_vicinity(g: Graph, u: int, r: float) -> VicinityTable:
    wadj = g.wadj
    best = {u: 0.0}
    par = {u: NO_PARENT}
    settled: dict[int, float] = {}
    ball: set[int] = set()
    pending: set[int] | None = None
    heap = [(0.0, u)]
    while heap:
        d, x = heapq.heappop(heap)
        if x in settled:
            continue
        if d >= r and pending is None:
            # ball complete; its neighbours must all settle before distances are exact
            pending = {y for b in ball for y, _ in wadj[b] if y not in ball}
        settled[x] = d
        if d < r:
            ball.add(x)
        elif pending is not None:
            pending.discard(x)
            if not pending:
                break
        for y, w in wadj[x]:
            if y in settled:
                continue
            nd = d + w
            old = best.get(y)
            if old is None or nd < old:
                best[y] = nd
                par[y] = x
                heapq.heappush(heap, (nd, y))

    dist = {}
    parent = {}
    for x in sorted(settled):
        if x in ball or par[x] in ball:
            dist[x] = settled[x]
            parent[x] = par[x]
    adj = g.adj
    boundary = tuple(sorted(v for v in dist if any(x not in dist for x in adj[v])))
    return VicinityTable(owner=u, dist=dist, parent=parent, ball_size=len(ball), boundary=boundary, radius=r)


def _bfs_tree(g: Graph, src: int) -> tuple[np.ndarray, np.ndarray]:
    """Level-synchronous BFS over the CSR arrays.

    Parents match a FIFO BFS that scans neighbours in sorted order: each node
    takes the first frontier node (in discovery order) adjacent to it.
    """
    n = g.n
    indptr, indices = g.indptr, g.indices
    dist = np.full(n, -1, dtype=np.int32)
    parent = np.full(n, NO_PARENT, dtype=np.int32)
    dist[src] = 0
    frontier = np.array([src], dtype=np.int64)
    depth = 0
    while len(frontier):
        depth += 1
        starts = indptr[frontier]
        counts = indptr[frontier + 1] - starts
        total = int(counts.sum())
        if not total:
            break
        owner = np.repeat(np.arange(len(frontier)), counts)
        offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        nbrs = indices[np.repeat(starts, counts) + offs]
        fresh = dist[nbrs] < 0
        nbrs, owner = nbrs[fresh], owner[fresh]
        if not len(nbrs):
            break
        uniq, first = np.unique(nbrs, return_index=True)
        order = np.sort(first)
        nxt = nbrs[order]
        dist[nxt] = depth
        parent[nxt] = frontier[owner[order]]
        frontier = nxt.astype(np.int64)
    return dist, parent


def _dijkstra_tree(g: Graph, src: int) -> tuple[np.ndarray, np.ndarray]:
    n = g.n
    dist = [math.inf] * n
    parent = [NO_PARENT] * n
    done = [False] * n
    dist[src] = 0.0
    heap = [(0.0, src)]
    wadj = g.wadj
    while heap:
        d, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        for y, w in wadj[x]:
            nd = d + w
            if nd < dist[y]:
                dist[y] = nd
                parent[y] = x
                heapq.heappush(heap, (nd, y))
    return np.array(dist, dtype=np.float64), np.array(parent, dtype=np.int32)


def build_landmark_table(g: Graph, a: int) -> LandmarkTable:
    dist, parent = (_dijkstra_tree if g.weighted else _bfs_tree)(g, a)
    return LandmarkTable(landmark=a, dist=dist, parent=parent)


def build_landmark_tables(g: Graph, landmarks: LandmarkSet, only=None) -> list[LandmarkTable]:
    """One full shortest-path tree per landmark (or per landmark in ``only``)."""
    members = landmarks.members if only is None else sorted(set(only) & landmarks.member_set)
    return [build_landmark_table(g, a) for a in members]


_worker_state: dict = {}


def _init_worker(g: Graph, landmarks: LandmarkSet) -> None:
    _worker_state["g"] = g
    _worker_state["lm"] = landmarks


def _build_chunk(nodes: list[int]) -> list[VicinityTable]:
    g, lm = _worker_state["g"], _worker_state["lm"]
    return [build_vicinity(g, u, lm) for u in nodes]


def build_vicinities(g: Graph, landmarks: LandmarkSet, nodes, parallelism: int = 1) -> list[VicinityTable]:
    nodes = list(nodes)
    if parallelism <= 1 or len(nodes) < 2:
        return [build_vicinity(g, u, landmarks) for u in nodes]
    size = max(1, len(nodes) // (parallelism * 4))
    chunks = [nodes[i:i + size] for i in range(0, len(nodes), size)]
    with ProcessPoolExecutor(max_workers=parallelism, initializer=_init_worker,
                             initargs=(g, landmarks)) as pool:
        out = []
        for part in pool.map(_build_chunk, chunks):  # map preserves chunk order
            out.extend(part)
    return out


def build_oracle(g: Graph, alpha: float = 4.0, seed: int = 0, parallelism: int = 1, nodes=None,
                 landmarks: LandmarkSet | None = None) -> Oracle:
    """Sample landmarks and build landmark tables and vicinities.

    With ``nodes`` only those nodes get vicinities, and only landmarks among
    them get tables; such a partial oracle answers queries between indexed
    nodes only. A precomputed ``landmarks`` set skips sampling.
    """
    if g.n == 0:
        raise BuildError("cannot build an oracle over an empty graph")
    if not alpha > 0:
        raise BuildError(f"alpha must be positive, got {alpha}")
    t0 = time.perf_counter()
    if landmarks is None:
        landmarks = sample_landmarks(g, alpha, seed)
    t1 = time.perf_counter()
    todo = range(g.n) if nodes is None else sorted(set(int(u) for u in nodes))
    tables = build_landmark_tables(g, landmarks, only=None if nodes is None else todo)
    t2 = time.perf_counter()
    vics = [None] * g.n
    for u, vic in zip(todo, build_vicinities(g, landmarks, todo, parallelism)):
        vics[u] = vic
    t3 = time.perf_counter()
    oracle = Oracle(graph=g, alpha=float(alpha), seed=int(seed), landmarks=landmarks,
                    landmark_tables={t.landmark: t for t in tables}, vicinities=vics)
    oracle.stats = build_stats(oracle)
    oracle.stats["build_seconds"] = round(t3 - t0, 6)
    oracle.stats["phase_seconds"] = {"landmarks": round(t1 - t0, 6), "landmark_tables": round(t2 - t1, 6),
                                     "vicinities": round(t3 - t2, 6)}
    log.info("built oracle n=%d |L|=%d mean|vic|=%.1f in %.2fs", g.n, len(landmarks),
             oracle.stats["mean_vicinity_size"], t3 - t0)
    return oracle


def build_stats(oracle: Oracle) -> dict:
    g = oracle.graph
    vics = [v for v in oracle.vicinities if v is not None]
    sizes = [len(v) for v in vics] or [0]
    bsizes = [len(v.boundary) for v in vics] or [0]
    radius = oracle.landmarks.radius
    return {
        "n": g.n,
        "m": g.m,
        "weighted": g.weighted,
        "alpha": oracle.alpha,
        "seed": oracle.seed,
        "landmark_count": len(oracle.landmarks),
        "expected_landmark_count": round(expected_landmark_count(g, oracle.alpha), 3),
        "indexed_nodes": len(vics),
        "mean_vicinity_size": float(np.mean(sizes)),
        "max_vicinity_size": int(max(sizes)),
        "target_vicinity_size": oracle.alpha * math.sqrt(g.n),
        "mean_boundary_size": float(np.mean(bsizes)),
        "max_boundary_size": int(max(bsizes)),
        "mean_radius": float(np.mean(radius)) if radius else 0.0,
        "vicinity_entries": int(sum(len(v) for v in vics)),
        "landmark_table_entries": len(oracle.landmark_tables) * g.n,
    }
