"""Immutable undirected graphs in compressed sparse row form.

Node ids are dense integers in ``[0, n)``. Unweighted graphs carry no weight
array and every edge counts as 1.
"""

from __future__ import annotations

import hashlib
import io
import random
from collections import deque
from typing import Iterable, TextIO

import numpy as np


class GraphError(ValueError):
    """Raised for invalid graph construction parameters."""


class EdgeListParseError(GraphError):
    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line.strip()!r}")
        self.lineno = lineno


class Graph:
    """Undirected graph with symmetric CSR adjacency.

    Build instances with :meth:`from_edges` or :func:`parse_edge_list`; the
    constructor trusts its arrays.
    """

    __slots__ = ("indptr", "indices", "weights", "_adj", "_wadj", "_degrees")

    def __init__(self, indptr: np.ndarray, indices: np.ndarray, weights: np.ndarray | None = None):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int32)
        self.weights = None if weights is None else np.ascontiguousarray(weights, dtype=np.float64)
        for arr in (self.indptr, self.indices, self.weights):
            if arr is not None:
                arr.flags.writeable = False
        # Plain-list views: element access on lists is much faster than on
        # numpy arrays inside the Python-level search loops.
        self._adj = None
        self._wadj = None
        self._degrees = None

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple], weighted: bool = False) -> "Graph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples over ids in ``[0, n)``.

        Self-loops are dropped and parallel edges collapse to the minimum weight.
        """
        best: dict[tuple[int, int], float] = {}
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                continue
            w = float(e[2]) if weighted else 1.0
            if w < 0 or w != w:
                raise GraphError(f"edge ({u}, {v}) has invalid weight {w}")
            key = (u, v) if u < v else (v, u)
            old = best.get(key)
            if old is None or w < old:
                best[key] = w
        return cls._from_unique(n, best, weighted)

    @classmethod
    def _from_unique(cls, n: int, best: dict[tuple[int, int], float], weighted: bool) -> "Graph":
        m = len(best)
        if m:
            keys = np.array(list(best.keys()), dtype=np.int64)
            w = np.fromiter(best.values(), dtype=np.float64, count=m)
            src = np.concatenate([keys[:, 0], keys[:, 1]])
            dst = np.concatenate([keys[:, 1], keys[:, 0]])
            ww = np.concatenate([w, w])
            order = np.lexsort((dst, src))
            src, dst, ww = src[order], dst[order], ww[order]
        else:
            src = dst = np.zeros(0, dtype=np.int64)
            ww = np.zeros(0, dtype=np.float64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(indptr, dst, ww if weighted else None)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def m(self) -> int:
        return len(self.indices) // 2

    @property
    def weighted(self) -> bool:
        return self.weights is not None

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    @property
    def degrees(self) -> list[int]:
        if self._degrees is None:
            self._degrees = np.diff(self.indptr).tolist()
        return self._degrees

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    @property
    def adj(self) -> list[list[int]]:
        """Per-node sorted neighbor lists."""
        if self._adj is None:
            ind = self.indices.tolist()
            ptr = self.indptr.tolist()
            self._adj = [ind[ptr[u]:ptr[u + 1]] for u in range(self.n)]
        return self._adj

    @property
    def wadj(self) -> list[list[tuple[int, float]]]:
        """Per-node ``(neighbor, weight)`` lists; unit weights when unweighted."""
        if self._wadj is None:
            ind = self.indices.tolist()
            ptr = self.indptr.tolist()
            w = self.weights.tolist() if self.weighted else [1.0] * len(ind)
            self._wadj = [list(zip(ind[ptr[u]:ptr[u + 1]], w[ptr[u]:ptr[u + 1]])) for u in range(self.n)]
        return self._wadj

    def edge_weight(self, u: int, v: int) -> float:
        lo, hi = self.indptr[u], self.indptr[u + 1]
        i = lo + int(np.searchsorted(self.indices[lo:hi], v))
        if i >= hi or self.indices[i] != v:
            raise KeyError(f"no edge ({u}, {v})")
        return float(self.weights[i]) if self.weighted else 1.0

    def has_edge(self, u: int, v: int) -> bool:
        try:
            self.edge_weight(u, v)
        except KeyError:
            return False
        return True

    def edges(self) -> Iterable[tuple]:
        """Yield each undirected edge once as ``(u, v)`` or ``(u, v, w)``, u < v."""
        ptr = self.indptr.tolist()
        ind = self.indices.tolist()
        w = self.weights.tolist() if self.weighted else None
        for u in range(self.n):
            for i in range(ptr[u], ptr[u + 1]):
                v = ind[i]
                if u < v:
                    yield (u, v, w[i]) if w is not None else (u, v)

    def fingerprint(self) -> bytes:
        """SHA-256 over n, m, the degree sequence, adjacency and weights."""
        h = hashlib.sha256()
        h.update(np.array([self.n, self.m, int(self.weighted)], dtype="<i8").tobytes())
        h.update(np.diff(self.indptr).astype("<i8").tobytes())
        h.update(self.indices.astype("<i4").tobytes())
        if self.weighted:
            h.update(self.weights.astype("<f8").tobytes())
        return h.digest()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        if self.weighted != other.weighted:
            return False
        same = np.array_equal(self.indptr, other.indptr) and np.array_equal(self.indices, other.indices)
        return same and (not self.weighted or np.array_equal(self.weights, other.weights))

    __hash__ = None

    def __repr__(self) -> str:
        kind = "weighted" if self.weighted else "unweighted"
        return f"Graph(n={self.n}, m={self.m}, {kind})"

    def __getstate__(self):
        return (self.indptr, self.indices, self.weights)

    def __setstate__(self, state):
        self.__init__(*state)


def parse_edge_list(source: TextIO | str, treat_as_undirected: bool = True, weighted: bool = False,
                    return_mapping: bool = False):
    """Parse a SNAP-style whitespace edge list.

    Lines starting with ``#`` or ``%`` are comments. Each data line is
    ``u v`` or ``u v w``. Original ids are remapped to dense ids in order of
    first appearance. With ``return_mapping`` the result is
    ``(graph, original_ids)`` where ``original_ids[new] == old``.

    Every edge is stored undirected; ``treat_as_undirected=False`` only
    rejects input that lists an edge in one direction without the other.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    ids: dict[int, int] = {}
    best: dict[tuple[int, int], float] = {}
    directed: set[tuple[int, int]] = set()
    for lineno, line in enumerate(source, 1):
        s = line.strip()
        if not s or s[0] in "#%":
            continue
        parts = s.split()
        if len(parts) not in (2, 3):
            raise EdgeListParseError(lineno, line, "expected 'u v' or 'u v w'")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListParseError(lineno, line, "node ids must be integers") from None
        w = 1.0
        if weighted:
            if len(parts) != 3:
                raise EdgeListParseError(lineno, line, "missing weight column")
            try:
                w = float(parts[2])
            except ValueError:
                raise EdgeListParseError(lineno, line, "weight is not a number") from None
            if w < 0 or w != w:
                raise EdgeListParseError(lineno, line, "negative weight")
        for x in (a, b):
            if x not in ids:
                ids[x] = len(ids)
        u, v = ids[a], ids[b]
        if u == v:
            continue
        if not treat_as_undirected:
            directed.add((u, v))
        key = (u, v) if u < v else (v, u)
        old = best.get(key)
        if old is None or w < old:
            best[key] = w
    if not treat_as_undirected:
        for u, v in directed:
            if (v, u) not in directed:
                raise GraphError(f"edge ({u}, {v}) has no reverse; pass treat_as_undirected=True")
    g = Graph._from_unique(len(ids), best, weighted)
    if return_mapping:
        return g, list(ids)
    return g


def read_edge_list(path, weighted: bool = False, return_mapping: bool = False):
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh, weighted=weighted, return_mapping=return_mapping)


def write_edge_list(g: Graph, sink: TextIO) -> None:
    for e in g.edges():
        if g.weighted:
            sink.write(f"{e[0]} {e[1]} {e[2]!r}\n")
        else:
            sink.write(f"{e[0]} {e[1]}\n")


def write_id_mapping(mapping: list[int], sink: TextIO) -> None:
    """Two columns: dense id, original id."""
    for new, old in enumerate(mapping):
        sink.write(f"{new} {old}\n")


def connected_components(g: Graph) -> tuple[list[int], list[int]]:
    """Label components in order of their smallest node id.

    Returns ``(component_id, component_sizes)``.
    """
    adj = g.adj
    comp = [-1] * g.n
    sizes = []
    for start in range(g.n):
        if comp[start] != -1:
            continue
        cid = len(sizes)
        comp[start] = cid
        queue = deque([start])
        size = 0
        while queue:
            u = queue.popleft()
            size += 1
            for v in adj[u]:
                if comp[v] == -1:
                    comp[v] = cid
                    queue.append(v)
        sizes.append(size)
    return comp, sizes


def largest_connected_component(g: Graph) -> tuple[Graph, dict[int, int]]:
    """Restrict ``g`` to its largest component.

    Ties go to the component holding the smallest node id. Returns the
    subgraph and the old-to-new id mapping (new ids keep the old order).
    """
    if g.n == 0:
        raise GraphError("empty graph has no components")
    comp, sizes = connected_components(g)
    # components are numbered by smallest member, so index() breaks ties correctly
    keep = sizes.index(max(sizes))
    mapping = {}
    for u in range(g.n):
        if comp[u] == keep:
            mapping[u] = len(mapping)
    edges = []
    for e in g.edges():
        if e[0] in mapping and e[1] in mapping:
            edges.append((mapping[e[0]], mapping[e[1]]) + tuple(e[2:]))
    return Graph.from_edges(len(mapping), edges, weighted=g.weighted), mapping


def gen_barabasi_albert(n: int, edges_per_node: int, seed: int) -> Graph:
    """Preferential attachment graph.

    Starts from a star on ``edges_per_node + 1`` nodes; each later node links to
    ``edges_per_node`` distinct existing nodes chosen proportionally to degree.
    """
    k = edges_per_node
    if k < 1 or n <= k:
        raise GraphError(f"need n > edges_per_node >= 1, got n={n}, edges_per_node={k}")
    rng = random.Random(seed)
    edges = [(0, v) for v in range(1, k + 1)]
    # each node appears once per incident edge endpoint
    pool = [0] * k + list(range(1, k + 1))
    for u in range(k + 1, n):
        targets = set()
        while len(targets) < k:
            targets.add(pool[int(rng.random() * len(pool))])
        for v in sorted(targets):
            edges.append((u, v))
            pool.append(v)
        pool.extend([u] * k)
    return Graph.from_edges(n, edges)


def gen_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """G(n, p): each of the n(n-1)/2 pairs present independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"p must lie in [0, 1], got {p}")
    if n < 0:
        raise GraphError("n must be non-negative")
    rng = np.random.default_rng(seed)
    iu, iv = np.triu_indices(n, k=1)
    mask = rng.random(len(iu)) < p
    return Graph.from_edges(n, zip(iu[mask].tolist(), iv[mask].tolist()))


def with_random_weights(g: Graph, seed: int, low: int = 1, high: int = 10, zero_fraction: float = 0.0) -> Graph:
    """Copy of ``g`` with integer-valued weights drawn uniformly from [low, high].

    A ``zero_fraction`` share of edges gets weight 0.
    """
    rng = np.random.default_rng(seed)
    edges = list(g.edges())
    w = rng.integers(low, high + 1, size=len(edges)).astype(float)
    if zero_fraction:
        w[rng.random(len(edges)) < zero_fraction] = 0.0
    return Graph.from_edges(g.n, [(e[0], e[1], x) for e, x in zip(edges, w.tolist())], weighted=True)
