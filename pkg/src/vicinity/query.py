"""Online phase: distance and path queries by vicinity intersection."""

from __future__ import annotations

import enum
import operator
from dataclasses import dataclass, field

from .build import NO_PARENT, Oracle


class Method(str, enum.Enum):
    SAME_NODE = "SAME_NODE"
    SOURCE_LANDMARK = "SOURCE_LANDMARK"
    TARGET_LANDMARK = "TARGET_LANDMARK"
    TARGET_IN_SOURCE_VICINITY = "TARGET_IN_SOURCE_VICINITY"
    SOURCE_IN_TARGET_VICINITY = "SOURCE_IN_TARGET_VICINITY"
    INTERSECTION = "INTERSECTION"
    FALLBACK = "FALLBACK"
    NOT_FOUND = "NOT_FOUND"


class NodeRangeError(IndexError):
    pass


class NotIndexedError(LookupError):
    """The query touches a node whose tables a partial oracle did not build."""


@dataclass(slots=True)
class QueryResult:
    s: int
    t: int
    distance: int | float | None
    method: Method
    meeting_node: int | None = None
    probes: int = 0
    path: list[int] | None = None
    # False only when the pair is known to be disconnected
    reachable: bool | None = None
    extra: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.distance is not None

    def to_dict(self, include_path: bool = True) -> dict:
        out = {"distance": self.distance, "method": self.method.value}
        if include_path and self.path is not None:
            out["path"] = self.path
        out["probes"] = self.probes
        if self.meeting_node is not None:
            out["meeting_node"] = self.meeting_node
        if self.reachable is False:
            out["reachable"] = False
        return out


def _check(oracle: Oracle, s, t) -> tuple[int, int]:
    n = oracle.graph.n
    out = []
    for x in (s, t):
        try:
            x = operator.index(x)
        except TypeError:
            raise NodeRangeError(f"node id {x!r} is not an integer") from None
        if not 0 <= x < n:
            raise NodeRangeError(f"node id {x} outside [0, {n})")
        out.append(x)
    return out[0], out[1]


def _landmark_table(oracle: Oracle, a: int):
    table = oracle.landmark_tables.get(a)
    if table is None:
        raise NotIndexedError(f"landmark {a} has no table in this oracle")
    return table


def _vicinity(oracle: Oracle, u: int):
    vic = oracle.vicinities[u]
    if vic is None:
        raise NotIndexedError(f"node {u} has no vicinity in this oracle")
    return vic


def query_distance(oracle: Oracle, s: int, t: int) -> QueryResult:
    """Exact distance between ``s`` and ``t`` or ``NOT_FOUND``.

    Checks run cheapest first: identity, landmark tables, vicinity
    containment, then a scan of the smaller boundary against the other
    vicinity. ``probes`` counts membership lookups: one per direct check
    plus one per element the intersection visits.
    """
    if type(s) is not int or type(t) is not int or not (0 <= s < oracle.graph.n and 0 <= t < oracle.graph.n):
        s, t = _check(oracle, s, t)
    if s == t:
        return QueryResult(s, t, 0, Method.SAME_NODE, reachable=True)
    lm = oracle.landmarks
    members = lm.member_set
    if s in members:
        d = _landmark_table(oracle, s).distance(t)
        if d is None:
            return QueryResult(s, t, None, Method.NOT_FOUND, probes=1, reachable=False)
        return QueryResult(s, t, d, Method.SOURCE_LANDMARK, probes=1, reachable=True)
    if t in members:
        d = _landmark_table(oracle, t).distance(s)
        if d is None:
            return QueryResult(s, t, None, Method.NOT_FOUND, probes=2, reachable=False)
        return QueryResult(s, t, d, Method.TARGET_LANDMARK, probes=2, reachable=True)

    vs = oracle.vicinities[s]
    vt = oracle.vicinities[t]
    if vs is None or vt is None:
        _vicinity(oracle, s), _vicinity(oracle, t)
    d = vs.dist.get(t)
    if d is not None:
        return QueryResult(s, t, d, Method.TARGET_IN_SOURCE_VICINITY, probes=3, reachable=True)
    d = vt.dist.get(s)
    if d is not None:
        return QueryResult(s, t, d, Method.SOURCE_IN_TARGET_VICINITY, probes=4, reachable=True)

    if len(vs.boundary) <= len(vt.boundary):
        scan, near, far = vs.boundary_set, vs.dist, vt
    else:
        scan, near, far = vt.boundary_set, vt.dist, vs
    # frozenset & frozenset walks the smaller operand and probes the larger
    common = scan & far.key_set
    probes = 4 + min(len(scan), len(far.key_set))
    if not common:
        return QueryResult(s, t, None, Method.NOT_FOUND, probes=probes)
    fd = far.dist
    best = None
    meet = None
    for w in sorted(common):
        total = near[w] + fd[w]
        if best is None or total < best:
            best = total
            meet = w
    # Only reachable on weighted graphs: an intersection longer than both radii
    # combined may miss the shortest path, so it is not certified exact.
    if best > lm.radius[s] + lm.radius[t]:
        return QueryResult(s, t, None, Method.NOT_FOUND, probes=probes)
    return QueryResult(s, t, best, Method.INTERSECTION, meeting_node=meet, probes=probes, reachable=True)


def full_intersection(oracle: Oracle, s: int, t: int):
    """Minimum of d(s, w) + d(t, w) over every w in both vicinities.

    Unrestricted counterpart of the boundary scan, for verification. Returns
    ``(distance, meeting_node)`` or ``(None, None)``.
    """
    vs, vt = _vicinity(oracle, s), _vicinity(oracle, t)
    best = meet = None
    for w in sorted(vs.dist):
        dw = vt.dist.get(w)
        if dw is not None:
            total = vs.dist[w] + dw
            if best is None or total < best:
                best, meet = total, w
    return best, meet


def _chain_to_root(parent, v: int) -> list[int]:
    """Follow tree parents from ``v`` up to the root, inclusive."""
    out = [v]
    p = int(parent[v])
    while p != NO_PARENT:
        out.append(p)
        p = int(parent[p])
    return out


def reconstruct_path(oracle: Oracle, res: QueryResult) -> list[int] | None:
    s, t, method = res.s, res.t, res.method
    if method is Method.SAME_NODE:
        return [s]
    if method is Method.SOURCE_LANDMARK:
        return _chain_to_root(oracle.landmark_tables[s].parent, t)[::-1]
    if method is Method.TARGET_LANDMARK:
        return _chain_to_root(oracle.landmark_tables[t].parent, s)
    if method is Method.TARGET_IN_SOURCE_VICINITY:
        return _chain_to_root(oracle.vicinities[s].parent, t)[::-1]
    if method is Method.SOURCE_IN_TARGET_VICINITY:
        return _chain_to_root(oracle.vicinities[t].parent, s)
    if method is Method.INTERSECTION:
        w = res.meeting_node
        head = _chain_to_root(oracle.vicinities[s].parent, w)[::-1]
        tail = _chain_to_root(oracle.vicinities[t].parent, w)
        return head + tail[1:]
    return None


def query_path(oracle: Oracle, s: int, t: int) -> QueryResult:
    res = query_distance(oracle, s, t)
    res.path = reconstruct_path(oracle, res)
    return res


def query_with_fallback(oracle: Oracle, s: int, t: int, fallback=None, want_path: bool = True) -> QueryResult:
    """Oracle answer, or an exact search when the vicinities miss.

    ``fallback`` is ``"bidirectional"``, ``"bfs"``, ``"dijkstra"`` or a
    callable with the baseline signature ``(graph, s, t) -> SearchResult``.
    Defaults to bidirectional BFS, or Dijkstra on weighted graphs.
    """
    from . import baselines

    res = query_path(oracle, s, t) if want_path else query_distance(oracle, s, t)
    if res.found or res.reachable is False:
        return res
    s, t = res.s, res.t
    if fallback is None:
        fallback = "dijkstra" if oracle.graph.weighted else "bidirectional"
    search = baselines.SEARCHES[fallback] if isinstance(fallback, str) else fallback
    found = search(oracle.graph, s, t)
    if found.distance is None:
        return QueryResult(s, t, None, Method.NOT_FOUND, probes=res.probes, reachable=False,
                           extra={"fallback_settled": found.stats.settled_nodes})
    return QueryResult(s, t, found.distance, Method.FALLBACK, probes=res.probes,
                       path=found.path if want_path else None, reachable=True,
                       extra={"fallback_settled": found.stats.settled_nodes})
