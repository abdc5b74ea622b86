"""Versioned binary index files.

Layout, all integers little-endian::

    header   magic(8) version:u32 flags:u32 n:u64 m:u64 alpha:f64 seed:i64
             landmark_count:u64 payload_len:u64 graph_fp(32) checksum(32)
    payload  landmark ids            u32[L]
             nearest landmark        u32[n]
             radius                  i32[n] | f64[n]
             landmark tables         L x (dist i32[n] | f64[n], parent i32[n])
             vicinity records        n x (count:u32, ball_size:u32,
                                          node u32[count], dist i32|f64[count],
                                          parent i32[count], boundary bitmap)

``checksum`` is SHA-256 over the payload. The graph itself is not stored; the
loader checks the caller's graph against ``graph_fp``.
"""

from __future__ import annotations

import hashlib
import io
import struct
from dataclasses import dataclass

import numpy as np

from .build import LandmarkSet, LandmarkTable, Oracle, VicinityTable, build_stats
from .graph import Graph

MAGIC = b"VICIDX\x00\x01"
FORMAT_VERSION = 1
FLAG_WEIGHTED = 1

_HEADER = struct.Struct("<8sIIQQdqQQ32s32s")


class IndexFormatError(Exception):
    pass


class BadMagicError(IndexFormatError):
    pass


class UnsupportedVersionError(IndexFormatError):
    pass


class ChecksumError(IndexFormatError):
    pass


class GraphMismatchError(IndexFormatError):
    pass


class IncompleteOracleError(ValueError):
    pass


@dataclass
class IndexFileHeader:
    magic: bytes
    format_version: int
    flags: int
    n: int
    m: int
    alpha: float
    seed: int
    landmark_count: int
    payload_len: int
    graph_fingerprint: bytes
    checksum: bytes

    @property
    def weighted(self) -> bool:
        return bool(self.flags & FLAG_WEIGHTED)

    def pack(self) -> bytes:
        return _HEADER.pack(self.magic, self.format_version, self.flags, self.n, self.m, self.alpha,
                            self.seed, self.landmark_count, self.payload_len, self.graph_fingerprint,
                            self.checksum)

    @classmethod
    def unpack(cls, raw: bytes) -> "IndexFileHeader":
        if len(raw) < _HEADER.size:
            raise ChecksumError(f"truncated header: {len(raw)} of {_HEADER.size} bytes")
        head = cls(*_HEADER.unpack(raw[:_HEADER.size]))
        if head.magic != MAGIC:
            raise BadMagicError(f"not an index file (magic {head.magic!r})")
        if head.format_version != FORMAT_VERSION:
            raise UnsupportedVersionError(f"format version {head.format_version} not supported "
                                          f"(expected {FORMAT_VERSION})")
        return head

    def to_dict(self) -> dict:
        return {
            "magic": self.magic.hex(),
            "format_version": self.format_version,
            "weighted": self.weighted,
            "n": self.n,
            "m": self.m,
            "alpha": self.alpha,
            "seed": self.seed,
            "landmark_count": self.landmark_count,
            "payload_bytes": self.payload_len,
            "graph_fingerprint": self.graph_fingerprint.hex(),
            "checksum": self.checksum.hex(),
        }


def _dist_dtype(weighted: bool) -> str:
    return "<f8" if weighted else "<i4"


def _payload(oracle: Oracle) -> bytes:
    g = oracle.graph
    ddt = _dist_dtype(g.weighted)
    lm = oracle.landmarks
    buf = io.BytesIO()
    buf.write(np.asarray(lm.members, dtype="<u4").tobytes())
    buf.write(np.asarray(lm.nearest, dtype="<u4").tobytes())
    buf.write(np.asarray(lm.radius, dtype=ddt).tobytes())
    for a in lm.members:
        table = oracle.landmark_tables[a]
        buf.write(np.asarray(table.dist, dtype=ddt).tobytes())
        buf.write(np.asarray(table.parent, dtype="<i4").tobytes())
    for vic in oracle.vicinities:
        nodes = sorted(vic.dist)
        buf.write(struct.pack("<II", len(nodes), vic.ball_size))
        if not nodes:
            continue
        buf.write(np.asarray(nodes, dtype="<u4").tobytes())
        buf.write(np.asarray([vic.dist[v] for v in nodes], dtype=ddt).tobytes())
        buf.write(np.asarray([vic.parent[v] for v in nodes], dtype="<i4").tobytes())
        bnd = set(vic.boundary)
        buf.write(np.packbits(np.fromiter((v in bnd for v in nodes), dtype=bool, count=len(nodes)),
                              bitorder="little").tobytes())
    return buf.getvalue()


def dumps(oracle: Oracle) -> bytes:
    if not oracle.complete:
        raise IncompleteOracleError("only fully built oracles can be saved")
    g = oracle.graph
    payload = _payload(oracle)
    head = IndexFileHeader(MAGIC, FORMAT_VERSION, FLAG_WEIGHTED if g.weighted else 0, g.n, g.m,
                           float(oracle.alpha), int(oracle.seed), len(oracle.landmarks), len(payload),
                           g.fingerprint(), hashlib.sha256(payload).digest())
    return head.pack() + payload


def save_oracle(oracle: Oracle, sink) -> int:
    """Write ``oracle`` to a binary stream or path; returns bytes written."""
    data = dumps(oracle)
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)
    return len(data)


def read_header(source) -> IndexFileHeader:
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            return IndexFileHeader.unpack(fh.read(_HEADER.size))
    return IndexFileHeader.unpack(source.read(_HEADER.size))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def array(self, dtype: str, count: int) -> np.ndarray:
        dt = np.dtype(dtype)
        end = self.pos + dt.itemsize * count
        if end > len(self.data):
            raise ChecksumError("payload ends early")
        out = np.frombuffer(self.data, dtype=dt, count=count, offset=self.pos)
        self.pos = end
        return out

    def raw(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise ChecksumError("payload ends early")
        out = self.data[self.pos:self.pos + count]
        self.pos += count
        return out


def loads(data: bytes, graph: Graph) -> Oracle:
    head = IndexFileHeader.unpack(data)
    payload = data[_HEADER.size:]
    if len(payload) != head.payload_len or hashlib.sha256(payload).digest() != head.checksum:
        raise ChecksumError("index payload failed its integrity check")
    if (head.n, head.m, head.weighted) != (graph.n, graph.m, graph.weighted) \
            or head.graph_fingerprint != graph.fingerprint():
        raise GraphMismatchError("index was built over a different graph")

    n = head.n
    weighted = head.weighted
    ddt = _dist_dtype(weighted)
    rd = _Reader(payload)
    members = tuple(rd.array("<u4", head.landmark_count).tolist())
    nearest = rd.array("<u4", n).tolist()
    radius = rd.array(ddt, n).tolist()
    tables = {}
    for a in members:
        dist = rd.array(ddt, n).astype(np.float64 if weighted else np.int32)
        parent = rd.array("<i4", n).astype(np.int32)
        tables[a] = LandmarkTable(landmark=a, dist=dist, parent=parent)
    vics = []
    for u in range(n):
        count, ball_size = struct.unpack("<II", rd.raw(8))
        if count == 0:
            vics.append(VicinityTable(owner=u, radius=radius[u]))
            continue
        nodes = rd.array("<u4", count).tolist()
        dist = rd.array(ddt, count).tolist()
        parent = rd.array("<i4", count).tolist()
        bits = np.unpackbits(np.frombuffer(rd.raw((count + 7) // 8), dtype=np.uint8),
                             count=count, bitorder="little")
        vics.append(VicinityTable(owner=u, dist=dict(zip(nodes, dist)), parent=dict(zip(nodes, parent)),
                                  ball_size=ball_size,
                                  boundary=tuple(v for v, b in zip(nodes, bits.tolist()) if b),
                                  radius=radius[u]))
    if rd.pos != len(payload):
        raise IndexFormatError("trailing bytes after vicinity records")
    oracle = Oracle(graph=graph, alpha=head.alpha, seed=head.seed,
                    landmarks=LandmarkSet(members, nearest, radius), landmark_tables=tables, vicinities=vics)
    oracle.stats = build_stats(oracle)
    return oracle


def load_oracle(source, graph: Graph) -> Oracle:
    """Read an index written by :func:`save_oracle`; fails closed on any defect."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    return loads(data, graph)


def size_breakdown(oracle: Oracle) -> dict:
    """Entry counts and byte sizes per section, against a dense all-pairs table."""
    g = oracle.graph
    width = 8 if g.weighted else 4
    vic_entries = sum(len(v) for v in oracle.vicinities if v is not None)
    lm_entries = len(oracle.landmark_tables) * g.n
    all_pairs = g.n * (g.n - 1) // 2
    total = vic_entries + lm_entries + 2 * g.n
    return {
        "vicinity_entries": vic_entries,
        "landmark_table_entries": lm_entries,
        "per_node_entries": 2 * g.n,
        "total_entries": total,
        "vicinity_bytes": vic_entries * (8 + width) + 8 * g.n,
        "landmark_table_bytes": lm_entries * (4 + width),
        "all_pairs_entries": all_pairs,
        "memory_ratio_vs_all_pairs": (all_pairs / total) if total else None,
    }
