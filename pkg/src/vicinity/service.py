"""HTTP query endpoint over a loaded oracle.

Endpoints::

    GET /distance?s=&t=
    GET /path?s=&t=&fallback=0|1
    GET /healthz

Node ids are the labels used in the edge-list file. Answers share their JSON
encoding with ``vicinity query``.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .build import Oracle
from .query import query_distance, query_path, query_with_fallback

log = logging.getLogger(__name__)


class UnknownNodeError(LookupError):
    pass


class QueryContext:
    """Oracle plus the label <-> dense id translation of its edge list."""

    def __init__(self, oracle: Oracle, labels: list[int] | None = None):
        self.oracle = oracle
        self.labels = labels if labels is not None else list(range(oracle.graph.n))
        self.index = {lab: i for i, lab in enumerate(self.labels)}

    def resolve(self, label: int) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise UnknownNodeError(f"unknown node id {label}") from None

    def answer(self, s_label: int, t_label: int, want_path: bool = False, fallback: bool = False) -> dict:
        s, t = self.resolve(s_label), self.resolve(t_label)
        start = time.perf_counter_ns()
        if fallback:
            res = query_with_fallback(self.oracle, s, t, want_path=want_path)
        elif want_path:
            res = query_path(self.oracle, s, t)
        else:
            res = query_distance(self.oracle, s, t)
        micros = (time.perf_counter_ns() - start) / 1000.0
        out = res.to_dict(include_path=want_path)
        if res.path is not None and want_path:
            out["path"] = [self.labels[v] for v in res.path]
        if res.meeting_node is not None:
            out["meeting_node"] = self.labels[res.meeting_node]
        out["micros"] = round(micros, 3)
        return out

    def health(self) -> dict:
        g = self.oracle.graph
        return {"status": "ok", "n": g.n, "m": g.m, "alpha": self.oracle.alpha, "seed": self.oracle.seed,
                "fingerprint": g.fingerprint().hex()}


def encode(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _make_handler(ctx: QueryContext):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            log.debug("%s " + fmt, self.address_string(), *args)

        def _send(self, status: int, payload: dict) -> None:
            body = encode(payload)
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            url = urlparse(self.path)
            if url.path == "/healthz":
                return self._send(200, ctx.health())
            if url.path not in ("/distance", "/path"):
                return self._send(404, {"error": f"no route {url.path}"})
            qs = parse_qs(url.query)
            try:
                s = int(qs["s"][0])
                t = int(qs["t"][0])
                fb = qs.get("fallback", ["0"])[0]
                if fb not in ("0", "1"):
                    raise ValueError(fb)
            except (KeyError, ValueError, IndexError):
                return self._send(400, {"error": "s and t must be integers; fallback must be 0 or 1"})
            try:
                payload = ctx.answer(s, t, want_path=url.path == "/path", fallback=fb == "1")
            except UnknownNodeError as exc:
                return self._send(404, {"error": str(exc)})
            self._send(200, payload)

    return Handler


class QueryServer(ThreadingHTTPServer):
    # join request threads on close so in-flight requests drain
    daemon_threads = False
    block_on_close = True


def make_server(ctx: QueryContext, host: str = "127.0.0.1", port: int = 8080) -> QueryServer:
    return QueryServer((host, port), _make_handler(ctx))


def serve_in_thread(ctx: QueryContext, host: str = "127.0.0.1", port: int = 0):
    """Start a server on a background thread; returns ``(server, thread)``."""
    server = make_server(ctx, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread
