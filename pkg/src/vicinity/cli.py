"""Command line: build, query, stats, bench, serve."""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
from pathlib import Path

from . import bench, persistence
from .build import BuildError, build_oracle
from .graph import EdgeListParseError, GraphError, gen_barabasi_albert, largest_connected_component, read_edge_list
from .service import QueryContext, UnknownNodeError, encode, make_server

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_INDEX = 5
EXIT_QUERY = 6
EXIT_BUILD = 7

log = logging.getLogger("vicinity")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=None, sort_keys=True, default=str) + "\n")


def load_graph(path, weighted: bool = False, lcc: bool = False):
    """Read an edge list; returns ``(graph, labels)`` with labels[dense] = original id."""
    try:
        g, labels = read_edge_list(path, weighted=weighted, return_mapping=True)
    except FileNotFoundError:
        raise CliError(EXIT_IO, f"cannot read graph file {path}") from None
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read graph file {path}: {exc}") from None
    except (EdgeListParseError, GraphError) as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from None
    if lcc:
        g, mapping = largest_connected_component(g)
        kept = sorted(mapping, key=mapping.get)
        labels = [labels[old] for old in kept]
    return g, labels


def _load_context(args) -> QueryContext:
    g, labels = load_graph(args.graph, args.weighted, args.lcc)
    try:
        oracle = persistence.load_oracle(args.index, g)
    except FileNotFoundError:
        raise CliError(EXIT_IO, f"cannot read index file {args.index}") from None
    except persistence.IndexFormatError as exc:
        raise CliError(EXIT_INDEX, f"{args.index}: {type(exc).__name__}: {exc}") from None
    return QueryContext(oracle, labels)


def cmd_build(args) -> int:
    if not args.alpha > 0:
        raise CliError(EXIT_USAGE, f"--alpha must be positive, got {args.alpha}")
    if args.workers < 1:
        raise CliError(EXIT_USAGE, "--workers must be at least 1")
    g, labels = load_graph(args.graph, args.weighted, args.lcc)
    try:
        oracle = build_oracle(g, args.alpha, args.seed, parallelism=args.workers)
    except BuildError as exc:
        raise CliError(EXIT_BUILD, str(exc)) from None
    try:
        written = persistence.save_oracle(oracle, args.out)
        ids_path = Path(str(args.out) + ".ids")
        with open(ids_path, "w", encoding="utf-8") as fh:
            for new, old in enumerate(labels):
                fh.write(f"{new} {old}\n")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write index: {exc}") from None
    stats = dict(oracle.stats)
    stats["index_bytes"] = written
    stats["index_path"] = str(args.out)
    _emit(stats)
    return EXIT_OK


def cmd_query(args) -> int:
    ctx = _load_context(args)
    try:
        out = ctx.answer(args.s, args.t, want_path=args.path, fallback=args.fallback)
    except UnknownNodeError as exc:
        _emit({"error": str(exc)})
        return EXIT_QUERY
    sys.stdout.write(encode(out).decode() + "\n")
    return EXIT_OK


def cmd_stats(args) -> int:
    try:
        header = persistence.read_header(args.index)
        size = Path(args.index).stat().st_size
    except FileNotFoundError:
        raise CliError(EXIT_IO, f"cannot read index file {args.index}") from None
    except persistence.IndexFormatError as exc:
        raise CliError(EXIT_INDEX, str(exc)) from None
    out = {"header": header.to_dict(), "file_bytes": size}
    if args.graph:
        ctx = _load_context(args)
        out["sizes"] = persistence.size_breakdown(ctx.oracle)
        out["build"] = ctx.oracle.stats
    _emit(out)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg_data = {}
    if args.config:
        try:
            cfg_data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot read bench config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise CliError(EXIT_USAGE, f"bench config is not JSON: {exc}") from None
    for key in ("trials", "nodes_per_trial", "seed"):
        if getattr(args, key) is not None:
            cfg_data[key] = getattr(args, key)
    if args.alphas:
        cfg_data["alphas"] = [float(eval_fraction(a)) for a in args.alphas.split(",")]
    if args.graph:
        g, _ = load_graph(args.graph, args.weighted, lcc=True)
        cfg_data.setdefault("graph_source", str(args.graph))
        prep = "edge list symmetrized, self-loops dropped, duplicates collapsed, largest component kept"
    else:
        n, k = args.ba
        try:
            g = gen_barabasi_albert(n, k, args.graph_seed)
        except GraphError as exc:
            raise CliError(EXIT_USAGE, str(exc)) from None
        cfg_data.setdefault("graph_source", f"barabasi_albert(n={n}, k={k}, seed={args.graph_seed})")
        prep = "synthetic, connected by construction"
    try:
        cfg = bench.ExperimentConfig.from_dict(cfg_data)
        cfg.validate(g.n)
    except (bench.BenchConfigError, TypeError) as exc:
        raise CliError(EXIT_USAGE, f"invalid bench config: {exc}") from None
    report = bench.run_all(cfg, g, preprocessing=prep)
    paths = bench.write_report(report, args.out)
    _emit({"outputs": {k: str(v) for k, v in paths.items()},
           "intersection_mean": {str(k): v for k, v in report.intersection_mean.items()},
           "max_boundary_fraction": max(report.boundary_fractions),
           "speedup": report.speedup})
    return EXIT_OK


def eval_fraction(text: str) -> float:
    """Parse ``"4"``, ``"0.25"`` or ``"1/16"``."""
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def cmd_serve(args) -> int:
    ctx = _load_context(args)
    server = make_server(ctx, args.host, args.port)
    host, port = server.server_address[:2]
    log.info("serving on http://%s:%d", host, port)
    _emit({"listening": f"http://{host}:{port}", **ctx.health()})
    sys.stdout.flush()

    def stop(signum, frame):
        # shutdown() blocks until serve_forever returns, so hand it to a thread
        import threading
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGTERM, stop)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vicinity", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def graph_args(sp, required=True):
        sp.add_argument("--graph", required=required, help="edge-list file (SNAP format)")
        sp.add_argument("--weighted", action="store_true", help="read a third weight column")
        sp.add_argument("--lcc", action="store_true", help="keep only the largest connected component")

    b = sub.add_parser("build", help="build and save an index")
    graph_args(b)
    b.add_argument("--alpha", type=float, default=4.0)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", required=True, help="index file to write")
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="answer one distance/path query")
    graph_args(q)
    q.add_argument("--index", required=True)
    q.add_argument("s", type=int)
    q.add_argument("t", type=int)
    q.add_argument("--path", action="store_true", help="include the node sequence")
    q.add_argument("--fallback", action="store_true", help="run an exact search when vicinities miss")
    q.set_defaults(func=cmd_query)

    st = sub.add_parser("stats", help="print index header and size breakdown")
    st.add_argument("--index", required=True)
    graph_args(st, required=False)
    st.set_defaults(func=cmd_stats)

    be = sub.add_parser("bench", help="run the measurement suite and write CSV files")
    src = be.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", help="edge-list file")
    src.add_argument("--ba", nargs=2, type=int, metavar=("N", "K"), help="Barabasi-Albert graph")
    be.add_argument("--weighted", action="store_true")
    be.add_argument("--graph-seed", type=int, default=7)
    be.add_argument("--config", help="JSON file with ExperimentConfig fields")
    be.add_argument("--alphas", help="comma-separated, fractions allowed (e.g. 1/16,1,4,16)")
    be.add_argument("--trials", type=int)
    be.add_argument("--nodes-per-trial", dest="nodes_per_trial", type=int)
    be.add_argument("--seed", type=int)
    be.add_argument("--out", default="bench_out")
    be.set_defaults(func=cmd_bench)

    sv = sub.add_parser("serve", help="HTTP query service")
    graph_args(sv)
    sv.add_argument("--index", required=True)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8080)
    sv.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
