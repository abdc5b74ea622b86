"""Measurement harness: intersection coverage, boundary sizes, radii, latency.

Every trial draws its node sample and its landmark seed from the run seed,
and reuses both across the whole alpha sweep so runs at different alphas are
paired. Outputs are CSV files plus a JSON metadata sidecar.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import platform
import random
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import bfs_distance, bidirectional_bfs, dijkstra_distance
from .build import build_oracle, sample_landmarks
from .graph import Graph
from .query import Method, query_distance

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = (1 / 16, 1 / 8, 1 / 4, 1 / 2, 1, 2, 4, 8, 16)

CSV_COLUMNS = {
    "intersection.csv": ("alpha", "trial", "fraction"),
    "boundary_cdf.csv": ("quantile", "fraction_of_n"),
    "radius.csv": ("alpha", "mean_hops"),
    "latency.csv": ("method", "mean_us", "worst_us", "mean_probes", "speedup"),
}

# reported on real social graphs at alpha = 4; kept for side-by-side output
PUBLISHED_REFERENCE = {
    "worst_boundary_fraction": 0.004,
    "mean_radius_hops": 3.5,
    "mean_query_ms": {"DBLP": 0.094, "Flickr": 0.228, "Orkut": 0.294, "LiveJournal": 0.363},
    "speedup_vs_bidirectional": {"DBLP": 198, "Flickr": 368, "Orkut": 2588, "LiveJournal": 431},
}


class BenchConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    graph_source: str = "synthetic"
    alphas: tuple = DEFAULT_ALPHAS
    nodes_per_trial: int = 200
    trials: int = 5
    seed: int = 0
    pair_mode: str = "all-pairs-of-sample"
    boundary_alpha: float = 4.0
    latency_alpha: float = 4.0
    latency_pairs: int = 1000
    bfs_pairs: int = 20
    crosscheck_fraction: float = 0.01
    trim_fraction: float = 0.01

    def validate(self, n: int | None = None) -> None:
        if not self.alphas or any(not a > 0 for a in self.alphas):
            raise BenchConfigError("alphas must be positive")
        if self.nodes_per_trial < 2:
            raise BenchConfigError("nodes_per_trial must be at least 2")
        if self.trials < 1:
            raise BenchConfigError("trials must be at least 1")
        if self.pair_mode != "all-pairs-of-sample":
            raise BenchConfigError(f"unsupported pair_mode {self.pair_mode!r}")
        if n is not None and self.nodes_per_trial > n:
            raise BenchConfigError(f"nodes_per_trial={self.nodes_per_trial} exceeds n={n}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        if "alphas" in known:
            known["alphas"] = tuple(float(a) for a in known["alphas"])
        return cls(**known)

    def trial_seed(self, trial: int) -> int:
        return self.seed * 1000 + trial

    def trial_sample(self, n: int, trial: int) -> list[int]:
        return sorted(random.Random(self.trial_seed(trial)).sample(range(n), self.nodes_per_trial))


@dataclass
class BenchReport:
    intersection: list = field(default_factory=list)
    intersection_mean: dict = field(default_factory=dict)
    boundary_cdf: list = field(default_factory=list)
    boundary_fractions: list = field(default_factory=list)
    vicinity_sizes: list = field(default_factory=list)
    radius: list = field(default_factory=list)
    latency: list = field(default_factory=list)
    speedup: float | None = None
    metadata: dict = field(default_factory=dict)


class _OracleCache:
    """Partial oracles keyed by (alpha, trial), built over the trial's sample."""

    def __init__(self, g: Graph, cfg: ExperimentConfig):
        self.g = g
        self.cfg = cfg
        self._store = {}

    def get(self, alpha: float, trial: int):
        key = (float(alpha), trial)
        if key not in self._store:
            nodes = self.cfg.trial_sample(self.g.n, trial)
            self._store[key] = build_oracle(self.g, alpha, self.cfg.trial_seed(trial), nodes=nodes)
        return self._store[key]


def _exact(g: Graph, s: int, t: int):
    return (dijkstra_distance if g.weighted else bidirectional_bfs)(g, s, t).distance


def run_intersection_experiment(cfg: ExperimentConfig, g: Graph, cache=None, checks: dict | None = None) -> list:
    """Fraction of sampled pairs the oracle answers without a fallback.

    Returns rows ``(alpha, trial, fraction)``. A ``crosscheck_fraction`` share
    of the finite answers is re-verified with an exact search; mismatches are
    tallied into ``checks``.
    """
    cfg.validate(g.n)
    cache = cache or _OracleCache(g, cfg)
    checks = checks if checks is not None else {}
    checks.setdefault("crosschecked", 0)
    checks.setdefault("mismatches", 0)
    rows = []
    for trial in range(cfg.trials):
        sample = cfg.trial_sample(g.n, trial)
        pairs = list(itertools.combinations(sample, 2))
        rng = random.Random(cfg.trial_seed(trial) + 17)
        for alpha in cfg.alphas:
            oracle = cache.get(alpha, trial)
            found = 0
            for s, t in pairs:
                res = query_distance(oracle, s, t)
                if res.found:
                    found += 1
                    if rng.random() < cfg.crosscheck_fraction:
                        checks["crosschecked"] += 1
                        if _exact(g, s, t) != res.distance:
                            checks["mismatches"] += 1
            rows.append((float(alpha), trial, found / len(pairs)))
            log.info("alpha=%g trial=%d fraction=%.4f", alpha, trial, found / len(pairs))
    return rows


def summarize_intersection(rows: list) -> dict:
    by_alpha: dict[float, list] = {}
    for alpha, _, frac in rows:
        by_alpha.setdefault(alpha, []).append(frac)
    return {a: float(np.mean(v)) for a, v in sorted(by_alpha.items())}


def paired_monotonicity(rows: list, z: float = 3.0) -> list[dict]:
    """Check consecutive alphas for a drop larger than paired-trial noise.

    For each neighbouring pair of alphas the per-trial differences are
    averaged; a step passes when ``mean_diff >= -z * stderr``.
    """
    table: dict[float, dict[int, float]] = {}
    for alpha, trial, frac in rows:
        table.setdefault(alpha, {})[trial] = frac
    alphas = sorted(table)
    out = []
    for lo, hi in zip(alphas, alphas[1:]):
        trials = sorted(set(table[lo]) & set(table[hi]))
        diffs = np.array([table[hi][k] - table[lo][k] for k in trials])
        se = float(diffs.std(ddof=1) / math.sqrt(len(diffs))) if len(diffs) > 1 else 0.0
        mean = float(diffs.mean())
        out.append({"alpha_lo": lo, "alpha_hi": hi, "mean_diff": mean, "stderr": se,
                    "ok": mean >= -z * se - 1e-12})
    return out


def run_boundary_cdf(cfg: ExperimentConfig, g: Graph, cache=None, quantiles=None):
    """Empirical CDF of boundary size / n over the sampled nodes.

    Returns ``(points, fractions, vicinity_sizes)`` where ``points`` are
    ``(quantile, fraction_of_n)`` rows.
    """
    cfg.validate(g.n)
    cache = cache or _OracleCache(g, cfg)
    fractions = []
    sizes = []
    for trial in range(cfg.trials):
        oracle = cache.get(cfg.boundary_alpha, trial)
        for u in cfg.trial_sample(g.n, trial):
            vic = oracle.vicinities[u]
            fractions.append(len(vic.boundary) / g.n)
            sizes.append(len(vic))
    if quantiles is None:
        quantiles = np.linspace(0.0, 1.0, 101)
    vals = np.quantile(np.array(fractions), quantiles, method="inverted_cdf")
    points = [(round(float(q), 6), float(v)) for q, v in zip(quantiles, vals)]
    return points, fractions, sizes


def run_radius_stats(cfg: ExperimentConfig, g: Graph) -> list:
    """Mean nearest-landmark distance over all nodes per alpha, averaged over trials."""
    cfg.validate(g.n)
    rows = []
    for alpha in cfg.alphas:
        means = [float(np.mean(sample_landmarks(g, alpha, cfg.trial_seed(trial)).radius))
                 for trial in range(cfg.trials)]
        rows.append((float(alpha), float(np.mean(means))))
    return rows


def _trimmed_mean(values, frac: float) -> float:
    arr = np.sort(np.asarray(values, dtype=float))
    k = int(len(arr) * frac)
    if k and len(arr) > 2 * k:
        arr = arr[k:len(arr) - k]
    return float(arr.mean())


def _time_calls(fn, pairs, warmup: bool = True):
    if warmup:
        for s, t in pairs:
            fn(s, t)
    clock = time.perf_counter_ns
    out = []
    times = []
    for s, t in pairs:
        a = clock()
        r = fn(s, t)
        times.append((clock() - a) / 1000.0)
        out.append(r)
    return times, out


def run_latency_bench(cfg: ExperimentConfig, g: Graph, cache=None, checks: dict | None = None):
    """Single-threaded per-query timing of the oracle against exact searches.

    Oracle rows are reported both over all timed pairs and over the pairs it
    answered. Returns ``(rows, speedup, details)``; ``speedup`` compares the
    bidirectional BFS mean with the oracle mean over answered pairs.
    """
    cfg.validate(g.n)
    cache = cache or _OracleCache(g, cfg)
    checks = checks if checks is not None else {}
    oracle = cache.get(cfg.latency_alpha, 0)
    sample = cfg.trial_sample(g.n, 0)
    pairs = list(itertools.combinations(sample, 2))
    random.Random(cfg.trial_seed(0) + 29).shuffle(pairs)
    # oracle queries are cheap: time every pair; exact searches get a prefix
    base_pairs = pairs[:max(cfg.latency_pairs, 1)]

    times, results = _time_calls(lambda s, t: query_distance(oracle, s, t), pairs)
    answered = [i for i, r in enumerate(results) if r.found]
    bound_violations = 0
    for (s, t), r in zip(pairs, results):
        vs, vt = oracle.vicinities[s], oracle.vicinities[t]
        if r.probes > min(len(vs.boundary), len(vt.boundary)) + 4:
            bound_violations += 1
    checks["probe_bound_violations"] = bound_violations

    exact = dijkstra_distance if g.weighted else bidirectional_bfs
    bidi_times, bidi_res = _time_calls(lambda s, t: exact(g, s, t), base_pairs)
    mismatches = sum(1 for i in answered if i < len(base_pairs) and bidi_res[i].distance != results[i].distance)
    checks["latency_mismatches"] = mismatches
    bidi_name = "dijkstra" if g.weighted else "bidirectional_bfs"

    def row(name, ts, probes):
        return {"method": name, "mean_us": _trimmed_mean(ts, cfg.trim_fraction),
                "worst_us": float(max(ts)), "mean_probes": float(np.mean(probes)) if probes else 0.0,
                "raw_mean_us": float(np.mean(ts)), "count": len(ts)}

    rows = [row("oracle_all", times, [r.probes for r in results])]
    if answered:
        rows.append(row("oracle_answered", [times[i] for i in answered], [results[i].probes for i in answered]))
    inter = [i for i in answered if results[i].method is Method.INTERSECTION]
    if inter:
        rows.append(row("oracle_intersection", [times[i] for i in inter], [results[i].probes for i in inter]))
    rows.append(row(bidi_name, bidi_times, [r.stats.settled_nodes for r in bidi_res]))
    if not g.weighted and cfg.bfs_pairs:
        few = base_pairs[:cfg.bfs_pairs]
        bfs_times, bfs_res = _time_calls(lambda s, t: bfs_distance(g, s, t), few, warmup=False)
        rows.append(row("bfs", bfs_times, [r.stats.settled_nodes for r in bfs_res]))
    base = next(r["mean_us"] for r in rows if r["method"] == bidi_name)
    for r in rows:
        r["speedup"] = base / r["mean_us"] if r["mean_us"] > 0 else None
    headline = next((r for r in rows if r["method"] == "oracle_answered"), rows[0])
    details = {"pairs": len(pairs), "baseline_pairs": len(base_pairs), "answered": len(answered), "intersection": len(inter),
               "probe_bound_violations": bound_violations, "mismatches": mismatches,
               "bfs_pairs": min(cfg.bfs_pairs, len(pairs)) if not g.weighted else 0}
    return rows, headline["speedup"], details


def hardware_note() -> dict:
    return {"platform": platform.platform(), "machine": platform.machine(),
            "processor": platform.processor() or None, "python": sys.version.split()[0]}


def run_all(cfg: ExperimentConfig, g: Graph, preprocessing: str = "") -> BenchReport:
    cfg.validate(g.n)
    t0 = time.perf_counter()
    cache = _OracleCache(g, cfg)
    checks: dict = {}
    report = BenchReport()
    report.intersection = run_intersection_experiment(cfg, g, cache, checks)
    report.intersection_mean = summarize_intersection(report.intersection)
    report.boundary_cdf, report.boundary_fractions, report.vicinity_sizes = run_boundary_cdf(cfg, g, cache)
    report.radius = run_radius_stats(cfg, g)
    report.latency, report.speedup, lat_details = run_latency_bench(cfg, g, cache, checks)
    report.metadata = {
        "config": asdict(cfg),
        "graph": {"n": g.n, "m": g.m, "weighted": g.weighted, "fingerprint": g.fingerprint().hex(),
                  "preprocessing": preprocessing},
        "hardware": hardware_note(),
        "checks": checks,
        "monotonicity": paired_monotonicity(report.intersection),
        "latency": lat_details,
        "timing": {"clock": "perf_counter_ns", "threads": 1, "warmup_pass": True,
                   "mean": f"{cfg.trim_fraction:.0%} trimmed mean per side", "worst": "max",
                   "bfs_policy": "early exit when the target is discovered",
                   "oracle_rows": "oracle_all times every pair; oracle_answered and "
                                  "oracle_intersection keep only pairs the oracle resolved"},
        "published_reference": PUBLISHED_REFERENCE,
        "seconds": round(time.perf_counter() - t0, 3),
    }
    return report


def write_report(report: BenchReport, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = {
        "intersection.csv": report.intersection,
        "boundary_cdf.csv": report.boundary_cdf,
        "radius.csv": report.radius,
        "latency.csv": [tuple(r[c] for c in CSV_COLUMNS["latency.csv"]) for r in report.latency],
    }
    paths = {}
    for name, data in rows.items():
        path = out / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS[name])
            w.writerows(data)
        paths[name] = path
    meta = dict(report.metadata)
    meta["summary"] = {
        "intersection_mean": {str(k): v for k, v in report.intersection_mean.items()},
        "max_boundary_fraction": max(report.boundary_fractions) if report.boundary_fractions else None,
        "speedup": report.speedup,
        "latency_rows": report.latency,
    }
    path = out / "run_metadata.json"
    path.write_text(json.dumps(meta, indent=2, default=str), encoding="utf-8")
    paths["run_metadata.json"] = path
    return paths
