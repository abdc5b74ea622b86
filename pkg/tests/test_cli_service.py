import json
import subprocess
import sys
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import pytest

from vicinity import build_oracle
from vicinity.cli import EXIT_INDEX, EXIT_IO, EXIT_OK, EXIT_PARSE, EXIT_QUERY, EXIT_USAGE, load_graph, main
from vicinity.graph import gen_barabasi_albert
from vicinity.query import query_path
from vicinity.service import QueryContext, encode, serve_in_thread

GOLDEN = Path(__file__).parent / "golden"
PATH5 = GOLDEN / "path5.txt"
PATH11 = GOLDEN / "path11.txt"


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def strip_timing(line: str) -> dict:
    data = json.loads(line)
    data.pop("micros", None)
    return data


@pytest.fixture
def path5_index(tmp_path, capsys):
    out = tmp_path / "p5.idx"
    code, stdout, _ = run_cli(capsys, "build", "--graph", PATH5, "--alpha", 2, "--seed", 701, "--out", out)
    assert code == EXIT_OK
    stats = json.loads(stdout)
    assert stats["landmark_count"] == 1 and stats["index_bytes"] == out.stat().st_size
    return out


@pytest.fixture
def path11_index(tmp_path, capsys):
    out = tmp_path / "p11.idx"
    assert run_cli(capsys, "build", "--graph", PATH11, "--alpha", 3, "--seed", 447, "--out", out)[0] == EXIT_OK
    return out


def golden(name):
    return json.loads((GOLDEN / name).read_text())


def test_build_writes_index_and_id_map(path5_index):
    assert path5_index.exists()
    assert Path(str(path5_index) + ".ids").read_text().splitlines()[:2] == ["0 0", "1 1"]


def test_query_golden_intersection(path5_index, capsys):
    code, out, _ = run_cli(capsys, "query", "--graph", PATH5, "--index", path5_index, 0, 4, "--path")
    assert code == EXIT_OK
    data = strip_timing(out)
    assert data == golden("query_path5_0_4.json")
    assert {k: data[k] for k in ("distance", "method", "path")} == {
        "distance": 4, "method": "INTERSECTION", "path": [0, 1, 2, 3, 4]}


def test_query_not_found_is_a_valid_answer(path11_index, capsys):
    code, out, _ = run_cli(capsys, "query", "--graph", PATH11, "--index", path11_index, 0, 10)
    assert code == EXIT_OK
    assert strip_timing(out) == golden("query_path11_0_10.json")


def test_query_fallback_golden(path11_index, capsys):
    code, out, _ = run_cli(capsys, "query", "--graph", PATH11, "--index", path11_index, 0, 10, "--path", "--fallback")
    assert code == EXIT_OK
    assert strip_timing(out) == golden("query_path11_0_10_fallback.json")


def test_query_same_node(path5_index, capsys):
    code, out, _ = run_cli(capsys, "query", "--graph", PATH5, "--index", path5_index, 3, 3)
    assert json.loads(out)["distance"] == 0


def test_query_unknown_node(path5_index, capsys):
    code, out, _ = run_cli(capsys, "query", "--graph", PATH5, "--index", path5_index, 0, 99)
    assert code == EXIT_QUERY
    assert "unknown node" in json.loads(out)["error"]


def test_build_alpha_zero_is_usage_error(tmp_path, capsys):
    code, _, err = run_cli(capsys, "build", "--graph", PATH5, "--alpha", 0, "--out", tmp_path / "x")
    assert code == EXIT_USAGE and "alpha" in err


def test_build_missing_file(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "build", "--graph", tmp_path / "none.txt", "--out", tmp_path / "x")
    assert code == EXIT_IO


def test_build_malformed_file(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n1 two\n")
    code, _, err = run_cli(capsys, "build", "--graph", bad, "--out", tmp_path / "x")
    assert code == EXIT_PARSE and "line 2" in err


def test_query_with_wrong_graph(path5_index, capsys):
    code, _, err = run_cli(capsys, "query", "--graph", PATH11, "--index", path5_index, 0, 4)
    assert code == EXIT_INDEX and "GraphMismatchError" in err


def test_query_corrupt_index(path5_index, tmp_path, capsys):
    bad = tmp_path / "bad.idx"
    bad.write_bytes(path5_index.read_bytes()[:-7])
    code, _, _ = run_cli(capsys, "query", "--graph", PATH5, "--index", bad, 0, 4)
    assert code == EXIT_INDEX


def test_stats(path5_index, capsys):
    code, out, _ = run_cli(capsys, "stats", "--index", path5_index, "--graph", PATH5)
    data = json.loads(out)
    assert code == EXIT_OK
    assert data["header"]["n"] == 5 and data["header"]["landmark_count"] == 1
    assert data["sizes"]["landmark_table_entries"] == 5


def test_bench_subcommand(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "bench", "--ba", 400, 2, "--alphas", "1/4,4", "--trials", 2,
                           "--nodes-per-trial", 30, "--out", tmp_path / "b")
    assert code == EXIT_OK
    data = json.loads(out)
    assert set(data["intersection_mean"]) == {"0.25", "4.0"}
    assert (tmp_path / "b" / "latency.csv").exists()


def test_bench_rejects_bad_config(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "bench", "--ba", 50, 2, "--nodes-per-trial", 500, "--out", tmp_path / "b")
    assert code == EXIT_USAGE


def test_labels_survive_remapping(tmp_path, capsys):
    f = tmp_path / "g.txt"
    f.write_text("100 200\n200 300\n300 400\n400 500\n")
    idx = tmp_path / "g.idx"
    assert run_cli(capsys, "build", "--graph", f, "--alpha", 2, "--seed", 701, "--out", idx)[0] == EXIT_OK
    code, out, _ = run_cli(capsys, "query", "--graph", f, "--index", idx, 100, 500, "--path")
    data = json.loads(out)
    assert data["distance"] == 4 and data["path"] == [100, 200, 300, 400, 500]


def test_console_script_entry_point(path5_index):
    proc = subprocess.run([sys.executable, "-m", "vicinity.cli", "query", "--graph", str(PATH5),
                           "--index", str(path5_index), "0", "4"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["distance"] == 4


# --- service ---

@pytest.fixture
def server(path5_index):
    g, labels = load_graph(PATH5)
    from vicinity.persistence import load_oracle
    ctx = QueryContext(load_oracle(path5_index, g), labels)
    srv, thread = serve_in_thread(ctx)
    yield srv, ctx
    srv.shutdown()
    srv.server_close()


def fetch(srv, path):
    host, port = srv.server_address[:2]
    try:
        with urllib.request.urlopen(f"http://{host}:{port}{path}", timeout=10) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read()


def test_distance_endpoint(server):
    status, body = fetch(server[0], "/distance?s=0&t=4")
    assert status == 200 and json.loads(body)["distance"] == 4


def test_bad_input_is_400(server):
    for q in ("/distance?s=abc&t=1", "/distance?s=1", "/path?s=0&t=4&fallback=2"):
        assert fetch(server[0], q)[0] == 400


def test_unknown_node_and_route_are_404(server):
    assert fetch(server[0], "/distance?s=0&t=77")[0] == 404
    assert fetch(server[0], "/nowhere")[0] == 404


def test_healthz(server):
    status, body = fetch(server[0], "/healthz")
    data = json.loads(body)
    assert status == 200 and data["status"] == "ok" and data["n"] == 5


def test_service_matches_cli_bytes(server, path5_index, capsys):
    srv, _ = server
    for s, t in [(0, 4), (1, 3), (2, 2), (4, 2)]:
        _, cli_out, _ = run_cli(capsys, "query", "--graph", PATH5, "--index", path5_index, s, t, "--path")
        _, body = fetch(srv, f"/path?s={s}&t={t}")
        assert encode(strip_timing(body)) == encode(strip_timing(cli_out))


def test_concurrent_path_requests(tmp_path):
    g = gen_barabasi_albert(300, 2, 3)
    oracle = build_oracle(g, 4.0, 1)
    ctx = QueryContext(oracle)
    pairs = [(i % 300, (i * 37 + 11) % 300) for i in range(100)]
    expected = {}
    for s, t in pairs:
        want = ctx.answer(s, t, want_path=True, fallback=True)
        want.pop("micros")
        expected[(s, t)] = want
    srv, _ = serve_in_thread(ctx)
    try:
        with ThreadPoolExecutor(max_workers=16) as pool:
            got = list(pool.map(lambda p: fetch(srv, f"/path?s={p[0]}&t={p[1]}&fallback=1"), pairs))
    finally:
        srv.shutdown()
        srv.server_close()
    for (s, t), (status, body) in zip(pairs, got):
        assert status == 200
        assert strip_timing(body) == expected[(s, t)]
        assert strip_timing(body)["distance"] == query_path(oracle, s, t).distance or \
            strip_timing(body)["method"] == "FALLBACK"
