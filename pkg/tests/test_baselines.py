import random

import numpy as np
import pytest

from vicinity import parse_edge_list
from vicinity.baselines import (SEARCHES, WeightedGraphError, all_pairs_reference, bfs_distance, bidirectional_bfs,
                                dijkstra_distance, path_length, single_source_distances)
from vicinity.graph import Graph, gen_barabasi_albert, gen_erdos_renyi, with_random_weights

from conftest import PATH5, assert_valid_walk


def cycle(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def test_bfs_path():
    g = parse_edge_list(PATH5)
    res = bfs_distance(g, 0, 4)
    assert res.distance == 4 and res.path == [0, 1, 2, 3, 4]


@pytest.mark.parametrize("search", [bfs_distance, bidirectional_bfs, dijkstra_distance])
def test_same_node(search):
    res = search(parse_edge_list(PATH5), 3, 3)
    assert res.distance == 0 and res.path == [3]


@pytest.mark.parametrize("search", [bfs_distance, bidirectional_bfs, dijkstra_distance])
def test_disjoint_components(search):
    g = Graph.from_edges(4, [(0, 1), (2, 3)])
    res = search(g, 0, 3)
    assert res.distance is None and res.path is None


def test_bidirectional_settles_no_more_than_bfs():
    g = parse_edge_list(PATH5)
    bi = bidirectional_bfs(g, 0, 4)
    assert bi.distance == 4
    assert bi.stats.settled_nodes <= bfs_distance(g, 0, 4).stats.settled_nodes


def test_bidirectional_cycle():
    res = bidirectional_bfs(cycle(10), 0, 5)
    assert res.distance == 5
    assert_valid_walk(cycle(10), res.path, 0, 5, 5)


def test_dijkstra_weighted_triangle():
    g = parse_edge_list("0 1 1\n1 2 1\n0 2 3", weighted=True)
    res = dijkstra_distance(g, 0, 2)
    assert res.distance == 2 and res.path == [0, 1, 2]


def test_dijkstra_matches_bfs_on_unit_weights():
    g = gen_barabasi_albert(400, 2, 3)
    rng = random.Random(0)
    for _ in range(100):
        s, t = rng.randrange(g.n), rng.randrange(g.n)
        assert dijkstra_distance(g, s, t).distance == bfs_distance(g, s, t).distance


def test_three_searches_agree_with_paths():
    g = gen_erdos_renyi(120, 0.03, seed=2)
    apsp = all_pairs_reference(g)
    for s in range(0, g.n, 3):
        for t in range(g.n):
            want = None if np.isinf(apsp[s, t]) else apsp[s, t]
            for search in SEARCHES.values():
                res = search(g, s, t)
                assert res.distance == want
                if want is not None:
                    assert_valid_walk(g, res.path, s, t, want)


def test_bfs_rejects_weighted():
    g = with_random_weights(gen_barabasi_albert(20, 2, 1), 1)
    with pytest.raises(WeightedGraphError):
        bfs_distance(g, 0, 1)
    with pytest.raises(WeightedGraphError):
        bidirectional_bfs(g, 0, 1)


def test_all_pairs_path_graph():
    m = all_pairs_reference(Graph.from_edges(6, [(i, i + 1) for i in range(5)]))
    i, j = np.indices(m.shape)
    assert np.array_equal(m, np.abs(i - j))


def test_all_pairs_k4():
    k4 = Graph.from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    assert np.array_equal(all_pairs_reference(k4), 1 - np.eye(4))


def test_all_pairs_is_symmetric_and_weighted_matches_dijkstra():
    g = with_random_weights(gen_barabasi_albert(60, 2, 4), 2, zero_fraction=0.2)
    m = all_pairs_reference(g)
    assert np.array_equal(m, m.T)
    for s in range(0, 60, 7):
        for t in range(60):
            assert dijkstra_distance(g, s, t).distance == pytest.approx(m[s, t])


def test_all_pairs_cap():
    with pytest.raises(ValueError):
        all_pairs_reference(gen_barabasi_albert(50, 2, 1), cap=10)


def test_single_source_unreachable_is_inf():
    d = single_source_distances(Graph.from_edges(3, [(0, 1)]), 0)
    assert d.tolist() == [0, 1, float("inf")]


def test_path_length_rejects_non_edges():
    g = parse_edge_list(PATH5)
    assert path_length(g, [0, 1, 2]) == 2
    with pytest.raises(KeyError):
        path_length(g, [0, 2])
