"""Exact shortest-path oracle built from per-node vicinities."""

from .baselines import (SearchResult, SearchStats, WeightedGraphError, all_pairs_reference,
                        bfs_distance, bidirectional_bfs, dijkstra_distance)
from .build import (BuildError, LandmarkSet, LandmarkTable, Oracle, VicinityTable, build_landmark_tables,
                    build_oracle, build_vicinity, compute_boundary, sample_landmarks)
from .graph import (EdgeListParseError, Graph, GraphError, gen_barabasi_albert, gen_erdos_renyi,
                    largest_connected_component, parse_edge_list)
from .query import (Method, NodeRangeError, QueryResult, query_distance, query_path,
                    query_with_fallback)

__version__ = "0.1.0"
