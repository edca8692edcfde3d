# Copyright 2024-present The sextant authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Tests for the neighborgraph.neighborhood module."""

import unittest

import numpy as np

from neighborgraph.dataset_io import FeatureMatrix
from neighborgraph.exceptions import InvalidArgumentError
from neighborgraph.knn import WeightedGraph, exact_knn
from neighborgraph.neighborhood import adjacent_neighbors, knn_neighborhoods, path_neighbors


def floyd_warshall(graph):
    dist = np.full((graph.n_vertices, graph.n_vertices), np.inf)
    np.fill_diagonal(dist, 0.0)
    for u, v, w in zip(graph.rows, graph.cols, graph.weights):
        dist[u, v] = dist[v, u] = w
    for via in range(graph.n_vertices):
        dist = np.minimum(dist, dist[:, via : via + 1] + dist[via : via + 1, :])
    return dist


def random_connected_graph(rng, n, extra):
    # A random spanning path keeps the graph connected.
    order = rng.permutation(n)
    rows = np.concatenate([order[:-1], rng.integers(0, n, extra)])
    cols = np.concatenate([order[1:], rng.integers(0, n, extra)])
    return WeightedGraph(n, rows, cols, rng.uniform(0.1, 2.0, rows.size))


class TestAdjacentNeighbors(unittest.TestCase):
    def test_sorted_by_distance(self):
        graph = WeightedGraph(4, [0, 0, 0, 1], [1, 2, 3, 2], [3.0, 1.0, 2.0, 0.5])
        neighborhoods = adjacent_neighbors(graph)
        self.assertEqual(neighborhoods.row(0), [(2, 1.0), (3, 2.0), (1, 3.0)])
        self.assertEqual(neighborhoods.row(2), [(1, 0.5), (0, 1.0)])
        self.assertEqual(neighborhoods.mode, "adjacent")

    def test_isolated_vertex_has_empty_row(self):
        neighborhoods = adjacent_neighbors(WeightedGraph(3, [0], [1], [1.0]))
        self.assertEqual(neighborhoods.row(2), [])
        self.assertEqual(neighborhoods.sizes().tolist(), [1, 1, 0])

    def test_matches_adjacency(self):
        graph = random_connected_graph(np.random.default_rng(0), 30, 40)
        neighborhoods = adjacent_neighbors(graph)
        for i in range(graph.n_vertices):
            indices, weights = graph.neighbors(i)
            row = neighborhoods.row(i)
            self.assertEqual(sorted(index for index, _ in row), indices.tolist())
            self.assertEqual([d for _, d in row], sorted(weights.tolist()))


class TestKnnNeighborhoods(unittest.TestCase):
    def test_rows_are_knn_rows(self):
        knn = exact_knn(FeatureMatrix([[0.0], [1.0], [3.0]]), 2)
        neighborhoods = knn_neighborhoods(knn)
        for i in range(3):
            self.assertEqual(neighborhoods.row(i), knn.row(i))


class TestPathNeighbors(unittest.TestCase):
    def test_two_hop_neighbors_displace_far_edges(self):
        a, b, c, d, e, f = range(6)
        graph = WeightedGraph(
            6, [a, a, a, b, e], [b, c, d, e, f], [1.0, 2.0, 3.0, 0.5, 0.4]
        )
        row = path_neighbors(graph, 3).row(a)
        self.assertEqual([index for index, _ in row], [b, e, f])
        np.testing.assert_allclose([dist for _, dist in row], [1.0, 1.5, 1.9])

    def test_single_edge(self):
        neighborhoods = path_neighbors(WeightedGraph(2, [0], [1], [0.25]), 1)
        self.assertEqual(neighborhoods.row(0), [(1, 0.25)])
        self.assertEqual(neighborhoods.row(1), [(0, 0.25)])

    def test_full_rows_match_floyd_warshall(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            n = int(rng.integers(5, 40))
            graph = random_connected_graph(rng, n, n)
            oracle = floyd_warshall(graph)
            neighborhoods = path_neighbors(graph, n)
            for i in range(n):
                row = neighborhoods.row(i)
                self.assertEqual(len(row), n - 1)
                for index, dist in row:
                    self.assertNotEqual(index, i)
                    self.assertAlmostEqual(dist, oracle[i, index])

    def test_properties(self):
        rng = np.random.default_rng(2)
        graph = random_connected_graph(rng, 50, 80)
        neighborhoods = path_neighbors(graph, 6)
        self.assertTrue(np.all(neighborhoods.sizes() == 6))
        oracle = floyd_warshall(graph)
        for i in range(graph.n_vertices):
            distances = [dist for _, dist in neighborhoods.row(i)]
            self.assertEqual(distances, sorted(distances))
            for index, dist in neighborhoods.row(i):
                self.assertAlmostEqual(dist, oracle[index, i])
                if (min(i, index), max(i, index)) in graph.edge_set():
                    self.assertLessEqual(dist, graph.weight(i, index) + 1e-12)

    def test_fewer_when_unreachable(self):
        graph = WeightedGraph(5, [0, 2, 3], [1, 3, 4], [1.0, 1.0, 1.0])
        neighborhoods = path_neighbors(graph, 3)
        self.assertEqual(neighborhoods.sizes().tolist(), [1, 1, 2, 2, 2])

    def test_reduces_to_adjacent_truncation(self):
        rng = np.random.default_rng(3)
        n = 12
        rows, cols = np.triu_indices(n, 1)
        graph = WeightedGraph(n, rows, cols, rng.uniform(1.0, 1.5, rows.size))
        paths = path_neighbors(graph, 4)
        adjacent = adjacent_neighbors(graph)
        for i in range(n):
            self.assertEqual(paths.row(i), adjacent.row(i)[:4])

    def test_ties_break_by_index(self):
        graph = WeightedGraph(4, [0, 0, 0], [3, 2, 1], [1.0, 1.0, 1.0])
        self.assertEqual(path_neighbors(graph, 2).row(0), [(1, 1.0), (2, 1.0)])

    def test_ties_through_zero_weight_edge(self):
        # vertex 1 duplicates vertex 2 and is only reachable through it
        graph = WeightedGraph(4, [0, 2, 0], [2, 1, 3], [1.0, 0.0, 1.0])
        self.assertEqual(path_neighbors(graph, 1).row(0), [(1, 1.0)])
        self.assertEqual(path_neighbors(graph, 2).row(0), [(1, 1.0), (2, 1.0)])
        self.assertEqual(path_neighbors(graph, 3).row(0), [(1, 1.0), (2, 1.0), (3, 1.0)])
        self.assertEqual(path_neighbors(graph, 1).row(1), [(2, 0.0)])

    def test_invalid_k_new(self):
        with self.assertRaises(InvalidArgumentError):
            path_neighbors(WeightedGraph(2, [0], [1], [1.0]), 0)


if __name__ == "__main__":
    unittest.main()
