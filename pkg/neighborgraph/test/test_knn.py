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

"""Tests for the neighborgraph.knn module."""

import unittest

import numpy as np
import scipy.sparse

from neighborgraph.dataset_io import FeatureMatrix
from neighborgraph.exceptions import InvalidArgumentError
from neighborgraph.knn import WeightedGraph, distance, exact_knn, mutual_knn, symmetrized_knn


def brute_force_knn(points, k):
    dist = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
    indices = []
    for i in range(points.shape[0]):
        ranked = sorted((d, j) for j, d in enumerate(dist[i]) if j != i)
        indices.append([j for _, j in ranked[:k]])
    return np.array(indices), dist


class TestDistance(unittest.TestCase):
    def test_euclidean(self):
        self.assertEqual(distance([0, 0], [3, 4], "euclidean"), 5.0)

    def test_jaccard_uses_nonzero_support(self):
        self.assertAlmostEqual(distance([1, 1, 0], [1, 0, 1], "jaccard"), 2 / 3)
        self.assertAlmostEqual(distance([5, 2, 0], [1, 0, 9], "jaccard"), 2 / 3)

    def test_cosine_orthogonal(self):
        self.assertAlmostEqual(distance([1, 0], [0, 1], "cosine"), 1.0)

    def test_degenerate_conventions(self):
        self.assertEqual(distance([0, 0], [1, 2], "cosine"), 1.0)
        self.assertEqual(distance([0, 0, 0], [0, 0, 0], "jaccard"), 0.0)

    def test_symmetric_nonnegative_zero_on_identity(self):
        rng = np.random.default_rng(3)
        for metric in ("euclidean", "cosine", "jaccard"):
            for _ in range(20):
                x = rng.integers(0, 3, size=6).astype(float)
                y = rng.integers(0, 3, size=6).astype(float)
                self.assertAlmostEqual(distance(x, y, metric), distance(y, x, metric))
                self.assertGreaterEqual(distance(x, y, metric), 0.0)
                if np.any(x):
                    self.assertAlmostEqual(distance(x, x, metric), 0.0)

    def test_unknown_metric(self):
        with self.assertRaises(InvalidArgumentError):
            distance([0], [1], "manhattan")


class TestExactKnn(unittest.TestCase):
    def test_line(self):
        knn = exact_knn(FeatureMatrix([[0.0], [1.0], [3.0]]), 1)
        self.assertEqual(knn.indices[:, 0].tolist(), [1, 0, 1])
        self.assertEqual(knn.distances[:, 0].tolist(), [1.0, 1.0, 2.0])

    def test_unit_square(self):
        corners = FeatureMatrix([[0, 0], [1, 0], [0, 1], [1, 1]])
        knn = exact_knn(corners, 2)
        self.assertEqual(knn.indices.tolist(), [[1, 2], [0, 3], [0, 3], [1, 2]])
        self.assertTrue(np.all(knn.distances == 1.0))

    def test_matches_brute_force(self):
        points = np.random.default_rng(0).normal(size=(50, 5))
        knn = exact_knn(FeatureMatrix(points), 7, block_size=16)
        expected, dist = brute_force_knn(points, 7)
        np.testing.assert_array_equal(knn.indices, expected)
        np.testing.assert_allclose(knn.distances, np.take_along_axis(dist, expected, axis=1))

    def test_invariants(self):
        points = np.random.default_rng(1).normal(size=(120, 3))
        knn = exact_knn(FeatureMatrix(points), 9)
        self.assertFalse(np.any(knn.indices == np.arange(120)[:, None]))
        self.assertTrue(np.all(np.diff(knn.distances, axis=1) >= 0))
        self.assertTrue(np.all(np.isfinite(knn.distances)))

    def test_duplicates_are_neighbors(self):
        knn = exact_knn(FeatureMatrix([[0.0], [0.0], [5.0]]), 1)
        self.assertEqual(knn.indices[:, 0].tolist(), [1, 0, 1])
        self.assertEqual(knn.distances[0, 0], 0.0)

    def test_k_out_of_range(self):
        data = FeatureMatrix(np.zeros((3, 2)))
        for k in (0, 3, 4):
            with self.assertRaises(InvalidArgumentError):
                exact_knn(data, k)

    def test_sparse_matches_dense(self):
        rng = np.random.default_rng(2)
        dense = rng.integers(0, 3, size=(40, 12)).astype(float) * (rng.random((40, 12)) < 0.4)
        dense[0] = 0.0
        for metric in ("euclidean", "cosine", "jaccard"):
            a = exact_knn(FeatureMatrix(dense), 5, metric)
            b = exact_knn(FeatureMatrix(scipy.sparse.csr_matrix(dense)), 5, metric)
            np.testing.assert_allclose(a.distances, b.distances, atol=1e-6)

    def test_sparse_duplicates_are_exactly_zero(self):
        rng = np.random.default_rng(6)
        rows = rng.normal(scale=1000.0, size=(20, 30)) * (rng.random((20, 30)) < 0.3)
        dense = np.vstack([rows, rows[:10]])
        a = exact_knn(FeatureMatrix(dense), 4)
        b = exact_knn(FeatureMatrix(scipy.sparse.csr_matrix(dense)), 4)
        for i in range(10):
            self.assertEqual(b.row(i)[0], (20 + i, 0.0))
            self.assertEqual(b.row(20 + i)[0], (i, 0.0))
        np.testing.assert_array_equal(a.indices, b.indices)
        mutual_a, mutual_b = mutual_knn(a), mutual_knn(b)
        self.assertEqual(mutual_a.edge_set(), mutual_b.edge_set())
        np.testing.assert_allclose(mutual_a.weights, mutual_b.weights, rtol=1e-9)

    def test_truncate(self):
        points = np.random.default_rng(4).normal(size=(30, 2))
        large = exact_knn(FeatureMatrix(points), 8)
        small = exact_knn(FeatureMatrix(points), 3)
        np.testing.assert_array_equal(large.truncate(3).indices, small.indices)
        with self.assertRaises(InvalidArgumentError):
            small.truncate(8)


class TestWeightedGraph(unittest.TestCase):
    def test_canonical_edges(self):
        graph = WeightedGraph(4, [2, 0, 1, 3], [0, 2, 1, 1], [0.5, 0.7, 1.0, 0.0])
        self.assertEqual(graph.edge_set(), {(0, 2), (1, 3)})
        self.assertEqual(graph.weight(2, 0), 0.5)
        self.assertEqual(graph.weight(1, 3), 0.0)
        self.assertEqual(graph.degrees().tolist(), [1, 1, 1, 1])

    def test_rejects_negative_weights(self):
        with self.assertRaises(InvalidArgumentError):
            WeightedGraph(2, [0], [1], [-1.0])


class TestMutualKnn(unittest.TestCase):
    def test_two_points(self):
        graph = mutual_knn(exact_knn(FeatureMatrix([[0.0], [2.0]]), 1))
        self.assertEqual(graph.edge_set(), {(0, 1)})
        self.assertEqual(graph.weight(0, 1), 2.0)

    def test_isolated_vertex(self):
        knn = exact_knn(FeatureMatrix([[0.0], [1.0], [10.0], [11.0], [12.0]]), 1)
        graph = mutual_knn(knn)
        self.assertEqual(graph.edge_set(), {(0, 1), (2, 3)})
        self.assertEqual(graph.degrees()[4], 0)

    def test_subset_and_degree_bound(self):
        rng = np.random.default_rng(5)
        for k in (1, 4, 10):
            knn = exact_knn(FeatureMatrix(rng.normal(size=(80, 4))), k)
            graph = mutual_knn(knn)
            self.assertTrue(graph.edge_set() <= symmetrized_knn(knn).edge_set())
            self.assertLessEqual(graph.degrees().max(), k)
            rows = [set(row) for row in knn.indices.tolist()]
            for u, v in graph.edge_set():
                self.assertIn(v, rows[u])
                self.assertIn(u, rows[v])


if __name__ == "__main__":
    unittest.main()
