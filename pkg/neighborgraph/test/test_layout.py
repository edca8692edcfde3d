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

"""Tests for the neighborgraph.layout module."""

import unittest
from unittest import mock

import numpy as np
import scipy.sparse
from scipy.sparse.linalg import ArpackNoConvergence

from neighborgraph.configuration import CONFIG_DEFAULTS
from neighborgraph.dataset_io import make_blob_dataset
from neighborgraph.exceptions import InvalidArgumentError, NumericalError
from neighborgraph.fuzzy import FuzzyGraph, fuzzy_simplicial_set
from neighborgraph.knn import exact_knn
from neighborgraph.layout import (
    Embedding,
    attractive_gradient,
    curve_residual,
    curve_samples,
    fit_ab,
    low_dim_similarity,
    optimize_layout,
    repulsive_gradient,
    sampled_cross_entropy,
    spectral_eigenpairs,
    spectral_init,
    target_curve,
)
from neighborgraph.neighborhood import knn_neighborhoods


def graph_from_edges(n, edges):
    rows = [u for u, _, _ in edges] + [v for _, v, _ in edges]
    cols = [v for _, v, _ in edges] + [u for u, _, _ in edges]
    weights = [w for _, _, w in edges] * 2
    return FuzzyGraph(scipy.sparse.csr_matrix((weights, (rows, cols)), shape=(n, n)))


def random_connected_matrix(rng, n):
    dense = np.zeros((n, n))
    order = rng.permutation(n)
    for u, v in zip(order[:-1], order[1:]):
        dense[u, v] = dense[v, u] = rng.uniform(0.1, 1.0)
    for u, v in rng.integers(0, n, size=(2 * n, 2)):
        if u != v:
            dense[u, v] = dense[v, u] = rng.uniform(0.1, 1.0)
    return scipy.sparse.csr_matrix(dense)


def dense_laplacian(matrix):
    weights = matrix.toarray()
    scale = 1.0 / np.sqrt(weights.sum(axis=1))
    return np.eye(weights.shape[0]) - scale[:, None] * weights * scale[None, :]


def blob_graph(seed=0):
    data, _ = make_blob_dataset(n_points=60, n_centers=3, n_features=4, seed=seed)
    graph, _ = fuzzy_simplicial_set(knn_neighborhoods(exact_knn(data, 8)))
    return graph


class TestFitAB(unittest.TestCase):
    def test_known_values(self):
        curve = fit_ab(0.1)
        self.assertAlmostEqual(curve.a, 1.577, delta=0.02)
        self.assertAlmostEqual(curve.b, 0.895, delta=0.02)
        self.assertEqual(curve.min_dist, 0.1)

    def test_fit_quality(self):
        for min_dist in (0.0, 0.1, 0.5):
            curve = fit_ab(min_dist)
            t = curve_samples()
            error = np.abs(low_dim_similarity(t, curve.a, curve.b) - target_curve(t, min_dist))
            self.assertLessEqual(error.max(), 0.05)

    def test_decreasing_from_one(self):
        for min_dist in (0.0, 0.3, 1.0):
            curve = fit_ab(min_dist)
            self.assertGreater(curve.a, 0)
            self.assertGreater(curve.b, 0)
            values = low_dim_similarity(np.linspace(1e-6, 3.0, 200), curve.a, curve.b)
            self.assertAlmostEqual(values[0], 1.0, places=3)
            self.assertTrue(np.all(np.diff(values) < 0))

    def test_residual_envelope(self):
        self.assertLessEqual(curve_residual(fit_ab(1.0)), 10 * curve_residual(fit_ab(0.1)))

    def test_out_of_range(self):
        for min_dist in (-0.1, 1.5):
            with self.assertRaises(InvalidArgumentError):
                fit_ab(min_dist)


class TestSpectralInit(unittest.TestCase):
    def test_path_graph(self):
        embedding = spectral_init(graph_from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]), 1, seed=0)
        ends = embedding.coords[[0, 2], 0]
        self.assertLess(ends[0] * ends[1], 0)
        self.assertAlmostEqual(abs(embedding.coords[1, 0]), 0.0, places=2)
        self.assertAlmostEqual(np.abs(embedding.coords).max(), 10.0, places=2)

    def test_single_edge(self):
        embedding = spectral_init(graph_from_edges(2, [(0, 1, 1.0)]), 1, seed=3)
        first, second = embedding.coords[:, 0]
        self.assertLess(first * second, 0)
        self.assertAlmostEqual(abs(first), abs(second), places=3)

    def test_rayleigh_residual(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            matrix = random_connected_matrix(rng, 30)
            laplacian = dense_laplacian(matrix)
            values, vectors = spectral_eigenpairs(matrix, 2)
            for value, vector in zip(values, vectors.T):
                self.assertLessEqual(np.linalg.norm(laplacian @ vector - value * vector), 1e-6)
            self.assertGreater(values[0], 1e-8)

    def test_iterative_solver_residual(self):
        matrix = random_connected_matrix(np.random.default_rng(1), 30)
        laplacian = dense_laplacian(matrix)
        with mock.patch.dict(CONFIG_DEFAULTS, {"DENSE_EIGEN_LIMIT": 10}):
            values, vectors = spectral_eigenpairs(matrix, 2)
        expected = np.linalg.eigvalsh(laplacian)[1:3]
        np.testing.assert_allclose(values, expected, atol=1e-6)
        for value, vector in zip(values, vectors.T):
            self.assertLessEqual(np.linalg.norm(laplacian @ vector - value * vector), 1e-6)

    def test_disconnected_components(self):
        graph = graph_from_edges(
            7, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 0.5), (4, 5, 1.0), (5, 6, 1.0)]
        )
        embedding = spectral_init(graph, 2, seed=0)
        self.assertEqual(embedding.coords.shape, (7, 2))
        self.assertTrue(np.all(np.isfinite(embedding.coords)))
        first, second = embedding.coords[:4], embedding.coords[4:]
        self.assertGreater(second.min(), first.max())

    def test_fallback_on_eigensolver_failure(self):
        matrix = random_connected_matrix(np.random.default_rng(2), 30)
        failure = ArpackNoConvergence("no convergence", np.empty(0), np.empty((30, 0)))
        with mock.patch.dict(CONFIG_DEFAULTS, {"DENSE_EIGEN_LIMIT": 10}), mock.patch(
            "neighborgraph.layout.eigsh", side_effect=failure
        ), self.assertLogs("neighborgraph.layout", level="WARNING"):
            embedding = spectral_init(FuzzyGraph(matrix), 2, seed=0)
        self.assertTrue(np.all(np.abs(embedding.coords) <= 10.0))

    def test_deterministic(self):
        graph = blob_graph()
        first = spectral_init(graph, 2, seed=4)
        second = spectral_init(graph, 2, seed=4)
        np.testing.assert_array_equal(first.coords, second.coords)

    def test_too_few_vertices(self):
        with self.assertRaises(InvalidArgumentError):
            spectral_init(graph_from_edges(2, [(0, 1, 1.0)]), 2, seed=0)


class TestGradients(unittest.TestCase):
    def test_match_finite_differences(self):
        curve = fit_ab(0.1)
        coords = np.random.default_rng(5).normal(scale=2.0, size=(10, 2))
        step = 1e-6

        def attraction(y_i, y_j):
            return np.log(low_dim_similarity(np.linalg.norm(y_i - y_j), curve.a, curve.b))

        def repulsion(y_i, y_k):
            return np.log(1.0 - low_dim_similarity(np.linalg.norm(y_i - y_k), curve.a, curve.b))

        for i in range(10):
            for j in range(10):
                if i == j:
                    continue
                for objective, analytic in (
                    (attraction, attractive_gradient(coords[i], coords[j], curve.a, curve.b)),
                    (repulsion, repulsive_gradient(coords[i], coords[j], curve.a, curve.b)),
                ):
                    numeric = np.zeros(2)
                    for t in range(2):
                        offset = np.zeros(2)
                        offset[t] = step
                        numeric[t] = (
                            objective(coords[i] + offset, coords[j])
                            - objective(coords[i] - offset, coords[j])
                        ) / (2 * step)
                    np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-8)


class TestOptimizeLayout(unittest.TestCase):
    def test_two_points_attract(self):
        graph = graph_from_edges(2, [(0, 1, 1.0)])
        init = Embedding([[0.0, 0.0], [5.0, 0.0]], seed=0)
        result = optimize_layout(init, graph, fit_ab(0.1), n_epochs=200, seed=0)
        self.assertLess(np.linalg.norm(result.coords[0] - result.coords[1]), 1.0)

    def test_zero_epochs_is_identity(self):
        graph = blob_graph()
        init = spectral_init(graph, 2, seed=1)
        result = optimize_layout(init, graph, fit_ab(0.1), n_epochs=0, seed=1)
        np.testing.assert_array_equal(result.coords, init.coords)

    def test_deterministic(self):
        graph = blob_graph()
        init = spectral_init(graph, 2, seed=2)
        curve = fit_ab(0.5)
        first = optimize_layout(init, graph, curve, n_epochs=30, seed=2)
        second = optimize_layout(init, graph, curve, n_epochs=30, seed=2)
        np.testing.assert_array_equal(first.coords, second.coords)
        self.assertFalse(np.array_equal(first.coords, init.coords))

    def test_longer_runs_do_not_increase_loss(self):
        graph = blob_graph(seed=1)
        init = spectral_init(graph, 2, seed=0)
        curve = fit_ab(0.1)
        short = optimize_layout(init, graph, curve, n_epochs=50, seed=0)
        long = optimize_layout(init, graph, curve, n_epochs=100, seed=0)
        self.assertLessEqual(
            sampled_cross_entropy(long, graph, curve),
            1.05 * sampled_cross_entropy(short, graph, curve),
        )

    def test_non_finite_coordinates_abort(self):
        def corrupt(coords, *args):
            coords[0, 0] = np.nan

        graph = blob_graph()
        init = spectral_init(graph, 2, seed=0)
        with mock.patch("neighborgraph.layout._optimize_epoch", side_effect=corrupt):
            with self.assertRaises(NumericalError):
                optimize_layout(init, graph, fit_ab(0.1), n_epochs=5, seed=0)

    def test_size_mismatch(self):
        graph = graph_from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
        with self.assertRaises(InvalidArgumentError):
            optimize_layout(Embedding(np.zeros((2, 2))), graph, fit_ab(0.1), n_epochs=1)


class TestEmbedding(unittest.TestCase):
    def test_rejects_non_finite(self):
        with self.assertRaises(NumericalError):
            Embedding([[0.0, np.inf]])

    def test_one_dimensional_input(self):
        embedding = Embedding([1.0, 2.0, 3.0])
        self.assertEqual((embedding.n_points, embedding.d), (3, 1))


if __name__ == "__main__":
    unittest.main()
