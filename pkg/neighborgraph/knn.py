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

"""Exact k-nearest-neighbor search and the graphs built from it."""

import logging

import numpy as np
import scipy.sparse
import scipy.spatial.distance
from sklearn.metrics import pairwise_distances

from neighborgraph.configuration import CONFIG_DEFAULTS, METRICS
from neighborgraph.exceptions import InvalidArgumentError

LOGGER = logging.getLogger(__name__)

# squared-distance to squared-norm ratio below which sparse euclidean
# distances are recomputed exactly
EXPANSION_RTOL = 1e-6


def _check_metric(metric):
    if metric not in METRICS:
        raise InvalidArgumentError(
            "Unknown metric", detail="%r is not one of %s" % (metric, ", ".join(METRICS))
        )


def _as_vector(x):
    if scipy.sparse.issparse(x):
        return np.asarray(x.toarray(), dtype=np.float64).ravel()
    return np.asarray(x, dtype=np.float64).ravel()


def distance(x, y, metric="euclidean"):
    """Distance between two feature vectors.

    Cosine distance involving a zero vector is 1.0. Jaccard works on the
    nonzero pattern and is 0.0 when both vectors are all zero.
    """
    _check_metric(metric)
    x, y = _as_vector(x), _as_vector(y)
    if x.shape != y.shape:
        raise InvalidArgumentError("Vectors differ in length", detail="%s vs %s" % (x.shape, y.shape))
    if metric == "euclidean":
        return float(scipy.spatial.distance.euclidean(x, y))
    if metric == "cosine":
        if not (np.any(x) and np.any(y)):
            return 1.0
        return max(0.0, float(scipy.spatial.distance.cosine(x, y)))
    bx, by = x != 0, y != 0
    if not (np.any(bx) or np.any(by)):
        return 0.0
    return float(scipy.spatial.distance.jaccard(bx, by))


def _dense_block(data, start, stop, metric):
    block = data[start:stop]
    if metric == "euclidean":
        return scipy.spatial.distance.cdist(block, data, "euclidean")
    if metric == "cosine":
        with np.errstate(invalid="ignore", divide="ignore"):
            dist = scipy.spatial.distance.cdist(block, data, "cosine")
        zero_rows = ~np.any(block != 0, axis=1)
        zero_cols = ~np.any(data != 0, axis=1)
        dist[zero_rows, :] = 1.0
        dist[:, zero_cols] = 1.0
        return np.maximum(dist, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        dist = scipy.spatial.distance.cdist(block != 0, data != 0, "jaccard")
    return np.nan_to_num(dist, nan=0.0)


def _exact_small_euclidean(block, data, dist, sq_norms, start):
    """Recompute by subtraction the entries where the dot-product expansion
    loses precision, so duplicate rows come out at exactly 0.0."""
    scale = sq_norms[start : start + block.shape[0], None] + sq_norms[None, :]
    rows, cols = np.nonzero(dist * dist <= EXPANSION_RTOL * scale)
    for i, j in zip(rows.tolist(), cols.tolist()):
        diff = block[i] - data[j]
        dist[i, j] = np.sqrt(diff.multiply(diff).sum())
    return dist


def _sparse_block(data, start, stop, metric, nonzero_counts=None, binary=None, sq_norms=None):
    block = data[start:stop]
    if metric == "euclidean":
        dist = np.maximum(pairwise_distances(block, data, metric=metric), 0.0)
        return _exact_small_euclidean(block, data, dist, sq_norms, start)
    if metric == "cosine":
        return np.maximum(pairwise_distances(block, data, metric=metric), 0.0)
    intersection = (binary[start:stop] @ binary.T).toarray()
    union = nonzero_counts[start:stop, None] + nonzero_counts[None, :] - intersection
    with np.errstate(invalid="ignore", divide="ignore"):
        dist = np.where(union > 0, 1.0 - intersection / union, 0.0)
    return dist


class NeighborGraph:
    """Directed k-NN graph: row i lists i's k nearest neighbors by
    ascending distance, ties broken by ascending index."""

    def __init__(self, indices, distances, metric=None):
        indices = np.asarray(indices, dtype=np.int64)
        distances = np.asarray(distances, dtype=np.float64)
        if indices.ndim != 2 or indices.shape != distances.shape:
            raise InvalidArgumentError("indices and distances must be matching 2-D arrays")
        self.indices = indices
        self.distances = distances
        self.metric = metric

    def __repr__(self):
        return f"<NeighborGraph: {self.n_points} points, k={self.k}>"

    @property
    def n_points(self):
        return self.indices.shape[0]

    @property
    def k(self):
        return self.indices.shape[1]

    def row(self, i):
        return list(zip(self.indices[i].tolist(), self.distances[i].tolist()))

    def truncate(self, k):
        """The k-NN graph for a smaller k, sharing this graph's ordering."""
        if not 1 <= k <= self.k:
            raise InvalidArgumentError("Cannot truncate", detail="k=%d from k=%d" % (k, self.k))
        return NeighborGraph(self.indices[:, :k].copy(), self.distances[:, :k].copy(), self.metric)

    def directed_edges(self):
        """(sources, targets, distances) for all n*k directed edges."""
        sources = np.repeat(np.arange(self.n_points, dtype=np.int64), self.k)
        return sources, self.indices.ravel(), self.distances.ravel()


def exact_knn(features, k, metric="euclidean", block_size=None):
    """Exact k-NN by brute force over row blocks of the distance matrix."""
    _check_metric(metric)
    n = features.n_points
    if not 1 <= k < n:
        raise InvalidArgumentError("k must satisfy 1 <= k < n_points", detail="k=%d, n=%d" % (k, n))
    block_size = block_size or CONFIG_DEFAULTS.KNN_BLOCK_SIZE

    data = features.data
    binary = counts = sq_norms = None
    if features.is_sparse and metric == "jaccard":
        binary = (data != 0).astype(np.float64).tocsr()
        counts = np.asarray(binary.sum(axis=1)).ravel()
    if features.is_sparse and metric == "euclidean":
        sq_norms = np.asarray(data.multiply(data).sum(axis=1), dtype=np.float64).ravel()

    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        if features.is_sparse:
            dist = _sparse_block(data, start, stop, metric, counts, binary, sq_norms)
        else:
            dist = _dense_block(data, start, stop, metric)
        dist[np.arange(stop - start), np.arange(start, stop)] = np.inf
        order = np.argsort(dist, axis=1, kind="stable")[:, :k]
        indices[start:stop] = order
        distances[start:stop] = np.take_along_axis(dist, order, axis=1)
        LOGGER.debug("k-NN rows %d-%d of %d done", start, stop, n)

    LOGGER.info("Computed exact %d-NN graph over %d points (%s)", k, n, metric)
    return NeighborGraph(indices, distances, metric)


class WeightedGraph:
    """Undirected weighted graph without self-loops or parallel edges.

    Edges are stored once with ``u < v`` in lexicographic order. When an edge
    is supplied more than once the smallest weight is kept. Zero weights are
    legal and are kept as edges.
    """

    def __init__(self, n_vertices, rows=(), cols=(), weights=()):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if not rows.shape == cols.shape == weights.shape:
            raise InvalidArgumentError("Edge arrays differ in length")
        if rows.size and (min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= n_vertices):
            raise InvalidArgumentError("Edge endpoint out of range")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise InvalidArgumentError("Edge weights must be finite and non-negative")

        u, v = np.minimum(rows, cols), np.maximum(rows, cols)
        keep = u != v
        u, v, weights = u[keep], v[keep], weights[keep]
        order = np.lexsort((weights, v, u))
        u, v, weights = u[order], v[order], weights[order]
        first = np.ones(u.size, dtype=bool)
        first[1:] = (u[1:] != u[:-1]) | (v[1:] != v[:-1])

        self.n_vertices = int(n_vertices)
        self.rows = u[first]
        self.cols = v[first]
        self.weights = weights[first]
        self._build_adjacency()

    def _build_adjacency(self):
        heads = np.concatenate([self.rows, self.cols])
        tails = np.concatenate([self.cols, self.rows])
        weights = np.concatenate([self.weights, self.weights])
        order = np.lexsort((tails, heads))
        self.adj_indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.cumsum(np.bincount(heads, minlength=self.n_vertices), out=self.adj_indptr[1:])
        self.adj_indices = tails[order]
        self.adj_weights = weights[order]

    def __repr__(self):
        return f"<WeightedGraph: {self.n_vertices} vertices, {self.n_edges} edges>"

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self.n_vertices == other.n_vertices
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.weights, other.weights)
        )

    @property
    def n_edges(self):
        return self.rows.size

    def degrees(self):
        return np.diff(self.adj_indptr)

    def neighbors(self, i):
        """(neighbor indices, weights) of vertex `i`, by ascending index."""
        start, stop = self.adj_indptr[i], self.adj_indptr[i + 1]
        return self.adj_indices[start:stop], self.adj_weights[start:stop]

    def edge_set(self):
        return set(zip(self.rows.tolist(), self.cols.tolist()))

    def weight(self, u, v):
        indices, weights = self.neighbors(u)
        hit = np.flatnonzero(indices == v)
        if hit.size == 0:
            raise KeyError((u, v))
        return float(weights[hit[0]])

    def union(self, other):
        if other.n_vertices != self.n_vertices:
            raise InvalidArgumentError("Graphs differ in vertex count")
        return self.add_edges(other.rows, other.cols, other.weights)

    def add_edges(self, rows, cols, weights):
        return WeightedGraph(
            self.n_vertices,
            np.concatenate([self.rows, np.asarray(rows, dtype=np.int64)]),
            np.concatenate([self.cols, np.asarray(cols, dtype=np.int64)]),
            np.concatenate([self.weights, np.asarray(weights, dtype=np.float64)]),
        )

    def structure(self):
        """Symmetric CSR matrix with a one at every edge position."""
        n = self.n_vertices
        ones = np.ones(self.adj_indices.size)
        return scipy.sparse.csr_matrix((ones, self.adj_indices, self.adj_indptr), shape=(n, n))


def symmetrized_knn(knn):
    """The undirected graph underlying a k-NN graph (union of both directions)."""
    sources, targets, dists = knn.directed_edges()
    return WeightedGraph(knn.n_points, sources, targets, dists)


def mutual_knn(knn):
    """Keep edge {i, j} only when each of i and j lists the other."""
    n = knn.n_points
    sources, targets, dists = knn.directed_edges()
    forward = sources * n + targets
    mutual = np.isin(targets * n + sources, forward) & (sources < targets)
    graph = WeightedGraph(n, sources[mutual], targets[mutual], dists[mutual])
    LOGGER.info(
        "Mutual %d-NN graph keeps %d of %d directed edges", knn.k, graph.n_edges, forward.size
    )
    return graph
