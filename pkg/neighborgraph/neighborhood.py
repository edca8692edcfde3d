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

"""Local neighborhoods: who each point should be attracted to, and how far."""

import heapq
import logging

import numpy as np

from neighborgraph.exceptions import InvalidArgumentError

LOGGER = logging.getLogger(__name__)


class LocalNeighborhoods:
    """Per-point neighbor lists in compressed row form.

    Row ``i`` is ``indices[indptr[i]:indptr[i+1]]`` with matching
    ``distances``, ascending by distance and never containing ``i``.
    """

    def __init__(self, indptr, indices, distances, mode, k_new=None):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.distances = np.asarray(distances, dtype=np.float64)
        self.mode = mode
        self.k_new = k_new

    @classmethod
    def from_rows(cls, rows, mode, k_new=None):
        """Build from a list of ``[(index, distance), ...]`` rows."""
        sizes = [len(row) for row in rows]
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        np.cumsum(sizes, out=indptr[1:])
        indices = [index for row in rows for index, _ in row]
        distances = [dist for row in rows for _, dist in row]
        return cls(indptr, indices, distances, mode, k_new)

    def __repr__(self):
        return f"<LocalNeighborhoods: {self.n_points} points, mode={self.mode}>"

    @property
    def n_points(self):
        return self.indptr.size - 1

    def sizes(self):
        return np.diff(self.indptr)

    def row(self, i):
        start, stop = self.indptr[i], self.indptr[i + 1]
        return list(zip(self.indices[start:stop].tolist(), self.distances[start:stop].tolist()))

    def row_ids(self):
        return np.repeat(np.arange(self.n_points, dtype=np.int64), self.sizes())


def knn_neighborhoods(knn):
    """Use the plain k-NN rows as neighborhoods."""
    indptr = np.arange(knn.n_points + 1, dtype=np.int64) * knn.k
    return LocalNeighborhoods(indptr, knn.indices.ravel(), knn.distances.ravel(), "knn")


def adjacent_neighbors(graph):
    """Each vertex's adjacency in `graph`, sorted ascending by edge weight."""
    row_ids = np.repeat(np.arange(graph.n_vertices, dtype=np.int64), graph.degrees())
    order = np.lexsort((graph.adj_indices, graph.adj_weights, row_ids))
    return LocalNeighborhoods(
        graph.adj_indptr.copy(), graph.adj_indices[order], graph.adj_weights[order], "adjacent"
    )


def _nearest_by_path(source, adjacency, k_new):
    """Early-terminated Dijkstra from `source`.

    Settling continues past `k_new` vertices while the next distance equals
    the last one kept, so that zero-weight edges cannot hide a lower-index
    vertex at the cut-off distance. Rows come back sorted by
    ``(distance, vertex)``. Stale heap entries are skipped when popped.
    """
    found = []
    settled = {source}
    heap = [(w, v) for v, w in adjacency[source]]
    heapq.heapify(heap)
    while heap:
        if len(found) >= k_new and heap[0][0] > found[-1][1]:
            break
        dist, vertex = heapq.heappop(heap)
        if vertex in settled:
            continue
        settled.add(vertex)
        found.append((vertex, dist))
        for other, weight in adjacency[vertex]:
            if other not in settled:
                heapq.heappush(heap, (dist + weight, other))
    found.sort(key=lambda entry: (entry[1], entry[0]))
    return found[:k_new]


def path_neighbors(graph, k_new):
    """The `k_new` nearest vertices of every source by shortest-path distance.

    Fewer are returned when fewer vertices are reachable.
    """
    if k_new < 1:
        raise InvalidArgumentError("k_new must be at least 1", detail="got %r" % (k_new,))
    adjacency = []
    for i in range(graph.n_vertices):
        indices, weights = graph.neighbors(i)
        adjacency.append(list(zip(indices.tolist(), weights.tolist())))
    rows = [_nearest_by_path(source, adjacency, k_new) for source in range(graph.n_vertices)]
    neighborhoods = LocalNeighborhoods.from_rows(rows, "path", k_new)
    short = int(np.count_nonzero(neighborhoods.sizes() < k_new))
    if short:
        LOGGER.info("%d vertices reach fewer than %d path neighbors", short, k_new)
    return neighborhoods
