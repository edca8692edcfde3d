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

"""Connected components and the repairs that reconnect a mutual k-NN graph."""

import logging
from collections import namedtuple

import numpy as np
from scipy.cluster.hierarchy import DisjointSet
from scipy.sparse.csgraph import connected_components as _csgraph_components

from neighborgraph.exceptions import InvalidArgumentError
from neighborgraph.knn import WeightedGraph, symmetrized_knn
from neighborgraph.utils import JSONObject

LOGGER = logging.getLogger(__name__)

REPAIR_METHODS = ("nn", "mst_min", "mst_all")

ComponentLabeling = namedtuple("ComponentLabeling", ["component_id", "n_components", "component_sizes"])


def connected_components(graph):
    """Label the connected components of a WeightedGraph.

    Component ids are dense integers in ``[0, n_components)``.
    """
    n_components, labels = _csgraph_components(graph.structure(), directed=False)
    sizes = np.bincount(labels, minlength=n_components)
    return ComponentLabeling(labels.astype(np.int64), int(n_components), sizes)


def graph_statistics(graph):
    """Summary counts describing how fragmented a graph is."""
    labeling = connected_components(graph)
    giant = int(labeling.component_sizes.max()) if graph.n_vertices else 0
    outside = graph.n_vertices - giant
    return JSONObject(
        n_vertices=graph.n_vertices,
        n_edges=graph.n_edges,
        n_components=labeling.n_components,
        giant_component_size=giant,
        outside_giant=outside,
        outside_giant_fraction=outside / graph.n_vertices if graph.n_vertices else 0.0,
        isolated_vertices=int(np.count_nonzero(graph.degrees() == 0)),
    )


def connect_nn(mutual, knn):
    """Give every isolated vertex an edge to its nearest neighbor."""
    isolated = np.flatnonzero(mutual.degrees() == 0)
    repaired = mutual.add_edges(isolated, knn.indices[isolated, 0], knn.distances[isolated, 0])
    LOGGER.info("NN repair connected %d isolated vertices", isolated.size)
    return repaired


def _kruskal_order(graph):
    return np.lexsort((graph.cols, graph.rows, graph.weights))


def minimum_spanning_forest(knn):
    """Minimum spanning forest of the symmetrized k-NN graph.

    Ties among equal weights are broken by (u, v) lexicographic order, so the
    result is deterministic.
    """
    graph = symmetrized_knn(knn)
    target = graph.n_vertices - connected_components(graph).n_components
    components = DisjointSet(range(graph.n_vertices))
    kept = []
    for edge in _kruskal_order(graph):
        if len(kept) == target:
            break
        if components.merge(int(graph.rows[edge]), int(graph.cols[edge])):
            kept.append(edge)
    kept = np.asarray(kept, dtype=np.int64)
    return WeightedGraph(graph.n_vertices, graph.rows[kept], graph.cols[kept], graph.weights[kept])


def connect_mst_min(mutual, mst):
    """Add only the MST edges that join two distinct components of `mutual`,
    visiting MST edges by ascending weight."""
    labeling = connected_components(mutual)
    components = DisjointSet(range(labeling.n_components))
    cid = labeling.component_id
    added = []
    for edge in _kruskal_order(mst):
        if components.merge(int(cid[mst.rows[edge]]), int(cid[mst.cols[edge]])):
            added.append(edge)
    added = np.asarray(added, dtype=np.int64)
    LOGGER.info(
        "MST-min repair added %d edges across %d components", added.size, labeling.n_components
    )
    return mutual.add_edges(mst.rows[added], mst.cols[added], mst.weights[added])


def connect_mst_all(mutual, mst):
    """Union of `mutual` and every MST edge."""
    repaired = mutual.union(mst)
    LOGGER.info("MST-all repair added %d edges", repaired.n_edges - mutual.n_edges)
    return repaired


def repair_connectivity(mutual, knn, method):
    """Dispatch to the named repair strategy."""
    if method == "nn":
        return connect_nn(mutual, knn)
    if method == "mst_min":
        return connect_mst_min(mutual, minimum_spanning_forest(knn))
    if method == "mst_all":
        return connect_mst_all(mutual, minimum_spanning_forest(knn))
    raise InvalidArgumentError(
        "Unknown repair method", detail="%r is not one of %s" % (method, ", ".join(REPAIR_METHODS))
    )
