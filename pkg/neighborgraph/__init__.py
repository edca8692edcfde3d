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

"""Connectivity-refined neighbor graphs and their low-dimensional layouts."""

from neighborgraph.connectivity import (
    connect_mst_all,
    connect_mst_min,
    connect_nn,
    connected_components,
    graph_statistics,
    minimum_spanning_forest,
    repair_connectivity,
)
from neighborgraph.dataset_io import FeatureMatrix, LabelVector
from neighborgraph.exceptions import (
    DataConsistencyError,
    DataError,
    DataFormatError,
    InvalidArgumentError,
    NeighborGraphBaseError,
    NumericalError,
)
from neighborgraph.fuzzy import FuzzyGraph, fuzzy_simplicial_set
from neighborgraph.knn import NeighborGraph, WeightedGraph, exact_knn, mutual_knn
from neighborgraph.layout import Embedding, fit_ab, optimize_layout, spectral_init
from neighborgraph.neighborhood import adjacent_neighbors, knn_neighborhoods, path_neighbors
from neighborgraph.utils import JSONObject
