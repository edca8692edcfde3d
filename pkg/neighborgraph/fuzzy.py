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

"""Turning local neighborhoods into a symmetric fuzzy graph."""

import logging
from collections import namedtuple

import numba
import numpy as np
import scipy.sparse

from neighborgraph.configuration import CONFIG_DEFAULTS

LOGGER = logging.getLogger(__name__)

SmoothingParams = namedtuple("SmoothingParams", ["rho", "sigma"])

DirectedStrengths = namedtuple("DirectedStrengths", ["n_vertices", "rows", "cols", "values"])


class FuzzyGraph:
    """Symmetric sparse matrix of membership strengths in (0, 1]."""

    def __init__(self, matrix):
        matrix = scipy.sparse.csr_matrix(matrix, dtype=np.float64)
        matrix.eliminate_zeros()
        matrix.sort_indices()
        self.matrix = matrix

    def __repr__(self):
        return f"<FuzzyGraph: {self.n_vertices} vertices, {self.matrix.nnz} entries>"

    @property
    def n_vertices(self):
        return self.matrix.shape[0]

    def degrees(self):
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def entries(self):
        """(rows, cols, strengths) of every stored entry in row-major order."""
        coo = self.matrix.tocoo()
        return coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data

    def strength(self, i, j):
        return float(self.matrix[i, j])


def compute_rho(neighborhoods):
    """Smallest strictly positive neighbor distance per point, or 0."""
    positive = np.where(neighborhoods.distances > 0, neighborhoods.distances, np.inf)
    rho = np.full(neighborhoods.n_points, np.inf)
    sizes = neighborhoods.sizes()
    nonempty = np.flatnonzero(sizes > 0)
    if nonempty.size:
        rho[nonempty] = np.minimum.reduceat(positive, neighborhoods.indptr[nonempty])
    rho[~np.isfinite(rho)] = 0.0
    return rho


@numba.njit(cache=True)
def _bisect_sigma(distances, rho, target, tolerance, max_iter):
    lo = 0.0
    hi = np.inf
    mid = 1.0
    for _ in range(max_iter):
        psum = 0.0
        for d in distances:
            gap = d - rho
            if gap > 0.0:
                psum += np.exp(-gap / mid)
            else:
                psum += 1.0
        if np.fabs(psum - target) <= tolerance:
            return mid, True
        if psum > target:
            hi = mid
            mid = (lo + hi) / 2.0
        else:
            lo = mid
            if hi == np.inf:
                mid *= 2.0
            else:
                mid = (lo + hi) / 2.0
    return mid, False


def sigma_floor(distances):
    return CONFIG_DEFAULTS.SIGMA_FLOOR_SCALE * float(np.mean(distances))


def _sigma_for_row(distances, rho, target):
    floor = sigma_floor(distances)
    # Neighbors at or inside rho contribute 1 for every sigma, so the sum
    # can never come down to a target they already meet.
    if np.count_nonzero(distances <= rho) >= target:
        return floor, False
    sigma, converged = _bisect_sigma(
        distances,
        float(rho),
        float(target),
        CONFIG_DEFAULTS.SIGMA_TOLERANCE,
        CONFIG_DEFAULTS.SIGMA_MAX_ITER,
    )
    return max(sigma, floor), converged


def solve_sigma(distances, rho, target):
    """Bandwidth sigma so that ``sum(exp(-max(0, d - rho) / sigma)) == target``.

    Unreachable targets saturate at :func:`sigma_floor` of the distances,
    which is also the lower bound of every result.
    """
    sigma, _ = _sigma_for_row(np.asarray(distances, dtype=np.float64), rho, target)
    return sigma


def smoothing_params(neighborhoods, rho=None):
    """rho and sigma for every row; empty rows get ``sigma = 1``."""
    if rho is None:
        rho = compute_rho(neighborhoods)
    sigma = np.ones(neighborhoods.n_points)
    saturated = 0
    for i in range(neighborhoods.n_points):
        start, stop = neighborhoods.indptr[i], neighborhoods.indptr[i + 1]
        if start == stop:
            continue
        sigma[i], converged = _sigma_for_row(
            neighborhoods.distances[start:stop], rho[i], np.log2(stop - start)
        )
        saturated += not converged
    # An all-zero row clamps to a zero floor; keep sigma positive.
    sigma[sigma <= 0] = np.finfo(np.float64).tiny
    if saturated:
        LOGGER.warning("%d bandwidths saturated before reaching their target", saturated)
    return SmoothingParams(rho, sigma)


def membership_strengths(neighborhoods, params):
    """Directed strength ``exp(-max(0, d - rho_i) / sigma_i)`` for every
    (i, j) with j in M_i. Entries that underflow to zero are dropped."""
    rows = neighborhoods.row_ids()
    gaps = np.maximum(neighborhoods.distances - params.rho[rows], 0.0)
    values = np.exp(-gaps / params.sigma[rows])
    keep = values > 0
    return DirectedStrengths(
        neighborhoods.n_points, rows[keep], neighborhoods.indices[keep], values[keep]
    )


def fuzzy_union(strengths):
    """Symmetrize with the probabilistic t-conorm ``a + b - a*b``."""
    n = strengths.n_vertices
    directed = scipy.sparse.csr_matrix(
        (strengths.values, (strengths.rows, strengths.cols)), shape=(n, n)
    )
    transpose = directed.T.tocsr()
    union = directed + transpose - directed.multiply(transpose)
    union = scipy.sparse.csr_matrix(union)
    np.clip(union.data, 0.0, 1.0, out=union.data)
    return FuzzyGraph(union)


def fuzzy_simplicial_set(neighborhoods):
    """Full construction: rho, sigma, directed strengths, fuzzy union."""
    params = smoothing_params(neighborhoods)
    graph = fuzzy_union(membership_strengths(neighborhoods, params))
    LOGGER.info(
        "Fuzzy graph has %d vertices and %d symmetric entries", graph.n_vertices, graph.matrix.nnz
    )
    return graph, params
