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

"""Low-dimensional layout of a fuzzy graph.

The layout is initialized from eigenvectors of the normalized graph
Laplacian and refined by edge-sampled stochastic gradient descent on the
fuzzy cross-entropy, using the curve ``1 / (1 + a * t**(2b))`` as the
low-dimensional membership strength.
"""

import logging
from collections import namedtuple

import numba
import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.optimize import curve_fit
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from neighborgraph.configuration import CONFIG_DEFAULTS
from neighborgraph.exceptions import InvalidArgumentError, NumericalError

LOGGER = logging.getLogger(__name__)

CurveParams = namedtuple("CurveParams", ["a", "b", "min_dist"])


class Embedding:
    """An n x d coordinate matrix plus the seed and settings that made it."""

    def __init__(self, coords, seed=None, hyperparams=None):
        coords = np.array(coords, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords.reshape(-1, 1)
        if coords.ndim != 2 or coords.shape[1] < 1:
            raise InvalidArgumentError("Embedding coordinates must be an n x d matrix")
        if not np.all(np.isfinite(coords)):
            raise NumericalError("Embedding contains non-finite coordinates")
        self.coords = coords
        self.seed = seed
        self.hyperparams = dict(hyperparams or {})

    def __repr__(self):
        return f"<Embedding: {self.n_points}x{self.d}, seed={self.seed}>"

    @property
    def n_points(self):
        return self.coords.shape[0]

    @property
    def d(self):
        return self.coords.shape[1]

    def copy(self, **hyperparams):
        merged = dict(self.hyperparams, **hyperparams)
        return Embedding(self.coords.copy(), seed=self.seed, hyperparams=merged)


#
# Curve fit.
#
def low_dim_similarity(distance, a, b):
    """The fitted curve evaluated at (non-squared) distance `distance`."""
    return 1.0 / (1.0 + a * np.power(distance, 2.0 * b))


def target_curve(t, min_dist):
    return np.where(t <= min_dist, 1.0, np.exp(-(t - min_dist)))


def curve_samples():
    return np.linspace(0, CONFIG_DEFAULTS.CURVE_T_MAX, CONFIG_DEFAULTS.CURVE_SAMPLES)


def fit_ab(min_dist):
    """Least-squares fit of (a, b) for the given `min_dist`."""
    if not 0.0 <= min_dist <= 1.0:
        raise InvalidArgumentError("min_dist must lie in [0, 1]", detail="got %r" % (min_dist,))
    t = curve_samples()
    try:
        (a, b), _ = curve_fit(
            low_dim_similarity,
            t,
            target_curve(t, min_dist),
            p0=(1.0, 1.0),
            maxfev=CONFIG_DEFAULTS.CURVE_MAX_EVALS,
        )
    except RuntimeError as exc:
        raise NumericalError("Curve fit did not converge", detail=str(exc))
    if a <= 0 or b <= 0:
        raise NumericalError("Curve fit produced non-positive parameters", detail="a=%g, b=%g" % (a, b))
    LOGGER.debug("Fitted curve for min_dist=%g: a=%.6f, b=%.6f", min_dist, a, b)
    return CurveParams(float(a), float(b), float(min_dist))


def curve_residual(curve):
    """Root mean squared error of the fitted curve over the fit samples."""
    t = curve_samples()
    error = low_dim_similarity(t, curve.a, curve.b) - target_curve(t, curve.min_dist)
    return float(np.sqrt(np.mean(error**2)))


#
# Spectral initialization.
#
def normalized_laplacian(matrix):
    """``I - D^-1/2 W D^-1/2`` for a symmetric weight matrix without isolated vertices."""
    matrix = scipy.sparse.csr_matrix(matrix)
    degrees = np.asarray(matrix.sum(axis=1)).ravel()
    scale = scipy.sparse.diags(1.0 / np.sqrt(degrees))
    identity = scipy.sparse.identity(matrix.shape[0], format="csr")
    return (identity - scale @ matrix @ scale).tocsr()


def spectral_eigenpairs(matrix, d):
    """The `d` eigenpairs of the normalized Laplacian of a connected graph
    with the smallest nonzero eigenvalues, ascending."""
    n = matrix.shape[0]
    laplacian = normalized_laplacian(matrix)
    if n < CONFIG_DEFAULTS.DENSE_EIGEN_LIMIT:
        values, vectors = scipy.linalg.eigh(laplacian.toarray())
        return values[1 : d + 1], vectors[:, 1 : d + 1]
    # Largest eigenvalues of 2I - L are the smallest of L.
    shifted = 2.0 * scipy.sparse.identity(n, format="csr") - laplacian
    values, vectors = eigsh(
        shifted,
        k=d + 1,
        which="LA",
        tol=CONFIG_DEFAULTS.EIGEN_TOLERANCE,
        maxiter=CONFIG_DEFAULTS.EIGEN_MAX_ITER,
        v0=np.ones(n),
    )
    order = np.argsort(2.0 - values, kind="stable")[1 : d + 1]
    return 2.0 - values[order], vectors[:, order]


def _unit_block(block):
    scale = np.abs(block).max()
    return block / scale if scale > 0 else block


def spectral_init(graph, d, seed):
    """Spectral initial coordinates for `graph`, one block per component.

    Components are laid out largest first; each block is normalized to
    ``[-1, 1]`` and shifted along every axis by its position times the
    component spacing. Components too small for `d` eigenvectors get seeded
    random blocks.
    """
    n = graph.n_vertices
    if n < d + 1:
        raise InvalidArgumentError(
            "Too few vertices for spectral layout", detail="%d vertices, d=%d" % (n, d)
        )
    rng = np.random.default_rng(seed)
    n_components, labels = connected_components(graph.matrix, directed=False)
    sizes = np.bincount(labels, minlength=n_components)
    order = np.argsort(-sizes, kind="stable")
    if n_components > 1:
        LOGGER.warning(
            "Fuzzy graph has %d components; laying out spectral blocks separately", n_components
        )

    coords = np.zeros((n, d))
    spacing = CONFIG_DEFAULTS.COMPONENT_SPACING * 2.0
    try:
        for position, component in enumerate(order):
            members = np.flatnonzero(labels == component)
            if members.size > d:
                sub = graph.matrix[members][:, members]
                _, block = spectral_eigenpairs(sub, d)
            else:
                block = rng.uniform(-1.0, 1.0, size=(members.size, d))
            coords[members] = _unit_block(block) + position * spacing
    except (ArpackNoConvergence, scipy.linalg.LinAlgError) as exc:
        LOGGER.warning("Eigensolver failed (%s); falling back to random initialization", exc)
        limit = CONFIG_DEFAULTS.MAX_COORD
        return Embedding(rng.uniform(-limit, limit, size=(n, d)), seed=seed)

    coords *= CONFIG_DEFAULTS.MAX_COORD / np.abs(coords).max()
    coords += rng.normal(scale=CONFIG_DEFAULTS.INIT_NOISE, size=coords.shape)
    return Embedding(coords, seed=seed)


#
# Stochastic gradient descent.
#
@numba.njit(cache=True)
def attractive_coefficient(dist_sq, a, b):
    """Scalar multiplying ``y_i - y_j`` in the gradient of ``log f``."""
    if dist_sq > 0.0:
        return -2.0 * a * b * dist_sq ** (b - 1.0) / (a * dist_sq**b + 1.0)
    return 0.0


@numba.njit(cache=True)
def repulsive_coefficient(dist_sq, a, b, eps):
    """Scalar multiplying ``y_i - y_k`` in the gradient of ``log(1 - f)``."""
    return 2.0 * b / ((eps + dist_sq) * (a * dist_sq**b + 1.0))


@numba.njit(cache=True)
def _clip(value, limit):
    if value > limit:
        return limit
    if value < -limit:
        return -limit
    return value


@numba.njit(cache=True, nogil=True)
def _optimize_epoch(coords, heads, tails, active, negatives, a, b, alpha, limit, eps):
    dim = coords.shape[1]
    for r in range(active.shape[0]):
        edge = active[r]
        i = heads[edge]
        j = tails[edge]
        current = coords[i]
        other = coords[j]

        dist_sq = 0.0
        for t in range(dim):
            diff = current[t] - other[t]
            dist_sq += diff * diff
        coeff = attractive_coefficient(dist_sq, a, b)
        for t in range(dim):
            grad = _clip(coeff * (current[t] - other[t]), limit)
            current[t] += grad * alpha
            other[t] -= grad * alpha

        for s in range(negatives.shape[1]):
            k = negatives[r, s]
            if k == i:
                continue
            other = coords[k]
            dist_sq = 0.0
            for t in range(dim):
                diff = current[t] - other[t]
                dist_sq += diff * diff
            coeff = 0.0
            if dist_sq > 0.0:
                coeff = repulsive_coefficient(dist_sq, a, b, eps)
            for t in range(dim):
                if coeff > 0.0:
                    grad = _clip(coeff * (current[t] - other[t]), limit)
                else:
                    grad = limit
                current[t] += grad * alpha


def attractive_gradient(y_i, y_j, a, b):
    """Gradient of ``log f(|y_i - y_j|)`` with respect to ``y_i``, unclipped."""
    diff = np.asarray(y_i, dtype=np.float64) - np.asarray(y_j, dtype=np.float64)
    return attractive_coefficient(float(diff @ diff), a, b) * diff


def repulsive_gradient(y_i, y_k, a, b, eps=0.0):
    """Gradient of ``log(1 - f(|y_i - y_k|))`` with respect to ``y_i`` when
    `eps` is zero, unclipped."""
    diff = np.asarray(y_i, dtype=np.float64) - np.asarray(y_k, dtype=np.float64)
    return repulsive_coefficient(float(diff @ diff), a, b, eps) * diff


def edge_periods(strengths, n_epochs):
    """Epoch period of every edge: ``ceil(w_max / w)`` capped at n_epochs + 1."""
    ratio = strengths.max() / strengths
    return np.minimum(np.ceil(ratio), n_epochs + 1).astype(np.int64)


def optimize_layout(
    init, graph, curve, *, n_epochs, neg_rate=None, learning_rate=None, seed=0, clip=None
):
    """Refine `init` by edge-sampled SGD against `graph`.

    Edges are visited in a fixed order and all random draws come from one
    generator seeded with `seed`, so results are reproducible bit for bit.
    """
    if init.n_points != graph.n_vertices:
        raise InvalidArgumentError(
            "Embedding and graph sizes differ",
            detail="%d points vs %d vertices" % (init.n_points, graph.n_vertices),
        )
    neg_rate = CONFIG_DEFAULTS.NEG_RATE if neg_rate is None else neg_rate
    learning_rate = CONFIG_DEFAULTS.LEARNING_RATE if learning_rate is None else learning_rate
    clip = CONFIG_DEFAULTS.GRAD_CLIP if clip is None else clip

    coords = init.coords.copy()
    heads, tails, strengths = graph.entries()
    if n_epochs <= 0 or heads.size == 0:
        return Embedding(coords, seed=seed, hyperparams=init.hyperparams)

    rng = np.random.default_rng(seed)
    periods = edge_periods(strengths, n_epochs)
    for epoch in range(n_epochs):
        active = np.flatnonzero(epoch % periods == 0)
        negatives = rng.integers(0, graph.n_vertices, size=(active.size, neg_rate))
        alpha = learning_rate * (1.0 - epoch / n_epochs)
        _optimize_epoch(
            coords,
            heads,
            tails,
            active,
            negatives,
            curve.a,
            curve.b,
            alpha,
            clip,
            CONFIG_DEFAULTS.REPULSION_EPS,
        )
        if not np.all(np.isfinite(coords)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(coords), axis=1))[0])
            raise NumericalError(
                "Non-finite coordinate during layout",
                detail="epoch %d, point %d, alpha %g" % (epoch, bad, alpha),
            )
        if n_epochs >= 10 and (epoch + 1) % (n_epochs // 10) == 0:
            LOGGER.debug("Completed epoch %d of %d", epoch + 1, n_epochs)

    return Embedding(coords, seed=seed, hyperparams=init.hyperparams)


def sampled_cross_entropy(embedding, graph, curve, *, n_negative=5, seed=0):
    """Monte-Carlo estimate of the fuzzy cross-entropy per stored edge.

    Every edge contributes its attractive and repulsive terms; `n_negative`
    uniformly drawn vertices per edge stand in for the non-edges.
    """
    tiny = 1e-12
    rows, cols, strengths = graph.entries()
    coords = embedding.coords
    similarity = low_dim_similarity(np.linalg.norm(coords[rows] - coords[cols], axis=1), curve.a, curve.b)
    similarity = np.clip(similarity, tiny, 1.0 - tiny)
    loss = -(strengths * np.log(similarity) + (1.0 - strengths) * np.log(1.0 - similarity))

    rng = np.random.default_rng(seed)
    samples = rng.integers(0, graph.n_vertices, size=(rows.size, n_negative))
    distances = np.linalg.norm(coords[rows][:, None, :] - coords[samples], axis=2)
    negative = np.clip(low_dim_similarity(distances, curve.a, curve.b), tiny, 1.0 - tiny)
    repulsion = -np.log(1.0 - negative)
    repulsion[samples == rows[:, None]] = 0.0
    return float((loss + repulsion.sum(axis=1)).mean())
