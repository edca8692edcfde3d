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

"""Method variants, single runs, the hyperparameter grid and variant comparison.

A run is split into a seed-independent graph stage (k-NN, mutual graph,
repair, neighborhoods, fuzzy graph) and a per-seed layout stage. Graph
stages are built once and shared by every seed and ``min_dist`` value.
"""

import logging
from collections import namedtuple

import numpy as np
from joblib import Parallel, delayed

from neighborgraph.configuration import CONFIG_DEFAULTS, METRICS, default_n_epochs
from neighborgraph.connectivity import REPAIR_METHODS, graph_statistics, repair_connectivity
from neighborgraph.evaluation import (
    MetricReport,
    per_class_variance,
    score_embeddings,
    welch_t_test,
)
from neighborgraph.fuzzy import fuzzy_simplicial_set
from neighborgraph.knn import exact_knn, mutual_knn, symmetrized_knn
from neighborgraph.layout import fit_ab, optimize_layout, spectral_init
from neighborgraph.neighborhood import adjacent_neighbors, knn_neighborhoods, path_neighbors
from neighborgraph.utils import JSONObject
from sextant.exceptions import InvalidMethodConfigError
from sextant.timer import Timer

LOGGER = logging.getLogger(__name__)

GRAPH_MODES = ("default_knn", "mutual")

NEIGHBORHOODS = ("adjacent", "path")

# CLI variant name -> (graph_mode, repair).
VARIANTS = JSONObject(
    {
        "umap": ("default_knn", "none"),
        "nn": ("mutual", "nn"),
        "mst-min": ("mutual", "mst_min"),
        "mst-all": ("mutual", "mst_all"),
    }
)

# The seven compared methods, as (variant, neighborhood).
TABLE_VARIANTS = (
    ("umap", "adjacent"),
    ("nn", "adjacent"),
    ("mst-min", "adjacent"),
    ("mst-all", "adjacent"),
    ("nn", "path"),
    ("mst-min", "path"),
    ("mst-all", "path"),
)

# Methods compared by the significance test of compare_variants.
BASELINE_TAG = "umap"
REFINED_TAG = "mst-min-path"

_MethodConfigBase = namedtuple(
    "MethodConfig",
    [
        "graph_mode",
        "repair",
        "neighborhood",
        "k",
        "k_new",
        "min_dist",
        "dim",
        "metric",
        "n_epochs",
        "seeds",
        "neg_rate",
        "learning_rate",
    ],
    defaults=(
        "adjacent",
        15,
        None,
        0.1,
        2,
        "euclidean",
        None,
        tuple(CONFIG_DEFAULTS.SEEDS),
        None,
        None,
    ),
)


class MethodConfig(_MethodConfigBase):
    """Everything needed to reproduce one embedding method.

    ``k_new`` of None means ``k``; ``n_epochs`` of None picks the default
    for the dataset size; ``neg_rate`` and ``learning_rate`` of None use
    the library defaults.
    """

    __slots__ = ()

    @classmethod
    def for_variant(cls, variant, neighborhood="adjacent", **kwargs):
        if variant not in VARIANTS:
            raise InvalidMethodConfigError(
                "Unknown variant %r; choose one of %s" % (variant, ", ".join(VARIANTS))
            )
        graph_mode, repair = VARIANTS[variant]
        kwargs.setdefault("seeds", tuple(CONFIG_DEFAULTS.SEEDS))
        kwargs["seeds"] = tuple(kwargs["seeds"])
        return cls(graph_mode, repair, neighborhood, **kwargs)

    @property
    def variant(self):
        for name, (graph_mode, repair) in VARIANTS.items():
            if (graph_mode, repair) == (self.graph_mode, self.repair):
                return name
        return "%s/%s" % (self.graph_mode, self.repair)

    @property
    def tag(self):
        """Short method name, e.g. ``umap`` or ``mst-min-path``."""
        if self.graph_mode == "default_knn":
            return self.variant
        return "%s-%s" % (self.variant, self.neighborhood)

    @property
    def effective_k_new(self):
        return self.k if self.k_new is None else self.k_new

    def validate(self):
        """Raise InvalidMethodConfigError unless the combination is runnable."""
        if self.graph_mode not in GRAPH_MODES:
            raise InvalidMethodConfigError("Unknown graph mode %r" % (self.graph_mode,))
        if self.repair not in ("none", *REPAIR_METHODS):
            raise InvalidMethodConfigError("Unknown repair method %r" % (self.repair,))
        if self.neighborhood not in NEIGHBORHOODS:
            raise InvalidMethodConfigError("Unknown neighborhood %r" % (self.neighborhood,))
        if (self.repair == "none") != (self.graph_mode == "default_knn"):
            raise InvalidMethodConfigError(
                "The default k-NN graph takes no repair and a mutual graph needs one"
            )
        if self.neighborhood == "path" and self.graph_mode != "mutual":
            raise InvalidMethodConfigError(
                "Path neighbors require a repaired mutual graph (variant nn, mst-min or mst-all)"
            )
        if self.k < 1 or self.effective_k_new < 1:
            raise InvalidMethodConfigError("k and k_new must be positive")
        if not 0.0 <= self.min_dist <= 1.0:
            raise InvalidMethodConfigError("min_dist must lie in [0, 1], got %r" % (self.min_dist,))
        if self.dim < 1:
            raise InvalidMethodConfigError("dim must be positive")
        if self.metric not in METRICS:
            raise InvalidMethodConfigError(
                "Unknown metric %r; choose one of %s" % (self.metric, ", ".join(METRICS))
            )
        if self.n_epochs is not None and self.n_epochs < 0:
            raise InvalidMethodConfigError("n_epochs cannot be negative")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise InvalidMethodConfigError("seeds must be a non-empty list of distinct values")
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise InvalidMethodConfigError("learning_rate must be positive")
        return self

    def hyperparams(self):
        params = self._asdict()
        params["seeds"] = list(self.seeds)
        params["k_new"] = self.effective_k_new
        params["method"] = self.tag
        return params

    @classmethod
    def from_hyperparams(cls, params):
        fields = {name: params[name] for name in cls._fields if name in params}
        if "seeds" in fields:
            fields["seeds"] = tuple(fields["seeds"])
        return cls(**fields)


GraphStage = namedtuple(
    "GraphStage", ["knn", "graph", "neighborhoods", "fuzzy", "stats_before", "stats_after"]
)

GridCell = namedtuple("GridCell", ["dim", "k", "min_dist"])

GridResult = namedtuple("GridResult", ["config", "report"])


def build_graph_stage(features, config, knn=None):
    """Run every seed-independent stage of `config` on `features`.

    A precomputed `knn` with at least ``config.k`` neighbors is truncated
    instead of recomputed.
    """
    if knn is None:
        with Timer("Exact %d-NN search" % config.k):
            knn = exact_knn(features, config.k, config.metric)
    elif knn.k != config.k:
        knn = knn.truncate(config.k)

    if config.graph_mode == "default_knn":
        stats = graph_statistics(symmetrized_knn(knn))
        neighborhoods = knn_neighborhoods(knn)
        fuzzy, _ = fuzzy_simplicial_set(neighborhoods)
        return GraphStage(knn, None, neighborhoods, fuzzy, stats, stats)

    mutual = mutual_knn(knn)
    before = graph_statistics(mutual)
    LOGGER.info(
        "Mutual %d-NN graph: %d components, %d points (%.1f%%) outside the giant component",
        config.k,
        before.n_components,
        before.outside_giant,
        100.0 * before.outside_giant_fraction,
    )
    repaired = repair_connectivity(mutual, knn, config.repair)
    after = graph_statistics(repaired)
    if after.n_components > 1:
        LOGGER.warning(
            "Graph still has %d components after %s repair", after.n_components, config.repair
        )
    if config.neighborhood == "path":
        with Timer("Path neighbor search"):
            neighborhoods = path_neighbors(repaired, config.effective_k_new)
    else:
        neighborhoods = adjacent_neighbors(repaired)
    fuzzy, _ = fuzzy_simplicial_set(neighborhoods)
    return GraphStage(knn, repaired, neighborhoods, fuzzy, before, after)


def embed_with_graph(stage, config, seed, curve=None):
    """Spectral initialization plus SGD layout for one seed."""
    curve = curve or fit_ab(config.min_dist)
    n_epochs = config.n_epochs
    if n_epochs is None:
        n_epochs = default_n_epochs(stage.fuzzy.n_vertices)
    init = spectral_init(stage.fuzzy, config.dim, seed)
    embedding = optimize_layout(
        init,
        stage.fuzzy,
        curve,
        n_epochs=n_epochs,
        neg_rate=config.neg_rate,
        learning_rate=config.learning_rate,
        seed=seed,
    )
    embedding.seed = seed
    embedding.hyperparams = config.hyperparams()
    return embedding


def embed_seeds(stage, config, n_jobs=1, curve=None):
    """One embedding per seed of `config`, in seed order."""
    curve = curve or fit_ab(config.min_dist)
    return Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(embed_with_graph)(stage, config, seed, curve) for seed in config.seeds
    )


def run_variant(features, config, *, n_jobs=1, knn=None):
    """Embed `features` once per seed with the method `config` describes."""
    config.validate()
    LOGGER.info(
        "Running %s with k=%d, min_dist=%g, dim=%d", config.tag, config.k, config.min_dist, config.dim
    )
    stage = build_graph_stage(features, config, knn)
    with Timer("Layout of %d seeds" % len(config.seeds)):
        return embed_seeds(stage, config, n_jobs)


def _cell_sort_key(cell, report):
    return (-report.nmi, cell.k, cell.min_dist)


class GridReport:
    """Per-cell seed-averaged scores of one method over a (dim, k, min_dist) grid."""

    def __init__(self, config, cells=None):
        self.config = config
        self.cells = dict(cells or {})

    def __len__(self):
        return len(self.cells)

    @property
    def dims(self):
        return sorted({cell.dim for cell in self.cells})

    def best_cell(self, dim=None):
        """Highest mean NMI; ties go to the smaller k, then the smaller min_dist."""
        candidates = [
            (cell, report)
            for cell, report in self.cells.items()
            if dim is None or cell.dim == dim
        ]
        if not candidates:
            raise InvalidMethodConfigError("No grid cells were evaluated for dim=%r" % (dim,))
        cell, _ = min(candidates, key=lambda item: _cell_sort_key(*item))
        return cell

    def best(self, dim=None):
        cell = self.best_cell(dim)
        config = self.config._replace(dim=cell.dim, k=cell.k, min_dist=cell.min_dist)
        return GridResult(config, self.cells[cell])

    def to_dict(self):
        cells = []
        for cell in sorted(self.cells):
            report = self.cells[cell]
            entry = dict(cell._asdict(), nmi_mean=report.nmi, nmi_std=report.std("nmi"))
            entry["report"] = report.to_dict()
            cells.append(entry)
        best = {}
        for dim in self.dims:
            result = self.best(dim)
            best[str(dim)] = {"config": result.config.hyperparams(), "report": result.report.to_dict()}
        return {
            "method": self.config.tag,
            "config": self.config.hyperparams(),
            "cells": cells,
            "best": best,
        }

    @staticmethod
    def cells_from_dict(document):
        return {
            GridCell(entry["dim"], entry["k"], entry["min_dist"]): MetricReport.from_dict(
                entry["report"]
            )
            for entry in document.get("cells", [])
        }


def grid_search(
    features,
    labels,
    config,
    *,
    k_values,
    min_dists,
    dims=None,
    n_jobs=1,
    n_init=None,
    completed=None,
    on_cell=None,
):
    """Evaluate `config`'s method on every (dim, k, min_dist) cell.

    One k-NN search at the largest k serves every k; one graph stage per k
    serves every dim and min_dist. Cells in `completed` are reused without
    recomputation. `on_cell(cell, report)` is called after each new cell.
    """
    k_values = sorted(set(k_values))
    min_dists = sorted(set(min_dists))
    dims = sorted(set(dims or [config.dim]))
    if not k_values or not min_dists:
        raise InvalidMethodConfigError("Grid ranges must not be empty")
    config.validate()

    report = GridReport(config, completed)
    pending = [
        GridCell(dim, k, min_dist)
        for k in k_values
        for dim in dims
        for min_dist in min_dists
        if GridCell(dim, k, min_dist) not in report.cells
    ]
    LOGGER.info(
        "Grid for %s: %d cells, %d already complete",
        config.tag,
        len(k_values) * len(min_dists) * len(dims),
        len(k_values) * len(min_dists) * len(dims) - len(pending),
    )
    if not pending:
        return report

    with Timer("Exact %d-NN search" % max(k_values)):
        knn = exact_knn(features, max(k_values), config.metric)
    curves = {}
    for k in k_values:
        cells = [cell for cell in pending if cell.k == k]
        if not cells:
            continue
        stage = build_graph_stage(features, config._replace(k=k), knn)
        for cell in cells:
            cell_config = config._replace(k=k, dim=cell.dim, min_dist=cell.min_dist)
            if cell.min_dist not in curves:
                curves[cell.min_dist] = fit_ab(cell.min_dist)
            embeddings = embed_seeds(stage, cell_config, n_jobs, curves[cell.min_dist])
            report.cells[cell] = score_embeddings(embeddings, labels, n_init)
            LOGGER.info(
                "Cell dim=%d k=%d min_dist=%g: NMI %.4f +/- %.4f",
                cell.dim,
                k,
                cell.min_dist,
                report.cells[cell].nmi,
                report.cells[cell].std("nmi"),
            )
            if on_cell is not None:
                on_cell(cell, report.cells[cell])
    return report


class ComparisonReport:
    """Scores of several methods run with the same k, min_dist, dim and seeds."""

    def __init__(self, base_config):
        self.base_config = base_config
        self.configs = {}
        self.reports = {}
        self.variances = {}
        self.graph_stats = {}
        self.welch = None

    @property
    def tags(self):
        return list(self.reports)

    def mean_class_variance(self, tag):
        """Mean over classes of the summed per-dimension class variance."""
        return float(self.variances[tag].sum(axis=1).mean())

    def to_dict(self):
        methods = {}
        for tag in self.tags:
            methods[tag] = {
                "config": self.configs[tag].hyperparams(),
                "report": self.reports[tag].to_dict(),
                "class_variance": self.variances[tag].tolist(),
                "mean_class_variance": self.mean_class_variance(tag),
                "graph_before_repair": dict(self.graph_stats[tag][0]),
                "graph_after_repair": dict(self.graph_stats[tag][1]),
            }
        document = {"config": self.base_config.hyperparams(), "methods": methods}
        if self.welch is not None:
            document["welch"] = dict(self.welch._asdict(), a=BASELINE_TAG, b=REFINED_TAG)
        return document


def _seed_averaged_variance(embeddings, labels):
    variances = [per_class_variance(embedding, labels).variances for embedding in embeddings]
    return np.mean(variances, axis=0)


def compare_variants(
    features, labels, base_config, *, variants=TABLE_VARIANTS, n_jobs=1, n_init=None
):
    """Run each (variant, neighborhood) of `variants` with the settings of
    `base_config` and collect their scores.

    When both the default method and MST-min with path neighbors are run,
    their per-seed NMI values are compared with Welch's t-test.
    """
    comparison = ComparisonReport(base_config)
    with Timer("Exact %d-NN search" % base_config.k):
        knn = exact_knn(features, base_config.k, base_config.metric)
    curve = fit_ab(base_config.min_dist)
    for variant, neighborhood in variants:
        graph_mode, repair = VARIANTS[variant]
        config = base_config._replace(
            graph_mode=graph_mode, repair=repair, neighborhood=neighborhood
        ).validate()
        stage = build_graph_stage(features, config, knn)
        embeddings = embed_seeds(stage, config, n_jobs, curve)
        comparison.configs[config.tag] = config
        comparison.reports[config.tag] = score_embeddings(embeddings, labels, n_init)
        comparison.variances[config.tag] = _seed_averaged_variance(embeddings, labels)
        comparison.graph_stats[config.tag] = (stage.stats_before, stage.stats_after)
        LOGGER.info("%s: mean NMI %.4f", config.tag, comparison.reports[config.tag].nmi)

    if BASELINE_TAG in comparison.reports and REFINED_TAG in comparison.reports:
        if len(base_config.seeds) > 1:
            comparison.welch = welch_t_test(
                comparison.reports[BASELINE_TAG].per_seed["nmi"],
                comparison.reports[REFINED_TAG].per_seed["nmi"],
            )
        else:
            LOGGER.warning("A single seed cannot be tested for significance")
    return comparison
