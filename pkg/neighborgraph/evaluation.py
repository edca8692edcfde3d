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

"""Scoring embeddings against ground-truth labels."""

import logging
from collections import namedtuple

import numpy as np
from scipy import stats
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans
from sklearn.metrics import adjusted_rand_score, normalized_mutual_info_score
from sklearn.metrics.cluster import contingency_matrix

from neighborgraph.configuration import CONFIG_DEFAULTS
from neighborgraph.exceptions import DataConsistencyError, InvalidArgumentError
from neighborgraph.utils import JSONObject

LOGGER = logging.getLogger(__name__)

METRIC_NAMES = ("nmi", "accuracy", "purity", "ari")

ClassVariance = namedtuple("ClassVariance", ["classes", "variances"])

WelchResult = namedtuple("WelchResult", ["statistic", "pvalue", "df", "infinite"])


class Partition:
    """Hard cluster assignment of every point."""

    def __init__(self, assignments, n_clusters=None, inertia=None):
        assignments = np.asarray(assignments, dtype=np.int64)
        if n_clusters is None:
            n_clusters = int(assignments.max()) + 1 if assignments.size else 1
        if n_clusters < 1 or (assignments.size and (assignments.min() < 0 or assignments.max() >= n_clusters)):
            raise InvalidArgumentError("Cluster ids must lie in [0, n_clusters)")
        self.assignments = assignments
        self.n_clusters = n_clusters
        self.inertia = inertia

    def __len__(self):
        return self.assignments.size

    def __repr__(self):
        return f"<Partition: {len(self)} points, {self.n_clusters} clusters>"


def _labels(values):
    return getattr(values, "labels", getattr(values, "assignments", values))


def _check_lengths(truth, pred):
    truth, pred = np.asarray(_labels(truth)), np.asarray(_labels(pred))
    if truth.shape != pred.shape:
        raise DataConsistencyError(
            "Label and prediction lengths differ", detail="%d vs %d" % (truth.size, pred.size)
        )
    return truth, pred


def kmeans(embedding, k, seed, n_init=None):
    """Best-inertia k-means++ clustering of an embedding's coordinates."""
    if not 1 <= k <= embedding.n_points:
        raise InvalidArgumentError(
            "k must lie in [1, n_points]", detail="k=%d, n=%d" % (k, embedding.n_points)
        )
    model = KMeans(
        n_clusters=k,
        init="k-means++",
        n_init=n_init or CONFIG_DEFAULTS.KMEANS_N_INIT,
        max_iter=CONFIG_DEFAULTS.KMEANS_MAX_ITER,
        tol=0.0,
        random_state=seed,
    )
    assignments = model.fit_predict(embedding.coords)
    return Partition(assignments, k, float(model.inertia_))


def nmi(truth, pred):
    """Mutual information over the arithmetic mean of both entropies.

    Two single-cluster partitions have zero entropy on both sides and score 0.
    """
    truth, pred = _check_lengths(truth, pred)
    if np.unique(truth).size <= 1 and np.unique(pred).size <= 1:
        return 0.0
    return float(normalized_mutual_info_score(truth, pred, average_method="arithmetic"))


def clustering_accuracy(truth, pred):
    """Fraction of points correct under the best one-to-one cluster-to-class map."""
    truth, pred = _check_lengths(truth, pred)
    table = contingency_matrix(truth, pred)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / truth.size)


def purity(truth, pred):
    truth, pred = _check_lengths(truth, pred)
    table = contingency_matrix(truth, pred)
    return float(table.max(axis=0).sum() / truth.size)


def ari(truth, pred):
    truth, pred = _check_lengths(truth, pred)
    return float(adjusted_rand_score(truth, pred))


def score_partition(truth, pred):
    """All four clustering metrics for one partition."""
    return JSONObject(
        nmi=nmi(truth, pred),
        accuracy=clustering_accuracy(truth, pred),
        purity=purity(truth, pred),
        ari=ari(truth, pred),
    )


class MetricReport:
    """Per-seed clustering scores with their means and sample deviations."""

    def __init__(self, seeds, per_seed):
        self.seeds = list(seeds)
        self.per_seed = {name: np.asarray(per_seed[name], dtype=np.float64) for name in METRIC_NAMES}

    @classmethod
    def from_scores(cls, seeds, scores):
        return cls(seeds, {name: [score[name] for score in scores] for name in METRIC_NAMES})

    def mean(self, name):
        return float(self.per_seed[name].mean())

    def std(self, name):
        values = self.per_seed[name]
        return float(values.std(ddof=1)) if values.size > 1 else 0.0

    @property
    def nmi(self):
        return self.mean("nmi")

    @property
    def accuracy(self):
        return self.mean("accuracy")

    @property
    def purity(self):
        return self.mean("purity")

    @property
    def ari(self):
        return self.mean("ari")

    def to_dict(self):
        document = {"seeds": self.seeds}
        for name in METRIC_NAMES:
            document[name] = {
                "mean": self.mean(name),
                "std": self.std(name),
                "per_seed": self.per_seed[name].tolist(),
            }
        return document

    @classmethod
    def from_dict(cls, document):
        return cls(document["seeds"], {name: document[name]["per_seed"] for name in METRIC_NAMES})


def score_embeddings(embeddings, truth, n_init=None):
    """Cluster each embedding with k = number of classes and score it.

    Each embedding is clustered with its own seed.
    """
    k = truth.present_classes.size
    scores = []
    for embedding in embeddings:
        if embedding.n_points != len(truth):
            raise DataConsistencyError(
                "Embedding and label counts differ",
                detail="%d points, %d labels" % (embedding.n_points, len(truth)),
            )
        partition = kmeans(embedding, k, embedding.seed or 0, n_init)
        score = score_partition(truth, partition)
        LOGGER.debug("Seed %s scored NMI %.4f", embedding.seed, score.nmi)
        scores.append(score)
    return MetricReport.from_scores([embedding.seed for embedding in embeddings], scores)


def per_class_variance(embedding, truth):
    """Unbiased per-dimension variance of the points of each present class.

    A class with a single point has variance 0.
    """
    if embedding.n_points != len(truth):
        raise DataConsistencyError("Embedding and label counts differ")
    classes = truth.present_classes
    variances = np.zeros((classes.size, embedding.d))
    for row, label in enumerate(classes):
        members = embedding.coords[truth.labels == label]
        if members.shape[0] > 1:
            variances[row] = members.var(axis=0, ddof=1)
    return ClassVariance(classes, variances)


def welch_t_test(sample_a, sample_b):
    """Two-tailed Welch t-test.

    Zero variance in both samples is handled explicitly: equal means give
    ``t = 0, p = 1``; different means give ``p = 0`` with ``infinite`` set.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise InvalidArgumentError("Each sample needs at least two values")
    var_a, var_b = a.var(ddof=1), b.var(ddof=1)
    se_a, se_b = var_a / a.size, var_b / b.size
    if se_a + se_b == 0:
        if a.mean() == b.mean():
            return WelchResult(0.0, 1.0, float(a.size + b.size - 2), False)
        sign = np.sign(a.mean() - b.mean())
        return WelchResult(float(sign * np.inf), 0.0, float(a.size + b.size - 2), True)
    df = (se_a + se_b) ** 2 / (se_a**2 / (a.size - 1) + se_b**2 / (b.size - 1))
    result = stats.ttest_ind(a, b, equal_var=False)
    return WelchResult(float(result.statistic), float(result.pvalue), float(df), False)
