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

"""YAML experiment files: a dataset plus a list of embedding runs and checks.

An experiment file looks like::

    description: Five Gaussian blobs
    dataset:
      format: blobs          # blobs | topics | idx | sparse
      n_points: 500
      n_centers: 5
      n_features: 10
    operations:
      - embed: {variant: umap, k: 15, seeds: "0..4"}
      - assertMeanNmiAtLeast: {embedding: umap, value: 0.95}

Every operation is a mapping with exactly one key. Each experiment produces
one xUnit XML file.
"""

import logging
import os

import junitparser
import numpy as np
import yaml

from neighborgraph.connectivity import REPAIR_METHODS, graph_statistics, repair_connectivity
from neighborgraph.dataset_io import (
    balanced_subset,
    load_idx,
    load_sparse_matrix,
    make_blob_dataset,
    make_topic_dataset,
)
from neighborgraph.evaluation import per_class_variance, score_embeddings, welch_t_test
from neighborgraph.exceptions import NeighborGraphBaseError
from neighborgraph.knn import exact_knn, mutual_knn, symmetrized_knn
from neighborgraph.utils import JSONObject
from sextant.docgen import tabulate_experiment_plan
from sextant.exceptions import ExperimentError, SextantBaseError
from sextant.pipeline import MethodConfig, build_graph_stage, embed_seeds
from sextant.timer import Timer
from sextant.utils import ExperimentXUnitLogger, parse_seeds

LOGGER = logging.getLogger(__name__)

_FILE_FORMATS = {"idx": load_idx, "sparse": load_sparse_matrix}

_GENERATORS = {"blobs": make_blob_dataset, "topics": make_topic_dataset}


def get_experiment_name(experiment_file):
    return os.path.splitext(os.path.basename(experiment_file))[0]


class ExperimentCase:
    def __init__(self, *, name, specification, n_jobs=1, n_init=None):
        self.id = name
        self.spec = specification
        self.n_jobs = n_jobs
        self.n_init = n_init
        self.failed = False
        self.skipped = False
        self.features = None
        self.labels = None
        self.embeddings = {}
        self.reports = {}
        self._knn_cache = {}

    def __repr__(self):
        return f"<ExperimentCase: {self.id}>"

    @property
    def dataset_description(self):
        dataset = self.spec.dataset
        description = dataset.format
        if "subset" in dataset:
            description += " (%d-point subset)" % dataset.subset
        return description

    def _missing_files(self):
        dataset = self.spec.dataset
        keys = [key for key in ("data", "labels", "names") if key in dataset]
        paths = [os.path.expandvars(dataset[key]) for key in keys]
        return [path for path in paths if not os.path.exists(path)]

    def load_dataset(self):
        dataset = JSONObject(self.spec.dataset)
        data_format = dataset.pop("format")
        subset = dataset.pop("subset", None)
        subset_seed = dataset.pop("subset_seed", 0)
        if data_format in _FILE_FORMATS:
            names = dataset.get("names")
            features, labels = _FILE_FORMATS[data_format](
                os.path.expandvars(dataset.data),
                os.path.expandvars(dataset.labels),
                None if names is None else os.path.expandvars(names),
            )
        elif data_format in _GENERATORS:
            features, labels = _GENERATORS[data_format](**dataset)
        else:
            raise ExperimentError("Unknown dataset format %r" % (data_format,))
        if subset is not None:
            features, labels, _ = balanced_subset(features, labels, subset, seed=subset_seed)
        self.features, self.labels = features, labels
        LOGGER.info(
            "Experiment %r uses %d points, %d classes",
            self.id,
            len(labels),
            labels.present_classes.size,
        )

    def knn(self, k, metric):
        """Exact k-NN shared by every operation of the experiment."""
        cached = self._knn_cache.get(metric)
        if cached is None or cached.k < k:
            with Timer("Exact %d-NN search" % k):
                cached = exact_knn(self.features, k, metric)
            self._knn_cache[metric] = cached
        return cached.truncate(k)

    def report(self, name):
        if name not in self.embeddings:
            raise ExperimentError("No embedding named %r has been computed" % (name,))
        if name not in self.reports:
            self.reports[name] = score_embeddings(self.embeddings[name], self.labels, self.n_init)
        return self.reports[name]

    def class_variance(self, name):
        """Seed-averaged per-class variance, summed over dimensions."""
        if name not in self.embeddings:
            raise ExperimentError("No embedding named %r has been computed" % (name,))
        variances = [
            per_class_variance(embedding, self.labels).variances.sum(axis=1)
            for embedding in self.embeddings[name]
        ]
        return np.mean(variances, axis=0)

    #
    # Operations.
    #
    def embed(self, op_spec):
        op_spec = dict(op_spec)
        name = op_spec.pop("name", None)
        seeds = op_spec.get("seeds")
        if seeds is not None:
            op_spec["seeds"] = tuple(seeds) if isinstance(seeds, list) else parse_seeds(seeds)
        config = MethodConfig.for_variant(op_spec.pop("variant"), **op_spec).validate()
        stage = build_graph_stage(self.features, config, self.knn(config.k, config.metric))
        with Timer("Layout of %s" % config.tag):
            self.embeddings[name or config.tag] = embed_seeds(stage, config, self.n_jobs)

    def assert_mean_nmi_at_least(self, op_spec):
        if "embeddings" in op_spec:
            names = op_spec.embeddings
        elif "embedding" in op_spec:
            names = [op_spec.embedding]
        else:
            names = list(self.embeddings)
        for name in names:
            nmi = self.report(name).nmi
            LOGGER.info("%s: mean NMI %.4f (required %.4f)", name, nmi, op_spec.value)
            if nmi < op_spec.value:
                raise AssertionError("Mean NMI of %s is %.4f < %.4f" % (name, nmi, op_spec.value))

    def assert_nmi_gap_at_least(self, op_spec):
        better = self.report(op_spec.better).nmi
        worse = self.report(op_spec.worse).nmi
        LOGGER.info("NMI %s %.4f vs %s %.4f", op_spec.better, better, op_spec.worse, worse)
        if better - worse < op_spec.value:
            raise AssertionError(
                "NMI gap %s - %s is %.4f < %.4f"
                % (op_spec.better, op_spec.worse, better - worse, op_spec.value)
            )

    def assert_disconnection(self, op_spec):
        knn = self.knn(op_spec.k, op_spec.get("metric", "euclidean"))
        mutual = mutual_knn(knn)
        before = graph_statistics(mutual)
        knn_components = graph_statistics(symmetrized_knn(knn)).n_components
        LOGGER.info(
            "Mutual %d-NN graph: %d points (%.2f%%) outside the giant component",
            op_spec.k,
            before.outside_giant,
            100.0 * before.outside_giant_fraction,
        )
        minimum = op_spec.get("minOutsideGiantFraction", 0.0)
        if before.outside_giant_fraction < minimum:
            raise AssertionError(
                "Only %.4f of points lie outside the giant component (expected >= %.4f)"
                % (before.outside_giant_fraction, minimum)
            )
        for method in REPAIR_METHODS:
            after = graph_statistics(repair_connectivity(mutual, knn, method))
            if after.isolated_vertices:
                raise AssertionError(
                    "%d isolated vertices remain after %s" % (after.isolated_vertices, method)
                )
            if method != "nn" and after.n_components != knn_components:
                raise AssertionError(
                    "%s left %d components; the k-NN graph has %d"
                    % (method, after.n_components, knn_components)
                )

    def assert_variance_order(self, op_spec):
        larger = self.class_variance(op_spec.larger)
        smaller = self.class_variance(op_spec.smaller)
        fraction = float(np.mean(larger >= smaller))
        LOGGER.info(
            "Class variance %s %.4f vs %s %.4f; larger for %.0f%% of classes",
            op_spec.larger,
            larger.mean(),
            op_spec.smaller,
            smaller.mean(),
            100.0 * fraction,
        )
        required = op_spec.get("minFraction", 1.0)
        if fraction < required:
            raise AssertionError(
                "Variance of %s exceeds %s for %.2f of classes (< %.2f)"
                % (op_spec.larger, op_spec.smaller, fraction, required)
            )

    def welch_test(self, op_spec):
        result = welch_t_test(
            self.report(op_spec.a).per_seed["nmi"], self.report(op_spec.b).per_seed["nmi"]
        )
        LOGGER.info(
            "Welch t-test %s vs %s: t = %.4f, df = %.2f, p = %.4g",
            op_spec.a,
            op_spec.b,
            result.statistic,
            result.df,
            result.pvalue,
        )
        if "maxPValue" in op_spec and result.pvalue > op_spec.maxPValue:
            raise AssertionError("p = %.4g exceeds %.4g" % (result.pvalue, op_spec.maxPValue))

    OPERATIONS = {
        "embed": embed,
        "assertMeanNmiAtLeast": assert_mean_nmi_at_least,
        "assertNmiGapAtLeast": assert_nmi_gap_at_least,
        "assertDisconnection": assert_disconnection,
        "assertVarianceOrder": assert_variance_order,
        "welchTest": welch_test,
    }

    def run(self):
        LOGGER.info("Running experiment %r", self.id)
        junit_test = junitparser.TestCase(self.id)
        timer = Timer()
        timer.start()

        missing = self._missing_files()
        if missing:
            LOGGER.warning("SKIPPED: %r; missing dataset files %s", self.id, ", ".join(missing))
            self.skipped = True
            junit_test.result = junitparser.Skipped("Missing dataset files: %s" % ", ".join(missing))
            return junit_test

        try:
            self.load_dataset()
            for operation in self.spec.operations:
                if len(operation) != 1:
                    raise ExperimentError("Operation must have exactly one key: %s" % operation)
                op_name, op_spec = next(iter(operation.items()))
                if op_name not in self.OPERATIONS:
                    raise ExperimentError("Unrecognized operation %s" % op_name)
                LOGGER.debug("Experiment %r: %s %s", self.id, op_name, op_spec)
                self.OPERATIONS[op_name](self, JSONObject(op_spec or {}))
        except AssertionError as exc:
            self.failed = True
            LOGGER.info("FAILED: %r; %s", self.id, exc)
            junit_test.result = junitparser.Failure(str(exc))
        except (NeighborGraphBaseError, SextantBaseError) as exc:
            self.failed = True
            LOGGER.error("ERROR: %r; %s", self.id, exc)
            junit_test.result = junitparser.Error(str(exc))
        except (KeyError, AttributeError, TypeError) as exc:
            self.failed = True
            LOGGER.error("ERROR: %r; malformed experiment: %r", self.id, exc)
            junit_test.result = junitparser.Error("Malformed experiment: %r" % (exc,))
        else:
            LOGGER.info("SUCCEEDED: %r", self.id)
        finally:
            timer.stop()
            junit_test.time = timer.elapsed
        return junit_test


class ExperimentRunnerBase:
    """Base class for experiment runners."""

    def __init__(self, *, locator, xunit_output, n_jobs=1, n_init=None):
        self.cases = []
        self.xunit_logger = ExperimentXUnitLogger(output_directory=xunit_output)
        for full_path in self.find_experiments(locator):
            with open(full_path) as spec_file:
                spec = JSONObject.from_dict(yaml.safe_load(spec_file))
            if "dataset" not in spec or "operations" not in spec:
                raise ExperimentError("%s needs 'dataset' and 'operations' sections" % full_path)
            self.cases.append(
                ExperimentCase(
                    name=get_experiment_name(full_path),
                    specification=spec,
                    n_jobs=n_jobs,
                    n_init=n_init,
                )
            )
        if not self.cases:
            raise ExperimentError("No experiment files found at %s" % locator)

        # Log experiment plan.
        LOGGER.info(self.get_printable_test_plan())

    @staticmethod
    def find_experiments(locator):
        raise NotImplementedError

    def get_printable_test_plan(self):
        return tabulate_experiment_plan(self.cases)

    def run(self):
        """Run every case; returns True if any case failed."""
        all_ok = True
        for case in self.cases:
            xunit_test = case.run()
            self.xunit_logger.write_xml(test_case=xunit_test, filename=case.id)
            if case.failed:
                all_ok = False
            LOGGER.info("Experiment %r done; Failed: %s, All OK: %s", case.id, case.failed, all_ok)
        return not all_ok


class SingleExperimentRunner(ExperimentRunnerBase):
    """Run the experiment file named ``locator``."""

    @staticmethod
    def find_experiments(locator):
        LOGGER.info("Loading experiment from file %r", locator)
        full_path = os.path.realpath(locator)
        if os.path.isfile(full_path) and locator.lower().endswith((".yml", ".yaml")):
            yield full_path


class MultiExperimentRunner(ExperimentRunnerBase):
    """Run all experiment files in the ``locator`` directory."""

    @staticmethod
    def find_experiments(locator):
        LOGGER.info("Scanning directory %r for experiments", locator)
        for root, _, files in sorted(os.walk(locator)):
            for file in sorted(files):
                full_path = os.path.join(root, file)
                if os.path.isfile(full_path) and file.lower().endswith((".yml", ".yaml")):
                    LOGGER.debug("Loading experiment from file %r", full_path)
                    yield full_path
