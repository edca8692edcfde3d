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

"""Tests for YAML experiment files and their runners."""

import os
import shutil
import tempfile
import textwrap
import unittest

import junitparser
from click.testing import CliRunner

from sextant.cli import cli
from sextant.exceptions import ExperimentError
from sextant.experiment_runner import (
    ExperimentCase,
    MultiExperimentRunner,
    SingleExperimentRunner,
)

BLOBS = """\
description: Two separated blobs
dataset:
  format: blobs
  n_points: 200
  n_centers: 2
  n_features: 5
  seed: 3
operations:
"""


class ExperimentTestCase(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, self.tmpdir)
        self.xunit_dir = os.path.join(self.tmpdir, "xunit")

    def write_experiment(self, name, operations, header=BLOBS):
        path = os.path.join(self.tmpdir, "experiments", name + ".yml")
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w") as fp:
            fp.write(header)
            fp.write(textwrap.indent(textwrap.dedent(operations), "  "))
        return path

    def run_one(self, path):
        runner = SingleExperimentRunner(locator=path, xunit_output=self.xunit_dir)
        failed = runner.run()
        (case,) = runner.cases
        return failed, case

    def xunit_result(self, name):
        xml = junitparser.JUnitXml.fromfile(os.path.join(self.xunit_dir, name + ".xml"))
        (case,) = [case for suite in xml for case in suite]
        return case.result


class TestExperimentCase(ExperimentTestCase):
    def test_passing_experiment(self):
        path = self.write_experiment(
            "blobs",
            """\
            - embed: {variant: umap, k: 10, seeds: "0..2", n_epochs: 60}
            - embed: {variant: mst-min, neighborhood: path, k: 10, seeds: [0, 1, 2], n_epochs: 60}
            - assertMeanNmiAtLeast: {value: 0.95}
            - assertNmiGapAtLeast: {better: mst-min-path, worse: umap, value: -0.05}
            - assertDisconnection: {k: 10}
            - welchTest: {a: umap, b: mst-min-path}
            """,
        )
        failed, case = self.run_one(path)
        self.assertFalse(failed)
        self.assertFalse(case.failed)
        self.assertEqual(sorted(case.embeddings), ["mst-min-path", "umap"])
        self.assertEqual([embedding.seed for embedding in case.embeddings["umap"]], [0, 1, 2])
        self.assertIsNone(self.xunit_result("blobs"))

    def test_named_embeddings_and_variance_order(self):
        path = self.write_experiment(
            "named",
            """\
            - embed: {variant: umap, name: tight, k: 10, min_dist: 0.0, seeds: "0,1", n_epochs: 60}
            - embed: {variant: umap, name: loose, k: 10, min_dist: 0.99, seeds: "0,1", n_epochs: 60}
            - assertVarianceOrder: {larger: loose, smaller: tight, minFraction: 0.5}
            """,
        )
        failed, case = self.run_one(path)
        self.assertFalse(failed)
        self.assertEqual(case.class_variance("tight").shape, (2,))

    def test_failed_assertion_is_recorded(self):
        path = self.write_experiment(
            "too-strict",
            """\
            - embed: {variant: nn, k: 10, seeds: "0", n_epochs: 30}
            - assertMeanNmiAtLeast: {embedding: nn-adjacent, value: 1.5}
            """,
        )
        failed, case = self.run_one(path)
        self.assertTrue(failed)
        self.assertTrue(case.failed)
        result = self.xunit_result("too-strict")
        self.assertIsInstance(result, junitparser.Failure)
        self.assertIn("nn-adjacent", result.message)

    def test_missing_dataset_is_skipped(self):
        header = textwrap.dedent(
            """\
            dataset:
              format: idx
              data: ${SEXTANT_TEST_NO_SUCH_DIR}/train-images-idx3-ubyte
              labels: ${SEXTANT_TEST_NO_SUCH_DIR}/train-labels-idx1-ubyte
            operations:
            """
        )
        path = self.write_experiment("mnist", "- assertDisconnection: {k: 20}\n", header=header)
        failed, case = self.run_one(path)
        self.assertFalse(failed)
        self.assertTrue(case.skipped)
        self.assertIsInstance(self.xunit_result("mnist"), junitparser.Skipped)

    def test_malformed_operations(self):
        cases = {
            "unknown": "- frobnicate: {}\n",
            "two-keys": "- {embed: {variant: umap}, assertDisconnection: {k: 5}}\n",
            "no-variant": "- embed: {k: 10}\n",
            "no-value": "- embed: {variant: umap, seeds: '0', n_epochs: 5}\n- assertMeanNmiAtLeast: {}\n",
            "unknown-embedding": "- assertMeanNmiAtLeast: {embedding: umap, value: 0.5}\n",
            "bad-config": "- embed: {variant: umap, neighborhood: path}\n",
        }
        for name, operations in cases.items():
            with self.subTest(name=name):
                failed, case = self.run_one(self.write_experiment(name, operations))
                self.assertTrue(failed)
                self.assertIsInstance(self.xunit_result(name), junitparser.Error)


class TestRunners(ExperimentTestCase):
    def test_directory_runner(self):
        self.write_experiment("b", "- assertDisconnection: {k: 8}\n")
        self.write_experiment("a", "- assertDisconnection: {k: 5, minOutsideGiantFraction: 1.0}\n")
        runner = MultiExperimentRunner(
            locator=os.path.join(self.tmpdir, "experiments"), xunit_output=self.xunit_dir
        )
        self.assertEqual([case.id for case in runner.cases], ["a", "b"])
        self.assertIn("blobs", runner.get_printable_test_plan())
        self.assertTrue(runner.run())
        self.assertIsInstance(self.xunit_result("a"), junitparser.Failure)
        self.assertIsNone(self.xunit_result("b"))

    def test_no_experiments(self):
        os.makedirs(os.path.join(self.tmpdir, "empty"))
        with self.assertRaises(ExperimentError):
            MultiExperimentRunner(locator=os.path.join(self.tmpdir, "empty"), xunit_output=self.xunit_dir)

    def test_missing_sections(self):
        path = os.path.join(self.tmpdir, "bare.yml")
        with open(path, "w") as fp:
            fp.write("description: nothing to do\n")
        with self.assertRaises(ExperimentError):
            SingleExperimentRunner(locator=path, xunit_output=self.xunit_dir)

    def test_shipped_experiment_files(self):
        locator = os.path.join(os.path.dirname(__file__), os.pardir, os.pardir, "experiments")
        runner = MultiExperimentRunner(locator=locator, xunit_output=self.xunit_dir)
        self.assertIn("blobsRecovery", [case.id for case in runner.cases])
        for case in runner.cases:
            for operation in case.spec.operations:
                with self.subTest(experiment=case.id, operation=operation):
                    (name,) = operation
                    self.assertIn(name, ExperimentCase.OPERATIONS)

    def test_cli_exit_codes(self):
        passing = self.write_experiment("pass", "- assertDisconnection: {k: 8}\n")
        failing = self.write_experiment(
            "fail", "- assertDisconnection: {k: 5, minOutsideGiantFraction: 1.0}\n"
        )
        runner = CliRunner()
        result = runner.invoke(cli, ["experiments", "run-one", passing, "--xunit-output", self.xunit_dir])
        self.assertEqual(result.exit_code, 0, result.output)
        result = runner.invoke(cli, ["experiments", "run-one", failing, "--xunit-output", self.xunit_dir])
        self.assertEqual(result.exit_code, 1)
        result = runner.invoke(
            cli, ["experiments", "run", os.path.dirname(passing), "--xunit-output", self.xunit_dir]
        )
        self.assertEqual(result.exit_code, 1)


if __name__ == "__main__":
    unittest.main()
