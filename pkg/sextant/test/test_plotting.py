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

"""Tests for the sextant.plotting module."""

import os
import shutil
import tempfile
import unittest
import xml.etree.ElementTree as ET

import numpy as np

from neighborgraph.dataset_io import LabelVector
from neighborgraph.exceptions import InvalidArgumentError
from neighborgraph.layout import Embedding
from sextant.plotting import PALETTE, scatter_svg, write_scatter_svg

SVG_NS = "{http://www.w3.org/2000/svg}"


def parse(document):
    return ET.fromstring(document)


class TestScatterSvg(unittest.TestCase):
    def test_one_circle_per_point(self):
        embedding = Embedding([[0.0, 0.0], [1.0, 2.0], [-3.0, 0.5]])
        root = parse(scatter_svg(embedding, LabelVector([0, 1, 1])))
        circles = root.findall(".//%scircle" % SVG_NS)
        self.assertEqual(len(circles), 3)
        self.assertEqual([c.get("fill") for c in circles], [PALETTE[0], PALETTE[1], PALETTE[1]])

    def test_legend_lists_every_class(self):
        rng = np.random.default_rng(0)
        labels = LabelVector(np.arange(100) % 20, class_names=["topic-%d" % i for i in range(20)])
        root = parse(scatter_svg(Embedding(rng.normal(size=(100, 2))), labels))
        legend = [group for group in root.iter("%sg" % SVG_NS) if group.get("id") == "legend"][0]
        entries = [text.text for text in legend.findall("%stext" % SVG_NS)]
        self.assertEqual(entries, ["topic-%d" % i for i in range(20)])
        self.assertEqual(len(set(PALETTE)), 20)

    def test_points_stay_inside_the_plot(self):
        coords = np.random.default_rng(1).normal(size=(50, 2)) * 1e4
        root = parse(scatter_svg(Embedding(coords), LabelVector(np.arange(50) % 2)))
        for circle in root.findall(".//%scircle" % SVG_NS):
            self.assertTrue(0 <= float(circle.get("cx")) <= 600)
            self.assertTrue(0 <= float(circle.get("cy")) <= 600)

    def test_constant_coordinates(self):
        root = parse(scatter_svg(Embedding(np.ones((4, 2))), LabelVector([0, 1, 0, 1])))
        self.assertEqual(len({c.get("cx") for c in root.findall(".//%scircle" % SVG_NS)}), 1)

    def test_deterministic(self):
        coords = np.random.default_rng(2).normal(size=(30, 2))
        labels = LabelVector(np.arange(30) % 3)
        first = scatter_svg(Embedding(coords), labels, title="umap")
        second = scatter_svg(Embedding(coords.copy()), labels, title="umap")
        self.assertEqual(first, second)

    def test_rejects_other_dimensions(self):
        with self.assertRaises(InvalidArgumentError):
            scatter_svg(Embedding(np.zeros((3, 3))), LabelVector([0, 1, 1]))

    def test_rejects_count_mismatch(self):
        with self.assertRaises(InvalidArgumentError):
            scatter_svg(Embedding(np.zeros((3, 2))), LabelVector([0, 1]))


class TestWriteScatterSvg(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, self.tmpdir)

    def test_identical_bytes(self):
        embedding = Embedding(np.random.default_rng(3).normal(size=(10, 2)))
        labels = LabelVector(np.arange(10) % 2)
        paths = [os.path.join(self.tmpdir, name) for name in ("a.svg", "b.svg")]
        for path in paths:
            write_scatter_svg(path, embedding, labels)
        with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
            self.assertEqual(a.read(), b.read())


if __name__ == "__main__":
    unittest.main()
