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

"""Class-colored 2-D scatter plots written as plain SVG."""

import logging
import xml.etree.ElementTree as ET

import numpy as np

from neighborgraph.exceptions import InvalidArgumentError

LOGGER = logging.getLogger(__name__)

# matplotlib's tab20 qualitative palette.
PALETTE = (
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c",
    "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f",
    "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
)  # fmt: skip

PLOT_SIZE = 600
MARGIN = 20
LEGEND_WIDTH = 180
LEGEND_ROW = 18
POINT_RADIUS = 2.0


def class_color(label):
    return PALETTE[int(label) % len(PALETTE)]


def _scale(values, lo, hi):
    """Map `values` affinely onto [lo, hi]; a constant column maps to the middle."""
    vmin, vmax = float(values.min()), float(values.max())
    if vmax == vmin:
        return np.full(values.shape, (lo + hi) / 2.0)
    return lo + (values - vmin) * (hi - lo) / (vmax - vmin)


def _fmt(value):
    return "%.2f" % value


def scatter_svg(embedding, labels, title=None):
    """SVG document text for a 2-D embedding colored by class.

    Points are drawn in index order; the legend lists every present class by
    ascending id.
    """
    if embedding.d != 2:
        raise InvalidArgumentError(
            "Only 2-D embeddings can be plotted", detail="embedding has %d dimensions" % embedding.d
        )
    if embedding.n_points != len(labels):
        raise InvalidArgumentError(
            "Embedding and label counts differ",
            detail="%d points, %d labels" % (embedding.n_points, len(labels)),
        )
    top = MARGIN + (LEGEND_ROW if title else 0)
    width = PLOT_SIZE + LEGEND_WIDTH
    height = max(PLOT_SIZE, top + MARGIN + LEGEND_ROW * labels.present_classes.size)
    svg = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": str(width),
            "height": str(height),
            "viewBox": "0 0 %d %d" % (width, height),
        },
    )
    ET.SubElement(svg, "rect", {"width": "100%", "height": "100%", "fill": "white"})
    if title:
        heading = ET.SubElement(
            svg, "text", {"x": str(MARGIN), "y": str(MARGIN), "font-size": "14", "font-family": "sans-serif"}
        )
        heading.text = title

    if embedding.n_points:
        xs = _scale(embedding.coords[:, 0], MARGIN, PLOT_SIZE - MARGIN)
        # SVG y grows downwards.
        ys = _scale(embedding.coords[:, 1], PLOT_SIZE - MARGIN, top)
    else:
        xs = ys = np.zeros(0)
    points = ET.SubElement(svg, "g", {"id": "points", "fill-opacity": "0.8"})
    for x, y, label in zip(xs, ys, labels.labels):
        ET.SubElement(
            points,
            "circle",
            {"cx": _fmt(x), "cy": _fmt(y), "r": _fmt(POINT_RADIUS), "fill": class_color(label)},
        )

    legend = ET.SubElement(svg, "g", {"id": "legend", "font-size": "12", "font-family": "sans-serif"})
    for row, label in enumerate(labels.present_classes):
        y = top + row * LEGEND_ROW
        ET.SubElement(
            legend,
            "rect",
            {
                "x": str(PLOT_SIZE + 10),
                "y": str(y),
                "width": "10",
                "height": "10",
                "fill": class_color(label),
            },
        )
        entry = ET.SubElement(legend, "text", {"x": str(PLOT_SIZE + 26), "y": str(y + 9)})
        entry.text = labels.name_of(label)

    return ET.tostring(svg, encoding="unicode")


def write_scatter_svg(path, embedding, labels, title=None):
    document = scatter_svg(embedding, labels, title)
    with open(path, "w") as fp:
        fp.write(document)
        fp.write("\n")
    LOGGER.info("Wrote %d-point scatter plot to %s", embedding.n_points, path)
    return path
