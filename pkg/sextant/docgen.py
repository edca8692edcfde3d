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

from textwrap import dedent

from tabulate import tabulate

from neighborgraph.evaluation import METRIC_NAMES
from sextant.configuration import CONFIGURATION_OPTIONS as CONFIGOPTS


def _flags(optspec):
    flags = optspec["cliopt"]
    return "/".join(flags) if isinstance(flags, tuple) else flags


def generate_configuration_help():
    """Table of runtime options with their flags, variables and defaults."""
    rows = [
        [_flags(spec), spec.get("envvar", "-"), str(spec.get("default", "-")), spec["help"]]
        for spec in CONFIGOPTS.values()
    ]
    table = tabulate(rows, headers=["Flag", "Environment variable", "Default", "Meaning"], tablefmt="rst")
    intro = dedent(
        """\
        Every option below can be given on the command line or through its
        environment variable. A flag on the command line overrides the
        variable.
        """
    )
    return intro + "\n" + table


def tabulate_method_configuration(config):
    table_data = [
        ["Method", config.tag],
        ["Graph mode", config.graph_mode],
        ["Connectivity repair", config.repair],
        ["Neighborhood", config.neighborhood],
        ["k", config.k],
        ["k_new", config.effective_k_new],
        ["min_dist", config.min_dist],
        ["Embedding dimension", config.dim],
        ["Metric", config.metric],
        ["Epochs", "auto" if config.n_epochs is None else config.n_epochs],
        ["Seeds", ", ".join(str(seed) for seed in config.seeds)],
    ]
    table_txt = "Method Configuration:\n{}"
    return table_txt.format(
        tabulate(table_data, headers=["Configuration option", "Value"], tablefmt="rst")
    )


def tabulate_graph_statistics(rows):
    """`rows` is a list of (graph name, statistics) pairs."""
    table_data = [
        [
            name,
            stats.n_edges,
            stats.n_components,
            stats.giant_component_size,
            "%d (%.1f%%)" % (stats.outside_giant, 100.0 * stats.outside_giant_fraction),
            stats.isolated_vertices,
        ]
        for name, stats in rows
    ]
    headers = ["Graph", "Edges", "Components", "Giant component", "Outside giant", "Isolated"]
    return "Graph Connectivity:\n{}".format(tabulate(table_data, headers=headers, tablefmt="rst"))


def tabulate_metric_report(report, title="Clustering Scores"):
    table_data = [[seed] + [report.per_seed[name][i] for name in METRIC_NAMES] for i, seed in enumerate(report.seeds)]
    table_data.append(["mean"] + [report.mean(name) for name in METRIC_NAMES])
    table_data.append(["std"] + [report.std(name) for name in METRIC_NAMES])
    headers = ["Seed", "NMI", "Accuracy", "Purity", "ARI"]
    return "{}:\n{}".format(title, tabulate(table_data, headers=headers, tablefmt="rst", floatfmt=".4f"))


def tabulate_grid_report(grid):
    table_data = []
    for cell in sorted(grid.cells):
        report = grid.cells[cell]
        table_data.append([cell.dim, cell.k, cell.min_dist, report.nmi, report.std("nmi")])
    headers = ["dim", "k", "min_dist", "NMI mean", "NMI std"]
    table_txt = "Grid Results for {}:\n{}"
    return table_txt.format(grid.config.tag, tabulate(table_data, headers=headers, tablefmt="rst", floatfmt=".4f"))


def tabulate_comparison(comparison):
    table_data = []
    for tag in comparison.tags:
        report = comparison.reports[tag]
        row = [tag]
        for name in METRIC_NAMES:
            row.append("%.4f +/- %.4f" % (report.mean(name), report.std(name)))
        row.append("%.4f" % comparison.mean_class_variance(tag))
        table_data.append(row)
    headers = ["Method", "NMI", "Accuracy", "Purity", "ARI", "Class variance"]
    text = "Method Comparison:\n{}".format(tabulate(table_data, headers=headers, tablefmt="rst"))
    if comparison.welch is not None:
        welch = comparison.welch
        text += "\nWelch t-test on NMI: t = %.4f, df = %.2f, p = %.4g" % (
            welch.statistic,
            welch.df,
            welch.pvalue,
        )
    return text


def tabulate_experiment_plan(cases):
    table_data = [[case.id, case.dataset_description, len(case.spec.operations)] for case in cases]
    table_txt = "Experiment Plan\n{}\n"
    return table_txt.format(
        tabulate(table_data, headers=["Experiment", "Dataset", "Operations"], tablefmt="rst")
    )
