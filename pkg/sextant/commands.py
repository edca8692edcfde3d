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

import logging
import os

from neighborgraph.connectivity import REPAIR_METHODS, graph_statistics, repair_connectivity
from neighborgraph.dataset_io import (
    load_embedding,
    load_idx,
    load_labels,
    load_sparse_matrix,
    save_embedding,
)
from neighborgraph.evaluation import score_embeddings
from neighborgraph.exceptions import DataConsistencyError, InvalidArgumentError
from neighborgraph.knn import exact_knn, mutual_knn, symmetrized_knn
from neighborgraph.utils import JSONObject, read_json, write_edge_list, write_json
from sextant.docgen import (
    tabulate_comparison,
    tabulate_graph_statistics,
    tabulate_grid_report,
    tabulate_method_configuration,
    tabulate_metric_report,
)
from sextant.pipeline import (
    GridReport,
    build_graph_stage,
    compare_variants,
    embed_seeds,
    grid_search,
)
from sextant.plotting import write_scatter_svg
from sextant.timer import Timer
from sextant.utils import ensure_directory, utc_timestamp
from sextant.version import __version__

LOGGER = logging.getLogger(__name__)

DATA_FORMATS = ("idx", "sparse")

MANIFEST_FILE = "manifest.json"

GRID_MANIFEST_FILE = "grid-manifest.json"

# Hyperparameters that vary between grid cells.
_GRID_AXES = ("k", "k_new", "min_dist", "dim")


def load_dataset(*, data_path, labels_path, data_format):
    """Load features and labels stored in `data_format`."""
    if data_format == "idx":
        return load_idx(data_path, labels_path)
    if data_format == "sparse":
        return load_sparse_matrix(data_path, labels_path)
    raise InvalidArgumentError("Unknown data format", detail=repr(data_format))


def embedding_filename(seed):
    return "embedding-seed%d.tsv" % seed


def write_manifest(out_dir, *, command, dataset, started, outputs, config=None, **extra):
    """Record what is needed to reproduce the files of `out_dir`."""
    manifest = {
        "command": command,
        "version": __version__,
        "dataset": dataset,
        "output_directory": os.path.abspath(out_dir),
        "outputs": sorted(outputs),
        "started": started,
        "finished": utc_timestamp(),
    }
    if config is not None:
        manifest["variant"] = config.variant
        manifest["hyperparameters"] = config.hyperparams()
        manifest["seeds"] = list(config.seeds)
    manifest.update(extra)
    path = os.path.join(out_dir, MANIFEST_FILE)
    write_json(path, manifest)
    return path


def dump_graphs(stage, out_dir):
    """Write the neighbor graph and the fuzzy graph as ``u v w`` edge lists."""
    graph = stage.graph if stage.graph is not None else symmetrized_knn(stage.knn)
    graph_path = os.path.join(out_dir, "graph-edges.txt")
    write_edge_list(graph_path, graph.rows, graph.cols, graph.weights)
    rows, cols, strengths = stage.fuzzy.entries()
    upper = rows < cols
    fuzzy_path = os.path.join(out_dir, "fuzzy-edges.txt")
    write_edge_list(fuzzy_path, rows[upper], cols[upper], strengths[upper])
    return [graph_path, fuzzy_path]


def cmd_embed(*, features, config, out_dir, dataset, n_jobs=1, dump_graph=False):
    """Embed `features` once per seed; writes one TSV per seed and a manifest."""
    started = utc_timestamp()
    config.validate()
    LOGGER.info(tabulate_method_configuration(config))
    ensure_directory(out_dir)

    stage = build_graph_stage(features, config)
    outputs = dump_graphs(stage, out_dir) if dump_graph else []
    with Timer("Layout of %d seeds" % len(config.seeds)):
        embeddings = embed_seeds(stage, config, n_jobs)
    for embedding in embeddings:
        path = os.path.join(out_dir, embedding_filename(embedding.seed))
        save_embedding(embedding, path)
        outputs.append(path)

    write_manifest(
        out_dir,
        command="embed",
        dataset=dataset,
        config=config,
        started=started,
        outputs=[os.path.basename(path) for path in outputs],
        graph_before_repair=dict(stage.stats_before),
        graph_after_repair=dict(stage.stats_after),
    )
    LOGGER.info("Wrote %d embeddings to %s", len(embeddings), out_dir)
    return outputs


def cmd_eval(*, embedding_paths, labels_path, out_path=None, n_init=None):
    """Cluster each embedding with k = number of classes and score it."""
    labels = load_labels(labels_path)
    embeddings = []
    for path in embedding_paths:
        embedding = load_embedding(path)
        if embedding.n_points != len(labels):
            raise DataConsistencyError(
                "Embedding and label counts differ",
                path=path,
                detail="%d points, %d labels" % (embedding.n_points, len(labels)),
            )
        embeddings.append(embedding)
    report = score_embeddings(embeddings, labels, n_init)
    LOGGER.info(tabulate_metric_report(report))
    if out_path is not None:
        document = report.to_dict()
        document["embeddings"] = [os.path.abspath(path) for path in embedding_paths]
        document["labels"] = os.path.abspath(labels_path)
        write_json(out_path, document)
    return report


def _fixed_settings(hyperparams):
    return {name: value for name, value in hyperparams.items() if name not in _GRID_AXES}


def load_completed_cells(manifest_path, config):
    """Cells finished by an earlier grid run with the same fixed settings."""
    if not os.path.exists(manifest_path):
        return {}
    previous = read_json(manifest_path)
    if _fixed_settings(previous.get("config", {})) != _fixed_settings(config.hyperparams()):
        LOGGER.warning(
            "Grid manifest %s was written for other settings; starting over", manifest_path
        )
        return {}
    return GridReport.cells_from_dict(previous)


def cmd_grid(
    *,
    features,
    labels,
    config,
    k_values,
    min_dists,
    out_dir,
    dataset,
    dims=None,
    n_jobs=1,
    n_init=None,
):
    """Grid search over k, min_dist and dim, resumable from `out_dir`.

    Finished cells are recorded in the grid manifest as they complete, and a
    rerun with the same settings skips them.
    """
    started = utc_timestamp()
    config.validate()
    ensure_directory(out_dir)
    manifest_path = os.path.join(out_dir, GRID_MANIFEST_FILE)
    completed = load_completed_cells(manifest_path, config)
    done = dict(completed)

    def record(cell, report):
        done[cell] = report
        document = GridReport(config, done).to_dict()
        document["dataset"] = dataset
        write_json(manifest_path, document)

    grid = grid_search(
        features,
        labels,
        config,
        k_values=k_values,
        min_dists=min_dists,
        dims=dims,
        n_jobs=n_jobs,
        n_init=n_init,
        completed=completed,
        on_cell=record,
    )
    LOGGER.info(tabulate_grid_report(grid))
    report_path = os.path.join(out_dir, "grid-report.json")
    document = grid.to_dict()
    document["dataset"] = dataset
    write_json(report_path, document)
    write_manifest(
        out_dir,
        command="grid",
        dataset=dataset,
        config=config,
        started=started,
        outputs=[GRID_MANIFEST_FILE, os.path.basename(report_path)],
        k_values=list(k_values),
        min_dists=list(min_dists),
        dims=list(dims or [config.dim]),
        resumed_cells=len(completed),
    )
    for dim in grid.dims:
        best = grid.best(dim)
        LOGGER.info(
            "Best cell for dim=%d: k=%d, min_dist=%g, NMI %.4f",
            dim,
            best.config.k,
            best.config.min_dist,
            best.report.nmi,
        )
    return grid


def cmd_plot(*, embedding_path, labels_path, out_path, title=None, names_path=None):
    """Render a 2-D embedding as a class-colored SVG scatter plot."""
    embedding = load_embedding(embedding_path)
    labels = load_labels(labels_path, names_path)
    if embedding.n_points != len(labels):
        raise DataConsistencyError(
            "Embedding and label counts differ",
            path=embedding_path,
            detail="%d points, %d labels" % (embedding.n_points, len(labels)),
        )
    if title is None:
        title = embedding.hyperparams.get("method")
    return write_scatter_svg(out_path, embedding, labels, title)


def cmd_compare(*, features, labels, config, out_dir, dataset, n_jobs=1, n_init=None, variants=None):
    """Run every compared method with one setting and write a comparison report."""
    started = utc_timestamp()
    ensure_directory(out_dir)
    kwargs = {} if variants is None else {"variants": variants}
    comparison = compare_variants(features, labels, config, n_jobs=n_jobs, n_init=n_init, **kwargs)
    LOGGER.info(tabulate_comparison(comparison))
    report_path = os.path.join(out_dir, "comparison.json")
    write_json(report_path, dict(comparison.to_dict(), dataset=dataset))
    write_manifest(
        out_dir,
        command="compare",
        dataset=dataset,
        config=config,
        started=started,
        outputs=[os.path.basename(report_path)],
    )
    return comparison


def cmd_graph_stats(*, features, k, metric, out_path=None):
    """Connectivity of the k-NN graph, its mutual subgraph and every repair."""
    knn = exact_knn(features, k, metric)
    mutual = mutual_knn(knn)
    rows = [("k-NN (symmetrized)", graph_statistics(symmetrized_knn(knn)))]
    rows.append(("mutual k-NN", graph_statistics(mutual)))
    for method in REPAIR_METHODS:
        rows.append(("mutual + %s" % method, graph_statistics(repair_connectivity(mutual, knn, method))))
    LOGGER.info(tabulate_graph_statistics(rows))
    stats = JSONObject((name, stats) for name, stats in rows)
    if out_path is not None:
        write_json(out_path, {"k": k, "metric": metric, "graphs": stats})
    return stats
