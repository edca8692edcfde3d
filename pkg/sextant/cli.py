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

import click

import sextant.commands as cmd
from neighborgraph.configuration import CONFIG_DEFAULTS as NG_DEFAULTS
from neighborgraph.configuration import METRICS
from neighborgraph.dataset_io import balanced_subset
from neighborgraph.exceptions import DataError, InvalidArgumentError, NumericalError
from sextant.configuration import CONFIGURATION_OPTIONS as CONFIGOPTS
from sextant.docgen import generate_configuration_help
from sextant.exceptions import InvalidMethodConfigError, SextantBaseError
from sextant.experiment_runner import MultiExperimentRunner, SingleExperimentRunner
from sextant.pipeline import NEIGHBORHOODS, VARIANTS, MethodConfig
from sextant.utils import ClickLogHandler, create_click_option, parse_range, parse_seeds

LOGGER = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_DATA_ERROR = 3
EXIT_NUMERICAL_ERROR = 4

# Distance used for each on-disk format when --metric is not given.
DEFAULT_METRICS = {"idx": "euclidean", "sparse": "jaccard"}


class SextantGroup(click.Group):
    """Command group that turns library errors into sextant's exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (InvalidMethodConfigError, InvalidArgumentError, SextantBaseError) as exc:
            raise click.UsageError(str(exc), ctx=ctx)
        except (DataError, OSError) as exc:
            click.echo("Error: %s" % exc, err=True)
            raise click.exceptions.Exit(EXIT_DATA_ERROR)
        except NumericalError as exc:
            click.echo("Error: %s" % exc, err=True)
            raise click.exceptions.Exit(EXIT_NUMERICAL_ERROR)


def _seeds_callback(ctx, param, value):
    try:
        return parse_seeds(value)
    except SextantBaseError as exc:
        raise click.BadParameter(str(exc))


def _int_range_callback(ctx, param, value):
    try:
        return parse_range(value, cast=int)
    except SextantBaseError as exc:
        raise click.BadParameter(str(exc))


def _float_range_callback(ctx, param, value):
    try:
        return parse_range(value, cast=float)
    except SextantBaseError as exc:
        raise click.BadParameter(str(exc))


DATA_OPTION = click.option(
    "--data",
    "data_path",
    required=True,
    type=click.Path(dir_okay=False),
    help="Path to the feature file (IDX images or sparse coordinate text).",
)

LABELS_OPTION = click.option(
    "--labels",
    "labels_path",
    required=True,
    type=click.Path(dir_okay=False),
    help="Path to the label file (IDX labels or one integer per line).",
)

FORMAT_OPTION = click.option(
    "--format",
    "data_format",
    type=click.Choice(cmd.DATA_FORMATS),
    default="idx",
    show_default=True,
    help="On-disk format of --data.",
)

SUBSET_OPTION = click.option(
    "--subset",
    type=click.IntRange(min=2),
    default=None,
    help="Use a class-balanced subset of about this many points.",
)

SUBSET_SEED_OPTION = click.option(
    "--subset-seed", type=click.INT, default=0, show_default=True, help="Seed of the subset draw."
)

VARIANT_OPTION = click.option(
    "--variant",
    type=click.Choice(list(VARIANTS)),
    default="umap",
    show_default=True,
    help="Graph construction: default k-NN, or mutual k-NN repaired by nn/mst-min/mst-all.",
)

NEIGHBORHOOD_OPTION = click.option(
    "--neighborhood",
    type=click.Choice(NEIGHBORHOODS),
    default="adjacent",
    show_default=True,
    help="Local neighborhoods: graph adjacency or shortest-path neighbors.",
)

K_OPTION = click.option(
    "--k", "k", type=click.IntRange(min=1), default=15, show_default=True, help="Number of nearest neighbors."
)

K_NEW_OPTION = click.option(
    "--k-new",
    type=click.IntRange(min=1),
    default=None,
    help="Path neighbors per point; defaults to --k.",
)

MIN_DIST_OPTION = click.option(
    "--min-dist", type=click.FLOAT, default=0.1, show_default=True, help="Layout min_dist in [0, 1]."
)

DIM_OPTION = click.option(
    "--dim", type=click.IntRange(min=1), default=2, show_default=True, help="Embedding dimension."
)

METRIC_OPTION = click.option(
    "--metric",
    type=click.Choice(METRICS),
    default=None,
    help="Distance metric; euclidean for idx and jaccard for sparse data by default.",
)

SEEDS_OPTION = click.option(
    "--seeds",
    default="0..4",
    show_default=True,
    callback=_seeds_callback,
    help="Layout seeds, as first..last or a comma-separated list.",
)

EPOCHS_OPTION = click.option(
    "--epochs",
    type=click.IntRange(min=0),
    default=None,
    help="Layout epochs; 500 for up to 10000 points and 200 above by default.",
)

OUT_DIR_OPTION = click.option(
    "--out",
    "out_dir",
    required=True,
    type=click.Path(file_okay=False),
    help="Output directory.",
)


class ContextStore:
    def __init__(self, workers, n_init, neg_rate, learning_rate):
        self.workers = workers
        self.n_init = n_init
        self.neg_rate = neg_rate
        self.learning_rate = learning_rate


def _load(data_path, labels_path, data_format, subset, subset_seed):
    features, labels = cmd.load_dataset(
        data_path=data_path, labels_path=labels_path, data_format=data_format
    )
    dataset = {
        "data": os.path.abspath(data_path),
        "labels": os.path.abspath(labels_path),
        "format": data_format,
    }
    if subset is not None:
        features, labels, _ = balanced_subset(features, labels, subset, seed=subset_seed)
        dataset.update(subset=subset, subset_seed=subset_seed)
    return features, labels, dataset


def _method_config(ctx, *, variant, neighborhood, data_format, metric, seeds, **kwargs):
    config = MethodConfig.for_variant(
        variant,
        neighborhood,
        metric=metric or DEFAULT_METRICS[data_format],
        seeds=seeds,
        neg_rate=ctx.obj.neg_rate,
        learning_rate=ctx.obj.learning_rate,
        **kwargs,
    )
    return config.validate()


@click.group(cls=SextantGroup, context_settings=dict(help_option_names=["-h", "--help"]))
@create_click_option(CONFIGOPTS.SEXTANT_LOGLEVEL)
@create_click_option(CONFIGOPTS.SEXTANT_WORKERS)
@create_click_option(CONFIGOPTS.SEXTANT_KMEANS_N_INIT)
@create_click_option(CONFIGOPTS.SEXTANT_NEG_RATE)
@create_click_option(CONFIGOPTS.SEXTANT_LEARNING_RATE)
@click.version_option()
@click.pass_context
def cli(ctx, log_level, workers, kmeans_n_init, neg_rate, learning_rate):
    """
    sextant builds connectivity-refined neighbor graphs, embeds labeled
    datasets with them and scores the embeddings by clustering.
    """
    ctx.obj = ContextStore(workers, kmeans_n_init, neg_rate, learning_rate)

    # Configure logging.
    loglevel = getattr(logging, log_level.upper())
    logging.basicConfig(
        level=loglevel,
        handlers=[ClickLogHandler()],
        format="%(levelname)s:%(name)s:%(message)s",
    )

    # Turn off noisy numba compiler logging.
    if loglevel == logging.DEBUG:
        logging.getLogger("numba").setLevel(logging.INFO)


@cli.command()
@DATA_OPTION
@LABELS_OPTION
@FORMAT_OPTION
@SUBSET_OPTION
@SUBSET_SEED_OPTION
@VARIANT_OPTION
@NEIGHBORHOOD_OPTION
@K_OPTION
@K_NEW_OPTION
@MIN_DIST_OPTION
@DIM_OPTION
@METRIC_OPTION
@SEEDS_OPTION
@EPOCHS_OPTION
@OUT_DIR_OPTION
@click.option(
    "--dump-graph",
    is_flag=True,
    default=False,
    help="Also write the neighbor graph and the fuzzy graph as edge lists.",
)
@click.pass_context
def embed(
    ctx,
    data_path,
    labels_path,
    data_format,
    subset,
    subset_seed,
    variant,
    neighborhood,
    k,
    k_new,
    min_dist,
    dim,
    metric,
    seeds,
    epochs,
    out_dir,
    dump_graph,
):
    """Embed a dataset once per seed."""
    config = _method_config(
        ctx,
        variant=variant,
        neighborhood=neighborhood,
        data_format=data_format,
        metric=metric,
        seeds=seeds,
        k=k,
        k_new=k_new,
        min_dist=min_dist,
        dim=dim,
        n_epochs=epochs,
    )
    features, _, dataset = _load(data_path, labels_path, data_format, subset, subset_seed)
    cmd.cmd_embed(
        features=features,
        config=config,
        out_dir=out_dir,
        dataset=dataset,
        n_jobs=ctx.obj.workers,
        dump_graph=dump_graph,
    )


@cli.command("eval")
@click.argument("embedding_paths", nargs=-1, required=True, type=click.Path(dir_okay=False))
@LABELS_OPTION
@click.option(
    "--report",
    "out_path",
    type=click.Path(dir_okay=False),
    default=None,
    help="Write the metric report to this JSON file.",
)
@click.pass_context
def evaluate(ctx, embedding_paths, labels_path, out_path):
    """Score embedding files by k-means clustering against the labels."""
    cmd.cmd_eval(
        embedding_paths=embedding_paths,
        labels_path=labels_path,
        out_path=out_path,
        n_init=ctx.obj.n_init,
    )


@cli.command()
@DATA_OPTION
@LABELS_OPTION
@FORMAT_OPTION
@SUBSET_OPTION
@SUBSET_SEED_OPTION
@VARIANT_OPTION
@NEIGHBORHOOD_OPTION
@K_NEW_OPTION
@METRIC_OPTION
@SEEDS_OPTION
@EPOCHS_OPTION
@OUT_DIR_OPTION
@click.option(
    "--k-range",
    default=NG_DEFAULTS.K_RANGE,
    show_default=True,
    callback=_int_range_callback,
    help="Values of k as start:stop:step (inclusive stop) or a single value.",
)
@click.option(
    "--min-dist-range",
    default=NG_DEFAULTS.MIN_DIST_RANGE,
    show_default=True,
    callback=_float_range_callback,
    help="Values of min_dist as start:stop:step (inclusive stop) or a single value.",
)
@click.option(
    "--dim",
    "dims",
    type=click.IntRange(min=1),
    multiple=True,
    default=[2],
    show_default=True,
    help="Embedding dimension; repeat to search several.",
)
@click.pass_context
def grid(
    ctx,
    data_path,
    labels_path,
    data_format,
    subset,
    subset_seed,
    variant,
    neighborhood,
    k_new,
    metric,
    seeds,
    epochs,
    out_dir,
    k_range,
    min_dist_range,
    dims,
):
    """Grid search over k and min_dist; reruns skip finished cells."""
    config = _method_config(
        ctx,
        variant=variant,
        neighborhood=neighborhood,
        data_format=data_format,
        metric=metric,
        seeds=seeds,
        k=min(k_range),
        k_new=k_new,
        min_dist=min(min_dist_range),
        dim=min(dims),
        n_epochs=epochs,
    )
    features, labels, dataset = _load(data_path, labels_path, data_format, subset, subset_seed)
    cmd.cmd_grid(
        features=features,
        labels=labels,
        config=config,
        k_values=k_range,
        min_dists=min_dist_range,
        dims=list(dims),
        out_dir=out_dir,
        dataset=dataset,
        n_jobs=ctx.obj.workers,
        n_init=ctx.obj.n_init,
    )


@cli.command()
@click.argument("embedding_path", type=click.Path(dir_okay=False))
@LABELS_OPTION
@click.option(
    "--out",
    "out_path",
    required=True,
    type=click.Path(dir_okay=False),
    help="Path of the SVG file to write.",
)
@click.option("--title", default=None, help="Plot title; defaults to the method name.")
@click.option(
    "--class-names",
    "names_path",
    default=None,
    type=click.Path(dir_okay=False),
    help="File with one class name per line, used in the legend.",
)
def plot(embedding_path, labels_path, out_path, title, names_path):
    """Draw a 2-D embedding as an SVG scatter plot colored by class."""
    cmd.cmd_plot(
        embedding_path=embedding_path,
        labels_path=labels_path,
        out_path=out_path,
        title=title,
        names_path=names_path,
    )


@cli.command()
@DATA_OPTION
@LABELS_OPTION
@FORMAT_OPTION
@SUBSET_OPTION
@SUBSET_SEED_OPTION
@K_OPTION
@K_NEW_OPTION
@MIN_DIST_OPTION
@DIM_OPTION
@METRIC_OPTION
@SEEDS_OPTION
@EPOCHS_OPTION
@OUT_DIR_OPTION
@click.pass_context
def compare(
    ctx,
    data_path,
    labels_path,
    data_format,
    subset,
    subset_seed,
    k,
    k_new,
    min_dist,
    dim,
    metric,
    seeds,
    epochs,
    out_dir,
):
    """Run all seven methods with one setting and compare their scores."""
    config = _method_config(
        ctx,
        variant="umap",
        neighborhood="adjacent",
        data_format=data_format,
        metric=metric,
        seeds=seeds,
        k=k,
        k_new=k_new,
        min_dist=min_dist,
        dim=dim,
        n_epochs=epochs,
    )
    features, labels, dataset = _load(data_path, labels_path, data_format, subset, subset_seed)
    cmd.cmd_compare(
        features=features,
        labels=labels,
        config=config,
        out_dir=out_dir,
        dataset=dataset,
        n_jobs=ctx.obj.workers,
        n_init=ctx.obj.n_init,
    )


@cli.group("graph")
def graph_group():
    """Commands that inspect neighbor graphs."""


@graph_group.command("stats")
@DATA_OPTION
@LABELS_OPTION
@FORMAT_OPTION
@SUBSET_OPTION
@SUBSET_SEED_OPTION
@K_OPTION
@METRIC_OPTION
@click.option(
    "--report",
    "out_path",
    type=click.Path(dir_okay=False),
    default=None,
    help="Write the statistics to this JSON file.",
)
def graph_stats(data_path, labels_path, data_format, subset, subset_seed, k, metric, out_path):
    """Connectivity of the k-NN graph, its mutual subgraph and every repair."""
    features, _, _ = _load(data_path, labels_path, data_format, subset, subset_seed)
    cmd.cmd_graph_stats(
        features=features,
        k=k,
        metric=metric or DEFAULT_METRICS[data_format],
        out_path=out_path,
    )


@cli.group("info")
def help_topics():
    """Help topics for sextant users."""


@help_topics.command("configuration")
def help_configuration():
    """Options that can be set via the command line or environment variables."""
    click.echo_via_pager(generate_configuration_help())


@cli.group("experiments")
def experiments():
    """Commands that run YAML experiment files."""


XUNITOUTPUT_OPTION = click.option(
    "--xunit-output",
    type=click.STRING,
    default="xunit-output",
    show_default=True,
    help="Name of the folder in which to write the XUnit XML files.",
)


@experiments.command("run-one")
@click.argument("experiment_file", type=click.Path(exists=True, dir_okay=False))
@XUNITOUTPUT_OPTION
@click.pass_context
def run_single_experiment(ctx, experiment_file, xunit_output):
    """Run one experiment file."""
    runner = SingleExperimentRunner(
        locator=experiment_file,
        xunit_output=xunit_output,
        n_jobs=ctx.obj.workers,
        n_init=ctx.obj.n_init,
    )
    failed = runner.run()
    if failed:
        raise click.exceptions.Exit(1)


@experiments.command("run")
@click.argument("experiment_dir", type=click.Path(exists=True, file_okay=False))
@XUNITOUTPUT_OPTION
@click.pass_context
def run_experiments(ctx, experiment_dir, xunit_output):
    """Run every experiment file in a directory."""
    runner = MultiExperimentRunner(
        locator=experiment_dir,
        xunit_output=xunit_output,
        n_jobs=ctx.obj.workers,
        n_init=ctx.obj.n_init,
    )
    failed = runner.run()
    if failed:
        raise click.exceptions.Exit(1)


if __name__ == "__main__":
    cli()
