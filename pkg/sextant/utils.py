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

import datetime
import logging
import os
from decimal import Decimal, InvalidOperation

import click
import junitparser

from sextant.exceptions import SextantBaseError

LOGGER = logging.getLogger(__name__)


class ClickLogHandler(logging.Handler):
    """Routes log records through click.echo; warnings and worse go to stderr."""

    def emit(self, record):
        to_stderr = record.levelno >= logging.WARNING
        try:
            click.echo(self.format(record), err=to_stderr)
        except Exception:
            self.handleError(record)


def create_click_option(option_spec, **overrides):
    """Turn one entry of a configuration options table into a click option.

    ``option_spec`` carries ``help`` and ``cliopt`` (a flag or a tuple of
    flags), and may carry ``type``, ``envvar`` and ``default``. An entry
    without a default becomes a required option. ``overrides`` win over
    anything derived from the entry.
    """
    flags = option_spec["cliopt"]
    if not isinstance(flags, tuple):
        flags = (flags,)

    settings = dict(help=option_spec["help"], type=option_spec.get("type", click.STRING))
    if "envvar" in option_spec:
        settings["envvar"] = option_spec["envvar"]
    if "default" in option_spec:
        settings.update(default=option_spec["default"], show_default=True)
    else:
        settings["required"] = True
    settings.update(overrides)
    return click.option(*flags, **settings)


def parse_range(text, cast=float):
    """Expand ``start:stop:step`` into a list with an inclusive `stop`.

    A bare number is a one-element range. Steps are accumulated in decimal
    so that ``0:1:0.1`` gives exactly eleven values.
    """
    parts = str(text).split(":")
    try:
        values = [Decimal(part.strip()) for part in parts]
    except InvalidOperation:
        raise SextantBaseError("Malformed range %r" % (text,))
    if len(values) == 1:
        return [cast(values[0])]
    if len(values) != 3:
        raise SextantBaseError("Range must look like start:stop:step, got %r" % (text,))
    start, stop, step = values
    if step <= 0 or stop < start:
        raise SextantBaseError("Range %r is empty" % (text,))
    expanded = []
    current = start
    while current <= stop:
        expanded.append(cast(current))
        current += step
    return expanded


def parse_seeds(text):
    """Seeds given as ``first..last`` (inclusive) or a comma-separated list."""
    text = str(text).strip()
    try:
        if ".." in text:
            first, last = (int(part) for part in text.split("..", 1))
            seeds = list(range(first, last + 1))
        else:
            seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise SextantBaseError("Malformed seed list %r" % (text,))
    if not seeds:
        raise SextantBaseError("Seed list %r is empty" % (text,))
    if len(set(seeds)) != len(seeds):
        raise SextantBaseError("Seed list %r repeats a seed" % (text,))
    return seeds


def utc_timestamp():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def ensure_directory(path):
    try:
        os.makedirs(path)
    except FileExistsError:
        pass
    return path


class ExperimentXUnitLogger:
    """Writes one xUnit XML file per experiment case."""

    def __init__(self, *, output_directory):
        self._output_directory = ensure_directory(
            os.path.realpath(os.path.join(os.getcwd(), output_directory))
        )

    def write_xml(self, test_case, filename):
        """Write `test_case` as the only case of a suite named `filename`.

        An earlier report for the same experiment is replaced.
        """
        report = junitparser.JUnitXml()
        suite = junitparser.TestSuite(filename)
        suite.add_testcase(test_case)
        report.add_testsuite(suite)

        target = os.path.join(self._output_directory, "%s.xml" % (filename,))
        if os.path.exists(target):
            os.remove(target)
        report.write(target)
        LOGGER.debug("Wrote xUnit report %s", target)
        return target
