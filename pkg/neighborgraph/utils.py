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

"""Utilities shared by the ``neighborgraph`` modules."""

import json
import logging

import numpy as np

LOGGER = logging.getLogger(__name__)


class JSONObject(dict):
    """A dict whose keys can also be read as attributes."""

    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            raise AttributeError("no key %r in %s" % (name, sorted(self)))

    @classmethod
    def from_dict(cls, raw_dict):
        """Deep-convert `raw_dict`, numpy values included, into JSONObjects."""
        return json.loads(json.dumps(raw_dict, default=to_jsonable), object_hook=cls)


def to_jsonable(value):
    """``default`` hook for :func:`json.dumps` that understands numpy types."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(path, document):
    """Write `document` to `path` as an indented, key-sorted JSON file."""
    with open(path, "w") as fp:
        json.dump(document, fp, indent=2, sort_keys=True, default=to_jsonable)
        fp.write("\n")
    LOGGER.debug("Wrote JSON document %s", path)


def read_json(path):
    with open(path) as fp:
        return JSONObject.from_dict(json.load(fp))


def write_edge_list(path, rows, cols, weights):
    """Dump a graph as one ``u v w`` line per edge."""
    with open(path, "w") as fp:
        for u, v, w in zip(rows, cols, weights):
            fp.write("%d %d %.17g\n" % (u, v, w))
    LOGGER.info("Wrote %d edges to %s", len(rows), path)
