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

import click

from neighborgraph.configuration import CONFIG_DEFAULTS as NG_DEFAULTS
from neighborgraph.utils import JSONObject

# Mapping used to generate configurable options for sextant.
# See sextant.utils.create_click_option for details.
CONFIGURATION_OPTIONS = JSONObject(
    {
        "SEXTANT_LOGLEVEL": {
            "type": click.Choice(
                ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], case_sensitive=False
            ),
            "help": "Set the logging level.",
            "cliopt": ("-v", "--log-level"),
            "envvar": "SEXTANT_LOGLEVEL",
            "default": "INFO",
        },
        "SEXTANT_WORKERS": {
            "type": click.IntRange(min=1),
            "help": "Number of worker threads used for seeds and grid cells.",
            "cliopt": ("-j", "--workers"),
            "envvar": "SEXTANT_WORKERS",
            "default": 1,
        },
        "SEXTANT_KMEANS_N_INIT": {
            "type": click.IntRange(min=1),
            "help": "Number of k-means++ restarts used when scoring an embedding.",
            "cliopt": "--kmeans-n-init",
            "envvar": "SEXTANT_KMEANS_N_INIT",
            "default": NG_DEFAULTS.KMEANS_N_INIT,
        },
        "SEXTANT_NEG_RATE": {
            "type": click.IntRange(min=0),
            "help": "Negative samples drawn per sampled edge during layout.",
            "cliopt": "--neg-rate",
            "envvar": "SEXTANT_NEG_RATE",
            "default": NG_DEFAULTS.NEG_RATE,
        },
        "SEXTANT_LEARNING_RATE": {
            "type": click.FLOAT,
            "help": "Initial SGD learning rate of the layout optimizer.",
            "cliopt": "--learning-rate",
            "envvar": "SEXTANT_LEARNING_RATE",
            "default": NG_DEFAULTS.LEARNING_RATE,
        },
    }
)
