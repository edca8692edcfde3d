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

"""Wall-clock timing of pipeline stages."""

import logging
import time

LOGGER = logging.getLogger(__name__)


class Timer:
    """Stopwatch for a pipeline stage.

    Used as a context manager, a labelled timer logs its duration on exit.
    Reading ``elapsed`` while running gives the time so far.
    """

    def __init__(self, label=None):
        self.label = label
        self._span = (None, None)

    def reset(self):
        self._span = (None, None)

    def start(self):
        self._span = (time.monotonic(), None)

    def stop(self):
        began, _ = self._span
        self._span = (began, time.monotonic())

    @property
    def elapsed(self):
        began, ended = self._span
        if began is None:
            return 0.0
        return (time.monotonic() if ended is None else ended) - began

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc_info):
        self.stop()
        if self.label:
            LOGGER.info("%s took %.2fs", self.label, self.elapsed)
